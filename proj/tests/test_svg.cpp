#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <string>
#include <vector>

#include "be/errors.hpp"
#include "be/svg.hpp"

using be::SvgSeries;

namespace {

std::string render(const std::vector<SvgSeries>& series) {
  std::ostringstream out;
  be::write_line_chart(out, "title", "x", "y", series);
  return out.str();
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size()))
    ++n;
  return n;
}

}  // namespace

TEST_CASE("svg chart carries the expected structure") {
  SvgSeries a{"mean coverage", {0, 1, 2, 3}, {0.1, 0.4, 0.6, 0.9}};
  SvgSeries b{"baseline", {0, 1, 2, 3}, {0.1, 0.2, 0.25, 0.3}};
  const std::string svg = render({a, b});

  REQUIRE(svg.rfind("<svg xmlns=\"http://www.w3.org/2000/svg\"", 0) == 0);
  REQUIRE(svg.find("</svg>") != std::string::npos);
  REQUIRE(count_of(svg, "<polyline") == 2);
  REQUIRE(svg.find("mean coverage") != std::string::npos);
  REQUIRE(svg.find("baseline") != std::string::npos);
  REQUIRE(svg.find(">title<") != std::string::npos);
  // Axis lines plus ticks, all closed tags.
  REQUIRE(count_of(svg, "<line") >= 10);
  REQUIRE(count_of(svg, "<") == count_of(svg, ">"));
  // Distinct palette entries per series.
  REQUIRE(svg.find("#1f77b4") != std::string::npos);
  REQUIRE(svg.find("#d62728") != std::string::npos);
}

TEST_CASE("svg output is byte-stable for identical input") {
  SvgSeries s{"run", {0, 5, 10}, {1.0, 2.5, 7.25}};
  REQUIRE(render({s}) == render({s}));
}

TEST_CASE("svg rejects malformed series") {
  REQUIRE_THROWS_AS(render({}), be::DomainError);
  SvgSeries bad{"bad", {0, 1}, {0}};
  REQUIRE_THROWS_AS(render({bad}), be::DomainError);
  SvgSeries empty{"empty", {}, {}};
  REQUIRE_THROWS_AS(render({empty}), be::DomainError);
}

TEST_CASE("svg degenerate ranges are padded, not divided by zero") {
  SvgSeries flat{"flat", {2, 2, 2}, {3, 3, 3}};
  const std::string svg = render({flat});
  REQUIRE(svg.find("nan") == std::string::npos);
  REQUIRE(svg.find("inf") == std::string::npos);
}
