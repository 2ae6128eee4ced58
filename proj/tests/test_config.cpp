#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "be/config.hpp"
#include "be/errors.hpp"

using be::ConfigError;
using be::ConfigReader;
using be::ConfigTable;

namespace {

ConfigTable parse_text(const std::string& text) {
  std::istringstream in(text);
  return ConfigTable::parse(in);
}

}  // namespace

TEST_CASE("config parses scalars of every supported type") {
  ConfigTable table = parse_text(
      "name = \"two goal\"\n"
      "episodes = 25\n"
      "dither = 0.125\n"
      "negative = -3\n"
      "sci = 1e-3\n"
      "flag = true\n"
      "off = false\n");
  ConfigReader reader(table);
  REQUIRE(reader.get_string("name") == "two goal");
  REQUIRE(reader.get_int("episodes") == 25);
  REQUIRE(reader.get_double("dither") == 0.125);
  REQUIRE(reader.get_int("negative") == -3);
  REQUIRE(reader.get_double("sci") == 1e-3);
  REQUIRE(reader.get_bool("flag"));
  REQUIRE_FALSE(reader.get_bool("off"));
  REQUIRE(reader.ok());
  reader.finish("scalars");
}

TEST_CASE("config sections prefix keys") {
  ConfigTable table = parse_text(
      "top = 1\n"
      "[env]\n"
      "depth = 3\n"
      "[train]\n"
      "depth = 4\n");
  REQUIRE(table.has("top"));
  REQUIRE(table.has("env.depth"));
  REQUIRE(table.has("train.depth"));
  REQUIRE_FALSE(table.has("depth"));
  ConfigReader reader(table);
  REQUIRE(reader.get_int("env.depth") == 3);
  REQUIRE(reader.get_int("train.depth") == 4);
}

TEST_CASE("config parses arrays and comments") {
  ConfigTable table = parse_text(
      "# leading comment\n"
      "weights = [0.7, 0.3]  # trailing comment\n"
      "mixed_numeric = [1, 2.5, -3]\n"
      "modes = [\"online\", \"none\"]\n"
      "hash = \"a#b\"  # the quoted hash is not a comment\n");
  ConfigReader reader(table);
  REQUIRE(reader.get_double_array("weights") == std::vector<double>{0.7, 0.3});
  REQUIRE(reader.get_double_array("mixed_numeric") ==
          std::vector<double>{1.0, 2.5, -3.0});
  REQUIRE(reader.get_string_array("modes") ==
          std::vector<std::string>{"online", "none"});
  REQUIRE(reader.get_string("hash") == "a#b");
  reader.finish("arrays");
}

TEST_CASE("config rejects malformed input with line numbers") {
  REQUIRE_THROWS_WITH(parse_text("a = 1\nnot a pair\n"),
                      Catch::Matchers::ContainsSubstring("line 2"));
  REQUIRE_THROWS_WITH(parse_text("[env\nx = 1\n"),
                      Catch::Matchers::ContainsSubstring("line 1"));
  REQUIRE_THROWS_WITH(parse_text("x = 1\nx = 2\n"),
                      Catch::Matchers::ContainsSubstring("duplicate key 'x'"));
  REQUIRE_THROWS_WITH(parse_text("[a]\nk = 1\n[a]\nk = 2\n"),
                      Catch::Matchers::ContainsSubstring("duplicate key 'a.k'"));
  REQUIRE_THROWS_WITH(parse_text("x = what\n"),
                      Catch::Matchers::ContainsSubstring("cannot parse value"));
  REQUIRE_THROWS_WITH(parse_text("x = [1, 2\n"),
                      Catch::Matchers::ContainsSubstring("malformed array"));
  REQUIRE_THROWS_WITH(parse_text("[]\n"),
                      Catch::Matchers::ContainsSubstring("empty section"));
  REQUIRE_THROWS_WITH(parse_text("= 4\n"),
                      Catch::Matchers::ContainsSubstring("empty key"));
  REQUIRE_THROWS_AS(parse_text("x = [1, \"a\"]\n"), ConfigError);
}

TEST_CASE("config defaults apply only when the key is absent") {
  ConfigTable table = parse_text("present = 7\n");
  ConfigReader reader(table);
  REQUIRE(reader.get_int_or("present", 1) == 7);
  REQUIRE(reader.get_int_or("absent", 1) == 1);
  REQUIRE(reader.get_double_or("absent", 2.5) == 2.5);
  REQUIRE(reader.get_string_or("absent", "x") == "x");
  REQUIRE(reader.get_bool_or("absent", true));
  REQUIRE(reader.get_double_array_or("absent", {1.0}) ==
          std::vector<double>{1.0});
  REQUIRE(reader.get_string_array_or("absent", {"y"}) ==
          std::vector<std::string>{"y"});
  REQUIRE(reader.ok());
  reader.finish("defaults");
}

TEST_CASE("config reader reports every problem in one error") {
  ConfigTable table = parse_text(
      "have = 1\n"
      "wrong = \"text\"\n");
  ConfigReader reader(table);
  reader.get_int("have");
  reader.get_int("wrong");
  reader.get_double("missing_a");
  reader.get_string("missing_b");
  REQUIRE_FALSE(reader.ok());
  try {
    reader.finish("unit");
    FAIL("finish should have thrown");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    REQUIRE(msg.find("3 problem(s)") != std::string::npos);
    REQUIRE(msg.find("key 'wrong' is not a integer") != std::string::npos);
    REQUIRE(msg.find("missing key 'missing_a'") != std::string::npos);
    REQUIRE(msg.find("missing key 'missing_b'") != std::string::npos);
    REQUIRE(msg.find("unit") != std::string::npos);
  }
}

TEST_CASE("config integers coerce to floats but not the reverse") {
  ConfigTable table = parse_text(
      "n = 4\n"
      "x = 2.5\n");
  ConfigReader reader(table);
  REQUIRE(reader.get_double("n") == 4.0);
  reader.get_int("x");
  REQUIRE_FALSE(reader.ok());
}

TEST_CASE("config files load through the same parser") {
  const std::string path = "test_config_tmp.toml";
  {
    std::ofstream out(path);
    out << "[run]\nseed = 11\n";
  }
  ConfigTable table = ConfigTable::parse_file(path);
  std::remove(path.c_str());
  ConfigReader reader(table);
  REQUIRE(reader.get_int("run.seed") == 11);
  REQUIRE_THROWS_AS(ConfigTable::parse_file("does_not_exist.toml"),
                    ConfigError);
}
