#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "be/errors.hpp"

namespace be {

struct SvgSeries {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline const char* svg_color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

}  // namespace detail

// Minimal standalone line chart: axes, ticks, one polyline per series, and
// a text legend. Fixed formatting keeps the output byte-stable for
// identical inputs.
inline void write_line_chart(std::ostream& out, const std::string& title,
                             const std::string& x_label,
                             const std::string& y_label,
                             const std::vector<SvgSeries>& series,
                             int width = 640, int height = 400) {
  if (series.empty()) throw DomainError("write_line_chart: no series");
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  bool first = true;
  for (const auto& s : series) {
    if (s.xs.size() != s.ys.size())
      throw DomainError("write_line_chart: series length mismatch");
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (first) {
        x_min = x_max = s.xs[i];
        y_min = y_max = s.ys[i];
        first = false;
      } else {
        x_min = std::min(x_min, s.xs[i]);
        x_max = std::max(x_max, s.xs[i]);
        y_min = std::min(y_min, s.ys[i]);
        y_max = std::max(y_max, s.ys[i]);
      }
    }
  }
  if (first) throw DomainError("write_line_chart: all series empty");
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max == y_min) y_max = y_min + 1.0;

  const double ml = 60.0, mr = 20.0, mt = 40.0, mb = 50.0;
  const double pw = width - ml - mr;
  const double ph = height - mt - mb;
  auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * pw; };
  auto py = [&](double y) {
    return mt + ph - (y - y_min) / (y_max - y_min) * ph;
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">"
      << title << "</text>\n";

  // Axes.
  out << "<line x1=\"" << detail::svg_num(ml) << "\" y1=\""
      << detail::svg_num(mt + ph) << "\" x2=\"" << detail::svg_num(ml + pw)
      << "\" y2=\"" << detail::svg_num(mt + ph)
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  out << "<line x1=\"" << detail::svg_num(ml) << "\" y1=\""
      << detail::svg_num(mt) << "\" x2=\"" << detail::svg_num(ml) << "\" y2=\""
      << detail::svg_num(mt + ph)
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";

  // Ticks: 5 per axis.
  for (int i = 0; i <= 4; ++i) {
    const double fx = x_min + (x_max - x_min) * i / 4.0;
    const double fy = y_min + (y_max - y_min) * i / 4.0;
    out << "<line x1=\"" << detail::svg_num(px(fx)) << "\" y1=\""
        << detail::svg_num(mt + ph) << "\" x2=\"" << detail::svg_num(px(fx))
        << "\" y2=\"" << detail::svg_num(mt + ph + 5)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << detail::svg_num(px(fx)) << "\" y=\""
        << detail::svg_num(mt + ph + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << detail::svg_num(fx) << "</text>\n";
    out << "<line x1=\"" << detail::svg_num(ml - 5) << "\" y1=\""
        << detail::svg_num(py(fy)) << "\" x2=\"" << detail::svg_num(ml)
        << "\" y2=\"" << detail::svg_num(py(fy)) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << detail::svg_num(ml - 8) << "\" y=\""
        << detail::svg_num(py(fy) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << detail::svg_num(fy) << "</text>\n";
  }
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">"
      << x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << height / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\" transform=\"rotate(-90 16 "
      << height / 2 << ")\">" << y_label << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    if (s.xs.empty()) continue;
    out << "<polyline fill=\"none\" stroke=\"" << detail::svg_color(si)
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (i > 0) out << " ";
      out << detail::svg_num(px(s.xs[i])) << "," << detail::svg_num(py(s.ys[i]));
    }
    out << "\"/>\n";
    const double ly = mt + 14.0 * static_cast<double>(si + 1);
    out << "<line x1=\"" << detail::svg_num(ml + pw - 110) << "\" y1=\""
        << detail::svg_num(ly - 4) << "\" x2=\"" << detail::svg_num(ml + pw - 94)
        << "\" y2=\"" << detail::svg_num(ly - 4) << "\" stroke=\""
        << detail::svg_color(si) << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << detail::svg_num(ml + pw - 90) << "\" y=\""
        << detail::svg_num(ly)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label
        << "</text>\n";
  }
  out << "</svg>\n";
}

inline void write_line_chart_file(const std::string& path,
                                  const std::string& title,
                                  const std::string& x_label,
                                  const std::string& y_label,
                                  const std::vector<SvgSeries>& series,
                                  int width = 640, int height = 400) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("write_line_chart: cannot open " + path);
  write_line_chart(out, title, x_label, y_label, series, width, height);
  if (!out) throw ConfigError("write_line_chart: write failed for " + path);
}

}  // namespace be
