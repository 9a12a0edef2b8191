#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bubblesim/errors.hpp"
#include "bubblesim/strutil.hpp"

namespace bubblesim {

struct SvgSeries {
  std::string label;
  std::string color;
  std::vector<std::pair<double, double>> points;
  bool draw_line = true;
  std::vector<std::string> point_labels;  // optional, parallel to points
};

namespace svg_detail {

struct Extent {
  double lo = 0.0, hi = 1.0;

  void widen(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  void pad() {
    if (hi <= lo) {
      lo -= 0.5;
      hi += 0.5;
      return;
    }
    double margin = 0.05 * (hi - lo);
    lo -= margin;
    hi += margin;
  }
};

inline std::string fmt(double v) {
  // Short fixed form for axis labels and coordinates.
  double rounded = std::round(v * 1000.0) / 1000.0;
  std::string s = format_double(rounded);
  return s;
}

inline std::string escape_xml(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace svg_detail

// Plain 2D chart: axes with five ticks per side, one polyline and/or point
// markers per series, legend in the top-right. Output text is fully
// determined by the inputs.
inline std::string chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                             const std::vector<SvgSeries>& series, int width = 720, int height = 440) {
  using svg_detail::Extent;
  using svg_detail::escape_xml;
  using svg_detail::fmt;

  bool any_points = false;
  Extent xe, ye;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (first) {
        xe.lo = xe.hi = x;
        ye.lo = ye.hi = y;
        first = false;
      } else {
        xe.widen(x);
        ye.widen(y);
      }
      any_points = true;
    }
  }
  if (!any_points) throw ValidationError("chart needs at least one point");
  xe.pad();
  ye.pad();

  const double ml = 64, mr = 24, mt = 40, mb = 48;
  double pw = width - ml - mr, ph = height - mt - mb;
  auto px = [&](double x) { return ml + (x - xe.lo) / (xe.hi - xe.lo) * pw; };
  auto py = [&](double y) { return mt + ph - (y - ye.lo) / (ye.hi - ye.lo) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
         "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + fmt(width / 2.0) + "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\" font-weight=\"bold\">" + escape_xml(title) + "</text>\n";

  // axes and ticks
  out += "<g stroke=\"#333\" stroke-width=\"1\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(mt + ph) + "\" x2=\"" + fmt(ml + pw) + "\" y2=\"" +
         fmt(mt + ph) + "\"/>\n";
  out += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(mt) + "\" x2=\"" + fmt(ml) + "\" y2=\"" + fmt(mt + ph) +
         "\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double fx = xe.lo + (xe.hi - xe.lo) * i / 4.0;
    double fy = ye.lo + (ye.hi - ye.lo) * i / 4.0;
    out += "<line x1=\"" + fmt(px(fx)) + "\" y1=\"" + fmt(mt + ph) + "\" x2=\"" + fmt(px(fx)) + "\" y2=\"" +
           fmt(mt + ph + 4) + "\"/>\n";
    out += "<text x=\"" + fmt(px(fx)) + "\" y=\"" + fmt(mt + ph + 16) +
           "\" text-anchor=\"middle\" stroke=\"none\" fill=\"#333\">" + fmt(fx) + "</text>\n";
    out += "<line x1=\"" + fmt(ml - 4) + "\" y1=\"" + fmt(py(fy)) + "\" x2=\"" + fmt(ml) + "\" y2=\"" +
           fmt(py(fy)) + "\"/>\n";
    out += "<text x=\"" + fmt(ml - 8) + "\" y=\"" + fmt(py(fy) + 4) +
           "\" text-anchor=\"end\" stroke=\"none\" fill=\"#333\">" + fmt(fy) + "</text>\n";
  }
  out += "</g>\n";
  out += "<text x=\"" + fmt(ml + pw / 2) + "\" y=\"" + fmt(height - 10.0) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + escape_xml(x_label) +
         "</text>\n";
  out += "<text x=\"16\" y=\"" + fmt(mt + ph / 2) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\" transform=\"rotate(-90 16 " + fmt(mt + ph / 2) + ")\">" + escape_xml(y_label) +
         "</text>\n";

  for (const auto& s : series) {
    if (s.draw_line && s.points.size() > 1) {
      out += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < s.points.size(); ++i) {
        if (i > 0) out += " ";
        out += fmt(px(s.points[i].first)) + "," + fmt(py(s.points[i].second));
      }
      out += "\"/>\n";
    }
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      out += "<circle cx=\"" + fmt(px(s.points[i].first)) + "\" cy=\"" + fmt(py(s.points[i].second)) +
             "\" r=\"3\" fill=\"" + s.color + "\"/>\n";
      if (i < s.point_labels.size() && !s.point_labels[i].empty()) {
        out += "<text x=\"" + fmt(px(s.points[i].first) + 6) + "\" y=\"" + fmt(py(s.points[i].second) - 6) +
               "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#333\">" + escape_xml(s.point_labels[i]) +
               "</text>\n";
      }
    }
  }

  double ly = mt + 6;
  for (const auto& s : series) {
    if (s.label.empty()) continue;
    out += "<rect x=\"" + fmt(ml + pw - 130) + "\" y=\"" + fmt(ly) + "\" width=\"10\" height=\"10\" fill=\"" +
           s.color + "\"/>\n";
    out += "<text x=\"" + fmt(ml + pw - 114) + "\" y=\"" + fmt(ly + 9) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + escape_xml(s.label) + "</text>\n";
    ly += 16;
  }
  out += "</svg>\n";
  return out;
}

// Grouped vertical bars, one group label per bar.
inline std::string bar_chart_svg(const std::string& title, const std::string& y_label,
                                 const std::vector<std::pair<std::string, double>>& bars, int width = 720,
                                 int height = 440) {
  using svg_detail::escape_xml;
  using svg_detail::fmt;
  if (bars.empty()) throw ValidationError("bar chart needs at least one bar");

  double hi = 0.0;
  for (const auto& [label, v] : bars) hi = std::max(hi, v);
  if (hi <= 0.0) hi = 1.0;
  hi *= 1.1;

  const double ml = 64, mr = 24, mt = 40, mb = 64;
  double pw = width - ml - mr, ph = height - mt - mb;
  double slot = pw / static_cast<double>(bars.size());
  double bar_w = slot * 0.6;

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
         "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + fmt(width / 2.0) + "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\" font-weight=\"bold\">" + escape_xml(title) + "</text>\n";
  out += "<g stroke=\"#333\" stroke-width=\"1\">\n";
  out += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(mt + ph) + "\" x2=\"" + fmt(ml + pw) + "\" y2=\"" +
         fmt(mt + ph) + "\"/>\n";
  out += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(mt) + "\" x2=\"" + fmt(ml) + "\" y2=\"" + fmt(mt + ph) +
         "\"/>\n";
  out += "</g>\n";
  for (int i = 0; i <= 4; ++i) {
    double fy = hi * i / 4.0;
    double y = mt + ph - fy / hi * ph;
    out += "<text x=\"" + fmt(ml - 8) + "\" y=\"" + fmt(y + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">" + fmt(fy) +
           "</text>\n";
  }
  for (std::size_t i = 0; i < bars.size(); ++i) {
    double x = ml + slot * static_cast<double>(i) + (slot - bar_w) / 2.0;
    double h = bars[i].second / hi * ph;
    out += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(mt + ph - h) + "\" width=\"" + fmt(bar_w) + "\" height=\"" +
           fmt(h) + "\" fill=\"#4878a8\"/>\n";
    out += "<text x=\"" + fmt(x + bar_w / 2) + "\" y=\"" + fmt(mt + ph - h - 6) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + fmt(bars[i].second) +
           "</text>\n";
    out += "<text x=\"" + fmt(x + bar_w / 2) + "\" y=\"" + fmt(mt + ph + 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + escape_xml(bars[i].first) +
           "</text>\n";
  }
  out += "<text x=\"16\" y=\"" + fmt(mt + ph / 2) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\" transform=\"rotate(-90 16 " + fmt(mt + ph / 2) + ")\">" + escape_xml(y_label) +
         "</text>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace bubblesim
