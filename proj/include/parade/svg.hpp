#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "parade/engine.hpp"

namespace parade {

/// Figure layout: time on the horizontal axis, space on the vertical axis,
/// horizontal rules at the shoreline and at home. Group paths are polylines
/// with weight-scaled strokes, dashed wherever the panic value drops below 1.
struct PlotStyle {
  int width = 960;
  int height = 560;
  double margin = 42.0;
  double home = 4.0;
  double shoreline = 0.0;
};

namespace svg_detail {

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

struct PathPoint {
  double t;
  double position;
  double panic;
};

inline const char* stroke_color(GroupId id) {
  static const char* palette[] = {"#14557b", "#a24936", "#3e7a3e", "#6a4a8c",
                                  "#b07a1e", "#2d7d7d", "#8c3a62", "#4a5ab0"};
  return palette[static_cast<std::size_t>(id) % (sizeof(palette) / sizeof(palette[0]))];
}

}  // namespace svg_detail

/// Renders the trajectory as a standalone SVG document. One polyline run per
/// genealogy branch; merge points are marked; deterministic byte for byte.
inline std::string render_svg(const Trajectory& traj, const PlotStyle& style) {
  using svg_detail::PathPoint;

  // Stitch each group's path across segments; a group keeps its id until it
  // merges or arrives.
  std::map<GroupId, std::vector<PathPoint>> paths;
  std::map<GroupId, int> group_weight;
  for (const auto& seg : traj.segments) {
    for (std::size_t i = 0; i < seg.ids.size(); ++i) {
      auto& path = paths[seg.ids[i]];
      group_weight[seg.ids[i]] = seg.weights[i];
      for (const auto& sample : seg.samples) {
        if (!path.empty() && path.back().t == sample.time) continue;
        path.push_back({sample.time, sample.positions[i], sample.panic[i]});
      }
    }
  }
  for (const auto& a : traj.arrivals) {
    auto& path = paths[a.id];
    if (path.empty() || path.back().t < a.time || path.back().position != traj.params.home)
      path.push_back({a.time, traj.params.home, 1.0});
  }

  double t_lo = traj.t_begin();
  double t_hi = traj.t_end();
  if (t_hi <= t_lo) t_hi = t_lo + 1.0;
  double y_lo = std::min(style.shoreline, style.home);
  double y_hi = std::max(style.shoreline, style.home);
  for (const auto& [id, path] : paths) {
    for (const auto& p : path) {
      y_lo = std::min(y_lo, p.position);
      y_hi = std::max(y_hi, p.position);
    }
  }
  const double y_pad = 0.05 * (y_hi - y_lo) + 1e-9;
  y_lo -= y_pad;
  y_hi += y_pad;

  const double plot_w = style.width - 2.0 * style.margin;
  const double plot_h = style.height - 2.0 * style.margin;
  const auto x_of = [&](double t) {
    return style.margin + (t - t_lo) / (t_hi - t_lo) * plot_w;
  };
  const auto y_of = [&](double y) {
    return style.margin + (y_hi - y) / (y_hi - y_lo) * plot_h;
  };

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(style.width) + "\" height=\"" + std::to_string(style.height) +
         "\" viewBox=\"0 0 " + std::to_string(style.width) + " " +
         std::to_string(style.height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#fdfcf8\"/>\n";

  // Sea shading below the shoreline.
  if (style.shoreline > y_lo) {
    out += "<rect x=\"" + svg_detail::num(style.margin) + "\" y=\"" +
           svg_detail::num(y_of(style.shoreline)) + "\" width=\"" +
           svg_detail::num(plot_w) + "\" height=\"" +
           svg_detail::num(y_of(y_lo) - y_of(style.shoreline)) +
           "\" fill=\"#e2eef5\"/>\n";
  }

  // Frame, shoreline and home rules.
  out += "<rect x=\"" + svg_detail::num(style.margin) + "\" y=\"" +
         svg_detail::num(style.margin) + "\" width=\"" + svg_detail::num(plot_w) +
         "\" height=\"" + svg_detail::num(plot_h) +
         "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
  const auto h_rule = [&](double y, const char* color, const char* label) {
    std::string s = "<line x1=\"" + svg_detail::num(style.margin) + "\" y1=\"" +
                    svg_detail::num(y_of(y)) + "\" x2=\"" +
                    svg_detail::num(style.margin + plot_w) + "\" y2=\"" +
                    svg_detail::num(y_of(y)) + "\" stroke=\"" + color +
                    "\" stroke-width=\"1.2\" stroke-dasharray=\"7 4\"/>\n";
    s += "<text x=\"" + svg_detail::num(style.margin + plot_w + 4.0) + "\" y=\"" +
         svg_detail::num(y_of(y) + 4.0) + "\" font-size=\"12\" fill=\"" + color + "\">" +
         label + "</text>\n";
    return s;
  };
  out += h_rule(style.shoreline, "#4a7fa5", "shore");
  out += h_rule(style.home, "#7a5230", "home");

  // Group paths: consecutive runs of full confidence (panic = 1) drawn solid,
  // runs below 1 dashed.
  for (const auto& [id, path] : paths) {
    if (path.size() < 2) continue;
    const double stroke_w = 1.0 + 0.55 * std::sqrt(static_cast<double>(group_weight[id]));
    std::size_t start = 0;
    while (start + 1 < path.size()) {
      const bool dashed = path[start].panic < 1.0;
      std::size_t end = start + 1;
      while (end + 1 < path.size() && (path[end].panic < 1.0) == dashed) ++end;
      std::string points;
      for (std::size_t k = start; k <= end; ++k) {
        if (k > start) points += ' ';
        points += svg_detail::num(x_of(path[k].t)) + "," +
                  svg_detail::num(y_of(path[k].position));
      }
      out += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" +
             svg_detail::stroke_color(id) + "\" stroke-width=\"" +
             svg_detail::num(stroke_w) + "\"";
      if (dashed) out += " stroke-dasharray=\"4 3\"";
      out += "/>\n";
      start = end;
    }
  }

  // Merge markers.
  for (const auto& ev : traj.events) {
    if (ev.kind != Event::Kind::Merge) continue;
    out += "<circle cx=\"" + svg_detail::num(x_of(ev.time)) + "\" cy=\"" +
           svg_detail::num(y_of(ev.merged_position)) +
           "\" r=\"3\" fill=\"#222222\"/>\n";
  }

  // Axis labels.
  out += "<text x=\"" + svg_detail::num(style.margin + plot_w / 2.0 - 12.0) + "\" y=\"" +
         svg_detail::num(style.height - 10.0) + "\" font-size=\"12\" fill=\"#333333\">time</text>\n";
  out += "<text x=\"10\" y=\"" + svg_detail::num(style.margin - 12.0) +
         "\" font-size=\"12\" fill=\"#333333\">space</text>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace parade
