#pragma once

// Static SVG line charts of error curves. Output depends only on the input
// curves and options, so identical inputs give identical bytes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "icl/error.hpp"
#include "icl/eval.hpp"

namespace icl {

enum class YScale { automatic, linear, log };

struct PlotOptions {
  std::string title;
  std::string y_label = "normalized error";
  std::string x_label = "in-context examples k";
  bool use_median = true;  ///< plot the median (with its CI band) or the mean
  YScale scale = YScale::automatic;
  int width = 720;
  int height = 480;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace detail

[[nodiscard]] inline std::string render_svg(const std::vector<ErrorCurve>& curves, const PlotOptions& opt = {}) {
  if (curves.empty()) throw InvalidInput("render_svg: no curves");
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin, ypos_min = xmin;
  for (const auto& c : curves) {
    if (c.points.empty()) throw InvalidInput("render_svg: curve '" + c.method + "' has no points");
    for (const auto& p : c.points) {
      const double centre = opt.use_median ? p.median : p.mean;
      const double lo = opt.use_median ? p.ci_lo : centre;
      const double hi = opt.use_median ? p.ci_hi : centre;
      for (double v : {lo, centre, hi})
        if (!std::isfinite(v)) throw InvalidInput("render_svg: non-finite value in '" + c.method + "'");
      xmin = std::min(xmin, static_cast<double>(p.k));
      xmax = std::max(xmax, static_cast<double>(p.k));
      ymin = std::min(ymin, lo);
      ymax = std::max(ymax, hi);
      if (lo > 0.0) ypos_min = std::min(ypos_min, lo);
      if (centre > 0.0) ypos_min = std::min(ypos_min, centre);
    }
  }
  bool log_y = opt.scale == YScale::log;
  if (opt.scale == YScale::automatic) log_y = ymin > 0.0 && ymax / ymin > 100.0;
  if (log_y && !(ypos_min < std::numeric_limits<double>::infinity())) log_y = false;

  const double left = 80, right = 170, top = 40, bottom = 60;
  const double pw = opt.width - left - right, ph = opt.height - top - bottom;
  if (xmax == xmin) {
    xmin -= 1.0;
    xmax += 1.0;
  }
  double y0, y1;
  if (log_y) {
    y0 = std::floor(std::log10(ypos_min));
    y1 = std::ceil(std::log10(std::max(ymax, ypos_min)));
    if (y1 == y0) y1 += 1.0;
  } else {
    y0 = std::min(0.0, ymin);
    y1 = ymax;
    if (y1 <= y0) y1 = y0 + 1.0;
    y1 += 0.05 * (y1 - y0);
  }
  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) {
    double v = y;
    if (log_y) v = std::log10(std::max(y, std::pow(10.0, y0)));
    return top + ph - (v - y0) / (y1 - y0) * ph;
  };
  using detail::svg_num;

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opt.width) + "\" height=\"" +
       std::to_string(opt.height) + "\" viewBox=\"0 0 " + std::to_string(opt.width) + " " +
       std::to_string(opt.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty())
    s += "<text x=\"" + svg_num(left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         detail::xml_escape(opt.title) + "</text>\n";

  // axes and ticks
  s += "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
  s += "<line x1=\"" + svg_num(left) + "\" y1=\"" + svg_num(top + ph) + "\" x2=\"" + svg_num(left + pw) + "\" y2=\"" +
       svg_num(top + ph) + "\"/>\n";
  s += "<line x1=\"" + svg_num(left) + "\" y1=\"" + svg_num(top) + "\" x2=\"" + svg_num(left) + "\" y2=\"" +
       svg_num(top + ph) + "\"/>\n";
  s += "</g>\n<g class=\"ticks\" font-size=\"11\">\n";
  const double xspan = xmax - xmin;
  const double xstep = xspan <= 12 ? 1.0 : std::ceil(xspan / 10.0);
  for (double x = std::ceil(xmin); x <= xmax + 1e-9; x += xstep) {
    s += "<line x1=\"" + svg_num(sx(x)) + "\" y1=\"" + svg_num(top + ph) + "\" x2=\"" + svg_num(sx(x)) + "\" y2=\"" +
         svg_num(top + ph + 5) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + svg_num(sx(x)) + "\" y=\"" + svg_num(top + ph + 18) + "\" text-anchor=\"middle\">" +
         detail::tick_label(x) + "</text>\n";
  }
  std::vector<double> yticks;
  if (log_y) {
    for (double e = y0; e <= y1 + 1e-9; e += 1.0) yticks.push_back(std::pow(10.0, e));
  } else {
    const double raw = (y1 - y0) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double step = raw / mag < 2 ? 2 * mag : raw / mag < 5 ? 5 * mag : 10 * mag;
    for (double y = std::ceil(y0 / step) * step; y <= y1 + 1e-12; y += step) yticks.push_back(std::abs(y) < step * 1e-9 ? 0.0 : y);
  }
  for (double y : yticks) {
    s += "<line x1=\"" + svg_num(left - 5) + "\" y1=\"" + svg_num(sy(y)) + "\" x2=\"" + svg_num(left) + "\" y2=\"" +
         svg_num(sy(y)) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + svg_num(left - 8) + "\" y=\"" + svg_num(sy(y) + 4) + "\" text-anchor=\"end\">" +
         detail::tick_label(y) + "</text>\n";
  }
  s += "</g>\n";
  s += "<text x=\"" + svg_num(left + pw / 2) + "\" y=\"" + svg_num(opt.height - 15.0) + "\" text-anchor=\"middle\">" +
       detail::xml_escape(opt.x_label) + "</text>\n";
  s += "<text transform=\"translate(18," + svg_num(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       detail::xml_escape(opt.y_label + (log_y ? " (log scale)" : "")) + "</text>\n";

  const std::size_t ncol = std::size(detail::kPalette);
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    const std::string color = detail::kPalette[i % ncol];
    if (opt.use_median) {
      std::string pts;
      for (const auto& p : c.points) pts += svg_num(sx(p.k)) + "," + svg_num(sy(p.ci_hi)) + " ";
      for (auto it = c.points.rbegin(); it != c.points.rend(); ++it)
        pts += svg_num(sx(it->k)) + "," + svg_num(sy(it->ci_lo)) + " ";
      pts.pop_back();
      s += "<polygon class=\"band\" points=\"" + pts + "\" fill=\"" + color + "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
    }
    std::string pts;
    for (const auto& p : c.points) pts += svg_num(sx(p.k)) + "," + svg_num(sy(opt.use_median ? p.median : p.mean)) + " ";
    pts.pop_back();
    s += "<polyline class=\"series\" points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
  }

  s += "<g class=\"legend\">\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const double ly = top + 10 + 20.0 * static_cast<double>(i);
    const double lx = left + pw + 15;
    s += "<line x1=\"" + svg_num(lx) + "\" y1=\"" + svg_num(ly) + "\" x2=\"" + svg_num(lx + 20) + "\" y2=\"" + svg_num(ly) +
         "\" stroke=\"" + detail::kPalette[i % ncol] + "\" stroke-width=\"2\"/>\n";
    s += "<text class=\"legend-entry\" x=\"" + svg_num(lx + 26) + "\" y=\"" + svg_num(ly + 4) + "\">" +
         detail::xml_escape(curves[i].method) + "</text>\n";
  }
  s += "</g>\n</svg>\n";
  return s;
}

}  // namespace icl
