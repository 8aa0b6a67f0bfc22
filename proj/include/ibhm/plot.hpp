#pragma once
// Minimal self-contained SVG output: line overlays and magnitude heatmaps.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "ibhm/errors.hpp"
#include "ibhm/tfr.hpp"

namespace ibhm::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Axes {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  int width = 720;
  int height = 420;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      default: o += c;
    }
  }
  return o;
}

inline const char* colour(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return palette[i % 10];
}

}  // namespace detail

inline std::string line_plot(const std::vector<Series>& series, const Axes& ax) {
  if (series.empty()) throw ValidationError("nothing to plot");
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw ValidationError("series " + s.label + " has mismatched axes");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) {
    y0 -= 1.0;
    y1 += 1.0;
  }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const double L = 70, R = 150, T = 40, B = 50;
  const double W = ax.width - L - R, H = ax.height - T - B;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * W; };
  auto py = [&](double y) { return T + (1.0 - (y - y0) / (y1 - y0)) * H; };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(ax.width) + "\" height=\"" +
       std::to_string(ax.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + detail::num(L + W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
       detail::escape(ax.title) + "</text>\n";
  o += "<rect x=\"" + detail::num(L) + "\" y=\"" + detail::num(T) + "\" width=\"" + detail::num(W) + "\" height=\"" +
       detail::num(H) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    o += "<text x=\"" + detail::num(px(xv)) + "\" y=\"" + detail::num(T + H + 16) + "\" text-anchor=\"middle\">" +
         detail::tick(xv) + "</text>\n";
    o += "<text x=\"" + detail::num(L - 6) + "\" y=\"" + detail::num(py(yv) + 4) + "\" text-anchor=\"end\">" +
         detail::tick(yv) + "</text>\n";
  }
  o += "<text x=\"" + detail::num(L + W / 2) + "\" y=\"" + detail::num(ax.height - 10.0) +
       "\" text-anchor=\"middle\">" + detail::escape(ax.xlabel) + "</text>\n";
  o += "<text transform=\"translate(16," + detail::num(T + H / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       detail::escape(ax.ylabel) + "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& sr = series[s];
    // Thin long series down to about two points per pixel column.
    const std::size_t stride = std::max<std::size_t>(1, sr.x.size() / static_cast<std::size_t>(2 * W));
    o += "<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"" + std::string(detail::colour(s)) + "\" points=\"";
    for (std::size_t i = 0; i < sr.x.size(); i += stride) {
      if (!std::isfinite(sr.y[i])) continue;
      o += detail::num(px(sr.x[i])) + "," + detail::num(py(sr.y[i])) + " ";
    }
    o += "\"/>\n";
    const double ly = T + 14 + 18.0 * static_cast<double>(s);
    o += "<line x1=\"" + detail::num(L + W + 12) + "\" y1=\"" + detail::num(ly) + "\" x2=\"" + detail::num(L + W + 32) +
         "\" y2=\"" + detail::num(ly) + "\" stroke=\"" + detail::colour(s) + "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + detail::num(L + W + 38) + "\" y=\"" + detail::num(ly + 4) + "\">" + detail::escape(sr.label) +
         "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

/// |grid| as a grey-scale heatmap; rows are drawn with the highest frequency
/// at the top. Columns are decimated to at most `max_cols`.
inline std::string heatmap(const tfr::Grid<tfr::cplx>& g, const std::vector<double>& freqs, double t_end,
                           const Axes& ax, std::size_t max_cols = 600) {
  if (freqs.size() != g.rows || g.rows == 0 || g.cols == 0) throw ValidationError("heatmap axes mismatch");
  std::vector<std::size_t> order(g.rows);
  for (std::size_t i = 0; i < g.rows; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return freqs[a] > freqs[b]; });
  const std::size_t step = std::max<std::size_t>(1, g.cols / max_cols);
  const std::size_t nc = (g.cols + step - 1) / step;
  double peak = 0.0;
  for (const auto& v : g.data) peak = std::max(peak, std::abs(v));
  if (!(peak > 0.0)) peak = 1.0;
  const double L = 70, T = 40, B = 50, Rm = 20;
  const double W = ax.width - L - Rm, H = ax.height - T - B;
  const double cw = W / static_cast<double>(nc), ch = H / static_cast<double>(g.rows);
  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(ax.width) + "\" height=\"" +
       std::to_string(ax.height) + "\" font-family=\"sans-serif\" font-size=\"12\" shape-rendering=\"crispEdges\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + detail::num(L + W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
       detail::escape(ax.title) + "</text>\n";
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < nc; ++c) {
      double m = 0.0;
      for (std::size_t k = c * step; k < std::min(g.cols, (c + 1) * step); ++k) m = std::max(m, std::abs(g(order[r], k)));
      const int shade = 255 - static_cast<int>(std::lround(255.0 * std::sqrt(m / peak)));
      if (shade >= 250) continue;
      char col[8];
      std::snprintf(col, sizeof col, "#%02x%02x%02x", shade, shade, shade);
      o += "<rect x=\"" + detail::num(L + cw * static_cast<double>(c)) + "\" y=\"" +
           detail::num(T + ch * static_cast<double>(r)) + "\" width=\"" + detail::num(cw + 0.5) + "\" height=\"" +
           detail::num(ch + 0.5) + "\" fill=\"" + col + "\"/>\n";
    }
  }
  o += "<rect x=\"" + detail::num(L) + "\" y=\"" + detail::num(T) + "\" width=\"" + detail::num(W) + "\" height=\"" +
       detail::num(H) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double tv = t_end * k / 4.0;
    o += "<text x=\"" + detail::num(L + W * k / 4.0) + "\" y=\"" + detail::num(T + H + 16) +
         "\" text-anchor=\"middle\">" + detail::tick(tv) + "</text>\n";
    const std::size_t r = std::min(g.rows - 1, static_cast<std::size_t>(k * (g.rows - 1) / 4));
    o += "<text x=\"" + detail::num(L - 6) + "\" y=\"" + detail::num(T + ch * (static_cast<double>(r) + 0.5) + 4) +
         "\" text-anchor=\"end\">" + detail::tick(freqs[order[r]]) + "</text>\n";
  }
  o += "<text x=\"" + detail::num(L + W / 2) + "\" y=\"" + detail::num(ax.height - 10.0) +
       "\" text-anchor=\"middle\">" + detail::escape(ax.xlabel) + "</text>\n";
  o += "<text transform=\"translate(16," + detail::num(T + H / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       detail::escape(ax.ylabel) + "</text>\n";
  o += "</svg>\n";
  return o;
}

}  // namespace ibhm::plot
