#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <string>
#include <vector>

#include "impedance/errors.hpp"

namespace impedance::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Chart {
  std::string title;
  std::string x_label = "gait phase";
  std::string y_label;
  std::vector<Series> series;
};

namespace detail {

inline std::string escape(const std::string& s) {
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

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace detail

/// Standalone SVG document with axes, four ticks per axis, a legend and
/// one polyline per series.
inline std::string render(const Chart& c) {
  constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : c.series) {
    if (s.x.size() != s.y.size()) throw DomainError("series '" + s.name + "' has mismatched x and y");
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1;
  if (!std::isfinite(y0)) y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 1, y1 += 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
  out += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  out += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
         detail::escape(c.title) + "</text>\n";
  out += "<g stroke=\"black\" stroke-width=\"1\">\n";
  out += "<line x1=\"" + detail::num(L) + "\" y1=\"" + detail::num(H - B) + "\" x2=\"" + detail::num(W - R) +
         "\" y2=\"" + detail::num(H - B) + "\"/>\n";
  out += "<line x1=\"" + detail::num(L) + "\" y1=\"" + detail::num(T) + "\" x2=\"" + detail::num(L) + "\" y2=\"" +
         detail::num(H - B) + "\"/>\n";
  out += "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    out += "<text x=\"" + detail::num(px(xv)) + "\" y=\"" + detail::num(H - B + 16) + "\" text-anchor=\"middle\">" +
           detail::tick(xv) + "</text>\n";
    out += "<text x=\"" + detail::num(L - 6) + "\" y=\"" + detail::num(py(yv) + 4) + "\" text-anchor=\"end\">" +
           detail::tick(yv) + "</text>\n";
  }
  out += "<text x=\"" + detail::num((L + W - R) / 2) + "\" y=\"" + detail::num(H - 12) +
         "\" text-anchor=\"middle\">" + detail::escape(c.x_label) + "</text>\n";
  out += "<text x=\"16\" y=\"" + detail::num((T + H - B) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         detail::num((T + H - B) / 2) + ")\">" + detail::escape(c.y_label) + "</text>\n";
  out += "</g>\n";

  for (std::size_t k = 0; k < c.series.size(); ++k) {
    const auto& s = c.series[k];
    const char* color = detail::kColors[k % std::size(detail::kColors)];
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) out += ' ';
      out += detail::num(px(s.x[i])) + "," + detail::num(py(s.y[i]));
    }
    out += "\"><title>" + detail::escape(s.name) + "</title></polyline>\n";
    const double ly = T + 14.0 * static_cast<double>(k);
    out += "<text x=\"" + detail::num(W - R - 4) + "\" y=\"" + detail::num(ly + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" + color + "\">" +
           detail::escape(s.name) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace impedance::svg
