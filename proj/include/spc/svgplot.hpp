#pragma once
// Static SVG line plots (metric vs photon count, log-x). No interactivity,
// deterministic output bytes.

#include <cmath>
#include <string>
#include <vector>

#include "spc/common.hpp"
#include "spc/io.hpp"

namespace spc {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};

inline void save_svg_plot(const std::vector<PlotSeries>& series, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::string& path, bool log_x = true) {
  const double W = 720, H = 480, ml = 70, mr = 180, mt = 40, mb = 55;
  const double pw = W - ml - mr, ph = H - mt - mb;
  double x_lo = kInf, x_hi = -kInf, y_lo = 0.0, y_hi = -kInf;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double xv = log_x ? std::log10(s.x[i]) : s.x[i];
      x_lo = std::min(x_lo, xv);
      x_hi = std::max(x_hi, xv);
      y_hi = std::max(y_hi, s.y[i]);
    }
  if (!(x_hi > x_lo)) {
    x_lo -= 0.5;
    x_hi += 0.5;
  }
  if (!(y_hi > 0.0)) y_hi = 1.0;
  y_hi *= 1.05;
  auto px = [&](double xv) { return ml + (xv - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double yv) { return mt + ph - (yv - y_lo) / (y_hi - y_lo) * ph; };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_double(W) + "\" height=\"" +
         fmt_double(H) + "\" viewBox=\"0 0 " + fmt_double(W) + " " + fmt_double(H) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt_double(W / 2) + "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">" + title + "</text>\n";
  // axes
  svg += "<line x1=\"" + fmt_double(ml) + "\" y1=\"" + fmt_double(mt + ph) + "\" x2=\"" +
         fmt_double(ml + pw) + "\" y2=\"" + fmt_double(mt + ph) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + fmt_double(ml) + "\" y1=\"" + fmt_double(mt) + "\" x2=\"" +
         fmt_double(ml) + "\" y2=\"" + fmt_double(mt + ph) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  // x ticks
  const int x_ticks = 5;
  for (int i = 0; i <= x_ticks; ++i) {
    const double xv = x_lo + (x_hi - x_lo) * i / x_ticks;
    const double X = px(xv);
    const double shown = log_x ? std::pow(10.0, xv) : xv;
    svg += "<line x1=\"" + fmt_double(X) + "\" y1=\"" + fmt_double(mt + ph) + "\" x2=\"" +
           fmt_double(X) + "\" y2=\"" + fmt_double(mt + ph + 5) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt_double(X) + "\" y=\"" + fmt_double(mt + ph + 20) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           fmt_double(std::round(shown * 100.0) / 100.0) + "</text>\n";
  }
  // y ticks
  const int y_ticks = 5;
  for (int i = 0; i <= y_ticks; ++i) {
    const double yv = y_lo + (y_hi - y_lo) * i / y_ticks;
    const double Y = py(yv);
    svg += "<line x1=\"" + fmt_double(ml - 5) + "\" y1=\"" + fmt_double(Y) + "\" x2=\"" +
           fmt_double(ml) + "\" y2=\"" + fmt_double(Y) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt_double(ml - 9) + "\" y=\"" + fmt_double(Y + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           fmt_double(std::round(yv * 100.0) / 100.0) + "</text>\n";
  }
  svg += "<text x=\"" + fmt_double(ml + pw / 2) + "\" y=\"" + fmt_double(H - 12) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + x_label +
         "</text>\n";
  svg += "<text x=\"18\" y=\"" + fmt_double(mt + ph / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 18 " + fmt_double(mt + ph / 2) + ")\">" + y_label +
         "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = palette[si % 8];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double xv = log_x ? std::log10(s.x[i]) : s.x[i];
      pts += fmt_double(px(xv)) + "," + fmt_double(py(s.y[i])) + " ";
    }
    svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.8\"/>\n";
    const double ly = mt + 18 + 18 * static_cast<double>(si);
    svg += "<line x1=\"" + fmt_double(ml + pw + 12) + "\" y1=\"" + fmt_double(ly - 4) +
           "\" x2=\"" + fmt_double(ml + pw + 34) + "\" y2=\"" + fmt_double(ly - 4) +
           "\" stroke=\"" + color + "\" stroke-width=\"1.8\"/>\n";
    svg += "<text x=\"" + fmt_double(ml + pw + 40) + "\" y=\"" + fmt_double(ly) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + s.label + "</text>\n";
  }
  svg += "</svg>\n";
  detail::write_file(path, svg);
}

}  // namespace spc
