#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adaoais/io.hpp"

namespace adaoais {

namespace detail {

inline std::string svg_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

/// "1e-3" style decade label.
inline std::string decade_label(int e) { return "1e" + std::to_string(e); }

}  // namespace detail

/// Self-contained SVG line chart of an MSE curve on a log y axis, with a
/// dashed reference line at 1/N. Coordinates are written at fixed
/// precision, so the same series always renders to identical bytes.
/// Points with non-positive mse are dropped from the path.
inline void write_mse_svg(const std::filesystem::path& path, const std::vector<std::int64_t>& iters,
                          const std::vector<double>& mse, int n_particles,
                          const std::string& title) {
  if (iters.size() != mse.size()) throw std::invalid_argument("write_mse_svg: series sizes differ");
  if (iters.empty()) throw std::invalid_argument("write_mse_svg: empty series");
  if (n_particles < 1) throw std::invalid_argument("write_mse_svg: n_particles must be positive");

  const double ref = 1.0 / n_particles;
  double lo = ref, hi = ref;
  for (double v : mse) {
    if (v > 0.0) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  int dec_lo = static_cast<int>(std::floor(std::log10(lo)));
  int dec_hi = static_cast<int>(std::ceil(std::log10(hi)));
  if (dec_hi <= dec_lo) dec_hi = dec_lo + 1;

  const double width = 720, height = 460;
  const double ml = 80, mr = 24, mt = 44, mb = 56;
  const double pw = width - ml - mr, ph = height - mt - mb;
  const double x_max = static_cast<double>(std::max<std::int64_t>(iters.back(), 1));

  auto x_of = [&](double it) { return ml + pw * (it / x_max); };
  auto y_of = [&](double v) {
    const double t = (std::log10(v) - dec_lo) / (dec_hi - dec_lo);
    return mt + ph * (1.0 - t);
  };

  std::ofstream out = open_output(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << detail::svg_coord(ml) << "\" y=\"26\" font-family=\"sans-serif\" "
         "font-size=\"16\" fill=\"#222\">"
      << title << "</text>\n";

  // frame
  out << "<rect x=\"" << detail::svg_coord(ml) << "\" y=\"" << detail::svg_coord(mt) << "\" width=\""
      << detail::svg_coord(pw) << "\" height=\"" << detail::svg_coord(ph)
      << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";

  // y decades: gridline + label
  const int dec_step = std::max(1, (dec_hi - dec_lo + 7) / 8);
  for (int e = dec_lo; e <= dec_hi; e += dec_step) {
    const double y = y_of(std::pow(10.0, e));
    out << "<line x1=\"" << detail::svg_coord(ml) << "\" y1=\"" << detail::svg_coord(y) << "\" x2=\""
        << detail::svg_coord(ml + pw) << "\" y2=\"" << detail::svg_coord(y)
        << "\" stroke=\"#ddd\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << detail::svg_coord(ml - 8) << "\" y=\"" << detail::svg_coord(y + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#222\" text-anchor=\"end\">"
        << detail::decade_label(e) << "</text>\n";
  }

  // x ticks at quarters
  for (int t = 0; t <= 4; ++t) {
    const double it = x_max * t / 4.0;
    const double x = x_of(it);
    out << "<line x1=\"" << detail::svg_coord(x) << "\" y1=\"" << detail::svg_coord(mt + ph)
        << "\" x2=\"" << detail::svg_coord(x) << "\" y2=\"" << detail::svg_coord(mt + ph + 5)
        << "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << detail::svg_coord(x) << "\" y=\"" << detail::svg_coord(mt + ph + 20)
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#222\" text-anchor=\"middle\">"
        << static_cast<std::int64_t>(it) << "</text>\n";
  }
  out << "<text x=\"" << detail::svg_coord(ml + pw / 2) << "\" y=\""
      << detail::svg_coord(height - 14)
      << "\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#222\" text-anchor=\"middle\">"
         "iteration</text>\n";
  out << "<text x=\"20\" y=\"" << detail::svg_coord(mt + ph / 2)
      << "\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#222\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 20 "
      << detail::svg_coord(mt + ph / 2) << ")\">MSE</text>\n";

  // 1/N reference
  {
    const double y = y_of(ref);
    out << "<line x1=\"" << detail::svg_coord(ml) << "\" y1=\"" << detail::svg_coord(y) << "\" x2=\""
        << detail::svg_coord(ml + pw) << "\" y2=\"" << detail::svg_coord(y)
        << "\" stroke=\"#b40\" stroke-width=\"1\" stroke-dasharray=\"6 4\"/>\n";
    out << "<text x=\"" << detail::svg_coord(ml + pw - 4) << "\" y=\"" << detail::svg_coord(y - 5)
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#b40\" text-anchor=\"end\">"
           "1/N</text>\n";
  }

  // mse path
  out << "<polyline fill=\"none\" stroke=\"#26b\" stroke-width=\"1.5\" points=\"";
  bool first = true;
  for (std::size_t i = 0; i < mse.size(); ++i) {
    if (!(mse[i] > 0.0)) continue;
    if (!first) out << ' ';
    out << detail::svg_coord(x_of(static_cast<double>(iters[i]))) << ','
        << detail::svg_coord(y_of(std::min(std::max(mse[i], std::pow(10.0, dec_lo)),
                                           std::pow(10.0, dec_hi))));
    first = false;
  }
  out << "\"/>\n";
  out << "</svg>\n";
}

}  // namespace adaoais
