#include "xformlab/svg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

namespace xformlab {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 400;
constexpr int kLeft = 70;
constexpr int kRight = 150;
constexpr int kTop = 40;
constexpr int kBottom = 50;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string fixed(Real v) {
  char buf[48];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
  return ec == std::errc() ? std::string(buf, end) : "0";
}

std::string tick(Real v) {
  char buf[48];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 4);
  return ec == std::errc() ? std::string(buf, end) : "?";
}

std::string escape(const std::string& s) {
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

struct Range {
  Real lo = std::numeric_limits<Real>::infinity();
  Real hi = -std::numeric_limits<Real>::infinity();

  void add(Real v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo <= 1e-300 * std::max(1.0, std::abs(hi))) lo -= 0.5, hi += 0.5;
  }
};

}  // namespace

std::string line_plot_svg(const PlotSpec& spec, const std::vector<PlotSeries>& series) {
  auto transform_y = [&](Real y) {
    return spec.log_y ? (y > 0.0 ? std::log10(y) : std::numeric_limits<Real>::quiet_NaN()) : y;
  };
  Range xr, yr;
  for (const PlotSeries& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      const Real y = transform_y(s.y[i]);
      if (!std::isfinite(s.x[i]) || !std::isfinite(y)) continue;
      xr.add(s.x[i]);
      yr.add(y);
    }
  }
  xr.settle();
  yr.settle();

  const Real pw = kWidth - kLeft - kRight;
  const Real ph = kHeight - kTop - kBottom;
  auto px = [&](Real x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](Real y) { return kTop + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) +
       "\" height=\"" + std::to_string(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + std::to_string(kWidth / 2) + "\" y=\"20\" text-anchor=\"middle\">" +
       escape(spec.title) + "</text>\n";
  o += "<rect x=\"" + std::to_string(kLeft) + "\" y=\"" + std::to_string(kTop) + "\" width=\"" +
       fixed(pw) + "\" height=\"" + fixed(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

  const std::string ylo = spec.log_y ? "1e" + tick(yr.lo) : tick(yr.lo);
  const std::string yhi = spec.log_y ? "1e" + tick(yr.hi) : tick(yr.hi);
  o += "<text x=\"" + std::to_string(kLeft - 5) + "\" y=\"" + fixed(kTop + ph) +
       "\" text-anchor=\"end\">" + ylo + "</text>\n";
  o += "<text x=\"" + std::to_string(kLeft - 5) + "\" y=\"" + std::to_string(kTop + 10) +
       "\" text-anchor=\"end\">" + yhi + "</text>\n";
  o += "<text x=\"" + std::to_string(kLeft) + "\" y=\"" + fixed(kTop + ph + 18) +
       "\" text-anchor=\"middle\">" + tick(xr.lo) + "</text>\n";
  o += "<text x=\"" + fixed(kLeft + pw) + "\" y=\"" + fixed(kTop + ph + 18) +
       "\" text-anchor=\"middle\">" + tick(xr.hi) + "</text>\n";
  o += "<text x=\"" + fixed(kLeft + pw / 2) + "\" y=\"" + std::to_string(kHeight - 10) +
       "\" text-anchor=\"middle\">" + escape(spec.x_label) + "</text>\n";
  o += "<text x=\"15\" y=\"" + fixed(kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " +
       fixed(kTop + ph / 2) + ")\">" + escape(spec.y_label) + (spec.log_y ? " (log)" : "") +
       "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    std::string points;
    auto flush = [&] {
      if (!points.empty()) {
        o += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
             "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
      }
      points.clear();
    };
    const PlotSeries& ser = series[s];
    for (std::size_t i = 0; i < std::min(ser.x.size(), ser.y.size()); ++i) {
      const Real y = transform_y(ser.y[i]);
      if (!std::isfinite(ser.x[i]) || !std::isfinite(y)) {
        flush();
        continue;
      }
      if (!points.empty()) points += ' ';
      points += fixed(px(ser.x[i])) + "," + fixed(py(y));
    }
    flush();
    const int ly = kTop + 15 + 18 * static_cast<int>(s);
    o += "<line x1=\"" + std::to_string(kWidth - kRight + 10) + "\" y1=\"" + std::to_string(ly - 4) +
         "\" x2=\"" + std::to_string(kWidth - kRight + 30) + "\" y2=\"" + std::to_string(ly - 4) +
         "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + std::to_string(kWidth - kRight + 35) + "\" y=\"" + std::to_string(ly) + "\">" +
         escape(ser.label) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

}  // namespace xformlab
