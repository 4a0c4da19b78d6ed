#pragma once

#include <string>
#include <vector>

#include "xformlab/core.hpp"

namespace xformlab {

struct PlotSeries {
  std::string label;
  std::vector<Real> x;
  std::vector<Real> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
};

/// Standalone SVG line chart; output depends only on the inputs.
std::string line_plot_svg(const PlotSpec& spec, const std::vector<PlotSeries>& series);

}  // namespace xformlab
