#pragma once

#include <string>
#include <vector>

#include "wmlab/image.hpp"

namespace wmlab {

// Minimal deterministic chart rendering for the report outputs. Numeric
// tick labels use a built-in 5x7 digit font; series are distinguished by
// color in legend order.
struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

ImageGrid render_line_chart(const std::vector<PlotSeries>& series,
                            int width = 560, int height = 360);

// One bar per value, grouped by series index.
ImageGrid render_bar_chart(const std::vector<std::string>& groups,
                           const std::vector<PlotSeries>& series,
                           int width = 560, int height = 360);

void save_chart(const ImageGrid& chart, const std::string& path);

}  // namespace wmlab
