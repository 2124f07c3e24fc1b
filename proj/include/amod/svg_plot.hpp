#pragma once

#include <string>
#include <vector>

namespace amod {

// Minimal static line chart, one polyline per series. x values are the
// series index scaled by x_scale (e.g. minutes per step).
struct PlotSeries {
  std::string name;
  std::vector<double> values;
};

void write_svg_line_chart(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series,
                          double x_scale = 1.0);

}  // namespace amod
