// SPDX-License-Identifier: Apache-2.0
/**
 * @file   svg.hpp
 * @brief  Minimal SVG line charts and heatmaps on a fixed 800x600 viewBox.
 *
 * Heatmap colour map: value 0 -> white, value 1 (or the matrix maximum when
 * normalize is set) -> dark blue (#08306b), linear in RGB between the two.
 */
#pragma once

#include <piann/tensor.hpp>

#include <string>
#include <vector>

namespace piann::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
};

std::string line_chart(const std::vector<Series> &series, const ChartOptions &options);
std::string heatmap(const Tensor &matrix, const std::string &title, bool normalize = true);

} // namespace piann::svg
