// SPDX-License-Identifier: Apache-2.0
#include <piann/grid.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

namespace piann {

namespace {

std::size_t node_count(double lo, double hi, double step, const char *axis) {
  if (!(step > 0.0) || !std::isfinite(step))
    throw std::invalid_argument(std::string(axis) + " step must be positive");
  if (!(hi > lo))
    throw std::invalid_argument(std::string(axis) + " range is empty");
  const double cells = (hi - lo) / step;
  const double rounded = std::round(cells);
  if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells))
    throw std::invalid_argument(std::string(axis) + " step does not divide the range");
  return static_cast<std::size_t>(rounded) + 1;
}

std::vector<double> nodes(double lo, double step, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = lo + static_cast<double>(i) * step;
  return out;
}

} // namespace

void GridSpec::validate() const {
  if (x_min < 0.0 || t_min < 0.0)
    throw std::invalid_argument("grid must start at non-negative x and t");
  if (x_count() < 3)
    throw std::invalid_argument("grid needs at least 3 x-nodes");
  if (t_count() < 3)
    throw std::invalid_argument("grid needs at least 3 t-nodes");
  for (double m : m_values)
    if (!(m > 0.0) || !std::isfinite(m))
      throw std::invalid_argument("mobility ratios must be positive");
}

std::size_t GridSpec::x_count() const { return node_count(x_min, x_max, dx, "x"); }
std::size_t GridSpec::t_count() const { return node_count(t_min, t_max, dt, "t"); }

std::vector<double> GridSpec::x_nodes() const { return nodes(x_min, dx, x_count()); }
std::vector<double> GridSpec::t_nodes() const { return nodes(t_min, dt, t_count()); }

} // namespace piann
