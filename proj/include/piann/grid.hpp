// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <piann/tensor.hpp>

#include <cstddef>
#include <vector>

namespace piann {

/// Uniform space-time lattice {x_0..x_N} x {t_0..t_T} plus the mobility
/// ratios it is used with.
struct GridSpec {
  double x_min = 0.0, x_max = 1.0, dx = 0.01;
  double t_min = 0.0, t_max = 0.5, dt = 0.01;
  std::vector<double> m_values;

  /// Throws std::invalid_argument for non-positive steps, inverted ranges,
  /// steps that do not divide the range, or fewer than 3 nodes per axis.
  void validate() const;

  std::size_t x_count() const; // N + 1
  std::size_t t_count() const; // T + 1
  std::vector<double> x_nodes() const;
  std::vector<double> t_nodes() const;
};

/// Saturation samples u(x_i, t_j) stored as a (T+1) x (N+1) tensor.
struct SolutionField {
  double m = 0.0;
  std::vector<double> x;
  std::vector<double> t;
  Tensor values;

  double at(std::size_t j, std::size_t i) const { return values.at(j, i); }
};

} // namespace piann
