// SPDX-License-Identifier: Apache-2.0
/**
 * @file   residual.hpp
 * @brief  Physics-informed loss for u_t + f(u)_x = 0 on a fixed grid.
 *
 *   R1_ij = (u_i(t_{j+1}) - u_i(t_j)) / (t_{j+1} - t_j)    (finite_difference)
 *         = du_i/dt (t_j)                                  (autodiff)
 *   R2_ij = (f_{i+1} - f_{i-1}) / (x_{i+1} - x_{i-1})      (central)
 *         = (f_i - f_{i-1}) / (x_i - x_{i-1})              (upwind)
 *   loss  = sum_M || R1 + R2 ||_F^2
 *
 * for interior nodes i = 1..N-1 and time columns j = 1..T-1. With
 * include_first_step (finite_difference only) the column j = 0, anchored at
 * the hard initial state, is added. Initial and boundary conditions never
 * appear as penalty terms: the model enforces them.
 */
#pragma once

#include <piann/grid.hpp>
#include <piann/model.hpp>

#include <span>
#include <string>
#include <vector>

namespace piann {

enum class R1Mode { kFiniteDifference, kAutodiff };
enum class R2Mode { kCentral, kUpwind };

std::string to_string(R1Mode mode);
std::string to_string(R2Mode mode);
R1Mode r1_mode_from_string(const std::string &text);
R2Mode r2_mode_from_string(const std::string &text);

struct ResidualConfig {
  R1Mode r1 = R1Mode::kFiniteDifference;
  R2Mode r2 = R2Mode::kCentral;
  GridSpec grid;
  bool include_first_step = true;

  void validate() const;
  /// Index of the first time column of the residual matrices.
  std::size_t first_column() const;
  /// Number of time columns of the residual matrices.
  std::size_t columns() const;
};

/// On-tape flux vector f(u) for saturations u.
Var flux(const Var &u, double m);

/// fields[j] is u(t_j) over all x-nodes for j = 0..T. Returns [(N-1) x cols].
Var residual_r1(std::span<const Var> fields, const ResidualConfig &config);
/// rates[k] is du/dt at t_{first_column()+k}. Returns [(N-1) x cols].
Var residual_r1_autodiff(std::span<const Var> rates, const ResidualConfig &config);
/// fields as for residual_r1. Returns [(N-1) x cols].
Var residual_r2(std::span<const Var> fields, const ResidualConfig &config, double m);

/// ||R1 + R2||_F^2 for one mobility ratio, recorded on tape.
Var residual_loss(Tape &tape, const PiannModel &model, std::span<const Var> p,
                  const ResidualConfig &config, double m);
/// Full loss over m_list on one tape. Throws std::invalid_argument when empty.
Var loss(Tape &tape, const PiannModel &model, std::span<const Var> p,
         const ResidualConfig &config, std::span<const double> m_list);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> per_m;
  /// One gradient per registry entry, in registry order.
  std::vector<Tensor> grads;
};

/// Loss and gradient with one tape per mobility ratio. Ratios are spread over
/// `threads` workers and reduced in m_list order, so the result does not
/// depend on the worker count.
LossGradient loss_and_gradient(const PiannModel &model, const ResidualConfig &config,
                               std::span<const double> m_list, std::size_t threads = 1);

/// Loss value only, no gradient.
double loss_value(const PiannModel &model, const ResidualConfig &config,
                  std::span<const double> m_list);

} // namespace piann
