// SPDX-License-Identifier: Apache-2.0
/**
 * @file   buckley_leverett.hpp
 * @brief  Fractional-flow flux, the exact Riemann solution for a water flood
 *         (u = 1 injected at x = 0 into u = 0), and a first-order upwind
 *         finite-volume reference solver.
 *
 * Flux: f_M(u) = u^2 / (u^2 + (1 - u)^2 / M), with f(0) = 0.
 *
 * Note: the residual formulation this project reproduces prints the flux
 * vector with a minus sign in the denominator. That denominator vanishes
 * inside (0, 1) and admits no Riemann solution, so the plus-sign form above
 * is used everywhere.
 */
#pragma once

#include <piann/grid.hpp>

#include <cstddef>

namespace piann::bl {

double flux(double u, double m);
double flux_derivative(double u, double m);

/// Largest |f'| over [0, 1], sampled on a 1e-5 lattice.
double max_flux_speed(double m);

/// Post-shock (Welge) saturation: the root of f'(u) = f(u) / u in (0, 1),
/// located by bisection. Throws std::runtime_error when the bracket fails.
double shock_saturation(double m);

/// Self-similar solution of the flood problem for one mobility ratio.
class AnalyticSolution {
public:
  explicit AnalyticSolution(double m);

  double m() const noexcept { return m_; }
  double shock_saturation() const noexcept { return u_star_; }
  /// Shock speed s = f(u*) / u* = f'(u*).
  double shock_speed() const noexcept { return speed_; }

  /// u(x, t); returns the initial/boundary data at t = 0 or x = 0.
  double operator()(double x, double t) const;
  /// Rarefaction inversion: the u in [u*, 1] with f'(u) = xi, for 0 <= xi <= s.
  double rarefaction(double xi) const;

private:
  double m_;
  double u_star_;
  double speed_;
};

double analytic_solution(double m, double x, double t);
SolutionField analytic_field(double m, const GridSpec &grid);

struct FvResult {
  SolutionField field;
  std::size_t substeps = 0;
  double internal_dt = 0.0;
};

/// Explicit conservative upwind scheme on the grid's x-nodes with inflow
/// u_0 = 1, stepped with dt <= cfl * dx / max|f'| and sampled at the grid's
/// t-nodes.
FvResult solve_upwind_fv(double m, const GridSpec &grid, double cfl = 0.9);

/// Sum of |u_{i+1} - u_i| over one row.
double total_variation(std::span<const double> row);

} // namespace piann::bl
