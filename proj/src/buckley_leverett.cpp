// SPDX-License-Identifier: Apache-2.0
#include <piann/buckley_leverett.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace piann::bl {

namespace {

constexpr double kBisectionTol = 1e-14;
constexpr int kMaxBisection = 200;

void check_mobility(double m) {
  if (!(m > 0.0) || !std::isfinite(m))
    throw std::invalid_argument("mobility ratio must be positive, got " +
                                std::to_string(m));
}

double flux_derivative_unchecked(double u, double m);

// u f'(u) - f(u): positive while the chord from the origin lies below the
// tangent, zero at the Welge point.
double tangency_gap(double u, double m) {
  const double w = 1.0 - u;
  const double f = u * u / (u * u + w * w / m);
  return u * flux_derivative_unchecked(u, m) - f;
}

double flux_derivative_unchecked(double u, double m) {
  const double w = 1.0 - u;
  const double d = u * u + w * w / m;
  const double dd = 2.0 * u - 2.0 * w / m;
  return (2.0 * u * d - u * u * dd) / (d * d);
}

} // namespace

double flux(double u, double m) {
  check_mobility(m);
  if (!(u >= 0.0 && u <= 1.0))
    throw std::domain_error("saturation outside [0, 1]: " + std::to_string(u));
  if (u == 0.0)
    return 0.0;
  const double w = 1.0 - u;
  return u * u / (u * u + w * w / m);
}

double flux_derivative(double u, double m) {
  check_mobility(m);
  if (!(u >= 0.0 && u <= 1.0))
    throw std::domain_error("saturation outside [0, 1]: " + std::to_string(u));
  return flux_derivative_unchecked(u, m);
}

double max_flux_speed(double m) {
  double best = 0.0;
  constexpr int kSamples = 100000;
  for (int k = 0; k <= kSamples; ++k)
    best = std::max(best, std::abs(flux_derivative(k / double(kSamples), m)));
  return best;
}

double shock_saturation(double m) {
  check_mobility(m);
  double lo = 1e-9, hi = 1.0;
  // The gap is positive below u* and negative above it.
  if (!(tangency_gap(lo, m) > 0.0 && tangency_gap(hi, m) < 0.0))
    throw std::runtime_error("shock_saturation: root not bracketed for M = " +
                             std::to_string(m));
  for (int it = 0; it < kMaxBisection && hi - lo > kBisectionTol; ++it) {
    const double mid = 0.5 * (lo + hi);
    (tangency_gap(mid, m) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

AnalyticSolution::AnalyticSolution(double m)
    : m_(m), u_star_(bl::shock_saturation(m)) {
  speed_ = flux(u_star_, m_) / u_star_;
  // Inverting f' on [u*, 1] needs it to be strictly decreasing there.
  double prev = flux_derivative(u_star_, m_);
  for (double u = u_star_ + 1e-3; u <= 1.0; u += 1e-3) {
    const double cur = flux_derivative(u, m_);
    if (!(cur < prev))
      throw std::runtime_error("flux derivative not monotone on [u*, 1]");
    prev = cur;
  }
}

double AnalyticSolution::rarefaction(double xi) const {
  if (xi <= 0.0)
    return 1.0;
  if (xi >= speed_)
    return u_star_;
  double lo = u_star_, hi = 1.0; // f'(lo) >= xi >= f'(hi)
  for (int it = 0; it < kMaxBisection && hi - lo > kBisectionTol; ++it) {
    const double mid = 0.5 * (lo + hi);
    (flux_derivative(mid, m_) > xi ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double AnalyticSolution::operator()(double x, double t) const {
  if (x < 0.0 || t < 0.0 || !std::isfinite(x) || !std::isfinite(t))
    throw std::domain_error("analytic solution needs x >= 0 and t >= 0");
  if (x == 0.0)
    return 1.0;
  if (t == 0.0)
    return 0.0;
  const double xi = x / t;
  if (xi > speed_)
    return 0.0;
  return rarefaction(xi);
}

double analytic_solution(double m, double x, double t) {
  return AnalyticSolution(m)(x, t);
}

SolutionField analytic_field(double m, const GridSpec &grid) {
  grid.validate();
  const AnalyticSolution exact(m);
  SolutionField field{m, grid.x_nodes(), grid.t_nodes(), {}};
  field.values = Tensor(Shape{field.t.size(), field.x.size()});
  for (std::size_t j = 0; j < field.t.size(); ++j)
    for (std::size_t i = 0; i < field.x.size(); ++i)
      field.values.at(j, i) = exact(field.x[i], field.t[j]);
  return field;
}

FvResult solve_upwind_fv(double m, const GridSpec &grid, double cfl) {
  check_mobility(m);
  if (!(cfl > 0.0 && cfl <= 1.0))
    throw std::invalid_argument("cfl must lie in (0, 1]");
  grid.validate();
  FvResult result;
  SolutionField &field = result.field;
  field.m = m;
  field.x = grid.x_nodes();
  field.t = grid.t_nodes();
  const std::size_t nx = field.x.size();
  field.values = Tensor(Shape{field.t.size(), nx});

  std::vector<double> u(nx, 0.0), f(nx, 0.0);
  u[0] = 1.0;
  const double dt_max = cfl * grid.dx / max_flux_speed(m);
  result.internal_dt = dt_max;

  auto store = [&](std::size_t j) {
    std::copy(u.begin(), u.end(), &field.values.storage()[j * nx]);
  };
  store(0);
  for (std::size_t j = 0; j + 1 < field.t.size(); ++j) {
    const double span = field.t[j + 1] - field.t[j];
    const auto steps = static_cast<std::size_t>(std::ceil(span / dt_max - 1e-12));
    const double dt = span / static_cast<double>(steps);
    for (std::size_t s = 0; s < steps; ++s) {
      for (std::size_t i = 0; i < nx; ++i)
        f[i] = flux(u[i], m);
      for (std::size_t i = 1; i < nx; ++i) {
        const double lambda = dt / (field.x[i] - field.x[i - 1]);
        u[i] -= lambda * (f[i] - f[i - 1]);
        // Monotone under CFL; clamp only round-off excursions.
        u[i] = std::clamp(u[i], 0.0, 1.0);
      }
      result.internal_dt = std::min(result.internal_dt, dt);
    }
    result.substeps += steps;
    store(j + 1);
  }
  return result;
}

double total_variation(std::span<const double> row) {
  double tv = 0.0;
  for (std::size_t i = 1; i < row.size(); ++i)
    tv += std::abs(row[i] - row[i - 1]);
  return tv;
}

} // namespace piann::bl
