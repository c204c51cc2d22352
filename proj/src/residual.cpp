// SPDX-License-Identifier: Apache-2.0
#include <piann/residual.hpp>

#include <exception>
#include <stdexcept>
#include <thread>

namespace piann {

std::string to_string(R1Mode mode) {
  return mode == R1Mode::kFiniteDifference ? "finite_difference" : "autodiff";
}

std::string to_string(R2Mode mode) {
  return mode == R2Mode::kCentral ? "central" : "upwind";
}

R1Mode r1_mode_from_string(const std::string &text) {
  if (text == "finite_difference" || text == "fd")
    return R1Mode::kFiniteDifference;
  if (text == "autodiff" || text == "ad")
    return R1Mode::kAutodiff;
  throw std::invalid_argument("unknown r1 mode '" + text +
                              "' (expected finite_difference or autodiff)");
}

R2Mode r2_mode_from_string(const std::string &text) {
  if (text == "central")
    return R2Mode::kCentral;
  if (text == "upwind")
    return R2Mode::kUpwind;
  throw std::invalid_argument("unknown r2 mode '" + text + "' (expected central or upwind)");
}

void ResidualConfig::validate() const { grid.validate(); }

std::size_t ResidualConfig::first_column() const {
  return r1 == R1Mode::kFiniteDifference && include_first_step ? 0 : 1;
}

std::size_t ResidualConfig::columns() const {
  return grid.t_count() - 1 - first_column();
}

Var flux(const Var &u, double m) {
  if (!(m > 0.0))
    throw std::invalid_argument("mobility ratio must be positive");
  Var u2 = square(u);
  Var oil = affine(square(affine(u, -1.0, 1.0)), 1.0 / m, 0.0);
  return div(u2, add(u2, oil));
}

namespace {

void check_fields(std::span<const Var> fields, const ResidualConfig &config) {
  const std::size_t nt = config.grid.t_count();
  const std::size_t nx = config.grid.x_count();
  if (fields.size() != nt)
    throw std::invalid_argument("expected " + std::to_string(nt) + " time slices, got " +
                                std::to_string(fields.size()));
  for (const auto &f : fields)
    if (f.shape() != Shape{nx})
      throw ShapeError("time slice " + to_string(f.shape()) + " does not match " +
                       std::to_string(nx) + " x-nodes");
}

// Stacks per-column interior vectors into [(N-1) x cols].
Var columns_to_matrix(std::span<const Var> cols) {
  return transpose(stack(cols));
}

} // namespace

Var residual_r1(std::span<const Var> fields, const ResidualConfig &config) {
  if (config.r1 != R1Mode::kFiniteDifference)
    throw std::invalid_argument("residual_r1: config is not in finite_difference mode");
  check_fields(fields, config);
  const auto t = config.grid.t_nodes();
  const std::size_t n = config.grid.x_count() - 1;
  std::vector<Var> cols;
  for (std::size_t j = config.first_column(); j + 1 < t.size(); ++j) {
    Var diff = sub(slice(fields[j + 1], 0, 1, n), slice(fields[j], 0, 1, n));
    cols.push_back(affine(diff, 1.0 / (t[j + 1] - t[j]), 0.0));
  }
  return columns_to_matrix(cols);
}

Var residual_r1_autodiff(std::span<const Var> rates, const ResidualConfig &config) {
  if (config.r1 != R1Mode::kAutodiff)
    throw std::invalid_argument("residual_r1_autodiff: config is not in autodiff mode");
  if (rates.size() != config.columns())
    throw std::invalid_argument("expected " + std::to_string(config.columns()) +
                                " time derivatives, got " + std::to_string(rates.size()));
  const std::size_t n = config.grid.x_count() - 1;
  std::vector<Var> cols;
  for (const auto &r : rates)
    cols.push_back(slice(r, 0, 1, n));
  return columns_to_matrix(cols);
}

Var residual_r2(std::span<const Var> fields, const ResidualConfig &config, double m) {
  check_fields(fields, config);
  const auto x = config.grid.x_nodes();
  const std::size_t n = x.size() - 1;
  Tape &tape = fields.front().tape();

  Tensor inv_spacing(Shape{n - 1});
  for (std::size_t i = 1; i < n; ++i)
    inv_spacing[i - 1] = config.r2 == R2Mode::kCentral ? 1.0 / (x[i + 1] - x[i - 1])
                                                       : 1.0 / (x[i] - x[i - 1]);
  Var scale = tape.constant(std::move(inv_spacing));

  std::vector<Var> cols;
  for (std::size_t j = config.first_column(); j + 1 < fields.size(); ++j) {
    Var f = flux(fields[j], m);
    Var diff = config.r2 == R2Mode::kCentral
                   ? sub(slice(f, 0, 2, n + 1), slice(f, 0, 0, n - 1))
                   : sub(slice(f, 0, 1, n), slice(f, 0, 0, n - 1));
    cols.push_back(mul(diff, scale));
  }
  return columns_to_matrix(cols);
}

Var residual_loss(Tape &tape, const PiannModel &model, std::span<const Var> p,
                  const ResidualConfig &config, double m) {
  const auto t = config.grid.t_nodes();
  if (model.config().n_x() != config.grid.x_count())
    throw std::invalid_argument("model x-grid does not match the residual grid");
  std::vector<Var> fields;
  fields.reserve(t.size());
  Var r1;
  if (config.r1 == R1Mode::kFiniteDifference) {
    for (double tj : t)
      fields.push_back(model.forward(tape, p, tj, m));
    r1 = residual_r1(fields, config);
  } else {
    std::vector<Dual> dp;
    dp.reserve(p.size());
    for (const auto &v : p)
      dp.emplace_back(v);
    std::vector<Var> rates;
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (j < config.first_column() || j + 1 == t.size()) {
        // Only the flux term reads these slices.
        fields.push_back(model.forward(tape, p, t[j], m));
        continue;
      }
      Dual u = model.forward_dual(tape, dp, t[j], m);
      fields.push_back(u.value);
      rates.push_back(tangent_or_zero(u));
    }
    r1 = residual_r1_autodiff(rates, config);
  }
  Var r2 = residual_r2(fields, config, m);
  return frobenius_sq(add(r1, r2));
}

Var loss(Tape &tape, const PiannModel &model, std::span<const Var> p,
         const ResidualConfig &config, std::span<const double> m_list) {
  if (m_list.empty())
    throw std::invalid_argument("loss needs at least one mobility ratio");
  config.validate();
  Var total = residual_loss(tape, model, p, config, m_list[0]);
  for (std::size_t k = 1; k < m_list.size(); ++k)
    total = add(total, residual_loss(tape, model, p, config, m_list[k]));
  return total;
}

LossGradient loss_and_gradient(const PiannModel &model, const ResidualConfig &config,
                               std::span<const double> m_list, std::size_t threads) {
  if (m_list.empty())
    throw std::invalid_argument("loss needs at least one mobility ratio");
  config.validate();
  const std::size_t count = m_list.size();
  std::vector<double> values(count);
  std::vector<std::vector<Tensor>> grads(count);

  auto work = [&](std::size_t k) {
    Tape tape;
    const auto p = bind_params(tape, model.params());
    Var l = residual_loss(tape, model, p, config, m_list[k]);
    tape.backward(l);
    values[k] = l.value().item();
    grads[k].reserve(p.size());
    for (const auto &v : p)
      grads[k].push_back(v.grad());
  };

  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t k = 0; k < count; ++k)
      work(k);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
          try {
            for (std::size_t k = w; k < count; k += threads)
              work(k);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
    }
    for (const auto &e : errors)
      if (e)
        std::rethrow_exception(e);
  }

  LossGradient out;
  out.per_m = values;
  out.grads = std::move(grads[0]);
  out.loss = values[0];
  for (std::size_t k = 1; k < count; ++k) {
    out.loss += values[k];
    for (std::size_t e = 0; e < out.grads.size(); ++e) {
      auto &dst = out.grads[e].storage();
      const auto &src = grads[k][e].storage();
      for (std::size_t i = 0; i < dst.size(); ++i)
        dst[i] += src[i];
    }
  }
  return out;
}

double loss_value(const PiannModel &model, const ResidualConfig &config,
                  std::span<const double> m_list) {
  if (m_list.empty())
    throw std::invalid_argument("loss needs at least one mobility ratio");
  config.validate();
  double total = 0.0;
  for (double m : m_list) {
    Tape tape;
    const auto p = bind_params(tape, model.params(), false);
    total += residual_loss(tape, model, p, config, m).value().item();
  }
  return total;
}

} // namespace piann
