// SPDX-License-Identifier: Apache-2.0
#include <piann/model.hpp>

#include <cmath>
#include <stdexcept>

namespace piann {

void PiannConfig::validate() const {
  if (x_nodes.size() < 3)
    throw std::invalid_argument("model needs at least 3 x-nodes");
  if (hidden_dim < 1)
    throw std::invalid_argument("hidden_dim must be at least 1");
  if (!(t_scale > 0.0) || !(m_scale > 0.0))
    throw std::invalid_argument("input scales must be positive");
}

PiannModel::PiannModel(PiannConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::size_t h = config_.hidden_dim;
  const std::size_t width = config_.attention_dim ? config_.attention_dim : h;
  embed_ = DenseLayer::create(params_, "embed", 2, h);
  lift_ = DenseLayer::create(params_, "lift", 1, h);
  encoder_ = GruCell::create(params_, "encoder", h, h);
  scorer_ = AttentionScorer::create(params_, "attention", config_.scorer, h, width);
  decoder_ = GruCell::create(params_, "decoder", 1 + h, h);
  readout_ = DenseLayer::create(params_, "readout", h, 1);
}

Tensor PiannModel::input(double t, double m) const {
  return Tensor::vector({t / config_.t_scale, m / config_.m_scale});
}

template <class V>
V PiannModel::run(Tape &tape, std::span<const V> p, const V &input,
                  std::vector<V> *attention) const {
  const std::size_t n = config_.n_x() - 1;

  V h = tanh(embed_.forward(p, input));
  std::vector<V> ys;
  ys.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) {
    V x = V(tape.constant(Tensor::vector({config_.x_nodes[i]})));
    h = encoder_.step(p, lift_.forward(p, x), h);
    ys.push_back(h);
  }
  const V y_matrix = stack(std::span<const V>(ys));
  const V y_columns = transpose(y_matrix);
  const auto prepared = scorer_.prepare(p, y_matrix);

  V d = h;
  V u_prev = V(tape.constant(Tensor::vector({1.0})));
  std::vector<V> outputs;
  outputs.reserve(n + 1);
  outputs.push_back(u_prev);
  for (std::size_t i = 1; i <= n; ++i) {
    V alpha = softmax_rows(scorer_.scores(p, prepared, d));
    if (attention)
      attention->push_back(alpha);
    V context = matvec(y_columns, alpha);
    d = decoder_.step(p, concat(u_prev, context, 0), d);
    u_prev = sigmoid(readout_.forward(p, d));
    outputs.push_back(u_prev);
  }
  return reshape(stack(std::span<const V>(outputs)), Shape{n + 1});
}

template Var PiannModel::run<Var>(Tape &, std::span<const Var>, const Var &,
                                  std::vector<Var> *) const;
template Dual PiannModel::run<Dual>(Tape &, std::span<const Dual>, const Dual &,
                                    std::vector<Dual> *) const;

namespace {

void check_inputs(double t, double m) {
  if (!std::isfinite(t) || !std::isfinite(m))
    throw std::invalid_argument("model inputs must be finite");
  if (t < 0.0)
    throw std::invalid_argument("model time must be non-negative");
  if (!(m > 0.0))
    throw std::invalid_argument("mobility ratio must be positive");
}

} // namespace

Var PiannModel::forward(Tape &tape, std::span<const Var> p, double t, double m,
                        std::vector<Var> *attention) const {
  check_inputs(t, m);
  if (t == 0.0)
    return tape.constant(forward_at_t0(config_, m).u);
  return run<Var>(tape, p, tape.constant(input(t, m)), attention);
}

Dual PiannModel::forward_dual(Tape &tape, std::span<const Dual> p, double t,
                              double m) const {
  check_inputs(t, m);
  if (t == 0.0)
    throw std::invalid_argument("time derivative is undefined at the hard initial state t = 0");
  Dual in(tape.constant(input(t, m)),
          tape.constant(Tensor::vector({1.0 / config_.t_scale, 0.0})));
  return run<Dual>(tape, p, in);
}

PiannOutput PiannModel::forward(double t, double m) const {
  check_inputs(t, m);
  if (t == 0.0)
    return forward_at_t0(config_, m);
  Tape tape;
  const auto p = bind_params(tape, params_, false);
  std::vector<Var> rows;
  Var u = forward(tape, p, t, m, &rows);
  PiannOutput out;
  out.u = u.value();
  const std::size_t n = rows.size();
  Tensor alpha(Shape{n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      alpha.at(i, j) = rows[i].value()[j];
  out.attention = std::move(alpha);
  return out;
}

Tensor PiannModel::time_derivative(double t, double m) const {
  check_inputs(t, m);
  if (t == 0.0)
    throw std::invalid_argument("time derivative is undefined at the hard initial state t = 0");
  Tape tape;
  const auto p = bind_params_dual(tape, params_, false);
  Dual u = forward_dual(tape, p, t, m);
  return tangent_or_zero(u).value();
}

PiannOutput forward_at_t0(const PiannConfig &config, double m) {
  if (!(m > 0.0))
    throw std::invalid_argument("mobility ratio must be positive");
  Tensor u(Shape{config.n_x()}, 0.0);
  u[0] = 1.0;
  return {std::move(u), std::nullopt};
}

} // namespace piann
