// SPDX-License-Identifier: Apache-2.0
/**
 * @file   model.hpp
 * @brief  Attention-based encoder-decoder GRU mapping (t, M) to saturations
 *         at fixed x-locations.
 *
 * Forward pass for an x-grid x_0..x_N:
 *
 *   h^0 = tanh(embed([t / t_scale, M / m_scale]))
 *   h^i = encoder(lift(x_i), h^{i-1}),  y^i = h^i          i = 1..N
 *   d^0 = h^N,  u_0 = 1
 *   alpha_i = softmax_j(a(d^{i-1}, y^j)),  c^i = sum_j alpha_ij y^j
 *   d^i = decoder([u_{i-1}; c^i], d^{i-1}),  u_i = sigmoid(readout(d^i))
 *
 * The output is [1, u_1, .., u_N]: the inflow boundary value is concatenated
 * rather than learned. At t = 0 the network is bypassed and the initial state
 * [1, 0, .., 0] is returned.
 */
#pragma once

#include <piann/layers.hpp>

#include <optional>
#include <vector>

namespace piann {

struct PiannConfig {
  std::vector<double> x_nodes;
  std::size_t hidden_dim = 32;
  /// Width of the additive scorer's hidden layer; 0 means hidden_dim.
  std::size_t attention_dim = 0;
  ScorerKind scorer = ScorerKind::kAdditive;
  double t_scale = 1.0;
  double m_scale = 100.0;

  void validate() const;
  std::size_t n_x() const noexcept { return x_nodes.size(); }
};

struct PiannOutput {
  Tensor u;                       // [N+1]
  std::optional<Tensor> attention; // [N x N], absent at t = 0
};

class PiannModel {
public:
  explicit PiannModel(PiannConfig config);

  const PiannConfig &config() const noexcept { return config_; }
  ParamRegistry &params() noexcept { return params_; }
  const ParamRegistry &params() const noexcept { return params_; }

  /// Network evaluation at t > 0 on a tape. p is bind_params() output.
  /// When attention is non-null the softmax rows are appended to it.
  template <class V>
  V run(Tape &tape, std::span<const V> p, const V &input,
        std::vector<V> *attention = nullptr) const;

  /// Forward pass on a tape with trainable parameter leaves p.
  Var forward(Tape &tape, std::span<const Var> p, double t, double m,
              std::vector<Var> *attention = nullptr) const;
  /// Forward pass whose output carries du/dt as an on-tape tangent.
  Dual forward_dual(Tape &tape, std::span<const Dual> p, double t, double m) const;

  /// Value-only forward; short-circuits t = 0.
  PiannOutput forward(double t, double m) const;
  /// du/dt at (t, m), t > 0. Component 0 is identically 0.
  Tensor time_derivative(double t, double m) const;

  /// Model input vector for (t, m).
  Tensor input(double t, double m) const;

private:
  PiannConfig config_;
  ParamRegistry params_;
  DenseLayer embed_;
  DenseLayer lift_;
  GruCell encoder_;
  AttentionScorer scorer_;
  GruCell decoder_;
  DenseLayer readout_;
};

/// The hard initial state [1, 0, .., 0] for n_x nodes.
PiannOutput forward_at_t0(const PiannConfig &config, double m);

} // namespace piann
