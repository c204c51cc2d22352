// SPDX-License-Identifier: Apache-2.0
/**
 * @file   layers.hpp
 * @brief  Parameter registry and the dense / GRU / attention-scorer layers.
 *
 * Layers do not own tensors. They hold indices into a ParamRegistry and are
 * evaluated against a span of bound variables (one per registry entry, in
 * registry order), so the same layer runs on plain tape Vars or on Duals.
 */
#pragma once

#include <piann/dual.hpp>
#include <piann/ops.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace piann {

enum class ParamKind { kWeight, kBias };

class ParamRegistry {
public:
  struct Entry {
    std::string name;
    ParamKind kind;
    Tensor value;
  };

  /// Registers a zero tensor. Throws std::invalid_argument on a duplicate name.
  std::size_t add(std::string name, Shape shape, ParamKind kind);

  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(const std::string &name) const { return index_.contains(name); }
  std::size_t index_of(const std::string &name) const;

  Tensor &at(std::size_t i) { return entries_.at(i).value; }
  const Tensor &at(std::size_t i) const { return entries_.at(i).value; }
  Tensor &at(const std::string &name) { return at(index_of(name)); }
  const Tensor &at(const std::string &name) const { return at(index_of(name)); }

  std::span<Entry> entries() noexcept { return entries_; }
  std::span<const Entry> entries() const noexcept { return entries_; }

  std::size_t scalar_count() const;
  bool all_finite() const;

private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Xavier-uniform weights (limit sqrt(6 / (fan_in + fan_out))), zero biases.
/// The draw order is registry order, element by element, from a 64-bit
/// Mersenne twister, so a seed reproduces bit-identical parameters.
void init_params(ParamRegistry &registry, std::uint64_t seed);

/// Leaves for every registry entry, in registry order.
std::vector<Var> bind_params(Tape &tape, const ParamRegistry &registry,
                             bool trainable = true);
std::vector<Dual> bind_params_dual(Tape &tape, const ParamRegistry &registry,
                                   bool trainable = true);

/// y = W x + b with W [out x in].
struct DenseLayer {
  std::size_t weight = 0, bias = 0;
  std::size_t in = 0, out = 0;

  static DenseLayer create(ParamRegistry &reg, const std::string &name,
                           std::size_t in, std::size_t out);

  template <class V> V forward(std::span<const V> p, const V &x) const {
    if (x.shape() != Shape{in})
      throw ShapeError("dense: expected input " + to_string(Shape{in}) +
                       ", got " + to_string(x.shape()));
    return add(matvec(p[weight], x), p[bias]);
  }
};

/**
 * Gated recurrent unit (Cho et al. orientation):
 *
 *   z  = sigmoid(W_z x + U_z h + b_z)
 *   r  = sigmoid(W_r x + U_r h + b_r)
 *   h~ = tanh(W_h x + U_h (r * h) + b_h)
 *   h' = (1 - z) * h + z * h~
 */
struct GruCell {
  std::size_t w_z = 0, u_z = 0, b_z = 0;
  std::size_t w_r = 0, u_r = 0, b_r = 0;
  std::size_t w_h = 0, u_h = 0, b_h = 0;
  std::size_t in = 0, hidden = 0;

  static GruCell create(ParamRegistry &reg, const std::string &name,
                        std::size_t in, std::size_t hidden);

  template <class V> V step(std::span<const V> p, const V &x, const V &h) const {
    if (x.shape() != Shape{in} || h.shape() != Shape{hidden})
      throw ShapeError("gru: expected x " + to_string(Shape{in}) + " and h " +
                       to_string(Shape{hidden}) + ", got " + to_string(x.shape()) +
                       " and " + to_string(h.shape()));
    V z = sigmoid(add(add(matvec(p[w_z], x), matvec(p[u_z], h)), p[b_z]));
    V r = sigmoid(add(add(matvec(p[w_r], x), matvec(p[u_r], h)), p[b_r]));
    V cand = tanh(add(add(matvec(p[w_h], x), matvec(p[u_h], mul(r, h))), p[b_h]));
    return add(mul(affine(z, -1.0, 1.0), h), mul(z, cand));
  }
};

enum class ScorerKind { kAdditive, kLinear };

std::string to_string(ScorerKind kind);
ScorerKind scorer_from_string(const std::string &text);

/**
 * Scores E_j = a(d, y_j) for a decoder state d against every encoder state.
 *
 * additive: a(d, y) = v . tanh(W [d; y] + b) + c, W [width x 2H]
 * linear:   a(d, y) = w . [d; y] + c
 *
 * The y-half of the product is independent of d, so it is computed once per
 * sequence by prepare() and reused at every decoder step.
 */
struct AttentionScorer {
  ScorerKind kind = ScorerKind::kAdditive;
  DenseLayer hidden;     // additive: [width x 2H]; linear: [1 x 2H]
  DenseLayer projection; // additive only: [1 x width]
  std::size_t state_dim = 0, width = 0;

  static AttentionScorer create(ParamRegistry &reg, const std::string &name,
                                ScorerKind kind, std::size_t state_dim,
                                std::size_t width);

  template <class V> struct Prepared {
    V keys;        // additive: [N x width]; linear: [N]
    V query_w;     // d-half of the hidden weight
    V v;           // additive projection as a vector
  };

  /// ys: encoder states stacked as [N x H].
  template <class V> Prepared<V> prepare(std::span<const V> p, const V &ys) const {
    if (ys.shape().size() != 2 || ys.shape()[1] != state_dim)
      throw ShapeError("attention: encoder states " + to_string(ys.shape()) +
                       " do not have width " + std::to_string(state_dim));
    const V &w = p[hidden.weight];
    V w_query = slice(w, 1, 0, state_dim);
    V w_key = slice(w, 1, state_dim, 2 * state_dim);
    if (kind == ScorerKind::kAdditive) {
      V keys = matmul(ys, transpose(w_key));
      V v = reshape(p[projection.weight], Shape{width});
      return {keys, w_query, v};
    }
    V keys = matvec(ys, reshape(w_key, Shape{state_dim}));
    return {keys, w_query, w_query};
  }

  template <class V>
  V scores(std::span<const V> p, const Prepared<V> &prep, const V &d_prev) const {
    if (d_prev.shape() != Shape{state_dim})
      throw ShapeError("attention: decoder state " + to_string(d_prev.shape()) +
                       " does not have width " + std::to_string(state_dim));
    V query = add(matvec(prep.query_w, d_prev), p[hidden.bias]);
    if (kind == ScorerKind::kAdditive)
      return add(additive_scores(prep.keys, query, prep.v), p[projection.bias]);
    return add(prep.keys, query);
  }

  /// One-shot scoring of d_prev against a list of encoder states.
  template <class V>
  V attention_scores(std::span<const V> p, const V &d_prev, std::span<const V> ys) const {
    return scores(p, prepare(p, stack(ys)), d_prev);
  }
};

} // namespace piann
