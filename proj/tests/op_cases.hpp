// SPDX-License-Identifier: Apache-2.0
// One gradient-check case per differentiable tape operation, plus the full
// residual loss of a tiny model.
#pragma once

#include "gradcheck.hpp"

#include <piann/layers.hpp>
#include <piann/model.hpp>
#include <piann/residual.hpp>

#include <string>

namespace piann::testing {

struct OpCase {
  std::string name;
  ScalarFn fn;
  std::vector<Tensor> inputs;
};

inline std::vector<OpCase> op_cases() {
  std::mt19937_64 rng(2024);
  auto r = [&](Shape s) { return random_tensor(std::move(s), rng); };
  auto positive = [&](Shape s) { return random_tensor(std::move(s), rng, 0.5, 2.0); };
  std::vector<OpCase> cases;
  auto add_case = [&](std::string name, ScalarFn fn, std::vector<Tensor> in) {
    cases.push_back({std::move(name), std::move(fn), std::move(in)});
  };

  add_case("matmul", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, matmul(v[0], v[1]));
  }, {r({3, 4}), r({4, 2})});
  add_case("matvec", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, matvec(v[0], v[1]));
  }, {r({3, 4}), r({4})});
  add_case("transpose", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, transpose(v[0]));
  }, {r({3, 2})});
  add_case("add", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, add(v[0], v[1]));
  }, {r({2, 3}), r({2, 3})});
  add_case("add scalar broadcast", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, add(v[0], v[1]));
  }, {r({2, 3}), Tensor::scalar(0.3)});
  add_case("sub", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, sub(v[0], v[1]));
  }, {r({4}), r({4})});
  add_case("mul", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, mul(v[0], v[1]));
  }, {r({2, 3}), r({2, 3})});
  add_case("mul scalar broadcast", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, mul(v[1], v[0]));
  }, {r({5}), Tensor::scalar(-0.7)});
  add_case("div", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, div(v[0], v[1]));
  }, {r({2, 3}), positive({2, 3})});
  add_case("div by scalar", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, div(v[0], v[1]));
  }, {r({3}), Tensor::scalar(1.3)});
  add_case("affine", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, affine(v[0], -2.5, 0.75));
  }, {r({3, 2})});
  add_case("sigmoid", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, sigmoid(v[0]));
  }, {random_tensor({6}, rng, -4.0, 4.0)});
  add_case("tanh", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, tanh(v[0]));
  }, {random_tensor({6}, rng, -3.0, 3.0)});
  add_case("softmax vector", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, softmax_rows(v[0]));
  }, {random_tensor({5}, rng, -3.0, 3.0)});
  add_case("softmax rows", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, softmax_rows(v[0]));
  }, {random_tensor({3, 4}, rng, -3.0, 3.0)});
  add_case("concat axis 0", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, concat(v[0], v[1], 0));
  }, {r({2, 3}), r({1, 3})});
  add_case("concat axis 1", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, concat(v[0], v[1], 1));
  }, {r({2, 3}), r({2, 2})});
  add_case("concat vectors", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, concat(v[0], v[1], 0));
  }, {r({3}), r({2})});
  add_case("slice axis 0", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, slice(v[0], 0, 1, 3));
  }, {r({4, 3})});
  add_case("slice axis 1", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, slice(v[0], 1, 1, 3));
  }, {r({2, 4})});
  add_case("stack", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, stack(v));
  }, {r({3}), r({3}), r({3})});
  add_case("reshape", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, reshape(v[0], Shape{3, 2}));
  }, {r({6})});
  add_case("sum", [](Tape &, const std::vector<Var> &v) {
    return sum(v[0]);
  }, {r({2, 3})});
  add_case("mean", [](Tape &, const std::vector<Var> &v) {
    return mean(v[0]);
  }, {r({2, 3})});
  add_case("square", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, square(v[0]));
  }, {r({4})});
  add_case("frobenius_sq", [](Tape &, const std::vector<Var> &v) {
    return frobenius_sq(v[0]);
  }, {r({3, 3})});
  add_case("additive_scores", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, additive_scores(v[0], v[1], v[2]));
  }, {r({5, 3}), r({3}), r({3})});
  add_case("flux M=2", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, flux(v[0], 2.0));
  }, {random_tensor({6}, rng, 0.05, 0.95)});
  add_case("flux M=0.5", [](Tape &t, const std::vector<Var> &v) {
    return weighted_sum(t, flux(v[0], 0.5));
  }, {random_tensor({6}, rng, 0.05, 0.95)});
  return cases;
}

// Tiny model for end-to-end loss checks: hidden 4, N = 5, T = 3.
struct TinyLoss {
  GridSpec grid;
  PiannModel model;
  ResidualConfig residual;

  explicit TinyLoss(R1Mode r1 = R1Mode::kFiniteDifference, R2Mode r2 = R2Mode::kCentral,
                    ScorerKind scorer = ScorerKind::kAdditive)
      : grid(make_grid()), model(make_config(grid, scorer)) {
    init_params(model.params(), 11);
    residual.grid = grid;
    residual.r1 = r1;
    residual.r2 = r2;
  }

  static GridSpec make_grid() {
    GridSpec g;
    g.x_min = 0.0;
    g.x_max = 1.0;
    g.dx = 0.25;
    g.t_min = 0.0;
    g.t_max = 0.2;
    g.dt = 0.1;
    g.m_values = {2.0};
    return g;
  }
  static PiannConfig make_config(const GridSpec &g, ScorerKind scorer) {
    PiannConfig c;
    c.x_nodes = g.x_nodes();
    c.hidden_dim = 4;
    c.scorer = scorer;
    return c;
  }

  ScalarFn fn(double m = 2.0) const {
    return [this, m](Tape &tape, const std::vector<Var> &p) {
      return residual_loss(tape, model, p, residual, m);
    };
  }
  std::vector<Tensor> params() const {
    std::vector<Tensor> out;
    for (const auto &e : model.params().entries())
      out.push_back(e.value);
    return out;
  }
};

} // namespace piann::testing
