// SPDX-License-Identifier: Apache-2.0
#include "gradcheck.hpp"

#include <piann/layers.hpp>

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace piann;
using namespace piann::testing;

namespace {

std::vector<Var> bind(Tape &tape, const ParamRegistry &reg) { return bind_params(tape, reg); }

} // namespace

TEST_CASE("dense layer identity and constant cases") {
  ParamRegistry reg;
  auto layer = DenseLayer::create(reg, "d", 3, 3);
  reg.at(layer.weight) = Tensor::identity(3);
  Tape tape;
  auto p = bind(tape, reg);
  Var x = tape.constant(Tensor::vector({1, -2, 3}));
  CHECK(layer.forward<Var>(p, x).value() == Tensor::vector({1, -2, 3}));

  ParamRegistry reg2;
  auto layer2 = DenseLayer::create(reg2, "d", 3, 2);
  reg2.at(layer2.bias) = Tensor::vector({0.5, -1.5});
  Tape tape2;
  auto p2 = bind(tape2, reg2);
  CHECK(layer2.forward<Var>(p2, tape2.constant(Tensor::vector({4, 5, 6}))).value() ==
        Tensor::vector({0.5, -1.5}));
}

TEST_CASE("dense layer agrees with matvec + add") {
  ParamRegistry reg;
  auto layer = DenseLayer::create(reg, "d", 4, 3);
  init_params(reg, 3);
  std::mt19937_64 rng(4);
  reg.at(layer.bias) = random_tensor({3}, rng);
  Tape tape;
  auto p = bind(tape, reg);
  Var x = tape.constant(random_tensor({4}, rng));
  CHECK(layer.forward<Var>(p, x).value() ==
        add(matvec(p[layer.weight], x), p[layer.bias]).value());
  CHECK_THROWS_AS(layer.forward<Var>(p, tape.constant(Tensor(Shape{3}))), ShapeError);
}

TEST_CASE("gru with zero parameters halves the state") {
  ParamRegistry reg;
  auto cell = GruCell::create(reg, "g", 2, 3);
  Tape tape;
  auto p = bind(tape, reg);
  Var h = tape.constant(Tensor::vector({0.4, -0.8, 1.0}));
  Var x = tape.constant(Tensor::vector({2, -1}));
  Var next = cell.step<Var>(p, x, h);
  CHECK(next.value() == Tensor::vector({0.2, -0.4, 0.5}));
  Var from_zero = cell.step<Var>(p, x, tape.constant(Tensor(Shape{3})));
  CHECK(from_zero.value() == Tensor(Shape{3}));
}

TEST_CASE("gru registers nine tensors and stays in the convex hull bound") {
  ParamRegistry reg;
  auto cell = GruCell::create(reg, "g", 2, 3);
  CHECK(reg.size() == 9);
  for (const char *name : {"g.W_z", "g.U_z", "g.b_z", "g.W_r", "g.U_r", "g.b_r", "g.W_h",
                           "g.U_h", "g.b_h"})
    CHECK(reg.contains(name));
  init_params(reg, 9);
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    auto p = bind(tape, reg);
    Tensor h0 = random_tensor({3}, rng, -3, 3);
    Var h = cell.step<Var>(p, tape.constant(random_tensor({2}, rng, -3, 3)),
                           tape.constant(h0));
    for (std::size_t k = 0; k < 3; ++k)
      CHECK(std::abs(h.value()[k]) <= std::max(std::abs(h0[k]), 1.0));
  }
}

TEST_CASE("gru gradient over all nine tensors matches finite differences") {
  ParamRegistry reg;
  auto cell = GruCell::create(reg, "g", 2, 3);
  init_params(reg, 21);
  std::mt19937_64 rng(22);
  for (auto &e : reg.entries())
    if (e.kind == ParamKind::kBias)
      e.value = random_tensor(e.value.shape(), rng, -0.5, 0.5);
  const Tensor x = random_tensor({2}, rng), h = random_tensor({3}, rng);
  std::vector<Tensor> values;
  for (const auto &e : reg.entries())
    values.push_back(e.value);
  auto fn = [&](Tape &tape, const std::vector<Var> &p) {
    return sum(cell.step<Var>(p, tape.constant(x), tape.constant(h)));
  };
  const GradCheck g = check_gradient(fn, values);
  CHECK(g.checked == reg.scalar_count());
  CHECK(g.max_abs_error < 1e-6);
}

TEST_CASE("zero scorer weights give equal scores and a uniform softmax") {
  for (auto kind : {ScorerKind::kAdditive, ScorerKind::kLinear}) {
    ParamRegistry reg;
    auto scorer = AttentionScorer::create(reg, "a", kind, 3, 4);
    Tape tape;
    auto p = bind(tape, reg);
    std::mt19937_64 rng(1);
    std::vector<Var> ys;
    for (int j = 0; j < 5; ++j)
      ys.push_back(tape.constant(random_tensor({3}, rng)));
    Var scores = scorer.attention_scores<Var>(p, tape.constant(random_tensor({3}, rng)), ys);
    Var alpha = softmax_rows(scores);
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(scores.value()[j] == scores.value()[0]);
      CHECK(alpha.value()[j] == doctest::Approx(0.2).epsilon(1e-15));
    }
  }
}

TEST_CASE("single encoder state gives alpha = [1]") {
  ParamRegistry reg;
  auto scorer = AttentionScorer::create(reg, "a", ScorerKind::kAdditive, 3, 3);
  init_params(reg, 5);
  Tape tape;
  auto p = bind(tape, reg);
  std::vector<Var> ys{tape.constant(Tensor::vector({0.3, -2, 1}))};
  Var alpha = softmax_rows(
      scorer.attention_scores<Var>(p, tape.constant(Tensor::vector({1, 1, 1})), ys));
  CHECK(alpha.value() == Tensor::vector({1.0}));
}

TEST_CASE("attention scores are permutation equivariant and deterministic") {
  for (auto kind : {ScorerKind::kAdditive, ScorerKind::kLinear}) {
    ParamRegistry reg;
    auto scorer = AttentionScorer::create(reg, "a", kind, 4, 6);
    init_params(reg, 17);
    std::mt19937_64 rng(18);
    std::vector<Tensor> ys;
    for (int j = 0; j < 6; ++j)
      ys.push_back(random_tensor({4}, rng));
    const Tensor d = random_tensor({4}, rng);
    std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
    auto scores_of = [&](const std::vector<Tensor> &states) {
      Tape tape;
      auto p = bind(tape, reg);
      std::vector<Var> vs;
      for (const auto &y : states)
        vs.push_back(tape.constant(y));
      return scorer.attention_scores<Var>(p, tape.constant(d), vs).value();
    };
    const Tensor base = scores_of(ys);
    std::vector<Tensor> permuted;
    for (auto k : perm)
      permuted.push_back(ys[k]);
    const Tensor moved = scores_of(permuted);
    for (std::size_t j = 0; j < perm.size(); ++j)
      CHECK(moved[j] == base[perm[j]]);
    CHECK(scores_of(ys) == base);
  }
}

TEST_CASE("additive scores gradient matches finite differences") {
  ParamRegistry reg;
  auto scorer = AttentionScorer::create(reg, "a", ScorerKind::kAdditive, 3, 5);
  init_params(reg, 23);
  std::mt19937_64 rng(24);
  std::vector<Tensor> values;
  for (const auto &e : reg.entries())
    values.push_back(e.kind == ParamKind::kBias ? random_tensor(e.value.shape(), rng)
                                                : e.value);
  const Tensor d = random_tensor({3}, rng);
  std::vector<Tensor> ys;
  for (int j = 0; j < 4; ++j)
    ys.push_back(random_tensor({3}, rng));
  auto fn = [&](Tape &tape, const std::vector<Var> &p) {
    std::vector<Var> vs;
    for (const auto &y : ys)
      vs.push_back(tape.constant(y));
    return weighted_sum(tape, softmax_rows(scorer.attention_scores<Var>(p, tape.constant(d), vs)));
  };
  CHECK(check_gradient(fn, values).max_rel_error < 1e-6);
}

TEST_CASE("registry rejects duplicates and keeps insertion order") {
  ParamRegistry reg;
  reg.add("b", Shape{2}, ParamKind::kBias);
  reg.add("a", Shape{2, 2}, ParamKind::kWeight);
  CHECK_THROWS(reg.add("a", Shape{1}, ParamKind::kWeight));
  CHECK(reg.entries()[0].name == "b");
  CHECK(reg.entries()[1].name == "a");
  CHECK(reg.index_of("a") == 1);
  CHECK_THROWS(reg.index_of("missing"));
  CHECK(reg.scalar_count() == 6);
}

TEST_CASE("initialization is seeded, zeroes biases, and is centred") {
  ParamRegistry a, b;
  for (auto *reg : {&a, &b}) {
    reg->add("w", Shape{40, 25}, ParamKind::kWeight);
    reg->add("bias", Shape{40}, ParamKind::kBias);
  }
  init_params(a, 42);
  init_params(b, 42);
  CHECK(a.at("w") == b.at("w"));
  CHECK(a.at("bias") == Tensor(Shape{40}));
  ParamRegistry c;
  c.add("w", Shape{40, 25}, ParamKind::kWeight);
  c.add("bias", Shape{40}, ParamKind::kBias);
  init_params(c, 43);
  CHECK_FALSE(c.at("w") == a.at("w"));

  // Xavier-uniform on [-L, L], L = sqrt(6 / (25 + 40)); sigma of the mean
  // of n draws is L / sqrt(3 n).
  const auto &w = a.at("w").storage();
  const double limit = std::sqrt(6.0 / 65.0);
  double mean = 0;
  for (double v : w) {
    CHECK(std::abs(v) <= limit);
    mean += v;
  }
  mean /= static_cast<double>(w.size());
  CHECK(std::abs(mean) < 3.0 * limit / std::sqrt(3.0 * static_cast<double>(w.size())));
}

TEST_CASE("scorer names round-trip") {
  CHECK(scorer_from_string("additive") == ScorerKind::kAdditive);
  CHECK(scorer_from_string("linear") == ScorerKind::kLinear);
  CHECK(to_string(ScorerKind::kLinear) == "linear");
  CHECK_THROWS(scorer_from_string("dot"));
}
