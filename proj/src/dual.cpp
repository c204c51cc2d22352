// SPDX-License-Identifier: Apache-2.0
#include <piann/dual.hpp>

namespace piann {

namespace {

using OptVar = std::optional<Var>;

OptVar opt_add(const OptVar &a, const OptVar &b) {
  if (a && b)
    return add(*a, *b);
  return a ? a : b;
}

// Broadcasts a [cols] vector to [rows x cols] through a product with ones.
Var repeat_rows(const Var &row, std::size_t rows) {
  Tape &tape = row.tape();
  const std::size_t cols = row.size();
  Var ones = tape.constant(Tensor(Shape{rows, 1}, 1.0));
  return matmul(ones, reshape(row, Shape{1, cols}));
}

} // namespace

Var tangent_or_zero(const Dual &x) {
  if (x.tangent)
    return *x.tangent;
  return x.tape().constant(Tensor(x.shape()));
}

Dual matmul(const Dual &a, const Dual &b) {
  OptVar d;
  if (a.tangent)
    d = matmul(*a.tangent, b.value);
  if (b.tangent)
    d = opt_add(d, matmul(a.value, *b.tangent));
  return {matmul(a.value, b.value), d};
}

Dual matvec(const Dual &w, const Dual &x) {
  OptVar d;
  if (w.tangent)
    d = matvec(*w.tangent, x.value);
  if (x.tangent)
    d = opt_add(d, matvec(w.value, *x.tangent));
  return {matvec(w.value, x.value), d};
}

Dual transpose(const Dual &a) {
  OptVar d;
  if (a.tangent)
    d = transpose(*a.tangent);
  return {transpose(a.value), d};
}

Dual add(const Dual &a, const Dual &b) {
  return {add(a.value, b.value), opt_add(a.tangent, b.tangent)};
}

Dual sub(const Dual &a, const Dual &b) {
  OptVar d = a.tangent;
  if (b.tangent)
    d = d ? sub(*d, *b.tangent) : affine(*b.tangent, -1.0, 0.0);
  return {sub(a.value, b.value), d};
}

Dual mul(const Dual &a, const Dual &b) {
  OptVar d;
  if (a.tangent)
    d = mul(*a.tangent, b.value);
  if (b.tangent)
    d = opt_add(d, mul(a.value, *b.tangent));
  return {mul(a.value, b.value), d};
}

Dual div(const Dual &a, const Dual &b) {
  Var q = div(a.value, b.value);
  OptVar d;
  if (a.tangent)
    d = div(*a.tangent, b.value);
  if (b.tangent) {
    Var term = div(mul(q, *b.tangent), b.value);
    d = d ? sub(*d, term) : affine(term, -1.0, 0.0);
  }
  return {q, d};
}

Dual affine(const Dual &a, double alpha, double beta) {
  OptVar d;
  if (a.tangent)
    d = affine(*a.tangent, alpha, 0.0);
  return {affine(a.value, alpha, beta), d};
}

Dual sigmoid(const Dual &a) {
  Var s = sigmoid(a.value);
  OptVar d;
  if (a.tangent)
    d = mul(mul(s, affine(s, -1.0, 1.0)), *a.tangent);
  return {s, d};
}

Dual tanh(const Dual &a) {
  Var y = tanh(a.value);
  OptVar d;
  if (a.tangent)
    d = mul(affine(square(y), -1.0, 1.0), *a.tangent);
  return {y, d};
}

Dual softmax_rows(const Dual &a) {
  Var s = softmax_rows(a.value);
  if (!a.tangent)
    return {s};
  const Var &da = *a.tangent;
  Var weighted = mul(s, da);
  if (a.shape().size() == 1) {
    Var dot = sum(weighted);
    return {s, mul(s, sub(da, dot))};
  }
  Tape &tape = a.tape();
  const std::size_t rows = a.shape()[0], cols = a.shape()[1];
  Var row_dot = matmul(weighted, tape.constant(Tensor(Shape{cols, 1}, 1.0)));
  Var spread = matmul(row_dot, tape.constant(Tensor(Shape{1, cols}, 1.0)));
  (void)rows;
  return {s, mul(s, sub(da, spread))};
}

Dual concat(const Dual &a, const Dual &b, std::size_t axis) {
  OptVar d;
  if (a.tangent || b.tangent)
    d = concat(tangent_or_zero(a), tangent_or_zero(b), axis);
  return {concat(a.value, b.value, axis), d};
}

Dual slice(const Dual &a, std::size_t axis, std::size_t begin, std::size_t end) {
  OptVar d;
  if (a.tangent)
    d = slice(*a.tangent, axis, begin, end);
  return {slice(a.value, axis, begin, end), d};
}

Dual stack(std::span<const Dual> rows) {
  std::vector<Var> values;
  values.reserve(rows.size());
  bool any_tangent = false;
  for (const auto &r : rows) {
    values.push_back(r.value);
    any_tangent = any_tangent || r.tangent.has_value();
  }
  OptVar d;
  if (any_tangent) {
    std::vector<Var> tangents;
    tangents.reserve(rows.size());
    for (const auto &r : rows)
      tangents.push_back(tangent_or_zero(r));
    d = stack(tangents);
  }
  return {stack(values), d};
}

Dual reshape(const Dual &a, Shape shape) {
  OptVar d;
  if (a.tangent)
    d = reshape(*a.tangent, shape);
  return {reshape(a.value, std::move(shape)), d};
}

Dual additive_scores(const Dual &keys, const Dual &query, const Dual &v) {
  Var scores = additive_scores(keys.value, query.value, v.value);
  if (!keys.tangent && !query.tangent && !v.tangent)
    return {scores};
  const std::size_t n = keys.shape()[0];
  Var act = tanh(add(keys.value, repeat_rows(query.value, n)));
  OptVar d;
  if (v.tangent)
    d = matvec(act, *v.tangent);
  OptVar inner = keys.tangent;
  if (query.tangent)
    inner = opt_add(inner, repeat_rows(*query.tangent, n));
  if (inner) {
    Var sech2 = affine(square(act), -1.0, 1.0);
    d = opt_add(d, matvec(mul(sech2, *inner), v.value));
  }
  return {scores, d};
}

} // namespace piann
