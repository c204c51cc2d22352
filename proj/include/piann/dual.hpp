// SPDX-License-Identifier: Apache-2.0
/**
 * @file   dual.hpp
 * @brief  Forward-mode tangents carried alongside tape variables.
 *
 * A Dual pairs a primal Var with its derivative with respect to one scalar
 * input. Both halves are recorded on the same tape, so the tangent itself is
 * differentiable with respect to the parameters by an ordinary reverse sweep.
 * An absent tangent means "identically zero" and is propagated without
 * recording anything.
 */
#pragma once

#include <piann/ops.hpp>

#include <optional>
#include <span>
#include <vector>

namespace piann {

struct Dual {
  Var value;
  std::optional<Var> tangent;

  Dual() = default;
  Dual(Var v, std::optional<Var> d = std::nullopt)
      : value(v), tangent(d) {}

  const Shape &shape() const { return value.shape(); }
  std::size_t size() const { return value.size(); }
  Tape &tape() const { return value.tape(); }
};

/// Tangent as a Var, materializing zeros when absent.
Var tangent_or_zero(const Dual &x);

Dual matmul(const Dual &a, const Dual &b);
Dual matvec(const Dual &w, const Dual &x);
Dual transpose(const Dual &a);
Dual add(const Dual &a, const Dual &b);
Dual sub(const Dual &a, const Dual &b);
Dual mul(const Dual &a, const Dual &b);
Dual div(const Dual &a, const Dual &b);
Dual affine(const Dual &a, double alpha, double beta);
Dual sigmoid(const Dual &a);
Dual tanh(const Dual &a);
Dual softmax_rows(const Dual &a);
Dual concat(const Dual &a, const Dual &b, std::size_t axis);
Dual slice(const Dual &a, std::size_t axis, std::size_t begin, std::size_t end);
Dual stack(std::span<const Dual> rows);
Dual reshape(const Dual &a, Shape shape);
Dual additive_scores(const Dual &keys, const Dual &query, const Dual &v);

} // namespace piann
