// SPDX-License-Identifier: Apache-2.0
/**
 * @file   ops.hpp
 * @brief  Differentiable operations on tape variables.
 *
 * Broadcasting is limited to a single-element operand combined with a tensor
 * of any shape. Every other shape disagreement raises ShapeError.
 */
#pragma once

#include <piann/tape.hpp>

#include <span>
#include <vector>

namespace piann {

enum class Elementwise { kAdd, kSub, kMul, kDiv };
enum class Activation { kSigmoid, kTanh };

/// [m x k] . [k x n] -> [m x n]
Var matmul(const Var &a, const Var &b);
/// [out x in] . [in] -> [out]
Var matvec(const Var &w, const Var &x);
/// 2-D transpose.
Var transpose(const Var &a);

Var elementwise(const Var &a, const Var &b, Elementwise kind);
inline Var add(const Var &a, const Var &b) { return elementwise(a, b, Elementwise::kAdd); }
inline Var sub(const Var &a, const Var &b) { return elementwise(a, b, Elementwise::kSub); }
inline Var mul(const Var &a, const Var &b) { return elementwise(a, b, Elementwise::kMul); }
inline Var div(const Var &a, const Var &b) { return elementwise(a, b, Elementwise::kDiv); }

/// alpha * a + beta, elementwise.
Var affine(const Var &a, double alpha, double beta);

Var activation(const Var &a, Activation kind);
inline Var sigmoid(const Var &a) { return activation(a, Activation::kSigmoid); }
inline Var tanh(const Var &a) { return activation(a, Activation::kTanh); }

/// Row-wise softmax of a 2-D tensor (a 1-D tensor is treated as one row).
Var softmax_rows(const Var &a);

Var concat(const Var &a, const Var &b, std::size_t axis);
Var slice(const Var &a, std::size_t axis, std::size_t begin, std::size_t end);
/// Stacks equally shaped 1-D tensors as the rows of a matrix.
Var stack(std::span<const Var> rows);
Var reshape(const Var &a, Shape shape);

Var sum(const Var &a);
Var mean(const Var &a);
Var square(const Var &a);
/// Sum of squared entries.
Var frobenius_sq(const Var &a);

/// Additive (Bahdanau) scores: out_j = sum_k v_k * tanh(keys[j,k] + query[k]).
/// keys is [n x width], query and v are [width]. The tanh matrix is recomputed
/// in the backward pass rather than kept on the tape.
Var additive_scores(const Var &keys, const Var &query, const Var &v);

} // namespace piann
