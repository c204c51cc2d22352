// SPDX-License-Identifier: Apache-2.0
/**
 * @file   tape.hpp
 * @brief  Define-by-run reverse-mode differentiation.
 *
 * A Tape owns every value produced during one forward evaluation. Each
 * recorded node keeps the ids of its inputs and a backward rule that
 * accumulates the node's gradient into its inputs. Ids are assigned in
 * creation order, so a reverse sweep over ids is a valid topological order.
 *
 * Var is a lightweight handle (tape pointer + id). Operations on Vars live in
 * ops.hpp and record new nodes on the tape of their first operand.
 */
#pragma once

#include <piann/tensor.hpp>

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace piann {

class Tape;

class Var {
public:
  Var() = default;
  Var(Tape *tape, std::size_t id) : tape_(tape), id_(id) {}

  bool valid() const noexcept { return tape_ != nullptr; }
  Tape &tape() const;
  std::size_t id() const noexcept { return id_; }

  const Tensor &value() const;
  const Shape &shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  bool requires_grad() const;
  /// Accumulated gradient after Tape::backward (zeros if none reached it).
  const Tensor &grad() const;

private:
  Tape *tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
public:
  using BackwardFn = std::function<void(Tape &, std::size_t self)>;

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Trainable leaf; receives a gradient of the same shape on backward().
  Var parameter(Tensor value);
  /// Records the result of an operation. The node requires a gradient iff
  /// any input does; otherwise the backward rule is dropped.
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn rule);

  /// Reverse sweep from a scalar loss. May be called once per tape.
  void backward(const Var &loss);
  bool backward_done() const noexcept { return backward_done_; }

  const Tensor &value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient accumulated so far; a zero tensor when nothing flowed in.
  const Tensor &grad(std::size_t id);
  /// Mutable gradient slot for backward rules, allocated on first use.
  Tensor &grad_slot(std::size_t id);

  std::size_t size() const noexcept { return nodes_.size(); }

private:
  struct Node {
    Tensor value;
    std::optional<Tensor> grad;
    std::vector<std::size_t> inputs;
    BackwardFn rule;
    bool requires_grad = false;
  };

  // deque keeps references to existing nodes stable while recording.
  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

} // namespace piann
