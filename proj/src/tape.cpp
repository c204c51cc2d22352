// SPDX-License-Identifier: Apache-2.0
#include <piann/tape.hpp>

namespace piann {

Tape &Var::tape() const {
  if (!tape_)
    throw std::logic_error("Var is not attached to a tape");
  return *tape_;
}

const Tensor &Var::value() const { return tape().value(id_); }

bool Var::requires_grad() const { return tape().requires_grad(id_); }

const Tensor &Var::grad() const { return tape().grad(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), std::nullopt, {}, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Tensor value) {
  nodes_.push_back(Node{std::move(value), std::nullopt, {}, {}, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs,
                 BackwardFn rule) {
  bool needs = false;
  for (auto id : inputs)
    needs = needs || nodes_[id].requires_grad;
  if (!needs)
    nodes_.push_back(Node{std::move(value), std::nullopt, {}, {}, false});
  else
    nodes_.push_back(Node{std::move(value), std::nullopt, std::move(inputs),
                          std::move(rule), true});
  return Var(this, nodes_.size() - 1);
}

const Tensor &Tape::grad(std::size_t id) { return grad_slot(id); }

Tensor &Tape::grad_slot(std::size_t id) {
  auto &node = nodes_[id];
  if (!node.grad)
    node.grad.emplace(node.value.shape());
  return *node.grad;
}

void Tape::backward(const Var &loss) {
  if (&loss.tape() != this)
    throw std::logic_error("backward: loss belongs to a different tape");
  if (backward_done_)
    throw std::logic_error("backward: already run on this tape");
  if (loss.size() != 1)
    throw ShapeError("backward: loss must be scalar, got shape " +
                     to_string(loss.shape()));
  if (!nodes_[loss.id()].requires_grad)
    throw std::logic_error("backward: loss is detached from every parameter");
  backward_done_ = true;

  grad_slot(loss.id()).fill(1.0);
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    auto &node = nodes_[id];
    if (!node.requires_grad || !node.grad || !node.rule)
      continue;
    node.rule(*this, id);
  }
}

} // namespace piann
