// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/numerics/tape.hpp"

#include <string>

namespace untrack::num {

Var Tape::push(Array value, bool requires_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), Array{}, requires_grad, std::move(backward)});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Array value) {
  if (!value.all_finite()) throw NumericError("constant: non-finite input");
  return push(std::move(value), false, nullptr);
}

Var Tape::leaf(Array value) {
  if (!value.all_finite()) throw NumericError("leaf: non-finite input");
  return push(std::move(value), true, nullptr);
}

Var Tape::record(std::string_view op, Array value, std::initializer_list<Var> inputs, Backward backward) {
  return record(op, std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::record(std::string_view op, Array value, const std::vector<Var>& inputs, Backward backward) {
  if (!value.all_finite()) throw NumericError(std::string(op) + ": non-finite output");
  bool needs = false;
  for (const auto& in : inputs) {
    if (in.tape() != this) throw std::logic_error(std::string(op) + ": input from a different tape");
    needs = needs || nodes_[in.id()].requires_grad;
  }
  return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
}

Array Tape::grad(const Var& v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.empty()) return Array(n.value.shape(), 0.0);
  return n.grad;
}

const Array& Tape::upstream(std::size_t id) { return grad_buffer(id); }

Array& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() != n.value.size() || n.grad.shape() != n.value.shape()) n.grad = Array(n.value.shape(), 0.0);
  return n.grad;
}

void Tape::backward(const Var& out) {
  if (out.tape() != this) throw std::logic_error("backward: variable from a different tape");
  if (value(out).size() != 1) throw ShapeError("backward: output must be scalar, got " + to_string(value(out).shape()));
  if (!nodes_[out.id()].requires_grad) return;
  grad_buffer(out.id())[0] += 1.0;
  for (std::size_t i = out.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, i);
  }
}

}  // namespace untrack::num
