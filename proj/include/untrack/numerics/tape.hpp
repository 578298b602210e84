// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string_view>
#include <vector>

#include "untrack/numerics/array.hpp"

namespace untrack::num {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Var {
 public:
  Var() = default;

  const Array& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode recording arena.
///
/// Nodes are appended in evaluation order, so replaying them backwards is a
/// valid topological order. A tape is confined to one thread.
class Tape {
 public:
  /// Called during backward with the tape and the id of the node being
  /// differentiated. Implementations read `grad(self)` and accumulate into
  /// their inputs.
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Array value);
  Var leaf(Array value);

  /// Record an op result. The node requires a gradient iff any input does.
  /// Throws NumericError if `value` holds NaN/Inf.
  Var record(std::string_view op, Array value, std::initializer_list<Var> inputs, Backward backward);
  Var record(std::string_view op, Array value, const std::vector<Var>& inputs, Backward backward);

  const Array& value(std::size_t id) const { return nodes_[id].value; }
  const Array& value(const Var& v) const { return nodes_[v.id()].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(const Var& v) const { return nodes_[v.id()].requires_grad; }

  /// Gradient of a node; a zero array of the value's shape if nothing
  /// accumulated into it.
  Array grad(const Var& v) const;
  /// Upstream gradient inside a Backward callback (never empty).
  const Array& upstream(std::size_t id);
  /// Mutable gradient buffer, zero-initialised on first access.
  Array& grad_buffer(std::size_t id);
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty() || nodes_[id].value.empty(); }

  /// Seeds d(out)/d(out) = 1 and propagates. `out` must hold one element.
  void backward(const Var& out);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Array value;
    Array grad;
    bool requires_grad = false;
    Backward backward;
  };

  Var push(Array value, bool requires_grad, Backward backward);

  std::deque<Node> nodes_;
};

inline const Array& Var::value() const { return tape_->value(id_); }

}  // namespace untrack::num
