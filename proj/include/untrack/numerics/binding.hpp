// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>

#include "untrack/numerics/params.hpp"
#include "untrack/numerics/tape.hpp"

namespace untrack::num {

/// Lazily places parameters on a tape for one forward pass. Trainable
/// entries become leaves (when gradients are requested) and frozen ones
/// constants; each name is placed at most once.
class Binding {
 public:
  Binding(Tape& tape, const ParamStore& params, bool track_grads = true)
      : tape_(&tape), params_(&params), track_grads_(track_grads) {}

  Var operator()(const std::string& name);
  Tape& tape() const noexcept { return *tape_; }
  const ParamStore& params() const noexcept { return *params_; }
  bool tracking() const noexcept { return track_grads_; }

  /// After tape.backward(): adds the gradients of every bound trainable
  /// parameter into `grads`. Parameters that were never touched in this pass
  /// receive explicit zeros so the optimizer sees a full gradient set.
  void collect(GradStore& grads) const;

 private:
  Tape* tape_;
  const ParamStore* params_;
  bool track_grads_;
  std::map<std::string, Var> bound_;
};

}  // namespace untrack::num
