// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/numerics/binding.hpp"

namespace untrack::num {

Var Binding::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const ParamStore::Entry& e = params_->entry(name);
  const Var v = track_grads_ && e.trainable ? tape_->leaf(e.value) : tape_->constant(e.value);
  bound_.emplace(name, v);
  return v;
}

void Binding::collect(GradStore& grads) const {
  for (const auto& [name, entry] : params_->entries()) {
    if (!entry.trainable) continue;
    auto it = bound_.find(name);
    if (it == bound_.end()) {
      accumulate_grad(grads, name, Array(entry.value.shape()));
    } else {
      accumulate_grad(grads, name, tape_->grad(it->second));
    }
  }
}

}  // namespace untrack::num
