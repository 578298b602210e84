// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "untrack/numerics/array.hpp"

namespace untrack::num {

/// Named, shaped parameter store. Names are dot-separated paths
/// (`trunk.layer1.qkv.weight`); iteration is in lexicographic order.
class ParamStore {
 public:
  struct Entry {
    Array value;
    bool trainable = true;
  };

  /// Throws std::invalid_argument if `name` exists.
  void add(const std::string& name, Array value, bool trainable = true);
  /// Replace a value; the shape must stay identical.
  void set(const std::string& name, Array value);
  /// Replace a value with one of any shape (the trainable flag is kept).
  void replace(const std::string& name, Array value);
  void set_trainable(const std::string& name, bool trainable);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Array& get(const std::string& name) const;
  Array& mutable_value(const std::string& name);
  const Entry& entry(const std::string& name) const;
  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }

  std::vector<std::string> names() const;
  std::size_t parameter_count() const;
  std::size_t size() const noexcept { return entries_.size(); }

  friend bool operator==(const ParamStore& a, const ParamStore& b);

 private:
  std::map<std::string, Entry> entries_;
};

/// Gradients keyed by parameter name.
using GradStore = std::map<std::string, Array>;

/// Adds `g` into `into[name]`, allocating on first use.
void accumulate_grad(GradStore& into, const std::string& name, const Array& g);

struct AdamWConfig {
  double lr = 1e-4;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptState {
  AdamWConfig config;
  std::uint64_t step = 0;
  std::map<std::string, Array> first_moment;
  std::map<std::string, Array> second_moment;
};

/// One decoupled-weight-decay Adam step over every trainable parameter.
/// Throws std::invalid_argument when a trainable parameter has no gradient.
void adamw_step(ParamStore& params, const GradStore& grads, OptState& state);

// Initialisers.
Array truncated_normal(Shape shape, double stddev, std::mt19937_64& rng);
Array normal(Shape shape, double stddev, std::mt19937_64& rng);

}  // namespace untrack::num
