// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/numerics/params.hpp"

#include <cmath>
#include <stdexcept>

namespace untrack::num {

void ParamStore::add(const std::string& name, Array value, bool trainable) {
  if (name.empty()) throw std::invalid_argument("ParamStore::add: empty name");
  if (!entries_.emplace(name, Entry{std::move(value), trainable}).second) {
    throw std::invalid_argument("ParamStore::add: duplicate parameter '" + name + "'");
  }
}

void ParamStore::replace(const std::string& name, Array value) { mutable_value(name) = std::move(value); }

void ParamStore::set(const std::string& name, Array value) {
  Array& slot = mutable_value(name);
  if (slot.shape() != value.shape()) {
    throw ShapeError("ParamStore::set: '" + name + "' has shape " + to_string(slot.shape()) + ", got " +
                     to_string(value.shape()));
  }
  slot = std::move(value);
}

void ParamStore::set_trainable(const std::string& name, bool trainable) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("ParamStore: unknown parameter '" + name + "'");
  it->second.trainable = trainable;
}

const Array& ParamStore::get(const std::string& name) const { return entry(name).value; }

Array& ParamStore::mutable_value(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("ParamStore: unknown parameter '" + name + "'");
  return it->second.value;
}

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n += e.value.size();
  return n;
}

bool operator==(const ParamStore& a, const ParamStore& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  auto ib = b.entries_.begin();
  for (const auto& [name, e] : a.entries_) {
    if (name != ib->first || e.trainable != ib->second.trainable || !(e.value == ib->second.value)) return false;
    ++ib;
  }
  return true;
}

void accumulate_grad(GradStore& into, const std::string& name, const Array& g) {
  auto it = into.find(name);
  if (it == into.end()) {
    into.emplace(name, g);
    return;
  }
  if (it->second.shape() != g.shape()) throw ShapeError("accumulate_grad: shape mismatch for '" + name + "'");
  for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
}

void adamw_step(ParamStore& params, const GradStore& grads, OptState& state) {
  const AdamWConfig& cfg = state.config;
  for (const auto& [name, entry] : params.entries()) {
    if (entry.trainable && !grads.count(name)) {
      throw std::invalid_argument("adamw_step: missing gradient for '" + name + "'");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (const auto& name : params.names()) {
    if (!params.entry(name).trainable) continue;
    Array& theta = params.mutable_value(name);
    const Array& g = grads.at(name);
    if (g.shape() != theta.shape()) throw ShapeError("adamw_step: gradient shape mismatch for '" + name + "'");
    auto [mit, m_new] = state.first_moment.try_emplace(name, Array(theta.shape()));
    auto [vit, v_new] = state.second_moment.try_emplace(name, Array(theta.shape()));
    Array& m = mit->second;
    Array& v = vit->second;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      theta[i] *= 1.0 - cfg.lr * cfg.weight_decay;
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      theta[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

Array truncated_normal(Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Array out(std::move(shape));
  for (double& v : out.data()) {
    double z;
    do {
      z = dist(rng);
    } while (std::abs(z) > 2.0);
    v = z * stddev;
  }
  return out;
}

Array normal(Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Array out(std::move(shape));
  for (double& v : out.data()) v = dist(rng);
  return out;
}

}  // namespace untrack::num
