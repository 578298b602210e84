// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "untrack/pipeline/model.hpp"

namespace untrack::pipeline {

/// Rows entering one layer and search rows left after its elimination step.
struct LayerTokens {
  std::size_t prompt = 0, templ = 0, search = 0, search_kept = 0;
};

/// Multiply-accumulate counts per component. Softmax, norms and activations
/// are not counted.
struct FlopsBreakdown {
  std::uint64_t embedding = 0, qk = 0, av = 0, projections = 0, mlp = 0, prompt_encoder = 0, head = 0;
  std::vector<LayerTokens> layers;

  std::uint64_t macs() const noexcept { return embedding + qk + av + projections + mlp + prompt_encoder + head; }
  std::uint64_t flops() const noexcept { return 2 * macs(); }  // 1 MAC = 2 FLOPs
};

/// Closed-form cost of one tracking step (one window) for `cfg`. With `rho`
/// set and cfg.eliminate on, search rows shrink at each elimination layer by
/// the same rule as the trunk.
FlopsBreakdown count_flops(const ModelConfig& cfg, std::optional<double> rho);

/// Convenience: cfg.eliminate decides whether rho_end is applied.
FlopsBreakdown count_flops(const ModelConfig& cfg);

inline constexpr const char* kFlopsConvention =
    "1 MAC = 2 FLOPs; embedding, attention, projections, MLP, prompt encoder and head counted; "
    "softmax, norms and activations excluded";

}  // namespace untrack::pipeline
