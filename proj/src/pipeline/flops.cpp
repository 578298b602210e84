// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/pipeline/flops.hpp"

#include <algorithm>

namespace untrack::pipeline {

FlopsBreakdown count_flops(const ModelConfig& cfg, std::optional<double> rho) {
  cfg.validate();
  using u64 = std::uint64_t;
  const u64 C = cfg.embed.channels;
  const u64 hidden = C * cfg.attn.mlp_ratio;
  FlopsBreakdown f;

  const std::size_t P = cfg.embed.prompt_len, T = cfg.embed.template_tokens();
  std::size_t S = cfg.embed.search_tokens();
  f.embedding = static_cast<u64>(T + S) * cfg.embed.patch_features() * C;

  const bool prune = cfg.eliminate && rho.has_value();
  const auto& elim = cfg.attn.elimination_layers;
  for (std::size_t layer = 1; layer <= cfg.attn.depth; ++layer) {
    LayerTokens lt{P, T, S, S};
    const u64 L = P + T + S;
    u64 keys = 0;  // sum over query rows of the keys each row attends to
    if (cfg.attn_mode == attn::AttnMode::full) {
      keys = L * L;
    } else {
      keys = static_cast<u64>(P) * P + static_cast<u64>(T) * T + static_cast<u64>(S) * L;
    }
    f.qk += keys * C;
    f.av += keys * C;
    f.projections += 4 * L * C * C;
    if (prune && std::find(elim.begin(), elim.end(), layer) != elim.end()) {
      lt.search_kept = attn::keep_count(*rho, P, T, S);
      S = lt.search_kept;
    }
    f.mlp += 2 * static_cast<u64>(P + T + S) * C * hidden;
    f.layers.push_back(lt);
  }

  if (cfg.prompt_mode == prompt::PromptMode::encoder && P > 0) {
    const u64 two = 2 * C, sq = cfg.encoder.squeezed();
    f.prompt_encoder = static_cast<u64>(P) * (two * sq + sq * two + 2 * two * two);
  }

  // Two conv stacks of 3x3 kernels, channels halving, over every search frame's grid.
  const u64 cells = static_cast<u64>(cfg.head.grid) * cfg.head.grid;
  u64 per_cell = 0;
  for (const u64 out : {u64{1}, u64{4}}) {
    u64 cin = C;
    for (std::size_t i = 1; i <= cfg.head.layers; ++i) {
      const u64 cout = i == cfg.head.layers ? out : cin / 2;
      per_cell += 9 * cin * cout;
      cin = cout;
    }
  }
  f.head = cells * per_cell * cfg.embed.search_frames;
  return f;
}

FlopsBreakdown count_flops(const ModelConfig& cfg) {
  return count_flops(cfg, cfg.eliminate ? std::optional<double>(cfg.attn.rho_end) : std::nullopt);
}

}  // namespace untrack::pipeline
