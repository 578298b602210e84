// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "untrack/embed/embed.hpp"
#include "untrack/numerics/binding.hpp"

namespace untrack::attn {

struct AttnConfig {
  std::size_t depth = 2;
  std::size_t channels = 64;
  std::size_t heads = 4;
  std::size_t mlp_ratio = 4;
  std::vector<std::size_t> elimination_layers = {1, 2};  // 1-based
  double rho_start = 1.0;
  double rho_end = 0.7;
  std::size_t total_steps = 1;

  std::size_t head_dim() const noexcept { return channels / heads; }
  void validate() const;
  /// Layers {4, 7, 10} of a 12-layer trunk rescaled to `depth`
  /// (round(l * depth / 12), clamped to [1, depth], deduplicated).
  static std::vector<std::size_t> scaled_elimination_layers(std::size_t depth);
};

enum class AttnMode { full, asymmetric };

using embed::Segment;

/// Row counts of the three segments among the rows currently present.
struct Segments {
  std::size_t prompt = 0, templ = 0, search = 0;
  std::size_t total() const noexcept { return prompt + templ + search; }
};

/// Index 1..9 of the (query segment, key segment) block, row-major over
/// (prompt, template, search): 1 = P-P, 5 = T-T, 7 = S-P, 8 = S-T, 9 = S-S.
int block_index(Segment query, Segment key);
/// Blocks dropped by the asymmetric rule.
inline const std::vector<int>& pruned_blocks() {
  static const std::vector<int> b = {2, 3, 4, 6};
  return b;
}
/// L x L map of block indices.
std::vector<std::vector<int>> block_map(const Segments& seg);
/// Additive mask: 0 where allowed, -inf inside any listed block.
num::Array block_mask(const Segments& seg, const std::vector<int>& forbidden);

std::string layer_prefix(std::size_t layer);  // 1-based: "trunk.layer1"
void init_layer_params(num::ParamStore& params, const std::string& prefix, std::size_t channels, std::size_t mlp_ratio,
                       std::mt19937_64& rng);
/// All layers plus the closing `trunk.norm`.
void init_trunk_params(num::ParamStore& params, const AttnConfig& cfg, std::mt19937_64& rng);

struct AttentionOutput {
  num::Var residual;            // x + proj(attention(LN1 x))
  std::vector<num::Var> heads;  // per-head attention output A_h V_h, [L, d]
};

/// Pre-norm attention sub-layer over rows ordered [prompt; template; search].
AttentionOutput attention_sublayer(num::Binding& bind, const std::string& prefix, const num::Var& x,
                                   const Segments& seg, AttnMode mode, std::size_t heads);
/// Same, with dense attention under an additive mask (reference path).
AttentionOutput attention_sublayer_masked(num::Binding& bind, const std::string& prefix, const num::Var& x,
                                          const num::Array& additive_mask, std::size_t heads);
/// x + MLP(LN2 x).
num::Var mlp_sublayer(num::Binding& bind, const std::string& prefix, const num::Var& x);

/// Relevance of each search row: mean over heads of ||O_{j,h}||_2 / L where
/// O_{j,h} is the head's attention output row and L the number of rows
/// attended over (all present rows).
std::vector<double> relevance_scores(const std::vector<num::Array>& head_outputs, const Segments& seg);

/// Cosine-annealed keep ratio; throws std::out_of_range unless
/// 0 <= step <= total_steps.
double keep_ratio(std::size_t step, const AttnConfig& cfg);
/// clamp(round(rho * (nP + nT + nS)) - nP - nT, 1, nS); 0 when nS = 0.
std::size_t keep_count(double rho, std::size_t n_prompt, std::size_t n_template, std::size_t n_search);
/// Positions of the k largest scores (ties -> lower position), ascending.
std::vector<std::size_t> select_top(const std::vector<double>& scores, std::size_t k);

/// One elimination event. Ids refer to search rows of the assembled token
/// set (0-based, frame-major grid order).
struct EliminationRecord {
  std::size_t layer = 0;
  std::vector<std::size_t> alive_before;
  std::vector<double> scores;  // aligned with alive_before
  std::vector<std::size_t> kept;
  std::vector<std::size_t> dropped;
};
using EliminationTrace = std::vector<EliminationRecord>;

// Array-level operations on a TokenSet: dead search rows are excluded from
// queries and keys and pass through unchanged.
embed::TokenSet attn_full(const embed::TokenSet& tokens, const num::ParamStore& params, const std::string& prefix,
                          std::size_t heads);
embed::TokenSet attn_asymmetric(const embed::TokenSet& tokens, const num::ParamStore& params,
                                const std::string& prefix, std::size_t heads);
/// Full attention with the given blocks forbidden through an additive mask.
embed::TokenSet attn_masked(const embed::TokenSet& tokens, const num::ParamStore& params, const std::string& prefix,
                            std::size_t heads, const std::vector<int>& forbidden);

struct EliminateResult {
  embed::TokenSet tokens;
  EliminationRecord record;
};
/// `scores` is aligned with tokens.alive_search_ids().
EliminateResult eliminate(const embed::TokenSet& tokens, const std::vector<double>& scores, double rho,
                          std::size_t layer = 0);

/// Rows present on the tape during a trunk pass.
struct TrunkState {
  num::Var x;                          // [P; T; alive S]
  Segments seg;
  std::vector<std::size_t> search_ids; // assembled search-row id of each alive search row
};

struct TrunkOutput {
  TrunkState state;
  EliminationTrace trace;
};

/// Runs every layer; elimination is applied after the attention sub-layer of
/// each configured layer when `rho` is set. The closing layer norm is applied
/// to the surviving rows.
TrunkOutput run_trunk(num::Binding& bind, const AttnConfig& cfg, TrunkState state, AttnMode mode,
                      std::optional<double> rho);

}  // namespace untrack::attn
