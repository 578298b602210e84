// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/attn/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <stdexcept>

#include "untrack/numerics/ops.hpp"

namespace untrack::attn {

using num::Array;
using num::Var;

void AttnConfig::validate() const {
  if (depth == 0 || channels == 0 || heads == 0) throw std::invalid_argument("attn: depth, channels, heads must be positive");
  if (channels % heads != 0) throw std::invalid_argument("attn: channels must be divisible by heads");
  if (mlp_ratio == 0) throw std::invalid_argument("attn: mlp_ratio must be positive");
  for (std::size_t l : elimination_layers)
    if (l < 1 || l > depth) throw std::invalid_argument("attn: elimination layer " + std::to_string(l) + " outside [1, depth]");
  if (!(rho_end > 0 && rho_end <= rho_start && rho_start <= 1)) throw std::invalid_argument("attn: need 0 < rho_end <= rho_start <= 1");
  if (total_steps == 0) throw std::invalid_argument("attn: total_steps must be positive");
}

std::vector<std::size_t> AttnConfig::scaled_elimination_layers(std::size_t depth) {
  std::set<std::size_t> out;
  for (double l : {4.0, 7.0, 10.0}) {
    const auto v = static_cast<long>(std::lround(l * static_cast<double>(depth) / 12.0));
    out.insert(static_cast<std::size_t>(std::clamp<long>(v, 1, static_cast<long>(depth))));
  }
  return {out.begin(), out.end()};
}

int block_index(Segment query, Segment key) { return 3 * static_cast<int>(query) + static_cast<int>(key) + 1; }

namespace {

Segment segment_of(const Segments& seg, std::size_t row) {
  if (row < seg.prompt) return Segment::prompt;
  if (row < seg.prompt + seg.templ) return Segment::templ;
  return Segment::search;
}

}  // namespace

std::vector<std::vector<int>> block_map(const Segments& seg) {
  const std::size_t L = seg.total();
  std::vector<std::vector<int>> m(L, std::vector<int>(L));
  for (std::size_t q = 0; q < L; ++q)
    for (std::size_t k = 0; k < L; ++k) m[q][k] = block_index(segment_of(seg, q), segment_of(seg, k));
  return m;
}

Array block_mask(const Segments& seg, const std::vector<int>& forbidden) {
  const std::size_t L = seg.total();
  Array mask({L, L});
  for (std::size_t q = 0; q < L; ++q)
    for (std::size_t k = 0; k < L; ++k) {
      const int b = block_index(segment_of(seg, q), segment_of(seg, k));
      if (std::find(forbidden.begin(), forbidden.end(), b) != forbidden.end()) {
        mask.at(q, k) = -std::numeric_limits<double>::infinity();
      }
    }
  return mask;
}

std::string layer_prefix(std::size_t layer) { return "trunk.layer" + std::to_string(layer); }

void init_layer_params(num::ParamStore& p, const std::string& prefix, std::size_t C, std::size_t mlp_ratio,
                       std::mt19937_64& rng) {
  p.add(prefix + ".norm1.gamma", Array({C}, 1.0));
  p.add(prefix + ".norm1.beta", Array({C}));
  p.add(prefix + ".qkv.weight", num::truncated_normal({C, 3 * C}, 0.02, rng));
  p.add(prefix + ".qkv.bias", Array({3 * C}));
  p.add(prefix + ".proj.weight", num::truncated_normal({C, C}, 0.02, rng));
  p.add(prefix + ".proj.bias", Array({C}));
  p.add(prefix + ".norm2.gamma", Array({C}, 1.0));
  p.add(prefix + ".norm2.beta", Array({C}));
  p.add(prefix + ".mlp.fc1.weight", num::truncated_normal({C, mlp_ratio * C}, 0.02, rng));
  p.add(prefix + ".mlp.fc1.bias", Array({mlp_ratio * C}));
  p.add(prefix + ".mlp.fc2.weight", num::truncated_normal({mlp_ratio * C, C}, 0.02, rng));
  p.add(prefix + ".mlp.fc2.bias", Array({C}));
}

void init_trunk_params(num::ParamStore& p, const AttnConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  for (std::size_t l = 1; l <= cfg.depth; ++l) init_layer_params(p, layer_prefix(l), cfg.channels, cfg.mlp_ratio, rng);
  p.add("trunk.norm.gamma", Array({cfg.channels}, 1.0));
  p.add("trunk.norm.beta", Array({cfg.channels}));
}

namespace {

struct Qkv {
  Var q, k, v;
};

Qkv project_qkv(num::Binding& bind, const std::string& prefix, const Var& x) {
  const std::size_t C = x.value().cols();
  const Var h = num::layer_norm(x, bind(prefix + ".norm1.gamma"), bind(prefix + ".norm1.beta"));
  const Var qkv = num::add_bias(num::matmul(h, bind(prefix + ".qkv.weight")), bind(prefix + ".qkv.bias"));
  return {num::slice_cols(qkv, 0, C), num::slice_cols(qkv, C, 2 * C), num::slice_cols(qkv, 2 * C, 3 * C)};
}

Var attend(const Var& q, const Var& k, const Var& v, double scale) {
  return num::matmul(num::softmax(num::scale(num::matmul_nt(q, k), scale), 1), v);
}

AttentionOutput finish(num::Binding& bind, const std::string& prefix, const Var& x, std::vector<Var> heads) {
  const Var merged = heads.size() == 1 ? heads.front() : num::concat(heads, 1);
  const Var out = num::add_bias(num::matmul(merged, bind(prefix + ".proj.weight")), bind(prefix + ".proj.bias"));
  return AttentionOutput{num::add(x, out), std::move(heads)};
}

void check_input(const Var& x, std::size_t rows, std::size_t heads) {
  if (x.value().rank() != 2 || x.value().rows() != rows) {
    throw num::ShapeError("attention: token matrix " + num::to_string(x.shape()) + " does not match " + std::to_string(rows) +
                          " segment rows");
  }
  if (heads == 0 || x.value().cols() % heads != 0) throw num::ShapeError("attention: channels not divisible by heads");
}

}  // namespace

AttentionOutput attention_sublayer(num::Binding& bind, const std::string& prefix, const Var& x, const Segments& seg,
                                   AttnMode mode, std::size_t heads) {
  check_input(x, seg.total(), heads);
  const std::size_t C = x.value().cols(), d = C / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const Qkv p = project_qkv(bind, prefix, x);
  const std::size_t pt = seg.prompt + seg.templ, L = seg.total();
  std::vector<Var> outs;
  for (std::size_t h = 0; h < heads; ++h) {
    const Var q = num::slice_cols(p.q, h * d, (h + 1) * d);
    const Var k = num::slice_cols(p.k, h * d, (h + 1) * d);
    const Var v = num::slice_cols(p.v, h * d, (h + 1) * d);
    if (mode == AttnMode::full || pt == 0) {
      outs.push_back(attend(q, k, v, scale));
      continue;
    }
    // Prompt and template rows see only their own segment; search rows see
    // every present row.
    std::vector<Var> parts;
    auto rows = [](const Var& m, std::size_t b, std::size_t e) { return num::slice_rows(m, b, e); };
    if (seg.prompt > 0) {
      parts.push_back(attend(rows(q, 0, seg.prompt), rows(k, 0, seg.prompt), rows(v, 0, seg.prompt), scale));
    }
    if (seg.templ > 0) {
      parts.push_back(attend(rows(q, seg.prompt, pt), rows(k, seg.prompt, pt), rows(v, seg.prompt, pt), scale));
    }
    if (seg.search > 0) parts.push_back(attend(rows(q, pt, L), k, v, scale));
    outs.push_back(parts.size() == 1 ? parts.front() : num::concat(parts, 0));
  }
  return finish(bind, prefix, x, std::move(outs));
}

AttentionOutput attention_sublayer_masked(num::Binding& bind, const std::string& prefix, const Var& x,
                                          const Array& additive_mask, std::size_t heads) {
  check_input(x, additive_mask.rows(), heads);
  const std::size_t C = x.value().cols(), d = C / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const Qkv p = project_qkv(bind, prefix, x);
  std::vector<Var> outs;
  for (std::size_t h = 0; h < heads; ++h) {
    const Var q = num::slice_cols(p.q, h * d, (h + 1) * d);
    const Var k = num::slice_cols(p.k, h * d, (h + 1) * d);
    const Var v = num::slice_cols(p.v, h * d, (h + 1) * d);
    const Var a = num::masked_softmax(num::scale(num::matmul_nt(q, k), scale), additive_mask);
    outs.push_back(num::matmul(a, v));
  }
  return finish(bind, prefix, x, std::move(outs));
}

Var mlp_sublayer(num::Binding& bind, const std::string& prefix, const Var& x) {
  const Var h = num::layer_norm(x, bind(prefix + ".norm2.gamma"), bind(prefix + ".norm2.beta"));
  const Var a = num::gelu(num::add_bias(num::matmul(h, bind(prefix + ".mlp.fc1.weight")), bind(prefix + ".mlp.fc1.bias")));
  const Var b = num::add_bias(num::matmul(a, bind(prefix + ".mlp.fc2.weight")), bind(prefix + ".mlp.fc2.bias"));
  return num::add(x, b);
}

std::vector<double> relevance_scores(const std::vector<Array>& head_outputs, const Segments& seg) {
  if (seg.search == 0) throw std::invalid_argument("relevance_scores: no search rows present");
  if (head_outputs.empty()) throw std::invalid_argument("relevance_scores: no heads");
  const std::size_t pt = seg.prompt + seg.templ;
  const double L = static_cast<double>(seg.total());
  std::vector<double> scores(seg.search, 0.0);
  for (const Array& o : head_outputs) {
    if (o.rows() != seg.total()) throw num::ShapeError("relevance_scores: head output rows mismatch");
    for (std::size_t j = 0; j < seg.search; ++j) {
      double s = 0;
      for (std::size_t c = 0; c < o.cols(); ++c) s += o.at(pt + j, c) * o.at(pt + j, c);
      scores[j] += std::sqrt(s) / L;
    }
  }
  for (double& s : scores) s /= static_cast<double>(head_outputs.size());
  return scores;
}

double keep_ratio(std::size_t step, const AttnConfig& cfg) {
  if (step > cfg.total_steps) throw std::out_of_range("keep_ratio: step beyond schedule");
  const double t = static_cast<double>(step) / static_cast<double>(cfg.total_steps);
  return cfg.rho_end + 0.5 * (cfg.rho_start - cfg.rho_end) * (1.0 + std::cos(std::numbers::pi * t));
}

std::size_t keep_count(double rho, std::size_t n_prompt, std::size_t n_template, std::size_t n_search) {
  if (n_search == 0) return 0;
  const double total = static_cast<double>(n_prompt + n_template + n_search);
  const long k = std::lround(rho * total) - static_cast<long>(n_prompt + n_template);
  return static_cast<std::size_t>(std::clamp<long>(k, 1, static_cast<long>(n_search)));
}

std::vector<std::size_t> select_top(const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<long>(k), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

// Runs `block` over the alive rows of `tokens` and writes the result back.
template <typename F>
embed::TokenSet on_alive_rows(const embed::TokenSet& tokens, const num::ParamStore& params, F&& block) {
  const std::vector<std::size_t> rows = tokens.alive_rows();
  num::Tape t;
  num::Binding bind(t, params, false);
  const Var x = num::gather_rows(t.constant(tokens.tokens), rows);
  const Segments seg{tokens.n_prompt, tokens.n_template, tokens.alive_search()};
  const Var y = block(bind, x, seg);
  embed::TokenSet out = tokens;
  const std::size_t C = tokens.width();
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(y.value().raw() + i * C, C, out.tokens.raw() + rows[i] * C);
  return out;
}

}  // namespace

embed::TokenSet attn_full(const embed::TokenSet& tokens, const num::ParamStore& params, const std::string& prefix,
                          std::size_t heads) {
  return on_alive_rows(tokens, params, [&](num::Binding& b, const Var& x, const Segments& seg) {
    return mlp_sublayer(b, prefix, attention_sublayer(b, prefix, x, seg, AttnMode::full, heads).residual);
  });
}

embed::TokenSet attn_asymmetric(const embed::TokenSet& tokens, const num::ParamStore& params,
                                const std::string& prefix, std::size_t heads) {
  return on_alive_rows(tokens, params, [&](num::Binding& b, const Var& x, const Segments& seg) {
    return mlp_sublayer(b, prefix, attention_sublayer(b, prefix, x, seg, AttnMode::asymmetric, heads).residual);
  });
}

embed::TokenSet attn_masked(const embed::TokenSet& tokens, const num::ParamStore& params, const std::string& prefix,
                            std::size_t heads, const std::vector<int>& forbidden) {
  return on_alive_rows(tokens, params, [&](num::Binding& b, const Var& x, const Segments& seg) {
    return mlp_sublayer(b, prefix, attention_sublayer_masked(b, prefix, x, block_mask(seg, forbidden), heads).residual);
  });
}

EliminateResult eliminate(const embed::TokenSet& tokens, const std::vector<double>& scores, double rho,
                          std::size_t layer) {
  const std::vector<std::size_t> alive = tokens.alive_search_ids();
  if (scores.size() != alive.size()) throw std::invalid_argument("eliminate: scores must cover exactly the alive search rows");
  EliminateResult r{tokens, {}};
  r.record.layer = layer;
  r.record.alive_before = alive;
  r.record.scores = scores;
  const std::size_t k = keep_count(rho, tokens.n_prompt, tokens.n_template, alive.size());
  const std::vector<std::size_t> keep = select_top(scores, k);
  std::vector<std::uint8_t> kept_flag(alive.size(), 0);
  for (std::size_t i : keep) kept_flag[i] = 1;
  for (std::size_t i = 0; i < alive.size(); ++i) {
    if (kept_flag[i]) {
      r.record.kept.push_back(alive[i]);
    } else {
      r.record.dropped.push_back(alive[i]);
      r.tokens.alive[alive[i]] = 0;
    }
  }
  return r;
}

TrunkOutput run_trunk(num::Binding& bind, const AttnConfig& cfg, TrunkState state, AttnMode mode,
                      std::optional<double> rho) {
  TrunkOutput out;
  for (std::size_t l = 1; l <= cfg.depth; ++l) {
    const std::string prefix = layer_prefix(l);
    AttentionOutput a = attention_sublayer(bind, prefix, state.x, state.seg, mode, cfg.heads);
    state.x = a.residual;
    const bool elim = rho && state.seg.search > 0 &&
                      std::find(cfg.elimination_layers.begin(), cfg.elimination_layers.end(), l) != cfg.elimination_layers.end();
    if (elim) {
      std::vector<Array> head_values;
      head_values.reserve(a.heads.size());
      for (const Var& h : a.heads) head_values.push_back(h.value());
      EliminationRecord rec;
      rec.layer = l;
      rec.alive_before = state.search_ids;
      rec.scores = relevance_scores(head_values, state.seg);
      const std::size_t k = keep_count(*rho, state.seg.prompt, state.seg.templ, state.seg.search);
      const std::vector<std::size_t> keep = select_top(rec.scores, k);
      std::vector<std::uint8_t> kept_flag(state.seg.search, 0);
      for (std::size_t i : keep) kept_flag[i] = 1;
      const std::size_t pt = state.seg.prompt + state.seg.templ;
      std::vector<std::size_t> rows(pt);
      std::iota(rows.begin(), rows.end(), 0);
      std::vector<std::size_t> ids;
      for (std::size_t i = 0; i < state.seg.search; ++i) {
        if (kept_flag[i]) {
          rows.push_back(pt + i);
          ids.push_back(state.search_ids[i]);
          rec.kept.push_back(state.search_ids[i]);
        } else {
          rec.dropped.push_back(state.search_ids[i]);
        }
      }
      if (!rec.dropped.empty()) state.x = num::gather_rows(state.x, rows);
      state.search_ids = std::move(ids);
      state.seg.search = state.search_ids.size();
      out.trace.push_back(std::move(rec));
    }
    state.x = mlp_sublayer(bind, prefix, state.x);
  }
  state.x = num::layer_norm(state.x, bind("trunk.norm.gamma"), bind("trunk.norm.beta"));
  out.state = std::move(state);
  return out;
}

}  // namespace untrack::attn
