// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/pipeline/model.hpp"

#include <numeric>
#include <stdexcept>

#include "untrack/numerics/ops.hpp"
#include "untrack/numerics/rng.hpp"

namespace untrack::pipeline {

using num::Array;
using num::Var;

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.sync();
  return c;
}

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.embed.patch = 16;
  c.embed.channels = 768;
  c.embed.template_size = 192;
  c.embed.search_size = 384;
  c.attn.depth = 12;
  c.attn.heads = 12;
  c.attn.elimination_layers = attn::AttnConfig::scaled_elimination_layers(12);
  c.sync();
  return c;
}

void ModelConfig::sync() {
  const std::size_t C = embed.channels;
  attn.channels = C;
  encoder.channels = C;
  head.channels = C;
  head.grid = embed.search_grid();
  head.search_size = embed.search_size;
  const std::size_t lp = prompt_mode == prompt::PromptMode::none ? 0 : std::max<std::size_t>(encoder.prompt_len, 1);
  embed.prompt_len = lp;
  if (lp > 0) encoder.prompt_len = lp;
}

void ModelConfig::validate() const {
  embed.validate();
  attn.validate();
  head.validate();
  if (prompt_mode == prompt::PromptMode::encoder) encoder.validate();
  const std::size_t C = embed.channels;
  if (attn.channels != C || encoder.channels != C || head.channels != C) {
    throw std::invalid_argument("model: channel widths of embed/attn/encoder/head differ (call sync())");
  }
  if (head.grid != embed.search_grid() || head.search_size != embed.search_size) {
    throw std::invalid_argument("model: head grid does not match the search grid");
  }
  if ((prompt_mode == prompt::PromptMode::none) != (embed.prompt_len == 0)) {
    throw std::invalid_argument("model: prompt length must be 0 exactly when the prompt mode is none");
  }
  if (!(template_factor > 0 && search_factor > 0)) throw std::invalid_argument("model: crop factors must be positive");
}

num::ParamStore init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  num::ParamStore p;
  std::mt19937_64 rng(num::derive_seed(seed, 0x1417));
  embed::init_embed_params(p, cfg.embed, rng);
  attn::init_trunk_params(p, cfg.attn, rng);
  prompt::init_prompt_params(p, cfg.encoder, cfg.prompt_mode, rng);
  head::init_head_params(p, cfg.head, rng);
  return p;
}

ForwardOutput forward(num::Binding& bind, const ModelConfig& cfg, const Array& templ, const std::vector<Array>& search,
                      const std::optional<Var>& prompt, std::optional<double> rho) {
  if (search.size() != cfg.embed.search_frames) {
    throw num::ShapeError("forward: expected " + std::to_string(cfg.embed.search_frames) + " search crops, got " +
                          std::to_string(search.size()));
  }
  const std::size_t lp = cfg.embed.prompt_len;
  std::vector<Var> rows;
  if (lp > 0) {
    const Var p = prompt ? *prompt : bind("prompt_enc.init_prompt");
    if (p.value().rank() != 2 || p.value().rows() != lp || p.value().cols() != cfg.embed.channels) {
      throw num::ShapeError("forward: prompt must be [" + std::to_string(lp) + ", C], got " + num::to_string(p.shape()));
    }
    rows.push_back(num::add(p, bind("embed.pos.prompt")));
  }
  rows.push_back(embed::patch_embed(bind, cfg.embed, templ, "embed.pos.template"));
  for (std::size_t n = 0; n < search.size(); ++n)
    rows.push_back(embed::patch_embed(bind, cfg.embed, search[n], embed::search_pos_name(n + 1)));

  attn::TrunkState st;
  st.x = num::concat(rows, 0);
  st.seg = attn::Segments{lp, cfg.embed.template_tokens(), cfg.embed.search_tokens()};
  st.search_ids.resize(st.seg.search);
  std::iota(st.search_ids.begin(), st.search_ids.end(), 0);
  attn::TrunkOutput tr = attn::run_trunk(bind, cfg.attn, std::move(st), cfg.attn_mode, cfg.eliminate ? rho : std::nullopt);

  ForwardOutput out;
  out.trace = std::move(tr.trace);
  out.search_ids = tr.state.search_ids;
  const std::size_t pt = tr.state.seg.prompt + tr.state.seg.templ;
  const Var x = tr.state.x;
  const Var s = num::slice_rows(x, pt, x.value().rows());
  out.maps = head::head_forward(bind, cfg.head, s, out.search_ids, cfg.embed.search_frames);

  switch (cfg.prompt_mode) {
    case prompt::PromptMode::none: break;
    case prompt::PromptMode::random_frozen: out.next_prompt = bind("prompt_enc.init_prompt"); break;
    case prompt::PromptMode::passthrough: out.next_prompt = num::slice_rows(x, 0, lp); break;
    case prompt::PromptMode::encoder: {
      const prompt::Encoded e = prompt::encode(bind, num::slice_rows(x, 0, lp), num::slice_rows(x, lp, pt));
      out.next_prompt = e.prompt;
      out.template_summary = e.template_summary;
      break;
    }
  }
  return out;
}

CropInput crop_input(const msi::MsiFrame& frame, const msi::Box& reference, double factor, std::size_t side) {
  const msi::Crop c = msi::crop_resize(frame, reference, factor, side);
  return CropInput{embed::to_array(c.patch), c.mapping};
}

}  // namespace untrack::pipeline
