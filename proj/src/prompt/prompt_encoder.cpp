// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/prompt/prompt_encoder.hpp"

#include <stdexcept>

#include "untrack/numerics/ops.hpp"

namespace untrack::prompt {

using num::Array;
using num::Var;

std::string to_string(PromptMode mode) {
  switch (mode) {
    case PromptMode::none: return "none";
    case PromptMode::random_frozen: return "random_frozen";
    case PromptMode::passthrough: return "passthrough";
    case PromptMode::encoder: return "encoder";
  }
  return "?";
}

PromptMode parse_prompt_mode(const std::string& text) {
  for (PromptMode m : {PromptMode::none, PromptMode::random_frozen, PromptMode::passthrough, PromptMode::encoder})
    if (to_string(m) == text) return m;
  throw std::invalid_argument("unknown prompt mode '" + text + "' (none, random_frozen, passthrough, encoder)");
}

void EncoderConfig::validate() const {
  if (channels == 0 || ratio == 0) throw std::invalid_argument("prompt encoder: channels and ratio must be positive");
  if ((2 * channels) % ratio != 0) throw std::invalid_argument("prompt encoder: 2C must be divisible by the ratio");
  if (prompt_len == 0) throw std::invalid_argument("prompt encoder: prompt_len must be positive");
}

void init_prompt_params(num::ParamStore& p, const EncoderConfig& cfg, PromptMode mode, std::mt19937_64& rng) {
  if (mode == PromptMode::none) return;
  cfg.validate();
  const std::size_t C = cfg.channels, C2 = 2 * C, S = cfg.squeezed();
  p.add("prompt_enc.init_prompt", num::truncated_normal({cfg.prompt_len, C}, 0.02, rng), mode != PromptMode::random_frozen);
  if (mode != PromptMode::encoder) return;
  p.add("prompt_enc.fc1.weight", num::truncated_normal({C2, S}, 0.02, rng));
  p.add("prompt_enc.fc1.bias", Array({S}));
  p.add("prompt_enc.fc2.weight", num::truncated_normal({S, C2}, 0.02, rng));
  p.add("prompt_enc.fc2.bias", Array({C2}));
  p.add("prompt_enc.mlp.fc1.weight", num::truncated_normal({C2, C2}, 0.02, rng));
  p.add("prompt_enc.mlp.fc1.bias", Array({C2}));
  p.add("prompt_enc.mlp.fc2.weight", num::truncated_normal({C2, C2}, 0.02, rng));
  p.add("prompt_enc.mlp.fc2.bias", Array({C2}));
}

namespace {

Var linear(num::Binding& bind, const std::string& name, const Var& x) {
  return num::add_bias(num::matmul(x, bind(name + ".weight")), bind(name + ".bias"));
}

}  // namespace

Encoded encode(num::Binding& bind, const Var& prompt_out, const Var& template_out) {
  const Array& pv = prompt_out.value();
  const Array& tv = template_out.value();
  if (pv.rank() != 2 || tv.rank() != 2 || pv.cols() != tv.cols()) {
    throw num::ShapeError("prompt encode: prompt " + num::to_string(pv.shape()) + " and template " +
                          num::to_string(tv.shape()) + " widths differ");
  }
  if (pv.rows() == 0 || tv.rows() == 0) throw num::ShapeError("prompt encode: empty prompt or template rows");
  const std::size_t C = pv.cols();
  Var pooled = num::mean_rows(template_out);
  if (pv.rows() > 1) pooled = num::gather_rows(pooled, std::vector<std::size_t>(pv.rows(), 0));
  const Var z = num::concat({prompt_out, pooled}, 1);
  const Var squeezed = num::gelu(linear(bind, "prompt_enc.fc1", z));
  const Var excited = linear(bind, "prompt_enc.fc2", squeezed);
  const Var hidden = num::gelu(linear(bind, "prompt_enc.mlp.fc1", excited));
  const Var out = num::add(excited, linear(bind, "prompt_enc.mlp.fc2", hidden));
  return Encoded{num::slice_cols(out, 0, C), num::slice_cols(out, C, 2 * C)};
}

std::pair<Array, Array> encode(const num::ParamStore& params, const Array& prompt_out, const Array& template_out) {
  num::Tape t;
  num::Binding bind(t, params, false);
  const Encoded e = encode(bind, t.constant(prompt_out), t.constant(template_out));
  return {e.prompt.value(), e.template_summary.value()};
}

PromptState::PromptState(const num::ParamStore& params) {
  if (params.contains("prompt_enc.init_prompt")) current_.tokens = params.get("prompt_enc.init_prompt");
}

bool PromptState::update(const Array& candidate, std::size_t frame) {
  if (candidate.shape() != current_.tokens.shape() || !candidate.all_finite()) {
    ++rejected_;
    return false;
  }
  current_ = SpectrumPrompt{candidate, frame};
  return true;
}

}  // namespace untrack::prompt
