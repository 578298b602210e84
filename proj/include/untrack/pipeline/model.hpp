// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "untrack/attn/attention.hpp"
#include "untrack/embed/embed.hpp"
#include "untrack/head/head.hpp"
#include "untrack/msi/crop.hpp"
#include "untrack/prompt/prompt_encoder.hpp"

namespace untrack::pipeline {

struct ModelConfig {
  embed::EmbedConfig embed;
  attn::AttnConfig attn;
  prompt::EncoderConfig encoder;
  head::HeadConfig head;
  prompt::PromptMode prompt_mode = prompt::PromptMode::encoder;
  attn::AttnMode attn_mode = attn::AttnMode::asymmetric;
  bool eliminate = true;
  double template_factor = 2.0;  // crop side / sqrt(box area)
  double search_factor = 4.0;

  /// C = 64, depth 2, 4 heads, P = 8, template 48, search 96, N = 2.
  static ModelConfig desk();
  /// C = 768, depth 12, 12 heads, P = 16, template 192, search 384, N = 2.
  static ModelConfig paper();

  /// Keeps derived fields in step: prompt length (0 for `none`), channel
  /// widths, head grid and crop side. Call after editing primary fields.
  void sync();
  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

/// Fresh parameters for every module of the model.
num::ParamStore init_model(const ModelConfig& cfg, std::uint64_t seed);

struct ForwardOutput {
  std::vector<head::HeadMaps> maps;  // one per search frame, oldest first
  attn::EliminationTrace trace;
  std::vector<std::size_t> search_ids;  // surviving search rows
  num::Var next_prompt;                 // invalid when the model has no prompt
  num::Var template_summary;            // encoder mode only
};

/// One pass over a template crop and N search crops ([B, side, side] each).
/// `prompt` overrides the learned initial prompt; `rho` enables elimination
/// (ignored when cfg.eliminate is false).
ForwardOutput forward(num::Binding& bind, const ModelConfig& cfg, const num::Array& templ,
                      const std::vector<num::Array>& search, const std::optional<num::Var>& prompt,
                      std::optional<double> rho);

/// [B, side, side] crop as a double array plus its mapping.
struct CropInput {
  num::Array image;
  msi::CropMapping mapping;
};
CropInput crop_input(const msi::MsiFrame& frame, const msi::Box& reference, double factor, std::size_t side);

}  // namespace untrack::pipeline
