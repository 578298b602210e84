// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <string>
#include <utility>

#include "untrack/numerics/binding.hpp"

namespace untrack::prompt {

/// Where the next frame's prompt tokens come from.
enum class PromptMode {
  none,           // no prompt rows at all
  random_frozen,  // the initial prompt, never trained and never updated
  passthrough,    // the trunk's output prompt rows, fed back unchanged
  encoder,        // the squeeze/excite encoder output
};
std::string to_string(PromptMode mode);
PromptMode parse_prompt_mode(const std::string& text);  // throws std::invalid_argument

struct EncoderConfig {
  std::size_t channels = 64;
  std::size_t ratio = 4;  // compression of the 2C concatenated channels
  std::size_t prompt_len = 1;

  std::size_t squeezed() const noexcept { return 2 * channels / ratio; }
  void validate() const;
};

/// Adds `prompt_enc.init_prompt` for every mode except `none`, and the
/// encoder weights (`prompt_enc.fc1`, `prompt_enc.fc2`, `prompt_enc.mlp.fc1`,
/// `prompt_enc.mlp.fc2`) only in `encoder` mode. In `random_frozen` mode the
/// initial prompt is registered as non-trainable.
void init_prompt_params(num::ParamStore& params, const EncoderConfig& cfg, PromptMode mode, std::mt19937_64& rng);

struct Encoded {
  num::Var prompt;    // [L_P, C], becomes the next prompt
  num::Var template_summary;  // [L_P, C], kept for inspection only
};

/// z = [prompt_out, mean(template_out) per prompt row] -> FC1 -> GELU -> FC2
/// -> residual MLP; the 2C output is split into (prompt, template summary).
Encoded encode(num::Binding& bind, const num::Var& prompt_out, const num::Var& template_out);
std::pair<num::Array, num::Array> encode(const num::ParamStore& params, const num::Array& prompt_out,
                                         const num::Array& template_out);

struct SpectrumPrompt {
  num::Array tokens;    // [L_P, C]
  std::size_t frame = 0;  // frame whose pass produced it; 0 for the initial prompt
};

/// Per-sequence prompt holder used by the tracker.
class PromptState {
 public:
  PromptState() = default;
  /// Starts from `prompt_enc.init_prompt` (empty tokens when the store has none).
  explicit PromptState(const num::ParamStore& params);

  const SpectrumPrompt& current() const noexcept { return current_; }
  /// Replaces the stored prompt. A non-finite or mis-shaped candidate is
  /// rejected: the previous prompt stays and false is returned.
  bool update(const num::Array& candidate, std::size_t frame);
  std::size_t rejected() const noexcept { return rejected_; }

 private:
  SpectrumPrompt current_;
  std::size_t rejected_ = 0;
};

}  // namespace untrack::prompt
