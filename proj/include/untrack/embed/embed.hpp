// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "untrack/msi/types.hpp"
#include "untrack/numerics/binding.hpp"
#include "untrack/numerics/ops.hpp"

namespace untrack::embed {

struct EmbedConfig {
  std::size_t patch = 8;
  std::size_t channels = 64;
  std::size_t search_frames = 2;
  std::size_t bands = 8;
  std::size_t template_size = 48;
  std::size_t search_size = 96;
  std::size_t prompt_len = 1;

  std::size_t template_grid() const noexcept { return template_size / patch; }
  std::size_t search_grid() const noexcept { return search_size / patch; }
  std::size_t template_tokens() const noexcept { return template_grid() * template_grid(); }
  std::size_t tokens_per_search() const noexcept { return search_grid() * search_grid(); }
  std::size_t search_tokens() const noexcept { return search_frames * tokens_per_search(); }
  std::size_t total_tokens() const noexcept { return prompt_len + template_tokens() + search_tokens(); }
  std::size_t patch_features() const noexcept { return bands * patch * patch; }
  /// Throws std::invalid_argument on indivisible sides or empty extents.
  void validate() const;
};

/// Adds `embed.proj.{weight,bias}` and the positional tables
/// `embed.pos.{prompt,template,search1..N}`.
void init_embed_params(num::ParamStore& params, const EmbedConfig& cfg, std::mt19937_64& rng);

/// [B,H,W] array from a frame (band-major, float -> double).
num::Array to_array(const msi::MsiFrame& frame);

/// Rows of flattened P x P x B patches in row-major grid order; each row is
/// ordered (band, dy, dx) to match the [C,B,P,P] projection weight.
num::Array patchify(const num::Array& image, std::size_t patch);

/// Linear projection of the patches of `image` plus the positional table
/// `pos_name` when given. Image sides must be divisible by the patch size.
num::Var patch_embed(num::Binding& bind, const EmbedConfig& cfg, const num::Array& image,
                     const std::optional<std::string>& pos_name);
num::Array patch_embed(const num::ParamStore& params, const EmbedConfig& cfg, const num::Array& image,
                       const std::optional<std::string>& pos_name);

std::string search_pos_name(std::size_t frame);  // 1-based

enum class Segment : std::uint8_t { prompt, templ, search };

/// Grid position of a search row; frame is 1-based within the window.
struct Origin {
  std::size_t frame = 1, row = 0, col = 0;
  friend bool operator==(const Origin&, const Origin&) = default;
};

/// Unified token matrix [P; T; S_1; ...; S_N] with segment bookkeeping.
struct TokenSet {
  num::Array tokens;  // [L, C]
  std::size_t n_prompt = 0, n_template = 0, n_search = 0;
  std::vector<Origin> origin;        // one per search row
  std::vector<std::uint8_t> alive;   // one per search row

  std::size_t size() const noexcept { return n_prompt + n_template + n_search; }
  std::size_t width() const { return tokens.cols(); }
  Segment segment(std::size_t row) const;
  std::size_t alive_search() const;
  /// Indices (into all rows) of prompt, template and alive search rows.
  std::vector<std::size_t> alive_rows() const;
  /// Indices (into search rows) of alive search rows.
  std::vector<std::size_t> alive_search_ids() const;
};

/// Orders rows as [prompt; template; search frame 1; ...]; search blocks must
/// each hold grid*grid rows. Throws ShapeError on width mismatch.
TokenSet assemble(const num::Array& prompt, const num::Array& templ, const std::vector<num::Array>& search,
                  std::size_t search_grid);

}  // namespace untrack::embed
