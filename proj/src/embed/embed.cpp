// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/embed/embed.hpp"

#include <algorithm>
#include <stdexcept>

#include "untrack/numerics/params.hpp"

namespace untrack::embed {

using num::Array;
using num::ShapeError;
using num::Var;

void EmbedConfig::validate() const {
  if (patch == 0 || channels == 0 || bands == 0) throw std::invalid_argument("embed: patch, channels, bands must be positive");
  if (search_frames < 1) throw std::invalid_argument("embed: at least one search frame");
  if (template_size == 0 || template_size % patch != 0) throw std::invalid_argument("embed: template side not divisible by patch");
  if (search_size == 0 || search_size % patch != 0) throw std::invalid_argument("embed: search side not divisible by patch");
}

std::string search_pos_name(std::size_t frame) { return "embed.pos.search" + std::to_string(frame); }

void init_embed_params(num::ParamStore& params, const EmbedConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  const std::size_t C = cfg.channels;
  params.add("embed.proj.weight", num::truncated_normal({C, cfg.bands, cfg.patch, cfg.patch}, 0.02, rng));
  params.add("embed.proj.bias", Array({C}));
  if (cfg.prompt_len > 0) params.add("embed.pos.prompt", num::truncated_normal({cfg.prompt_len, C}, 0.02, rng));
  params.add("embed.pos.template", num::truncated_normal({cfg.template_tokens(), C}, 0.02, rng));
  for (std::size_t n = 1; n <= cfg.search_frames; ++n) {
    params.add(search_pos_name(n), num::truncated_normal({cfg.tokens_per_search(), C}, 0.02, rng));
  }
}

Array to_array(const msi::MsiFrame& frame) {
  Array out({frame.bands(), frame.height(), frame.width()});
  for (std::size_t i = 0; i < frame.data().size(); ++i) out[i] = frame.data()[i];
  return out;
}

Array patchify(const Array& image, std::size_t patch) {
  if (image.rank() != 3) throw ShapeError("patchify: expected [B,H,W], got " + num::to_string(image.shape()));
  const std::size_t B = image.dim(0), H = image.dim(1), W = image.dim(2);
  if (patch == 0 || H % patch != 0 || W % patch != 0) {
    throw ShapeError("patchify: image " + std::to_string(H) + "x" + std::to_string(W) + " not divisible by patch " +
                     std::to_string(patch));
  }
  const std::size_t gh = H / patch, gw = W / patch, feat = B * patch * patch;
  Array out({gh * gw, feat});
  for (std::size_t gy = 0; gy < gh; ++gy)
    for (std::size_t gx = 0; gx < gw; ++gx) {
      double* row = out.raw() + (gy * gw + gx) * feat;
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t dy = 0; dy < patch; ++dy) {
          const double* src = image.raw() + (b * H + gy * patch + dy) * W + gx * patch;
          for (std::size_t dx = 0; dx < patch; ++dx) *row++ = src[dx];
        }
    }
  return out;
}

Var patch_embed(num::Binding& bind, const EmbedConfig& cfg, const Array& image, const std::optional<std::string>& pos_name) {
  if (image.rank() != 3 || image.dim(0) != cfg.bands) {
    throw ShapeError("patch_embed: expected " + std::to_string(cfg.bands) + " bands, got image " + num::to_string(image.shape()));
  }
  num::Tape& t = bind.tape();
  const Var patches = t.constant(patchify(image, cfg.patch));
  const Var w = num::reshape(bind("embed.proj.weight"), {cfg.channels, cfg.patch_features()});
  Var rows = num::add_bias(num::matmul_nt(patches, w), bind("embed.proj.bias"));
  if (pos_name) {
    const Var pos = bind(*pos_name);
    if (pos.shape() != rows.shape()) {
      throw ShapeError("patch_embed: positional table " + *pos_name + " has shape " + num::to_string(pos.shape()) +
                       ", tokens " + num::to_string(rows.shape()));
    }
    rows = num::add(rows, pos);
  }
  return rows;
}

Array patch_embed(const num::ParamStore& params, const EmbedConfig& cfg, const Array& image,
                  const std::optional<std::string>& pos_name) {
  num::Tape t;
  num::Binding bind(t, params, false);
  return patch_embed(bind, cfg, image, pos_name).value();
}

Segment TokenSet::segment(std::size_t row) const {
  if (row < n_prompt) return Segment::prompt;
  if (row < n_prompt + n_template) return Segment::templ;
  if (row < size()) return Segment::search;
  throw std::out_of_range("TokenSet::segment: row out of range");
}

std::size_t TokenSet::alive_search() const {
  std::size_t n = 0;
  for (auto a : alive) n += a ? 1 : 0;
  return n;
}

std::vector<std::size_t> TokenSet::alive_rows() const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n_prompt + n_template; ++i) rows.push_back(i);
  for (std::size_t j = 0; j < n_search; ++j)
    if (alive[j]) rows.push_back(n_prompt + n_template + j);
  return rows;
}

std::vector<std::size_t> TokenSet::alive_search_ids() const {
  std::vector<std::size_t> ids;
  for (std::size_t j = 0; j < n_search; ++j)
    if (alive[j]) ids.push_back(j);
  return ids;
}

TokenSet assemble(const Array& prompt, const Array& templ, const std::vector<Array>& search, std::size_t search_grid) {
  const std::size_t C = templ.cols();
  auto check = [&](const Array& a, const std::string& what) {
    if (a.rank() != 2) throw ShapeError("assemble: " + what + " must be rank 2");
    if (a.rows() > 0 && a.cols() != C) {
      throw ShapeError("assemble: " + what + " width " + std::to_string(a.cols()) + " differs from " + std::to_string(C));
    }
  };
  check(prompt, "prompt");
  check(templ, "template");
  TokenSet ts;
  ts.n_prompt = prompt.rows();
  ts.n_template = templ.rows();
  for (std::size_t n = 0; n < search.size(); ++n) {
    check(search[n], "search frame " + std::to_string(n + 1));
    if (search[n].rows() != search_grid * search_grid) {
      throw ShapeError("assemble: search frame " + std::to_string(n + 1) + " has " + std::to_string(search[n].rows()) +
                       " rows, grid needs " + std::to_string(search_grid * search_grid));
    }
    ts.n_search += search[n].rows();
  }
  ts.tokens = Array({ts.size(), C});
  double* dst = ts.tokens.raw();
  auto append = [&](const Array& a) { dst = std::copy(a.raw(), a.raw() + a.size(), dst); };
  append(prompt);
  append(templ);
  for (std::size_t n = 0; n < search.size(); ++n) {
    append(search[n]);
    for (std::size_t r = 0; r < search_grid; ++r)
      for (std::size_t c = 0; c < search_grid; ++c) ts.origin.push_back(Origin{n + 1, r, c});
  }
  ts.alive.assign(ts.n_search, 1);
  return ts;
}

}  // namespace untrack::embed
