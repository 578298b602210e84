// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <vector>

#include "untrack/msi/crop.hpp"
#include "untrack/numerics/binding.hpp"

namespace untrack::head {

struct HeadConfig {
  std::size_t channels = 64;
  std::size_t grid = 12;        // cells per side of one search map
  std::size_t search_size = 96; // crop side in pixels
  std::size_t layers = 4;       // per branch; channels halve at each layer but the last

  double stride() const noexcept { return static_cast<double>(search_size) / static_cast<double>(grid); }
  std::size_t cells() const noexcept { return grid * grid; }
  void validate() const;
};

/// `head.placeholder` plus `head.cls.conv{i}` and `head.reg.conv{i}`.
void init_head_params(num::ParamStore& params, const HeadConfig& cfg, std::mt19937_64& rng);

/// Maps for one search frame.
struct HeadMaps {
  num::Var cls;  // [1, G, G], confidence in (0, 1)
  num::Var reg;  // [4, G, G], (l, t, r, b) / crop side, > 0
};

/// Writes alive rows back onto their grid cells (dead cells take the
/// placeholder) and runs both branches on every frame. `search_ids` are
/// frame-major ids in [0, frames * G * G), aligned with the rows of `search`.
std::vector<HeadMaps> head_forward(num::Binding& bind, const HeadConfig& cfg, const num::Var& search,
                                   const std::vector<std::size_t>& search_ids, std::size_t frames);

/// [C, G, G] feature map for one frame; exposed for inspection and tests.
num::Var scatter_to_grid(num::Binding& bind, const HeadConfig& cfg, const num::Var& search,
                         const std::vector<std::size_t>& search_ids, std::size_t frame);

struct Decoded {
  msi::Box patch_box;  // crop pixel coordinates
  msi::Box frame_box;
  double confidence = 0;
  std::size_t peak = 0;  // row-major cell index
};

/// Row-major first maximum.
std::size_t peak_cell(const num::Array& cls);
/// Box at cell `cell` from the regression map, in crop pixels.
msi::Box box_at(const HeadConfig& cfg, const num::Array& reg, std::size_t cell);
Decoded decode(const HeadConfig& cfg, const num::Array& cls, const num::Array& reg, const msi::CropMapping& mapping);

/// Supervision for one search frame, in crop pixel coordinates.
struct Target {
  num::Array heatmap;      // [1, G, G]
  bool regress = false;    // false for hidden targets
  std::size_t cell = 0;    // positive cell
  num::Array ltrb;         // [4], normalised by crop side
  num::Array box_xyxy;     // [4], normalised by crop side
};

/// Gaussian target around the cell holding the box centre (clamped to the
/// grid) with sigma = max(1, box diagonal in cells / 12); the peak is exactly 1.
/// A hidden target yields an all-zero map and no regression terms.
Target make_target(const HeadConfig& cfg, const msi::Box& patch_box, bool visible);

struct LossWeights {
  double l1 = 5.0;
  double giou = 2.0;
  double alpha = 2.0;
  double beta = 4.0;
  void validate() const;
};

struct LossTerms {
  num::Var cls, l1, giou;  // l1/giou invalid when the frame has no regression
  bool regress = false;
};

LossTerms frame_loss(const HeadConfig& cfg, const HeadMaps& maps, const Target& target, const LossWeights& w);

/// cls + l1_weight * l1 + giou_weight * giou.
double total_loss(double cls, double l1, double giou, const LossWeights& w);
num::Var total_loss(const LossTerms& terms, const LossWeights& w);

/// Scalar values of the three terms (0 where a term is absent).
struct LossValues {
  double cls = 0, l1 = 0, giou = 0, total = 0;
};

}  // namespace untrack::head
