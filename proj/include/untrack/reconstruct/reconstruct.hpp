// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <vector>

#include "untrack/msi/types.hpp"
#include "untrack/numerics/array.hpp"

namespace untrack::reconstruct {

/// Wavelengths (nm) and per-channel weights of a pre-trained 3-channel layer.
struct RgbAnchors {
  double red = msi::kCieRed, green = msi::kCieGreen, blue = msi::kCieBlue;
  num::Array w_red, w_green, w_blue;

  /// Throws std::invalid_argument unless blue < green < red and the three
  /// weight arrays share one shape.
  void validate() const;
};

/// Blending coefficients of one target band; at most two are non-zero and
/// they sum to 1.
struct Blend {
  double blue = 0, green = 0, red = 0;
  double sum() const noexcept { return blue + green + red; }
};

/// Piecewise-linear rule: blue/green line below green (extrapolating below
/// blue), green/red line on (green, red], red copied beyond red, and exactly
/// green at green.
Blend blend_for(double center, const RgbAnchors& anchors);

/// One weight array per band of `bands`.
std::vector<num::Array> reconstruct_weights(const RgbAnchors& anchors, const msi::BandSpec& bands);

struct ExpandOptions {
  /// Bands beyond the red anchor get fresh truncated-normal weights instead
  /// of a red copy (the "train from scratch" comparison).
  bool scratch_infrared = false;
  double scratch_stddev = 0.02;
  std::uint64_t seed = 0;
};

/// Expands a [C, 3, k, k] input-layer weight whose channels are ordered by
/// ascending wavelength (blue, green, red) into [C, B, k, k] for `bands`.
num::Array expand_input_layer(const num::Array& rgb_weight, const msi::BandSpec& bands, const ExpandOptions& opts = {});

}  // namespace untrack::reconstruct
