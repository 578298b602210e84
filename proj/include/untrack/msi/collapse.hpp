// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "untrack/msi/types.hpp"

namespace untrack::msi {

/// Band-to-RGB weights: row k (0 = blue, 1 = green, 2 = red) holds the
/// width-weighted averaging coefficients over the input bands. Each band
/// joins the CIE primary nearest to its center; a primary left without bands
/// borrows the single band nearest to it.
struct CollapseWeights {
  std::array<std::vector<double>, 3> rows;
  BandSpec output_bands;
};

CollapseWeights collapse_weights(const BandSpec& bands);

/// Three-band frame (blue, green, red order, i.e. sorted by center).
MsiFrame collapse_to_rgb(const MsiFrame& frame, const BandSpec& bands);
MsiSequence collapse_to_rgb(const MsiSequence& seq);

/// Applies the collapse to a single spectrum.
std::array<double, 3> collapse_spectrum(const std::vector<double>& spectrum, const CollapseWeights& w);

}  // namespace untrack::msi
