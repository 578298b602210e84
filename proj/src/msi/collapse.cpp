// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/msi/collapse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace untrack::msi {

CollapseWeights collapse_weights(const BandSpec& bands) {
  if (bands.size() < 3) throw DataError("collapse_to_rgb needs at least 3 bands");
  constexpr std::array<double, 3> anchors = {kCieBlue, kCieGreen, kCieRed};
  const std::size_t n = bands.size();

  std::array<std::vector<std::size_t>, 3> members;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < 3; ++k) {
      if (std::abs(bands[i].center - anchors[k]) < std::abs(bands[i].center - anchors[best])) best = k;
    }
    members[best].push_back(i);
  }
  for (std::size_t k = 0; k < 3; ++k) {
    if (!members[k].empty()) continue;
    std::size_t nearest = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (std::abs(bands[i].center - anchors[k]) < std::abs(bands[nearest].center - anchors[k])) nearest = i;
    }
    members[k].push_back(nearest);
  }

  CollapseWeights out;
  std::vector<Band> rgb;
  for (std::size_t k = 0; k < 3; ++k) {
    out.rows[k].assign(n, 0.0);
    double total = 0;
    Band merged{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest(), anchors[k], 0.0};
    for (std::size_t i : members[k]) total += bands[i].width;
    for (std::size_t i : members[k]) {
      out.rows[k][i] = bands[i].width / total;
      merged.start = std::min(merged.start, bands[i].start);
      merged.end = std::max(merged.end, bands[i].end);
      merged.width += bands[i].width;
    }
    merged.start = std::min(merged.start, anchors[k]);
    merged.end = std::max(merged.end, anchors[k]);
    rgb.push_back(merged);
  }
  // Borrowed bands can push ranges out of centre order; keep centres sorted,
  // which they are by construction of the anchors.
  out.output_bands = BandSpec(std::move(rgb));
  return out;
}

std::array<double, 3> collapse_spectrum(const std::vector<double>& spectrum, const CollapseWeights& w) {
  std::array<double, 3> out{};
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < spectrum.size(); ++i) out[k] += w.rows[k][i] * spectrum[i];
  return out;
}

namespace {

MsiFrame apply(const MsiFrame& frame, const CollapseWeights& w) {
  MsiFrame out(frame.height(), frame.width(), 3);
  const std::size_t plane = frame.plane();
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<double> acc(plane, 0.0);
    for (std::size_t b = 0; b < frame.bands(); ++b) {
      const double c = w.rows[k][b];
      if (c == 0.0) continue;
      const float* src = frame.data().data() + b * plane;
      for (std::size_t i = 0; i < plane; ++i) acc[i] += c * src[i];
    }
    float* dst = out.data().data() + k * plane;
    for (std::size_t i = 0; i < plane; ++i) dst[i] = static_cast<float>(std::clamp(acc[i], 0.0, 1.0));
  }
  return out;
}

}  // namespace

MsiFrame collapse_to_rgb(const MsiFrame& frame, const BandSpec& bands) {
  if (frame.bands() != bands.size()) throw DataError("collapse_to_rgb: frame/band-table mismatch");
  return apply(frame, collapse_weights(bands));
}

MsiSequence collapse_to_rgb(const MsiSequence& seq) {
  const CollapseWeights w = collapse_weights(seq.bands);
  MsiSequence out;
  out.name = seq.name;
  out.bands = w.output_bands;
  out.fps = seq.fps;
  out.attributes = seq.attributes;
  out.annotations = seq.annotations;
  out.frames.reserve(seq.frames.size());
  for (const MsiFrame& f : seq.frames) {
    if (f.bands() != seq.bands.size()) throw DataError("collapse_to_rgb: frame/band-table mismatch");
    out.frames.push_back(apply(f, w));
  }
  return out;
}

}  // namespace untrack::msi
