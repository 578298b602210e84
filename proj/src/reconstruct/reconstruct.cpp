// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/reconstruct/reconstruct.hpp"

#include <stdexcept>

#include "untrack/numerics/params.hpp"

namespace untrack::reconstruct {

using num::Array;

void RgbAnchors::validate() const {
  if (!(blue < green && green < red)) throw std::invalid_argument("rgb anchors: need blue < green < red");
  if (w_red.shape() != w_green.shape() || w_red.shape() != w_blue.shape()) {
    throw std::invalid_argument("rgb anchors: weight shapes differ");
  }
}

Blend blend_for(double m, const RgbAnchors& a) {
  Blend b;
  if (m == a.green) {
    b.green = 1;
  } else if (m < a.green) {
    const double span = a.green - a.blue;
    b.blue = (a.green - m) / span;
    b.green = (m - a.blue) / span;
  } else if (m <= a.red) {
    const double span = a.red - a.green;
    b.green = (a.red - m) / span;
    b.red = (m - a.green) / span;
  } else {
    b.red = 1;
  }
  return b;
}

std::vector<Array> reconstruct_weights(const RgbAnchors& anchors, const msi::BandSpec& bands) {
  anchors.validate();
  if (bands.size() == 0) throw std::invalid_argument("reconstruct_weights: no target bands");
  std::vector<Array> out;
  for (double m : bands.centers()) {
    const Blend c = blend_for(m, anchors);
    Array w(anchors.w_red.shape());
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = c.blue * anchors.w_blue[i] + c.green * anchors.w_green[i] + c.red * anchors.w_red[i];
    }
    out.push_back(std::move(w));
  }
  return out;
}

Array expand_input_layer(const Array& rgb, const msi::BandSpec& bands, const ExpandOptions& opts) {
  if (rgb.rank() != 4 || rgb.dim(1) != 3) {
    throw num::ShapeError("expand_input_layer: expected [C, 3, k, k], got " + num::to_string(rgb.shape()));
  }
  const std::size_t C = rgb.dim(0), kh = rgb.dim(2), kw = rgb.dim(3), plane = kh * kw, B = bands.size();
  RgbAnchors a;
  a.w_blue = Array({C, plane});
  a.w_green = Array({C, plane});
  a.w_red = Array({C, plane});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < plane; ++i) {
      a.w_blue[c * plane + i] = rgb[(c * 3 + 0) * plane + i];
      a.w_green[c * plane + i] = rgb[(c * 3 + 1) * plane + i];
      a.w_red[c * plane + i] = rgb[(c * 3 + 2) * plane + i];
    }
  const std::vector<Array> per_band = reconstruct_weights(a, bands);
  std::mt19937_64 rng(opts.seed);
  Array out({C, B, kh, kw});
  for (std::size_t b = 0; b < B; ++b) {
    const bool scratch = opts.scratch_infrared && bands[b].center > a.red;
    const Array src = scratch ? num::truncated_normal({C, plane}, opts.scratch_stddev, rng) : per_band[b];
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < plane; ++i) out[(c * B + b) * plane + i] = src[c * plane + i];
  }
  return out;
}

}  // namespace untrack::reconstruct
