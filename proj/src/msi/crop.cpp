// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/msi/crop.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace untrack::msi {

Box CropMapping::to_frame(const Box& b) const noexcept {
  return Box{to_frame_x(b.x), to_frame_y(b.y), b.w / scale, b.h / scale};
}

Box CropMapping::to_patch(const Box& b) const noexcept {
  return Box{to_patch_x(b.x), to_patch_y(b.y), b.w * scale, b.h * scale};
}

bool Crop::any_padding() const {
  return std::any_of(pad_mask.begin(), pad_mask.end(), [](std::uint8_t v) { return v != 0; });
}

Crop crop_resize(const MsiFrame& frame, const Box& box, double area_factor, std::size_t out_size) {
  if (!(box.w > 0 && box.h > 0)) throw DataError("crop_resize: degenerate box");
  if (!(area_factor > 0)) throw std::invalid_argument("crop_resize: area_factor must be positive");
  if (out_size == 0) throw std::invalid_argument("crop_resize: out_size must be positive");
  if (frame.height() == 0 || frame.width() == 0) throw DataError("crop_resize: empty frame");

  const double side = area_factor * std::sqrt(box.w * box.h);
  Crop crop;
  crop.region = Box{box.cx() - 0.5 * side, box.cy() - 0.5 * side, side, side};
  crop.mapping = CropMapping{crop.region.x, crop.region.y, static_cast<double>(out_size) / side};
  crop.patch = MsiFrame(out_size, out_size, frame.bands());
  crop.pad_mask.assign(out_size * out_size, 0);

  const auto H = static_cast<long>(frame.height());
  const auto W = static_cast<long>(frame.width());
  const std::size_t B = frame.bands();

  // Source taps and weights per output column/row are shared across bands.
  struct Tap {
    long i0, i1;
    double w1;
    bool outside;
  };
  auto taps = [&](double origin, long extent) {
    std::vector<Tap> out(out_size);
    for (std::size_t k = 0; k < out_size; ++k) {
      const double f = origin + (static_cast<double>(k) + 0.5) / crop.mapping.scale;
      Tap t{};
      t.outside = f < 0.0 || f >= static_cast<double>(extent);
      const double u = std::clamp(f - 0.5, 0.0, static_cast<double>(extent - 1));
      t.i0 = static_cast<long>(std::floor(u));
      t.i1 = std::min(t.i0 + 1, extent - 1);
      t.w1 = u - static_cast<double>(t.i0);
      out[k] = t;
    }
    return out;
  };
  const std::vector<Tap> xs = taps(crop.mapping.x0, W);
  const std::vector<Tap> ys = taps(crop.mapping.y0, H);

  std::size_t inside = 0;
  for (std::size_t r = 0; r < out_size; ++r)
    for (std::size_t c = 0; c < out_size; ++c) {
      const bool pad = ys[r].outside || xs[c].outside;
      crop.pad_mask[r * out_size + c] = pad ? 1 : 0;
      inside += pad ? 0 : 1;
    }

  for (std::size_t b = 0; b < B; ++b) {
    double acc = 0.0;
    for (std::size_t r = 0; r < out_size; ++r) {
      const Tap& ty = ys[r];
      for (std::size_t c = 0; c < out_size; ++c) {
        if (crop.pad_mask[r * out_size + c]) continue;
        const Tap& tx = xs[c];
        const double v00 = frame.at(b, static_cast<std::size_t>(ty.i0), static_cast<std::size_t>(tx.i0));
        const double v01 = frame.at(b, static_cast<std::size_t>(ty.i0), static_cast<std::size_t>(tx.i1));
        const double v10 = frame.at(b, static_cast<std::size_t>(ty.i1), static_cast<std::size_t>(tx.i0));
        const double v11 = frame.at(b, static_cast<std::size_t>(ty.i1), static_cast<std::size_t>(tx.i1));
        const double top = v00 + tx.w1 * (v01 - v00);
        const double bot = v10 + tx.w1 * (v11 - v10);
        const double v = top + ty.w1 * (bot - top);
        crop.patch.at(b, r, c) = static_cast<float>(v);
        acc += v;
      }
    }
    double fill;
    if (inside > 0) {
      fill = acc / static_cast<double>(inside);
    } else {
      // The crop misses the frame entirely; fall back to the frame mean.
      double s = 0;
      for (std::size_t i = 0; i < frame.plane(); ++i) s += frame.data()[b * frame.plane() + i];
      fill = s / static_cast<double>(frame.plane());
    }
    for (std::size_t i = 0; i < out_size * out_size; ++i) {
      if (crop.pad_mask[i]) crop.patch.data()[b * out_size * out_size + i] = static_cast<float>(fill);
    }
  }
  return crop;
}

Crop crop_resize(const MsiFrame& frame, const Annotation& anno, double area_factor, std::size_t out_size) {
  if (!anno.visible()) throw DataError("crop_resize: annotation is flagged as hidden");
  return crop_resize(frame, anno.box, area_factor, out_size);
}

}  // namespace untrack::msi
