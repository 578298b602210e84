// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "untrack/msi/types.hpp"

namespace untrack::msi {

/// Affine map from patch pixel coordinates to frame coordinates:
/// frame = origin + patch / scale (isotropic).
struct CropMapping {
  double x0 = 0, y0 = 0;  // frame-space upper-left corner of the crop
  double scale = 1;       // patch pixels per frame pixel

  double to_frame_x(double px) const noexcept { return x0 + px / scale; }
  double to_frame_y(double py) const noexcept { return y0 + py / scale; }
  double to_patch_x(double fx) const noexcept { return (fx - x0) * scale; }
  double to_patch_y(double fy) const noexcept { return (fy - y0) * scale; }
  Box to_frame(const Box& patch_box) const noexcept;
  Box to_patch(const Box& frame_box) const noexcept;

  static CropMapping identity() { return {}; }
};

struct Crop {
  MsiFrame patch;
  /// Frame-space square that was sampled.
  Box region;
  CropMapping mapping;
  /// One byte per output pixel (row-major); 1 where the sample fell outside
  /// the frame and holds the padding value.
  std::vector<std::uint8_t> pad_mask;

  bool any_padding() const;
};

/// Square crop of side area_factor * sqrt(w*h) centred on `box`, bilinearly
/// resampled to out_size x out_size. Samples outside the frame take the
/// per-band mean of the in-frame samples.
Crop crop_resize(const MsiFrame& frame, const Box& box, double area_factor, std::size_t out_size);
/// As above; rejects hidden annotations.
Crop crop_resize(const MsiFrame& frame, const Annotation& anno, double area_factor, std::size_t out_size);

}  // namespace untrack::msi
