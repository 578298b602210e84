// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "untrack/msi/types.hpp"

namespace untrack::msi {

enum class ShapeKind { ellipse, rectangle };

/// A flat patch of one material.
struct Blob {
  ShapeKind shape = ShapeKind::ellipse;
  double cx = 0, cy = 0;  // px
  double w = 0, h = 0;    // full extent, px
  std::vector<double> signature;
};

enum class InjectorKind { partial_occlusion, full_occlusion, out_of_view, small_target, camouflage, illumination_drift };

/// A challenge active on frames [first, last] (1-based, inclusive).
/// `strength` means: occluded fraction for partial occlusion, gain amplitude
/// for illumination drift, target side in px for small_target; unused
/// otherwise. small_target and camouflage apply to the whole sequence.
struct Injector {
  InjectorKind kind = InjectorKind::partial_occlusion;
  std::size_t first = 1, last = 1;
  double strength = 0.0;
};

struct Motion {
  double cx = 64, cy = 64;      // start centre, px
  double vx = 1, vy = 0;        // px / frame
  double turn_rate = 0.0;       // rad / frame applied to the velocity heading
  double margin = 4.0;          // the centre reflects off frame edges inset by this plus half the target
};

struct SceneSpec {
  std::string name = "scene";
  std::size_t height = 128, width = 128, frames = 30;
  BandSpec bands = BandSpec::must();
  double fps = 5.0;
  ShapeKind target_shape = ShapeKind::ellipse;
  double target_w = 12, target_h = 12;
  std::vector<double> target_signature;
  std::vector<double> background_signature;
  std::vector<Blob> clutter;
  Motion motion;
  std::vector<Injector> injectors;
  double texture_noise = 0.02;
  /// Material used by occluders; must be set when an occlusion injector is.
  std::vector<double> occluder_signature;
};

/// Renders a deterministic sequence. Ground truth is the pixel extent of the
/// target shape clipped to the frame; hidden frames carry flag 1.
/// Throws DataError for an inconsistent spec.
MsiSequence synth_sequence(const SceneSpec& spec, std::uint64_t seed);

enum class SceneFamily { plain, camouflage, challenge };

struct SceneOptions {
  std::size_t height = 128, width = 128, frames = 30;
  BandSpec bands = BandSpec::must();
  double min_target = 10, max_target = 16;
  double min_speed = 1.0, max_speed = 2.5;
  /// L2 distance between target and background spectra in camouflage scenes.
  double camouflage_gap = 0.4;
};

/// Draws a random scene of the given family.
///   plain: cluttered background, target distinct in every band set.
///   camouflage: uniform background whose RGB collapse equals the target's
///     while the full spectra differ by `camouflage_gap`.
///   challenge: plain scene plus one or two random injectors.
SceneSpec make_scene(SceneFamily family, std::uint64_t seed, const SceneOptions& opts = {});

std::string to_string(SceneFamily f);
SceneFamily parse_family(const std::string& s);

/// Ground-truth box of a shape at a centre, clipped to the frame; nullopt
/// when no pixel centre falls inside.
std::optional<Box> shape_extent(ShapeKind shape, double cx, double cy, double w, double h, std::size_t width,
                                std::size_t height);

}  // namespace untrack::msi
