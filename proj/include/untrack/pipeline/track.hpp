// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "untrack/attn/attention.hpp"
#include "untrack/pipeline/model.hpp"

namespace untrack::pipeline {

struct FrameResult {
  std::size_t frame = 0;  // 0-based index into the sequence
  msi::Box box;
  double confidence = 0;
  msi::CropMapping mapping;  // of the latest search crop
  attn::EliminationTrace trace;
  num::Array prompt;         // prompt used for this frame
  bool prompt_rejected = false;
};

/// Frames 2..T of one sequence (frame 1 provides the template).
struct TrackResult {
  std::string sequence;
  std::vector<FrameResult> frames;

  std::vector<msi::Box> boxes() const;
};

struct TrackOptions {
  bool keep_traces = true;
};

/// Sliding-window tracking: the template comes from frame 1, each frame t
/// uses frames t-N+1..t (clamped at frame 1) cropped around the previous
/// prediction. Deterministic for fixed parameters and sequence.
TrackResult track(const num::ParamStore& params, const ModelConfig& cfg, const msi::MsiSequence& seq,
                  const TrackOptions& opts = {});

/// One line per frame: index, box (x y w h), confidence.
void write_track(const TrackResult& r, const std::filesystem::path& file);
TrackResult read_track(const std::filesystem::path& file);

}  // namespace untrack::pipeline
