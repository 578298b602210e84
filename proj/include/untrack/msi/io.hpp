// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "untrack/msi/types.hpp"

namespace untrack::msi {

/// Sequence directory layout (see docs/formats.md):
///   meta                 key = value header with the band table
///   frame_000001.f32 ... band-major little-endian float32 planes
///   groundtruth.txt      one `x,y,w,h,flag` line per frame
void save_sequence(const MsiSequence& seq, const std::filesystem::path& dir);
MsiSequence load_sequence(const std::filesystem::path& dir);

/// Header only (no frame payloads).
struct SequenceHeader {
  std::string name;
  std::size_t height = 0, width = 0, frames = 0;
  double fps = 0;
  BandSpec bands;
  std::set<Attribute> attributes;
};
SequenceHeader load_header(const std::filesystem::path& dir);

std::vector<Annotation> read_groundtruth(const std::filesystem::path& file);
void write_groundtruth(const std::vector<Annotation>& annos, const std::filesystem::path& file);

/// Formats a double with the shortest text that parses back to the same value.
std::string format_exact(double v);

}  // namespace untrack::msi
