// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "untrack/msi/synth.hpp"

namespace untrack::pipeline {

/// `count` synthetic sequences of one family; sequence i uses a seed derived
/// from (seed, i) and is named "<family>_<iii>" (zero-padded).
std::vector<msi::MsiSequence> synth_dataset(msi::SceneFamily family, std::size_t count, std::uint64_t seed,
                                            const msi::SceneOptions& opts = {});

/// Every sequence collapsed to three broad RGB bands.
std::vector<msi::MsiSequence> collapse_dataset(const std::vector<msi::MsiSequence>& data);

/// Loads every sequence directory below `root` (sorted by name).
std::vector<msi::MsiSequence> load_dataset(const std::filesystem::path& root);
void save_dataset(const std::vector<msi::MsiSequence>& data, const std::filesystem::path& root);

}  // namespace untrack::pipeline
