// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/pipeline/dataset.hpp"

#include <algorithm>
#include <cstdio>

#include "untrack/msi/collapse.hpp"
#include "untrack/msi/io.hpp"
#include "untrack/numerics/rng.hpp"

namespace untrack::pipeline {

std::vector<msi::MsiSequence> synth_dataset(msi::SceneFamily family, std::size_t count, std::uint64_t seed,
                                            const msi::SceneOptions& opts) {
  std::vector<msi::MsiSequence> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t s = num::derive_seed(seed, i);
    msi::SceneSpec spec = msi::make_scene(family, s, opts);
    char idx[24];
    std::snprintf(idx, sizeof idx, "%03zu", i);
    spec.name = msi::to_string(family) + "_" + idx;
    out.push_back(msi::synth_sequence(spec, num::derive_seed(s, 1)));
  }
  return out;
}

std::vector<msi::MsiSequence> collapse_dataset(const std::vector<msi::MsiSequence>& data) {
  std::vector<msi::MsiSequence> out;
  out.reserve(data.size());
  for (const auto& s : data) out.push_back(msi::collapse_to_rgb(s));
  return out;
}

std::vector<msi::MsiSequence> load_dataset(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) throw msi::DataError("dataset root " + root.string() + " is not a directory");
  std::vector<std::filesystem::path> dirs;
  for (const auto& e : std::filesystem::directory_iterator(root))
    if (e.is_directory() && std::filesystem::exists(e.path() / "meta")) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw msi::DataError("no sequences found under " + root.string());
  std::vector<msi::MsiSequence> out;
  for (const auto& d : dirs) out.push_back(msi::load_sequence(d));
  return out;
}

void save_dataset(const std::vector<msi::MsiSequence>& data, const std::filesystem::path& root) {
  std::filesystem::create_directories(root);
  for (const auto& s : data) msi::save_sequence(s, root / s.name);
}

}  // namespace untrack::pipeline
