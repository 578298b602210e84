// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "untrack/numerics/params.hpp"

namespace untrack::num {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

/// Parameters plus free-form string metadata (the model configuration).
struct Checkpoint {
  ParamStore params;
  std::map<std::string, std::string> metadata;
};

/// Writes the container documented in docs/checkpoint.md. f32 storage rounds
/// each element to the nearest float.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path, DType dtype = DType::f64);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace untrack::num
