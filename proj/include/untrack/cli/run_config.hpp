// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "untrack/msi/synth.hpp"
#include "untrack/pipeline/model.hpp"
#include "untrack/pipeline/train.hpp"

namespace untrack::cli {

/// Unknown key, malformed value or an inconsistent combination.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A referenced input path does not exist.
class MissingFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KeySpec {
  std::string key;  // "section.name"
  std::string value;
  std::string help;
};

/// Flat `section.key -> value` settings. Every key has a default; files and
/// overrides may only touch known keys.
class RunConfig {
 public:
  RunConfig();

  static const std::vector<KeySpec>& schema();

  /// INI text with [section] headers and `key = value` lines; '#' starts a comment.
  void load(std::istream& is, const std::string& origin = "config");
  void load_file(const std::filesystem::path& file);
  /// "section.key=value".
  void assign(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  const std::string& str(const std::string& key) const;
  long integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;  // non-negative integer
  double real(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<std::string> list(const std::string& key) const;  // comma or space separated
  std::filesystem::path path(const std::string& key) const;      // empty value -> empty path

  /// Writes every key, grouped by section, in a form `load` accepts.
  void write(std::ostream& os) const;

 private:
  std::map<std::string, std::string> values_;
};

/// Model built from the model.* keys (profile first, then overrides).
pipeline::ModelConfig model_config(const RunConfig& cfg);
pipeline::TrainConfig train_config(const RunConfig& cfg);
msi::SceneOptions scene_options(const RunConfig& cfg);

/// model.* keys as checkpoint metadata, and back.
std::map<std::string, std::string> model_metadata(const RunConfig& cfg);
void apply_model_metadata(RunConfig& cfg, const std::map<std::string, std::string>& meta);

}  // namespace untrack::cli
