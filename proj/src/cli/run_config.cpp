// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/cli/run_config.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace untrack::cli {

const std::vector<KeySpec>& RunConfig::schema() {
  static const std::vector<KeySpec> keys = {
      {"run.command", "", "subcommand this configuration was resolved for"},
      {"run.seed", "0", "master seed"},
      {"data.root", "", "dataset directory (one sub-directory per sequence)"},
      {"data.family", "plain", "scene families for synth: plain, camouflage, challenge (comma separated)"},
      {"data.count", "10", "sequences per family"},
      {"data.frames", "30", "frames per sequence"},
      {"data.height", "128", "frame height in px"},
      {"data.width", "128", "frame width in px"},
      {"data.camouflage_gap", "0.4", "spectral L2 gap between target and background in camouflage scenes"},
      {"data.rgb", "false", "collapse to three broad bands"},
      {"model.profile", "desk", "desk or paper"},
      {"model.bands", "8", "input bands"},
      {"model.search_frames", "2", "search frames per window"},
      {"model.prompt", "encoder", "none, random_frozen, passthrough or encoder"},
      {"model.attention", "asymmetric", "asymmetric or full"},
      {"model.eliminate", "true", "background elimination at inference and in training"},
      {"model.rho_end", "0.7", "keep ratio at the end of the schedule"},
      {"train.epochs", "10", ""},
      {"train.steps_per_epoch", "200", ""},
      {"train.decay_epoch", "6", "epoch from which the learning rate is scaled"},
      {"train.decay_factor", "0.1", ""},
      {"train.lr", "5e-4", ""},
      {"train.weight_decay", "1e-4", ""},
      {"train.batch", "2", "samples per step"},
      {"train.unroll", "2", "consecutive windows per sample, chained through the prompt"},
      {"train.center_jitter", "0.1", "fraction of the crop side"},
      {"train.scale_jitter", "0.1", "log-scale half-width"},
      {"train.rho_start", "1.0", "keep ratio at step 0"},
      {"train.init", "", "checkpoint to start from"},
      {"track.checkpoint", "", "trained checkpoint"},
      {"track.masks", "false", "write elimination masks as PGM images"},
      {"eval.results", "", "directory of per-sequence track files"},
      {"plot.results", "", "name=directory pairs, comma separated"},
      {"flops.rho", "0.7", "keep ratio for the elimination rows"},
      {"flops.max_frames", "5", "largest search-frame count in the ladder"},
      {"reconstruct.checkpoint", "", "checkpoint holding a 3-channel input layer"},
      {"reconstruct.param", "embed.proj.weight", "parameter to expand"},
      {"reconstruct.scratch_infrared", "false", "fresh weights for bands past the red anchor"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& k : schema()) values_[k.key] = k.value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
  it->second = value;
}

void RunConfig::assign(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got '" + assignment + "'");
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::load(std::istream& is, const std::string& origin) {
  CLI::ConfigINI parser;
  parser.comment('#');
  std::vector<CLI::ConfigItem> items;
  try {
    items = parser.from_config(is);
  } catch (const CLI::Error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    std::string value;
    for (const auto& in : item.inputs) value += (value.empty() ? "" : " ") + in;
    try {
      set(item.fullname(), value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw MissingFileError("config file '" + file.string() + "' not found");
  load(is, file.string());
}

const std::string& RunConfig::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
  return it->second;
}

long RunConfig::integer(const std::string& key) const {
  const std::string& s = str(key);
  long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError(key + ": expected an integer, got '" + s + "'");
  return v;
}

std::size_t RunConfig::count(const std::string& key) const {
  const long v = integer(key);
  if (v < 0) throw ConfigError(key + ": must be non-negative");
  return static_cast<std::size_t>(v);
}

double RunConfig::real(const std::string& key) const {
  const std::string& s = str(key);
  double v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError(key + ": expected a number, got '" + s + "'");
  return v;
}

bool RunConfig::flag(const std::string& key) const {
  const std::string& s = str(key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + s + "'");
}

std::vector<std::string> RunConfig::list(const std::string& key) const {
  std::string s = str(key);
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string item; is >> item;) out.push_back(item);
  return out;
}

std::filesystem::path RunConfig::path(const std::string& key) const { return std::filesystem::path(str(key)); }

void RunConfig::write(std::ostream& os) const {
  std::string section;
  for (const auto& k : schema()) {
    const auto dot = k.key.find('.');
    const std::string sec = k.key.substr(0, dot), name = k.key.substr(dot + 1);
    if (sec != section) {
      os << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
      section = sec;
    }
    if (!k.help.empty()) os << "# " << k.help << '\n';
    const std::string& v = values_.at(k.key);
    os << name << " = \"" << v << "\"\n";
  }
}

pipeline::ModelConfig model_config(const RunConfig& cfg) {
  const std::string& profile = cfg.str("model.profile");
  pipeline::ModelConfig m;
  if (profile == "desk") {
    m = pipeline::ModelConfig::desk();
  } else if (profile == "paper") {
    m = pipeline::ModelConfig::paper();
  } else {
    throw ConfigError("model.profile: expected desk or paper, got '" + profile + "'");
  }
  m.embed.bands = cfg.count("model.bands");
  m.embed.search_frames = cfg.count("model.search_frames");
  try {
    m.prompt_mode = prompt::parse_prompt_mode(cfg.str("model.prompt"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model.prompt: ") + e.what());
  }
  const std::string& attn = cfg.str("model.attention");
  if (attn == "asymmetric") {
    m.attn_mode = attn::AttnMode::asymmetric;
  } else if (attn == "full") {
    m.attn_mode = attn::AttnMode::full;
  } else {
    throw ConfigError("model.attention: expected asymmetric or full, got '" + attn + "'");
  }
  m.eliminate = cfg.flag("model.eliminate");
  m.attn.rho_end = cfg.real("model.rho_end");
  m.embed.prompt_len = 1;
  m.sync();
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return m;
}

pipeline::TrainConfig train_config(const RunConfig& cfg) {
  pipeline::TrainConfig t;
  t.epochs = cfg.count("train.epochs");
  t.steps_per_epoch = cfg.count("train.steps_per_epoch");
  t.decay_epoch = cfg.count("train.decay_epoch");
  t.decay_factor = cfg.real("train.decay_factor");
  t.lr = cfg.real("train.lr");
  t.weight_decay = cfg.real("train.weight_decay");
  t.batch = cfg.count("train.batch");
  t.unroll = cfg.count("train.unroll");
  t.center_jitter = cfg.real("train.center_jitter");
  t.scale_jitter = cfg.real("train.scale_jitter");
  t.rho_start = cfg.real("train.rho_start");
  t.seed = static_cast<std::uint64_t>(cfg.integer("run.seed"));
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return t;
}

msi::SceneOptions scene_options(const RunConfig& cfg) {
  msi::SceneOptions o;
  o.frames = cfg.count("data.frames");
  o.height = cfg.count("data.height");
  o.width = cfg.count("data.width");
  o.camouflage_gap = cfg.real("data.camouflage_gap");
  if (o.frames < 2 || o.height < 16 || o.width < 16) throw ConfigError("data: need at least 2 frames of 16x16 px");
  return o;
}

std::map<std::string, std::string> model_metadata(const RunConfig& cfg) {
  std::map<std::string, std::string> meta;
  for (const auto& k : RunConfig::schema())
    if (k.key.rfind("model.", 0) == 0) meta[k.key] = cfg.str(k.key);
  return meta;
}

void apply_model_metadata(RunConfig& cfg, const std::map<std::string, std::string>& meta) {
  for (const auto& [k, v] : meta)
    if (k.rfind("model.", 0) == 0) cfg.set(k, v);
}

}  // namespace untrack::cli
