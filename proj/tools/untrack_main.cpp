// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

// untrack <command> [--config file] [--seed n] [--set key=value]... [--out dir]

#include <CLI11.hpp>

#include <iostream>

#include "untrack/cli/commands.hpp"
#include "untrack/msi/types.hpp"
#include "untrack/numerics/array.hpp"
#include "untrack/numerics/checkpoint.hpp"
#include "untrack/pipeline/train.hpp"

namespace {

enum Exit { ok = 0, failure = 1, bad_config = 2, missing_file = 3, shape_mismatch = 4, diverged = 5, data_error = 6 };

int fail(int code, const std::string& cls, const std::string& what) {
  std::cerr << "untrack: " << cls << ": " << what << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace untrack;
  CLI::App app{"Multispectral one-stream tracker: synthesis, training, tracking, evaluation and cost accounting"};
  app.require_subcommand(1, 1);
  std::string config_file, out;
  std::vector<std::string> overrides;
  long seed = -1;
  app.add_option("--config", config_file, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed (run.seed)");
  app.add_option("--set", overrides, "override one key, e.g. --set train.lr=1e-4")->allow_extra_args(false);
  app.add_option("--out", out, "output directory (default $UNTRACK_OUT/<command>)");
  app.add_flag_callback(
      "--list-keys",
      [] {
        for (const auto& k : cli::RunConfig::schema()) std::cout << k.key << " = " << k.value << "    " << k.help << "\n";
        std::exit(0);
      },
      "print every configuration key with its default");
  app.fallthrough();
  const std::map<std::string, std::string> help = {
      {"synth", "render synthetic multispectral sequences"},
      {"train", "train a tracker on a dataset directory"},
      {"track", "run a checkpoint over every sequence of a dataset"},
      {"eval", "score track files against ground truth"},
      {"flops", "analytic cost of the attention variants and the search-frame ladder"},
      {"reconstruct", "expand a 3-channel input layer to the multispectral bands"},
      {"plot", "success and precision charts (SVG and CSV) for one or more result sets"},
  };
  for (const auto& name : cli::command_names()) app.add_subcommand(name, help.at(name));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ok : bad_config;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    cli::RunConfig cfg;
    if (!config_file.empty()) cfg.load_file(config_file);
    if (seed >= 0) cfg.set("run.seed", std::to_string(seed));
    for (const auto& o : overrides) cfg.assign(o);
    cli::run_command(command, cfg, cli::output_dir(command, out), std::cout);
    return ok;
  } catch (const cli::ConfigError& e) {
    return fail(bad_config, "bad config", e.what());
  } catch (const cli::MissingFileError& e) {
    return fail(missing_file, "missing file", e.what());
  } catch (const num::ShapeError& e) {
    return fail(shape_mismatch, "shape mismatch", e.what());
  } catch (const pipeline::DivergenceError& e) {
    return fail(diverged, "divergence", e.what());
  } catch (const msi::DataError& e) {
    return fail(data_error, "data error", e.what());
  } catch (const num::CheckpointError& e) {
    return fail(data_error, "data error", e.what());
  } catch (const std::exception& e) {
    return fail(failure, "error", e.what());
  }
}
