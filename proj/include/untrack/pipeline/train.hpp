// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "untrack/head/head.hpp"
#include "untrack/msi/types.hpp"
#include "untrack/numerics/params.hpp"
#include "untrack/pipeline/model.hpp"

namespace untrack::pipeline {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t steps_per_epoch = 100;
  std::size_t decay_epoch = 6;   // lr is multiplied by decay_factor from this epoch on
  double decay_factor = 0.1;
  double lr = 5e-4;
  double weight_decay = 1e-4;
  std::size_t batch = 2;         // samples per optimizer step
  std::size_t unroll = 2;        // consecutive windows per sample, chained through the prompt
  double center_jitter = 0.1;    // of the crop side, uniform
  double scale_jitter = 0.1;     // log-uniform half-width on the reference box size
  double rho_start = 1.0;
  head::LossWeights loss;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> dump_dir;  // state written here on divergence

  std::size_t total_steps() const noexcept { return epochs * steps_per_epoch; }
  double lr_at(std::size_t step) const;
  void validate() const;
};

/// Raised when the loss stops being finite; the message names the step.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One window of a training sample: N consecutive search crops.
struct Window {
  std::vector<num::Array> search;
  std::vector<head::Target> targets;
};

struct Sample {
  std::size_t sequence = 0;
  std::size_t template_frame = 0;
  std::size_t first_search = 0;
  num::Array templ;
  std::vector<Window> windows;
};

/// Draws one sample with its own generator state.
Sample draw_sample(const ModelConfig& model, const TrainConfig& cfg, const std::vector<msi::MsiSequence>& data,
                   std::mt19937_64& rng);

struct SampleLoss {
  num::Var total;
  double cls = 0, l1 = 0, giou = 0;
};
/// Runs the windows in order, feeding each window's prompt to the next, and
/// averages the per-frame losses.
SampleLoss sample_loss(num::Binding& bind, const ModelConfig& model, const Sample& s, const head::LossWeights& w,
                       std::optional<double> rho);

struct StepRecord {
  std::size_t step = 0;
  double loss = 0, cls = 0, l1 = 0, giou = 0, rho = 1, lr = 0;
};

struct TrainResult {
  num::ParamStore params;
  std::vector<StepRecord> log;
  /// Mean loss over each epoch.
  std::vector<double> epoch_loss;
};

using StepCallback = std::function<void(const StepRecord&)>;

/// Deterministic for a fixed (model, cfg, data). Throws std::invalid_argument
/// on an empty dataset and DivergenceError on a non-finite loss.
TrainResult train(const ModelConfig& model, const TrainConfig& cfg, const std::vector<msi::MsiSequence>& data,
                  std::optional<num::ParamStore> init = std::nullopt, const StepCallback& on_step = {});

}  // namespace untrack::pipeline
