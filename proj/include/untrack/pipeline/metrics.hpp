// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "untrack/msi/types.hpp"

namespace untrack::pipeline {

inline constexpr std::size_t kOverlapSteps = 21;     // tau = k / 20, k = 0..20
inline constexpr std::size_t kPrecisionSteps = 51;   // 0..50 px
inline constexpr std::size_t kNormPrecisionSteps = 51;  // 0..0.5 in steps of 0.01
inline constexpr double kPrecisionThreshold = 20.0;
inline constexpr double kNormPrecisionThreshold = 0.2;

struct Metrics {
  std::size_t frames = 0;  // evaluated frames
  double auc = 0, sr50 = 0, sr75 = 0, precision = 0, norm_precision = 0;
  std::array<double, kOverlapSteps> success{};
  std::array<double, kPrecisionSteps> precision_curve{};
  std::array<double, kNormPrecisionSteps> norm_precision_curve{};
};

/// One-pass metrics for one sequence. `pred[i]` pairs with `gt[i]`; frames
/// whose ground truth is hidden are skipped. success(tau) counts IoU >= tau;
/// AUC is the sum of the 21 counts over 21 * frames. Throws
/// std::invalid_argument on a length mismatch.
Metrics evaluate_sequence(const std::vector<msi::Box>& pred, const std::vector<msi::Annotation>& gt);

struct SequenceEval {
  std::string name;
  std::set<msi::Attribute> attributes;
  Metrics metrics;
};

struct EvalReport {
  std::vector<SequenceEval> sequences;
  Metrics overall;  // mean over sequences with at least one evaluated frame
  std::map<msi::Attribute, Metrics> by_attribute;
  std::map<msi::Attribute, std::size_t> attribute_counts;
};

/// Average of per-sequence metrics, skipping sequences with no evaluated frame.
Metrics average(const std::vector<const Metrics*>& items);

EvalReport evaluate(std::vector<SequenceEval> sequences);

}  // namespace untrack::pipeline
