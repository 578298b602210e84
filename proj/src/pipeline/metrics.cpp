// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/pipeline/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace untrack::pipeline {

Metrics evaluate_sequence(const std::vector<msi::Box>& pred, const std::vector<msi::Annotation>& gt) {
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("evaluate: " + std::to_string(pred.size()) + " predictions for " +
                                std::to_string(gt.size()) + " ground-truth frames");
  }
  std::array<std::size_t, kOverlapSteps> hits{};
  std::array<std::size_t, kPrecisionSteps> near{};
  std::array<std::size_t, kNormPrecisionSteps> near_norm{};
  std::size_t n = 0, pre = 0, pre_norm = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!gt[i].visible()) continue;
    ++n;
    const msi::Box& g = gt[i].box;
    const double o = msi::iou(pred[i], g);
    for (std::size_t k = 0; k < kOverlapSteps; ++k) hits[k] += o >= static_cast<double>(k) / 20.0 ? 1 : 0;
    const double err = std::hypot(pred[i].cx() - g.cx(), pred[i].cy() - g.cy());
    const double nerr = err / std::hypot(g.w, g.h);
    pre += err <= kPrecisionThreshold ? 1 : 0;
    pre_norm += nerr <= kNormPrecisionThreshold ? 1 : 0;
    for (std::size_t k = 0; k < kPrecisionSteps; ++k) near[k] += err <= static_cast<double>(k) ? 1 : 0;
    for (std::size_t k = 0; k < kNormPrecisionSteps; ++k) near_norm[k] += nerr <= static_cast<double>(k) / 100.0 ? 1 : 0;
  }
  Metrics m;
  m.frames = n;
  if (n == 0) return m;
  const double dn = static_cast<double>(n);
  std::size_t total = 0;
  for (std::size_t k = 0; k < kOverlapSteps; ++k) {
    m.success[k] = static_cast<double>(hits[k]) / dn;
    total += hits[k];
  }
  for (std::size_t k = 0; k < kPrecisionSteps; ++k) m.precision_curve[k] = static_cast<double>(near[k]) / dn;
  for (std::size_t k = 0; k < kNormPrecisionSteps; ++k) m.norm_precision_curve[k] = static_cast<double>(near_norm[k]) / dn;
  m.auc = static_cast<double>(total) / (static_cast<double>(kOverlapSteps) * dn);
  m.sr50 = m.success[10];
  m.sr75 = m.success[15];
  m.precision = static_cast<double>(pre) / dn;
  m.norm_precision = static_cast<double>(pre_norm) / dn;
  return m;
}

Metrics average(const std::vector<const Metrics*>& items) {
  Metrics out;
  std::size_t used = 0;
  for (const Metrics* m : items) {
    if (m->frames == 0) continue;
    ++used;
    out.frames += m->frames;
    out.auc += m->auc;
    out.sr50 += m->sr50;
    out.sr75 += m->sr75;
    out.precision += m->precision;
    out.norm_precision += m->norm_precision;
    for (std::size_t k = 0; k < kOverlapSteps; ++k) out.success[k] += m->success[k];
    for (std::size_t k = 0; k < kPrecisionSteps; ++k) out.precision_curve[k] += m->precision_curve[k];
    for (std::size_t k = 0; k < kNormPrecisionSteps; ++k) out.norm_precision_curve[k] += m->norm_precision_curve[k];
  }
  if (used == 0) return out;
  const double inv = static_cast<double>(used);
  out.auc /= inv;
  out.sr50 /= inv;
  out.sr75 /= inv;
  out.precision /= inv;
  out.norm_precision /= inv;
  for (double& v : out.success) v /= inv;
  for (double& v : out.precision_curve) v /= inv;
  for (double& v : out.norm_precision_curve) v /= inv;
  return out;
}

EvalReport evaluate(std::vector<SequenceEval> sequences) {
  EvalReport r;
  r.sequences = std::move(sequences);
  std::vector<const Metrics*> all;
  std::map<msi::Attribute, std::vector<const Metrics*>> groups;
  for (const auto& s : r.sequences) {
    all.push_back(&s.metrics);
    for (msi::Attribute a : s.attributes) groups[a].push_back(&s.metrics);
  }
  r.overall = average(all);
  for (const auto& [a, items] : groups) {
    r.by_attribute[a] = average(items);
    r.attribute_counts[a] = items.size();
  }
  return r;
}

}  // namespace untrack::pipeline
