// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "untrack/attn/attention.hpp"
#include "untrack/pipeline/flops.hpp"
#include "untrack/pipeline/metrics.hpp"

namespace untrack::pipeline {

void write_eval_text(std::ostream& os, const EvalReport& r);
/// One row per sequence, then "overall" and one row per attribute present.
void write_eval_csv(std::ostream& os, const EvalReport& r);

void write_flops_text(std::ostream& os, const std::string& label, const FlopsBreakdown& f);
void write_flops_csv_header(std::ostream& os);
void write_flops_csv_row(std::ostream& os, const std::string& label, const FlopsBreakdown& f);

/// A named curve set for plotting several trackers on one chart.
struct CurveSeries {
  std::string name;
  Metrics metrics;
};

enum class CurveKind { success, precision, norm_precision };

/// Columns: threshold, then one per series.
void write_curves_csv(std::ostream& os, CurveKind kind, const std::vector<CurveSeries>& series);
/// Line chart; the legend shows AUC (success) or the value at the standard
/// threshold (precision kinds).
void write_curves_svg(std::ostream& os, CurveKind kind, const std::vector<CurveSeries>& series);

/// One 8-bit PGM per search frame of a window, one pixel per token on the
/// search grid: 255 for rows that survive every elimination layer, 0 for rows
/// dropped at the first layer, evenly spaced greys for later layers.
/// Returns the files written.
std::vector<std::filesystem::path> write_elimination_masks(const attn::EliminationTrace& trace, std::size_t grid,
                                                           std::size_t frames, const std::filesystem::path& stem);

}  // namespace untrack::pipeline
