// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "untrack/numerics/tape.hpp"

namespace untrack::num {

/// A differentiable function of one array input. Non-scalar outputs are
/// summed before differentiation.
using TapeFunction = std::function<Var(Tape&, const Var& input)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t probed = 0;
};

/// Compares the reverse-mode gradient with central differences.
///
/// Error per coordinate is |analytic - numeric| / max(1, |analytic|); the
/// report holds the maximum. `eps` must lie in [1e-6, 1e-4]. When
/// `max_coords` is non-zero only that many coordinates (chosen with `seed`)
/// are probed.
GradCheckReport grad_check(const TapeFunction& fn, const Array& point, double eps = 1e-5, std::size_t max_coords = 0,
                           std::uint64_t seed = 0);

/// Convenience: the maximum relative error only.
inline double grad_check_error(const TapeFunction& fn, const Array& point, double eps = 1e-5) {
  return grad_check(fn, point, eps).max_rel_error;
}

/// Evaluates fn at `point` and returns the summed scalar value.
double evaluate_scalar(const TapeFunction& fn, const Array& point);

}  // namespace untrack::num
