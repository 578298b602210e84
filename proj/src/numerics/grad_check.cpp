// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "untrack/numerics/ops.hpp"

namespace untrack::num {

namespace {

Var scalarize(const Var& y) { return y.value().size() == 1 ? y : sum(y); }

}  // namespace

double evaluate_scalar(const TapeFunction& fn, const Array& point) {
  Tape tape;
  const Var out = scalarize(fn(tape, tape.constant(point)));
  const double v = out.value()[0];
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite function value");
  return v;
}

GradCheckReport grad_check(const TapeFunction& fn, const Array& point, double eps, std::size_t max_coords,
                           std::uint64_t seed) {
  if (!(eps >= 1e-6 && eps <= 1e-4)) throw std::invalid_argument("grad_check: eps must lie in [1e-6, 1e-4]");
  Array analytic;
  {
    Tape tape;
    const Var x = tape.leaf(point);
    const Var out = scalarize(fn(tape, x));
    tape.backward(out);
    analytic = tape.grad(x);
  }
  std::vector<std::size_t> coords(point.size());
  std::iota(coords.begin(), coords.end(), 0);
  if (max_coords != 0 && max_coords < coords.size()) {
    std::mt19937_64 rng(seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(max_coords);
    std::sort(coords.begin(), coords.end());
  }
  GradCheckReport report;
  Array probe = point;
  for (std::size_t i : coords) {
    const double saved = probe[i];
    probe[i] = saved + eps;
    const double up = evaluate_scalar(fn, probe);
    probe[i] = saved - eps;
    const double down = evaluate_scalar(fn, probe);
    probe[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    if (report.probed == 0 || err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_index = i;
    }
    ++report.probed;
  }
  return report;
}

}  // namespace untrack::num
