// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

// Gradient-check cases covering every differentiable op, shared by the unit
// suite and the acceptance runner.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "untrack/numerics/grad_check.hpp"
#include "untrack/numerics/ops.hpp"

namespace op_cases {

using namespace untrack::num;

inline Array random_array(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Array a(std::move(shape));
  for (double& v : a.data()) v = u(rng);
  return a;
}

// Weighted sum keeps the upstream gradient non-uniform, which catches
// transposition mistakes a plain sum would hide.
inline Var weighted(const Var& y, std::uint64_t seed = 99) {
  Tape& t = *y.tape();
  return sum(mul(y, t.constant(random_array(y.shape(), seed))));
}

struct Case {
  const char* name;
  TapeFunction fn;
  Array point;
};

inline std::vector<Case> all() {
  const Array a = random_array({3, 4}, 11);
  const Array b = random_array({4, 5}, 12);
  const Array c = random_array({3, 4}, 13);
  const Array bias = random_array({4}, 14);

  return {
      {"matmul.lhs", [=](Tape& t, const Var& x) { return weighted(matmul(x, t.constant(b))); }, a},
      {"matmul.rhs", [=](Tape& t, const Var& x) { return weighted(matmul(t.constant(a), x)); }, b},
      {"matmul_nt.lhs", [=](Tape& t, const Var& x) { return weighted(matmul_nt(x, t.constant(c))); }, a},
      {"matmul_nt.rhs", [=](Tape& t, const Var& x) { return weighted(matmul_nt(t.constant(a), x)); }, c},
      {"transpose", [=](Tape&, const Var& x) { return weighted(transpose(x)); }, a},
      {"add", [=](Tape& t, const Var& x) { return weighted(add(x, t.constant(c))); }, a},
      {"sub.rhs", [=](Tape& t, const Var& x) { return weighted(sub(t.constant(c), x)); }, a},
      {"mul", [=](Tape& t, const Var& x) { return weighted(mul(x, t.constant(c))); }, a},
      {"mul.self", [=](Tape&, const Var& x) { return weighted(mul(x, x)); }, a},
      {"scale", [=](Tape&, const Var& x) { return weighted(scale(x, -2.5)); }, a},
      {"add_scalar", [=](Tape&, const Var& x) { return weighted(add_scalar(x, 3.0)); }, a},
      {"add_bias.x", [=](Tape& t, const Var& x) { return weighted(add_bias(x, t.constant(bias))); }, a},
      {"add_bias.b", [=](Tape& t, const Var& x) { return weighted(add_bias(t.constant(a), x)); }, bias},
      {"gelu", [=](Tape&, const Var& x) { return weighted(gelu(x)); }, random_array({3, 4}, 15, -3, 3)},
      {"exp", [=](Tape&, const Var& x) { return weighted(exp(x)); }, a},
      {"sigmoid", [=](Tape&, const Var& x) { return weighted(sigmoid(x)); }, random_array({3, 4}, 16, -4, 4)},
      {"clamp", [=](Tape&, const Var& x) { return weighted(clamp(x, -0.5, 0.5)); }, Array::matrix({{-0.9, -0.2, 0.1, 0.7}})},
      {"softmax.rows", [=](Tape&, const Var& x) { return weighted(softmax(x, 1)); }, a},
      {"softmax.cols", [=](Tape&, const Var& x) { return weighted(softmax(x, 0)); }, a},
      {"masked_softmax",
       [=](Tape&, const Var& x) {
         Array m({3, 4}, 0.0);
         m.at(0, 1) = -INFINITY;
         m.at(2, 0) = -INFINITY;
         m.at(2, 3) = -INFINITY;
         return weighted(masked_softmax(x, m));
       },
       a},
      {"layer_norm.x",
       [=](Tape& t, const Var& x) {
         return weighted(layer_norm(x, t.constant(random_array({4}, 17)), t.constant(random_array({4}, 18))));
       },
       a},
      {"layer_norm.gamma",
       [=](Tape& t, const Var& x) { return weighted(layer_norm(t.constant(a), x, t.constant(bias))); },
       random_array({4}, 19)},
      {"layer_norm.beta",
       [=](Tape& t, const Var& x) { return weighted(layer_norm(t.constant(a), t.constant(bias), x)); },
       random_array({4}, 20)},
      {"conv2d.x",
       [=](Tape& t, const Var& x) {
         return weighted(conv2d(x, t.constant(random_array({3, 2, 3, 3}, 21)), t.constant(random_array({3}, 22))));
       },
       random_array({2, 5, 4}, 23)},
      {"conv2d.w",
       [=](Tape& t, const Var& x) {
         return weighted(conv2d(t.constant(random_array({2, 5, 4}, 23)), x, t.constant(random_array({3}, 22))));
       },
       random_array({3, 2, 3, 3}, 21)},
      {"conv2d.b",
       [=](Tape& t, const Var& x) {
         return weighted(conv2d(t.constant(random_array({2, 5, 4}, 23)), t.constant(random_array({3, 2, 3, 3}, 21)), x));
       },
       random_array({3}, 22)},
      {"avg_pool.0", [=](Tape&, const Var& x) { return weighted(avg_pool(x, 0)); }, a},
      {"avg_pool.1", [=](Tape&, const Var& x) { return weighted(avg_pool(x, 1)); }, a},
      {"row_norm", [=](Tape&, const Var& x) { return weighted(row_norm(x)); }, a},
      {"sum", [=](Tape&, const Var& x) { return sum(x); }, a},
      {"mean", [=](Tape&, const Var& x) { return mean(x); }, a},
      {"reshape", [=](Tape&, const Var& x) { return weighted(reshape(x, {2, 6})); }, a},
      {"concat.0", [=](Tape& t, const Var& x) { return weighted(concat({x, t.constant(c), x}, 0)); }, a},
      {"concat.1", [=](Tape& t, const Var& x) { return weighted(concat({t.constant(c), x}, 1)); }, a},
      {"gather_rows", [=](Tape&, const Var& x) { return weighted(gather_rows(x, {2, 0, 2, 1})); }, a},
      {"slice_rows", [=](Tape&, const Var& x) { return weighted(slice_rows(x, 1, 3)); }, a},
      {"slice_cols", [=](Tape&, const Var& x) { return weighted(slice_cols(x, 1, 3)); }, a},
      {"focal_loss",
       [=](Tape&, const Var& x) {
         return focal_loss(x, Array::matrix({{0.0, 0.3, 1.0}, {0.9, 0.1, 0.0}}));
       },
       Array::matrix({{0.2, 0.4, 0.6}, {0.7, 0.35, 0.05}})},
      {"l1_loss", [=](Tape&, const Var& x) { return l1_loss(x, c); }, a},
      {"giou_loss.overlap", [=](Tape&, const Var& x) { return giou_loss(x, Array::vector({0.1, 0.2, 1.4, 1.1})); },
       Array::vector({0.0, 0.0, 1.0, 1.3})},
      {"giou_loss.disjoint", [=](Tape&, const Var& x) { return giou_loss(x, Array::vector({2.0, 2.5, 3.0, 3.1})); },
       Array::vector({0.0, 0.0, 1.0, 1.3})},
  };
}

}  // namespace op_cases
