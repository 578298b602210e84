// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "untrack/numerics/checkpoint.hpp"
#include "untrack/numerics/grad_check.hpp"
#include "untrack/numerics/ops.hpp"
#include "untrack/numerics/params.hpp"
#include "support/op_cases.hpp"

using namespace untrack::num;

namespace {

Array random_array(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Array a(std::move(shape));
  for (double& v : a.data()) v = u(rng);
  return a;
}

// Weighted sum keeps the upstream gradient non-uniform, which catches
// transposition mistakes a plain sum would hide.
Var weighted(const Var& y, std::uint64_t seed = 99) {
  Tape& t = *y.tape();
  return sum(mul(y, t.constant(random_array(y.shape(), seed))));
}

constexpr double kOpTol = 1e-6;

}  // namespace

TEST_CASE("softmax worked values") {
  Tape t;
  const Var a = softmax(t.constant(Array::matrix({{0.0, 0.0}})));
  CHECK(a.value()[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(a.value()[1] == doctest::Approx(0.5).epsilon(1e-15));

  const Var b = softmax(t.constant(Array::matrix({{0.0, std::log(3.0)}})));
  CHECK(std::abs(b.value()[0] - 0.25) < 1e-15);
  CHECK(std::abs(b.value()[1] - 0.75) < 1e-15);

  const Array v = random_array({3, 5}, 1);
  Array shifted = v;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 5; ++c) shifted.at(r, c) += 17.5 * static_cast<double>(r + 1);
  CHECK(max_abs_diff(softmax(t.constant(v)).value(), softmax(t.constant(shifted)).value()) < 1e-14);
}

TEST_CASE("softmax rows are distributions along either axis") {
  Tape t;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Array x = random_array({4, 7}, seed, -20, 20);
    const Array r = softmax(t.constant(x), 1).value();
    for (std::size_t i = 0; i < 4; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < 7; ++j) {
        CHECK(r.at(i, j) >= 0.0);
        s += r.at(i, j);
      }
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
    const Array c = softmax(t.constant(x), 0).value();
    for (std::size_t j = 0; j < 7; ++j) {
      double s = 0;
      for (std::size_t i = 0; i < 4; ++i) s += c.at(i, j);
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("grad_check on the sum of squares") {
  const auto f = [](Tape&, const Var& x) { return sum(mul(x, x)); };
  Tape t;
  const Var x = t.leaf(Array::vector({1.0, 2.0}));
  t.backward(sum(mul(x, x)));
  CHECK(t.grad(x) == Array::vector({2.0, 4.0}));
  CHECK(grad_check_error(f, Array::vector({1.0, 2.0})) <= 1e-9);
}

TEST_CASE("grad_check rejects eps outside the admissible range") {
  const auto f = [](Tape&, const Var& x) { return sum(x); };
  CHECK_THROWS_AS(grad_check(f, Array::vector({1.0}), 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(grad_check(f, Array::vector({1.0}), 1e-8), std::invalid_argument);
}

TEST_CASE("layer norm invariants") {
  Tape t;
  const Array x = random_array({6, 9}, 5, -3, 3);
  const Var y = layer_norm(t.constant(x), t.constant(Array({9}, 1.0)), t.constant(Array({9}, 0.0)));
  for (std::size_t r = 0; r < 6; ++r) {
    double mean = 0, var = 0;
    for (std::size_t c = 0; c < 9; ++c) mean += y.value().at(r, c);
    mean /= 9;
    for (std::size_t c = 0; c < 9; ++c) var += std::pow(y.value().at(r, c) - mean, 2);
    var /= 9;
    CHECK(std::abs(mean) <= 1e-10);
    // eps = 1e-6 inside the square root shifts the variance by at most eps/var.
    CHECK(std::abs(var - 1.0) <= 1e-6);
  }
}

TEST_CASE("layer norm with negligible eps has unit variance to 1e-8") {
  Tape t;
  const Array x = random_array({3, 16}, 6, -3, 3);
  const Var y = layer_norm(t.constant(x), t.constant(Array({16}, 1.0)), t.constant(Array({16}, 0.0)), 1e-14);
  for (std::size_t r = 0; r < 3; ++r) {
    double mean = 0, var = 0;
    for (std::size_t c = 0; c < 16; ++c) mean += y.value().at(r, c);
    mean /= 16;
    for (std::size_t c = 0; c < 16; ++c) var += std::pow(y.value().at(r, c) - mean, 2);
    CHECK(std::abs(var / 16 - 1.0) <= 1e-8);
  }
}

TEST_CASE("layer norm output does not move under a uniform input shift") {
  const Array x = random_array({1, 8}, 8);
  const Array gamma = random_array({8}, 9);
  const Array beta = random_array({8}, 10);
  // d/ds LN(x + s*1) at s = 0, with s the only input.
  const auto f = [&](Tape& t, const Var& s) {
    const Var shift = matmul(s, t.constant(Array({1, 8}, 1.0)));
    return weighted(layer_norm(add(t.constant(x), shift), t.constant(gamma), t.constant(beta)));
  };
  Tape t;
  const Var s = t.leaf(Array({1, 1}, 0.0));
  t.backward(f(t, s));
  CHECK(std::abs(t.grad(s)[0]) <= 1e-12);

  Tape c;
  const Var flat = layer_norm(c.constant(Array({1, 4}, 2.5)), c.constant(Array({4}, 1.0)), c.constant(Array({4}, 0.0)));
  CHECK(flat.value().max_abs() == 0.0);
}

TEST_CASE("every op passes grad_check") {
  for (const auto& tc : op_cases::all()) {
    CAPTURE(tc.name);
    CHECK(grad_check(tc.fn, tc.point, 1e-5).max_rel_error <= kOpTol);
  }
}

TEST_CASE("ops reject shape mismatches and non-finite results") {
  Tape t;
  CHECK_THROWS_AS(matmul(t.constant(Array({2, 3})), t.constant(Array({2, 3}))), ShapeError);
  CHECK_THROWS_AS(add(t.constant(Array({2, 3})), t.constant(Array({3, 2}))), ShapeError);
  CHECK_THROWS_AS(exp(t.constant(Array::matrix({{1000.0}}))), NumericError);
  CHECK_THROWS_AS(focal_loss(t.constant(Array::matrix({{1.0}})), Array::matrix({{1.0}})), std::exception);
}

TEST_CASE("conv2d maps a constant input to a constant output") {
  Tape t;
  const Var y = conv2d(t.constant(Array({2, 6, 5}, 0.7)), t.constant(random_array({3, 2, 3, 3}, 3)),
                       t.constant(random_array({3}, 4)));
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t i = 0; i < 30; ++i) CHECK(std::abs(y.value()[o * 30 + i] - y.value()[o * 30]) < 1e-14);
}

TEST_CASE("adamw decay-only step") {
  ParamStore p;
  p.add("w", Array::vector({2.0, -4.0}));
  GradStore g{{"w", Array::vector({0.0, 0.0})}};
  OptState s;
  s.config.lr = 0.1;
  s.config.weight_decay = 0.01;
  adamw_step(p, g, s);
  CHECK(p.get("w")[0] == doctest::Approx(2.0 * (1 - 0.001)).epsilon(1e-15));
  CHECK(p.get("w")[1] == doctest::Approx(-4.0 * (1 - 0.001)).epsilon(1e-15));
  CHECK(s.step == 1);
}

TEST_CASE("adamw first step is lr over (1 + eps)") {
  ParamStore p;
  p.add("w", Array::vector({0.0}));
  GradStore g{{"w", Array::vector({1.0})}};
  OptState s;
  s.config.lr = 1e-3;
  s.config.weight_decay = 0.0;
  adamw_step(p, g, s);
  CHECK(std::abs(p.get("w")[0] - (-1e-3 / (1.0 + 1e-8))) < 1e-18);
}

TEST_CASE("adamw converges on a scalar quadratic") {
  ParamStore p;
  p.add("theta", Array::vector({0.0}));
  OptState s;
  s.config.lr = 0.1;
  for (int i = 0; i < 200; ++i) {
    const double th = p.get("theta")[0];
    adamw_step(p, GradStore{{"theta", Array::vector({2.0 * (th - 3.0)})}}, s);
  }
  CHECK(std::abs(p.get("theta")[0] - 3.0) <= 0.05);
}

TEST_CASE("adamw rejects a missing gradient and skips frozen entries") {
  ParamStore p;
  p.add("a", Array::vector({1.0}));
  p.add("b", Array::vector({1.0}), false);
  OptState s;
  CHECK_THROWS_AS(adamw_step(p, GradStore{}, s), std::invalid_argument);
  adamw_step(p, GradStore{{"a", Array::vector({1.0})}}, s);
  CHECK(p.get("b")[0] == 1.0);
}

TEST_CASE("adamw is bit-reproducible") {
  auto run = [] {
    ParamStore p;
    std::mt19937_64 rng(4);
    p.add("w", truncated_normal({5, 3}, 0.02, rng));
    OptState s;
    for (int k = 0; k < 10; ++k) {
      GradStore g{{"w", random_array({5, 3}, static_cast<std::uint64_t>(k))}};
      adamw_step(p, g, s);
    }
    return p;
  };
  CHECK(run() == run());
}

TEST_CASE("param store rejects duplicates and shape changes") {
  ParamStore p;
  p.add("x.y", Array({2}));
  CHECK_THROWS_AS(p.add("x.y", Array({2})), std::invalid_argument);
  CHECK_THROWS_AS(p.set("x.y", Array({3})), ShapeError);
}

TEST_CASE("checkpoint round trip") {
  Checkpoint ck;
  std::mt19937_64 rng(1);
  ck.params.add("embed.proj.weight", truncated_normal({8, 4, 4}, 0.02, rng));
  ck.params.add("head.cls.bias", Array::vector({-2.19}), false);
  ck.metadata["profile"] = "desk";
  const auto dir = std::filesystem::temp_directory_path() / "untrack_ckpt_test";
  std::filesystem::create_directories(dir);
  save_checkpoint(ck, dir / "a.ckpt");
  const Checkpoint back = load_checkpoint(dir / "a.ckpt");
  CHECK(back.params == ck.params);
  CHECK(back.metadata == ck.metadata);

  save_checkpoint(ck, dir / "b.ckpt", DType::f32);
  const Checkpoint f = load_checkpoint(dir / "b.ckpt");
  CHECK(max_abs_diff(f.params.get("embed.proj.weight"), ck.params.get("embed.proj.weight")) < 1e-8);

  std::filesystem::resize_file(dir / "a.ckpt", 40);
  CHECK_THROWS_AS(load_checkpoint(dir / "a.ckpt"), CheckpointError);
  std::filesystem::remove_all(dir);
}
