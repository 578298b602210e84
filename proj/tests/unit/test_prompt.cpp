// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "untrack/numerics/grad_check.hpp"
#include "untrack/numerics/ops.hpp"
#include "untrack/numerics/params.hpp"
#include "untrack/prompt/prompt_encoder.hpp"

using namespace untrack;
using num::Array;
using prompt::PromptMode;

namespace {

Array random_rows(std::size_t n, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Array a({n, c});
  for (double& v : a.data()) v = g(rng);
  return a;
}

num::ParamStore encoder_params(std::size_t C, std::uint64_t seed, double boost = 0.3) {
  num::ParamStore p;
  std::mt19937_64 rng(seed);
  prompt::EncoderConfig cfg;
  cfg.channels = C;
  prompt::init_prompt_params(p, cfg, PromptMode::encoder, rng);
  std::normal_distribution<double> g(0.0, boost);
  for (const std::string& n : p.names()) {
    Array v = p.get(n);
    for (double& x : v.data()) x += g(rng);
    p.set(n, v);
  }
  return p;
}

std::vector<double> dense(const std::vector<double>& x, const Array& w, const Array& b) {
  std::vector<double> y(w.cols());
  for (std::size_t j = 0; j < w.cols(); ++j) {
    y[j] = b[j];
    for (std::size_t i = 0; i < x.size(); ++i) y[j] += x[i] * w.at(i, j);
  }
  return y;
}

double gelu(double v) { return 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))); }

}  // namespace

TEST_CASE("prompt modes parse and print") {
  for (PromptMode m : {PromptMode::none, PromptMode::random_frozen, PromptMode::passthrough, PromptMode::encoder})
    CHECK(prompt::parse_prompt_mode(prompt::to_string(m)) == m);
  CHECK_THROWS_AS(prompt::parse_prompt_mode("bogus"), std::invalid_argument);
}

TEST_CASE("parameter sets per mode") {
  prompt::EncoderConfig cfg;
  auto count = [&](PromptMode m) {
    num::ParamStore p;
    std::mt19937_64 rng(1);
    prompt::init_prompt_params(p, cfg, m, rng);
    return p;
  };
  CHECK(count(PromptMode::none).size() == 0);
  const num::ParamStore frozen = count(PromptMode::random_frozen);
  CHECK(frozen.parameter_count() == 64);
  CHECK_FALSE(frozen.entry("prompt_enc.init_prompt").trainable);
  CHECK(count(PromptMode::passthrough).entry("prompt_enc.init_prompt").trainable);
  const num::ParamStore enc = count(PromptMode::encoder);
  // 64 + (128*32 + 32) + (32*128 + 128) + 2 * (128*128 + 128)
  CHECK(enc.parameter_count() == 64 + 4128 + 4224 + 2 * 16512);
  cfg.ratio = 3;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("zero inputs with zero biases encode to zero") {
  num::ParamStore p = encoder_params(8, 2);
  for (const std::string& n : p.names())
    if (n.find(".bias") != std::string::npos) p.set(n, Array(p.get(n).shape()));
  const auto [ph, th] = prompt::encode(p, Array({1, 8}), Array({5, 8}));
  CHECK(ph.max_abs() == 0.0);
  CHECK(th.max_abs() == 0.0);
}

TEST_CASE("constant template rows pool to that row") {
  const num::ParamStore p = encoder_params(8, 3);
  const Array pr = random_rows(1, 8, 4);
  const Array row = random_rows(1, 8, 5);
  Array many({6, 8});
  for (std::size_t r = 0; r < 6; ++r) std::copy_n(row.raw(), 8, many.raw() + r * 8);
  CHECK(prompt::encode(p, pr, many) == prompt::encode(p, pr, row));
}

TEST_CASE("encode matches the three stages composed by hand") {
  const std::size_t C = 6;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const num::ParamStore p = encoder_params(C, 10 + seed);
    const Array pr = random_rows(1, C, 20 + seed), tm = random_rows(7, C, 30 + seed);
    std::vector<double> z(2 * C, 0.0);
    for (std::size_t c = 0; c < C; ++c) z[c] = pr[c];
    for (std::size_t r = 0; r < 7; ++r)
      for (std::size_t c = 0; c < C; ++c) z[C + c] += tm.at(r, c) / 7.0;
    std::vector<double> a1 = dense(z, p.get("prompt_enc.fc1.weight"), p.get("prompt_enc.fc1.bias"));
    for (double& v : a1) v = gelu(v);
    const std::vector<double> a2 = dense(a1, p.get("prompt_enc.fc2.weight"), p.get("prompt_enc.fc2.bias"));
    std::vector<double> h = dense(a2, p.get("prompt_enc.mlp.fc1.weight"), p.get("prompt_enc.mlp.fc1.bias"));
    for (double& v : h) v = gelu(v);
    const std::vector<double> m = dense(h, p.get("prompt_enc.mlp.fc2.weight"), p.get("prompt_enc.mlp.fc2.bias"));
    const auto [ph, th] = prompt::encode(p, pr, tm);
    REQUIRE(ph.shape() == num::Shape{1, C});
    for (std::size_t c = 0; c < C; ++c) {
      CHECK(std::abs(ph[c] - (a2[c] + m[c])) <= 1e-12);
      CHECK(std::abs(th[c] - (a2[C + c] + m[C + c])) <= 1e-12);
    }
  }
}

TEST_CASE("template order does not matter") {
  const num::ParamStore p = encoder_params(8, 40);
  const Array pr = random_rows(1, 8, 41), tm = random_rows(9, 8, 42);
  std::vector<std::size_t> perm = {3, 1, 8, 0, 5, 2, 7, 6, 4};
  Array shuffled({9, 8});
  for (std::size_t r = 0; r < 9; ++r) std::copy_n(tm.raw() + perm[r] * 8, 8, shuffled.raw() + r * 8);
  const auto a = prompt::encode(p, pr, tm), b = prompt::encode(p, pr, shuffled);
  CHECK(num::max_abs_diff(a.first, b.first) <= 1e-14);
}

TEST_CASE("multi-row prompts and width errors") {
  const num::ParamStore p = encoder_params(8, 50);
  const auto [ph, th] = prompt::encode(p, random_rows(3, 8, 51), random_rows(4, 8, 52));
  CHECK(ph.shape() == num::Shape{3, 8});
  CHECK(th.shape() == num::Shape{3, 8});
  CHECK_THROWS_AS(prompt::encode(p, random_rows(1, 8, 1), random_rows(4, 6, 2)), num::ShapeError);
}

TEST_CASE("encode gradients") {
  const num::ParamStore p = encoder_params(6, 60);
  const Array tm = random_rows(5, 6, 61), pr = random_rows(1, 6, 62);
  const Array w = random_rows(1, 12, 63);
  auto out = [&](num::Tape& t, const prompt::Encoded& e) {
    return num::sum(num::mul(num::concat({e.prompt, e.template_summary}, 1), t.constant(w)));
  };
  CHECK(num::grad_check(
            [&](num::Tape& t, const num::Var& x) {
              num::Binding b(t, p, false);
              return out(t, prompt::encode(b, x, t.constant(tm)));
            },
            pr)
            .max_rel_error <= 1e-6);
  CHECK(num::grad_check(
            [&](num::Tape& t, const num::Var& x) {
              num::Binding b(t, p, false);
              return out(t, prompt::encode(b, t.constant(pr), x));
            },
            tm)
            .max_rel_error <= 1e-6);
}

TEST_CASE("prompt state starts from the learned init and rejects bad updates") {
  const num::ParamStore p = encoder_params(4, 70);
  prompt::PromptState s(p);
  CHECK(s.current().tokens == p.get("prompt_enc.init_prompt"));
  CHECK(s.current().frame == 0);
  const Array next = random_rows(1, 4, 71);
  CHECK(s.update(next, 2));
  CHECK(s.current().tokens == next);
  CHECK(s.current().frame == 2);
  Array bad = next;
  bad[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(s.update(bad, 3));
  CHECK(s.current().tokens == next);
  CHECK(s.rejected() == 1);
  CHECK_FALSE(s.update(random_rows(2, 4, 72), 4));

  prompt::PromptState empty{num::ParamStore{}};
  CHECK(empty.current().tokens.empty());
}
