// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <array>
#include <cmath>
#include <functional>
#include <random>

#include "untrack/reconstruct/reconstruct.hpp"

using namespace untrack;
using num::Array;
using reconstruct::RgbAnchors;

namespace {

RgbAnchors random_anchors(std::uint64_t seed, num::Shape shape = {3, 5}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  RgbAnchors a;
  a.w_red = a.w_green = a.w_blue = Array(shape);
  for (Array* w : {&a.w_red, &a.w_green, &a.w_blue})
    for (double& v : w->data()) v = g(rng);
  return a;
}

msi::BandSpec bands_at(const std::vector<double>& centers) {
  std::vector<msi::Band> b;
  for (double c : centers) b.push_back(msi::Band{c - 1e-3, c + 1e-3, c, 2e-3});
  return msi::BandSpec(b);
}

double max_diff(const Array& got, const std::function<double(std::size_t)>& expect) {
  double m = 0;
  for (std::size_t i = 0; i < got.size(); ++i) m = std::max(m, std::abs(got[i] - expect(i)));
  return m;
}

}  // namespace

TEST_CASE("worked reconstruction examples") {
  const RgbAnchors a = random_anchors(1);
  const auto w = reconstruct::reconstruct_weights(a, bands_at({422.5, 546.1, 602.5, 887.5}));
  REQUIRE(w.size() == 4);
  CHECK(w[1] == a.w_green);
  CHECK(w[3] == a.w_red);
  CHECK(max_diff(w[2], [&](std::size_t i) { return (97.5 * a.w_green[i] + 56.4 * a.w_red[i]) / 153.9; }) <= 1e-12);
  CHECK(max_diff(w[0], [&](std::size_t i) {
          return ((546.1 - 422.5) * a.w_blue[i] + (422.5 - 435.8) * a.w_green[i]) / 110.3;
        }) <= 1e-12);
  const reconstruct::Blend b = reconstruct::blend_for(422.5, a);
  CHECK(std::abs(b.blue - 1.1206) < 1e-4);
  CHECK(std::abs(b.green + 0.1206) < 1e-4);
}

TEST_CASE("coefficients sum to one on every band of the 8-band table") {
  const RgbAnchors a = random_anchors(2);
  for (double m : msi::BandSpec::must().centers()) CHECK(std::abs(reconstruct::blend_for(m, a).sum() - 1.0) <= 1e-12);
  for (double m = 300; m < 1000; m += 3.7) CHECK(std::abs(reconstruct::blend_for(m, a).sum() - 1.0) <= 1e-12);
}

TEST_CASE("continuity at the green and red breakpoints") {
  const RgbAnchors a = random_anchors(3);
  for (double x : {msi::kCieGreen, msi::kCieRed}) {
    const auto w = reconstruct::reconstruct_weights(a, bands_at({x - 1e-6, x + 1e-6}));
    for (std::size_t i = 0; i < w[0].size(); ++i) {
      const double scale = std::max({1.0, std::abs(w[0][i]), std::abs(w[1][i])});
      CHECK(std::abs(w[0][i] - w[1][i]) / scale <= 1e-6);
    }
  }
}

TEST_CASE("piecewise linear inside each branch") {
  const RgbAnchors a = random_anchors(4);
  for (const auto& trip : {std::array<double, 3>{400, 450, 530}, std::array<double, 3>{560, 610, 690}}) {
    const auto w = reconstruct::reconstruct_weights(a, bands_at({trip[0], trip[1], trip[2]}));
    const double f = (trip[1] - trip[0]) / (trip[2] - trip[0]);
    CHECK(max_diff(w[1], [&](std::size_t i) { return (1 - f) * w[0][i] + f * w[2][i]; }) <= 1e-12);
  }
}

TEST_CASE("anchor bands reproduce the source weights") {
  const RgbAnchors a = random_anchors(5);
  const auto w = reconstruct::reconstruct_weights(a, msi::BandSpec::cie_rgb());
  CHECK(w[0] == a.w_blue);
  CHECK(w[1] == a.w_green);
  CHECK(w[2] == a.w_red);
}

TEST_CASE("anchor validation") {
  RgbAnchors a = random_anchors(6);
  a.green = 800;
  CHECK_THROWS_AS(a.validate(), std::invalid_argument);
  a = random_anchors(6);
  a.w_red = Array({2, 2});
  CHECK_THROWS_AS(reconstruct::reconstruct_weights(a, msi::BandSpec::must()), std::invalid_argument);
}

TEST_CASE("input layer expansion") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  Array rgb({4, 3, 2, 2});
  for (double& v : rgb.data()) v = g(rng);
  const msi::BandSpec must = msi::BandSpec::must();
  const Array out = reconstruct::expand_input_layer(rgb, must);
  CHECK(out.shape() == num::Shape{4, 8, 2, 2});
  const Array via_cie = reconstruct::expand_input_layer(rgb, msi::BandSpec::cie_rgb());
  CHECK(via_cie == rgb);
  // Bands beyond red copy the red channel unless scratch initialisation is requested.
  reconstruct::ExpandOptions scratch;
  scratch.scratch_infrared = true;
  const Array sc = reconstruct::expand_input_layer(rgb, must, scratch);
  for (std::size_t b = 0; b < 8; ++b) {
    const bool ir = must[b].center > msi::kCieRed;
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t i = 0; i < 4; ++i) {
        if (ir) {
          CHECK(out[(c * 8 + b) * 4 + i] == rgb[(c * 3 + 2) * 4 + i]);
          CHECK(sc[(c * 8 + b) * 4 + i] != rgb[(c * 3 + 2) * 4 + i]);
        } else {
          CHECK(sc[(c * 8 + b) * 4 + i] == out[(c * 8 + b) * 4 + i]);
        }
      }
  }
  CHECK_THROWS_AS(reconstruct::expand_input_layer(Array({4, 8, 2, 2}), must), num::ShapeError);
}
