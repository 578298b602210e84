// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/head/head.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include "untrack/numerics/ops.hpp"

namespace untrack::head {

using num::Array;
using num::Var;

namespace {

constexpr double kProbFloor = 1e-4;

std::size_t layer_in(const HeadConfig& cfg, std::size_t i) { return cfg.channels >> i; }  // i is 0-based
std::size_t layer_out(const HeadConfig& cfg, std::size_t i, std::size_t final_channels) {
  return i + 1 == cfg.layers ? final_channels : cfg.channels >> (i + 1);
}

std::string conv_name(const std::string& branch, std::size_t i) {
  return "head." + branch + ".conv" + std::to_string(i + 1);
}

}  // namespace

void HeadConfig::validate() const {
  if (channels == 0 || grid == 0 || search_size == 0 || layers == 0) {
    throw std::invalid_argument("head: channels, grid, search_size and layers must be positive");
  }
  if (layers > 1 && channels % (std::size_t{1} << (layers - 1)) != 0) {
    throw std::invalid_argument("head: channels must halve cleanly across the conv stack");
  }
}

void init_head_params(num::ParamStore& p, const HeadConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  p.add("head.placeholder", num::truncated_normal({cfg.channels}, 0.02, rng));
  for (const auto& [branch, out, bias] : {std::tuple<std::string, std::size_t, double>{"cls", 1, -2.19},
                                          std::tuple<std::string, std::size_t, double>{"reg", 4, std::log(1.0 / 8.0)}}) {
    for (std::size_t i = 0; i < cfg.layers; ++i) {
      const std::size_t cin = layer_in(cfg, i), cout = layer_out(cfg, i, out);
      const bool last = i + 1 == cfg.layers;
      const double sd = std::sqrt(2.0 / static_cast<double>(cin * 9)) * (last ? 0.01 : 1.0);
      p.add(conv_name(branch, i) + ".weight", num::truncated_normal({cout, cin, 3, 3}, sd, rng));
      p.add(conv_name(branch, i) + ".bias", Array({cout}, last ? bias : 0.0));
    }
  }
}

Var scatter_to_grid(num::Binding& bind, const HeadConfig& cfg, const Var& search,
                    const std::vector<std::size_t>& search_ids, std::size_t frame) {
  const std::size_t C = cfg.channels, G2 = cfg.cells();
  const Array& sv = search.value();
  if (sv.rank() != 2 || sv.rows() != search_ids.size() || (sv.rows() > 0 && sv.cols() != C)) {
    throw num::ShapeError("head scatter: search rows " + num::to_string(sv.shape()) + " do not match " +
                          std::to_string(search_ids.size()) + " ids of width " + std::to_string(C));
  }
  const Var placeholder = num::reshape(bind("head.placeholder"), {1, C});
  std::vector<std::size_t> index(G2, sv.rows());
  for (std::size_t r = 0; r < search_ids.size(); ++r) {
    const std::size_t id = search_ids[r];
    if (id / G2 != frame) continue;
    if (index[id % G2] != sv.rows()) throw num::ShapeError("head scatter: duplicate search id " + std::to_string(id));
    index[id % G2] = r;
  }
  const Var pool = sv.rows() == 0 ? placeholder : num::concat({search, placeholder}, 0);
  if (sv.rows() == 0) std::fill(index.begin(), index.end(), 0);
  const Var rows = num::gather_rows(pool, index);  // [G2, C]
  return num::reshape(num::transpose(rows), {C, cfg.grid, cfg.grid});
}

std::vector<HeadMaps> head_forward(num::Binding& bind, const HeadConfig& cfg, const Var& search,
                                   const std::vector<std::size_t>& search_ids, std::size_t frames) {
  for (std::size_t id : search_ids)
    if (id >= frames * cfg.cells()) throw num::ShapeError("head_forward: search id " + std::to_string(id) + " outside the grid");
  auto branch = [&](const std::string& name, Var x) {
    for (std::size_t i = 0; i < cfg.layers; ++i) {
      x = num::conv2d(x, bind(conv_name(name, i) + ".weight"), bind(conv_name(name, i) + ".bias"));
      if (i + 1 < cfg.layers) x = num::gelu(x);
    }
    return x;
  };
  std::vector<HeadMaps> out;
  for (std::size_t f = 0; f < frames; ++f) {
    const Var grid = scatter_to_grid(bind, cfg, search, search_ids, f);
    HeadMaps m;
    m.cls = num::clamp(num::sigmoid(branch("cls", grid)), kProbFloor, 1.0 - kProbFloor);
    m.reg = num::exp(branch("reg", grid));
    out.push_back(m);
  }
  return out;
}

std::size_t peak_cell(const Array& cls) {
  if (cls.empty()) throw std::invalid_argument("peak_cell: empty map");
  std::size_t best = 0;
  for (std::size_t i = 1; i < cls.size(); ++i)
    if (cls[i] > cls[best]) best = i;
  return best;
}

msi::Box box_at(const HeadConfig& cfg, const Array& reg, std::size_t cell) {
  const std::size_t G2 = cfg.cells();
  if (reg.size() != 4 * G2) throw num::ShapeError("box_at: regression map must hold 4 x G x G values");
  const double s = cfg.stride(), side = static_cast<double>(cfg.search_size);
  const double cx = (static_cast<double>(cell % cfg.grid) + 0.5) * s;
  const double cy = (static_cast<double>(cell / cfg.grid) + 0.5) * s;
  const double l = reg[cell] * side, t = reg[G2 + cell] * side, r = reg[2 * G2 + cell] * side, b = reg[3 * G2 + cell] * side;
  return msi::Box{cx - l, cy - t, l + r, t + b};
}

Decoded decode(const HeadConfig& cfg, const Array& cls, const Array& reg, const msi::CropMapping& mapping) {
  if (cls.size() != cfg.cells()) throw num::ShapeError("decode: confidence map must hold G x G values");
  Decoded d;
  d.peak = peak_cell(cls);
  d.confidence = cls[d.peak];
  d.patch_box = box_at(cfg, reg, d.peak);
  d.frame_box = mapping.to_frame(d.patch_box);
  return d;
}

Target make_target(const HeadConfig& cfg, const msi::Box& box, bool visible) {
  const std::size_t G = cfg.grid;
  Target t;
  t.heatmap = Array({1, G, G});
  if (!visible) return t;
  if (!(box.w > 0 && box.h > 0)) throw std::invalid_argument("make_target: degenerate box");
  const double s = cfg.stride(), side = static_cast<double>(cfg.search_size);
  auto cell_of = [&](double v) {
    return static_cast<std::size_t>(std::clamp(std::floor(v / s), 0.0, static_cast<double>(G - 1)));
  };
  const std::size_t ci = cell_of(box.cy()), cj = cell_of(box.cx());
  const double sigma = std::max(1.0, std::hypot(box.w, box.h) / s / 12.0);
  for (std::size_t i = 0; i < G; ++i)
    for (std::size_t j = 0; j < G; ++j) {
      const double di = static_cast<double>(i) - static_cast<double>(ci);
      const double dj = static_cast<double>(j) - static_cast<double>(cj);
      t.heatmap[i * G + j] = std::exp(-(di * di + dj * dj) / (2 * sigma * sigma));
    }
  t.regress = true;
  t.cell = ci * G + cj;
  const double cx = (static_cast<double>(cj) + 0.5) * s, cy = (static_cast<double>(ci) + 0.5) * s;
  t.ltrb = Array::vector({(cx - box.x) / side, (cy - box.y) / side, (box.x + box.w - cx) / side, (box.y + box.h - cy) / side});
  t.box_xyxy = Array::vector({box.x / side, box.y / side, (box.x + box.w) / side, (box.y + box.h) / side});
  return t;
}

void LossWeights::validate() const {
  if (l1 < 0 || giou < 0) throw std::invalid_argument("loss weights must be non-negative");
}

LossTerms frame_loss(const HeadConfig& cfg, const HeadMaps& maps, const Target& target, const LossWeights& w) {
  LossTerms terms;
  terms.cls = num::focal_loss(maps.cls, target.heatmap, w.alpha, w.beta);
  if (!target.regress) return terms;
  const std::size_t G2 = cfg.cells();
  num::Tape& tape = *maps.reg.tape();
  const Var ltrb = num::reshape(num::slice_cols(num::reshape(maps.reg, {4, G2}), target.cell, target.cell + 1), {4});
  terms.l1 = num::l1_loss(ltrb, target.ltrb);
  const double side = static_cast<double>(cfg.search_size), s = cfg.stride();
  const double cx = (static_cast<double>(target.cell % cfg.grid) + 0.5) * s / side;
  const double cy = (static_cast<double>(target.cell / cfg.grid) + 0.5) * s / side;
  const Var xyxy = num::add(num::mul(ltrb, tape.constant(Array::vector({-1, -1, 1, 1}))),
                            tape.constant(Array::vector({cx, cy, cx, cy})));
  terms.giou = num::giou_loss(xyxy, target.box_xyxy);
  terms.regress = true;
  return terms;
}

double total_loss(double cls, double l1, double giou, const LossWeights& w) { return cls + w.l1 * l1 + w.giou * giou; }

Var total_loss(const LossTerms& terms, const LossWeights& w) {
  if (!terms.regress) return terms.cls;
  return num::add(num::add(terms.cls, num::scale(terms.l1, w.l1)), num::scale(terms.giou, w.giou));
}

}  // namespace untrack::head
