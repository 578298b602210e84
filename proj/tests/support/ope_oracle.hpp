// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

// Brute-force one-pass-evaluation metrics written independently of the
// library: boxes go through corner form, every threshold is a separate pass
// over the frames, and nothing is shared with the library's evaluator.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

struct Rect {
  double x, y, w, h;
};

struct Truth {
  Rect box;
  int flag;
};

struct Scores {
  std::size_t frames = 0;
  double auc = 0, sr50 = 0, sr75 = 0, pre = 0, pre_n = 0;
  std::vector<double> success;  // 21 values
};

inline double overlap(const Rect& p, const Rect& g) {
  const double px1 = p.x, py1 = p.y, px2 = p.x + p.w, py2 = p.y + p.h;
  const double gx1 = g.x, gy1 = g.y, gx2 = g.x + g.w, gy2 = g.y + g.h;
  double ix = std::min(px2, gx2) - std::max(px1, gx1);
  double iy = std::min(py2, gy2) - std::max(py1, gy1);
  if (ix < 0) ix = 0;
  if (iy < 0) iy = 0;
  const double inter = ix * iy;
  // Areas from the corners, so a box compared with itself scores exactly 1.
  const double uni = (px2 - px1) * (py2 - py1) + (gx2 - gx1) * (gy2 - gy1) - inter;
  if (uni <= 0) return 0.0;
  return inter / uni;
}

inline double centre_distance(const Rect& p, const Rect& g) {
  return std::hypot((p.x + p.w / 2) - (g.x + g.w / 2), (p.y + p.h / 2) - (g.y + g.h / 2));
}

inline Scores score(const std::vector<Rect>& pred, const std::vector<Truth>& gt) {
  Scores s;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < gt.size(); ++i)
    if (gt[i].flag == 0) keep.push_back(i);
  s.frames = keep.size();
  s.success.assign(21, 0.0);
  if (keep.empty()) return s;
  const double n = static_cast<double>(keep.size());
  std::size_t all_hits = 0;
  for (int k = 0; k <= 20; ++k) {
    std::size_t hits = 0;
    for (std::size_t i : keep)
      if (overlap(pred[i], gt[i].box) >= k / 20.0) ++hits;
    all_hits += hits;
    s.success[static_cast<std::size_t>(k)] = static_cast<double>(hits) / n;
  }
  s.auc = static_cast<double>(all_hits) / (21.0 * n);
  s.sr50 = s.success[10];
  s.sr75 = s.success[15];
  std::size_t near = 0, near_n = 0;
  for (std::size_t i : keep) {
    const double d = centre_distance(pred[i], gt[i].box);
    if (d <= 20.0) ++near;
    if (d / std::hypot(gt[i].box.w, gt[i].box.h) <= 0.2) ++near_n;
  }
  s.pre = static_cast<double>(near) / n;
  s.pre_n = static_cast<double>(near_n) / n;
  return s;
}

}  // namespace oracle
