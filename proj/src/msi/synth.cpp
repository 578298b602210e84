// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/msi/synth.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "untrack/msi/collapse.hpp"
#include "untrack/numerics/rng.hpp"

namespace untrack::msi {

namespace {

bool inside(ShapeKind shape, double cx, double cy, double w, double h, double px, double py) {
  const double dx = (px - cx) / (0.5 * w);
  const double dy = (py - cy) / (0.5 * h);
  // Half-open in x and y so an integer-wide rectangle covers exactly that
  // many pixel centres.
  if (shape == ShapeKind::rectangle) return dx >= -1.0 && dx < 1.0 && dy >= -1.0 && dy < 1.0;
  return dx * dx + dy * dy < 1.0;
}

struct PixelRange {
  std::size_t x0, x1, y0, y1;  // half-open
};

PixelRange candidate_pixels(double cx, double cy, double w, double h, std::size_t width, std::size_t height) {
  auto lo = [](double v) { return static_cast<std::size_t>(std::max(0.0, std::floor(v))); };
  auto hi = [](double v, std::size_t n) { return static_cast<std::size_t>(std::clamp(std::ceil(v) + 1.0, 0.0, static_cast<double>(n))); };
  return PixelRange{lo(cx - 0.5 * w - 1), hi(cx + 0.5 * w, width), lo(cy - 0.5 * h - 1), hi(cy + 0.5 * h, height)};
}

struct Rect {
  double cx, cy, w, h;
};

bool in_window(const Injector& inj, std::size_t t) { return t >= inj.first && t <= inj.last; }

void check_signature(const std::vector<double>& s, std::size_t bands, const char* what) {
  if (s.size() != bands) throw DataError(std::string("synth: ") + what + " signature length does not match band count");
  for (double v : s)
    if (!(v >= 0.0 && v <= 1.0)) throw DataError(std::string("synth: ") + what + " signature outside [0,1]");
}

}  // namespace

std::optional<Box> shape_extent(ShapeKind shape, double cx, double cy, double w, double h, std::size_t width,
                                std::size_t height) {
  const PixelRange r = candidate_pixels(cx, cy, w, h, width, height);
  std::size_t xmin = width, xmax = 0, ymin = height, ymax = 0;
  bool any = false;
  for (std::size_t y = r.y0; y < r.y1; ++y)
    for (std::size_t x = r.x0; x < r.x1; ++x) {
      if (!inside(shape, cx, cy, w, h, x + 0.5, y + 0.5)) continue;
      any = true;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!any) return std::nullopt;
  return Box{static_cast<double>(xmin), static_cast<double>(ymin), static_cast<double>(xmax - xmin + 1),
             static_cast<double>(ymax - ymin + 1)};
}

MsiSequence synth_sequence(const SceneSpec& spec, std::uint64_t seed) {
  const std::size_t B = spec.bands.size();
  const std::size_t W = spec.width, H = spec.height;
  if (B < 3) throw DataError("synth: at least 3 bands required");
  if (spec.frames < 1 || W == 0 || H == 0) throw DataError("synth: empty scene");
  check_signature(spec.target_signature, B, "target");
  check_signature(spec.background_signature, B, "background");
  for (const Blob& b : spec.clutter) check_signature(b.signature, B, "clutter");

  double tw = spec.target_w, th = spec.target_h;
  bool needs_occluder = false;
  for (const Injector& inj : spec.injectors) {
    if (inj.first < 1 || inj.last > spec.frames || inj.first > inj.last) throw DataError("synth: injector window out of range");
    if (inj.kind == InjectorKind::small_target) {
      if (!(inj.strength > 0)) throw DataError("synth: small_target needs a positive side");
      tw = th = inj.strength;
    }
    if (inj.kind == InjectorKind::partial_occlusion || inj.kind == InjectorKind::full_occlusion ||
        inj.kind == InjectorKind::out_of_view) {
      if (inj.first < 2) throw DataError("synth: frame 1 must show the target");
    }
    if (inj.kind == InjectorKind::partial_occlusion && !(inj.strength > 0 && inj.strength < 1)) {
      throw DataError("synth: partial occlusion fraction must lie in (0,1)");
    }
    needs_occluder |= inj.kind == InjectorKind::partial_occlusion || inj.kind == InjectorKind::full_occlusion;
  }
  if (!(tw > 0 && th > 0)) throw DataError("synth: target extent must be positive");
  if (tw > static_cast<double>(W) || th > static_cast<double>(H)) throw DataError("synth: target larger than frame");
  if (needs_occluder) check_signature(spec.occluder_signature, B, "occluder");

  // Trajectory of the unperturbed target centre.
  std::vector<double> cx(spec.frames), cy(spec.frames);
  {
    double x = spec.motion.cx, y = spec.motion.cy, vx = spec.motion.vx, vy = spec.motion.vy;
    const double lox = spec.motion.margin + 0.5 * tw, hix = static_cast<double>(W) - lox;
    const double loy = spec.motion.margin + 0.5 * th, hiy = static_cast<double>(H) - loy;
    for (std::size_t t = 0; t < spec.frames; ++t) {
      if (t > 0) {
        const double c = std::cos(spec.motion.turn_rate), s = std::sin(spec.motion.turn_rate);
        const double nvx = c * vx - s * vy, nvy = s * vx + c * vy;
        vx = nvx;
        vy = nvy;
        x += vx;
        y += vy;
        if (lox < hix) {
          if (x < lox) { x = 2 * lox - x; vx = -vx; }
          if (x > hix) { x = 2 * hix - x; vx = -vx; }
        }
        if (loy < hiy) {
          if (y < loy) { y = 2 * loy - y; vy = -vy; }
          if (y > hiy) { y = 2 * hiy - y; vy = -vy; }
        }
      }
      cx[t] = x;
      cy[t] = y;
    }
  }
  // Out-of-view windows pull the centre across the nearest vertical edge and back.
  for (const Injector& inj : spec.injectors) {
    if (inj.kind != InjectorKind::out_of_view) continue;
    const double span = static_cast<double>(inj.last - inj.first + 2);
    for (std::size_t t = inj.first; t <= inj.last; ++t) {
      const double s = std::min(1.0, 2.0 * std::sin(std::numbers::pi * static_cast<double>(t - inj.first + 1) / span));
      const double exit = cx[t - 1] < 0.5 * static_cast<double>(W) ? -tw : static_cast<double>(W) + tw;
      cx[t - 1] += s * (exit - cx[t - 1]);
    }
  }
  if (!shape_extent(spec.target_shape, cx[0], cy[0], tw, th, W, H)) throw DataError("synth: target not visible in frame 1");

  MsiSequence seq;
  seq.name = spec.name;
  seq.bands = spec.bands;
  seq.fps = spec.fps;
  if (spec.clutter.size() >= 4) seq.attributes.insert(Attribute::BC);
  if (tw * th < 100) seq.attributes.insert(Attribute::LR);

  for (const Injector& inj : spec.injectors) {
    switch (inj.kind) {
      case InjectorKind::partial_occlusion: seq.attributes.insert(Attribute::POC); break;
      case InjectorKind::full_occlusion: seq.attributes.insert(Attribute::FOC); break;
      case InjectorKind::out_of_view: seq.attributes.insert(Attribute::OV); break;
      case InjectorKind::camouflage: seq.attributes.insert(Attribute::SC); break;
      case InjectorKind::illumination_drift: seq.attributes.insert(Attribute::IV); break;
      case InjectorKind::small_target: break;
    }
  }

  // Material index per pixel: 0 background, 1.. clutter, then target, then occluder.
  std::vector<const std::vector<double>*> materials = {&spec.background_signature};
  for (const Blob& b : spec.clutter) materials.push_back(&b.signature);
  const std::size_t target_id = materials.size();
  materials.push_back(&spec.target_signature);
  const std::size_t occluder_id = materials.size();
  materials.push_back(needs_occluder ? &spec.occluder_signature : &spec.background_signature);

  std::vector<std::uint16_t> base_labels(W * H, 0);
  for (std::size_t k = 0; k < spec.clutter.size(); ++k) {
    const Blob& b = spec.clutter[k];
    const PixelRange r = candidate_pixels(b.cx, b.cy, b.w, b.h, W, H);
    for (std::size_t y = r.y0; y < r.y1; ++y)
      for (std::size_t x = r.x0; x < r.x1; ++x)
        if (inside(b.shape, b.cx, b.cy, b.w, b.h, x + 0.5, y + 0.5)) base_labels[y * W + x] = static_cast<std::uint16_t>(k + 1);
  }

  double max_step = 0;
  for (std::size_t t = 1; t <= spec.frames; ++t) {
    const double x = cx[t - 1], y = cy[t - 1];
    if (t > 1) max_step = std::max(max_step, std::hypot(x - cx[t - 2], y - cy[t - 2]));
    std::vector<std::uint16_t> labels = base_labels;
    const PixelRange r = candidate_pixels(x, y, tw, th, W, H);
    for (std::size_t py = r.y0; py < r.y1; ++py)
      for (std::size_t px = r.x0; px < r.x1; ++px)
        if (inside(spec.target_shape, x, y, tw, th, px + 0.5, py + 0.5)) labels[py * W + px] = static_cast<std::uint16_t>(target_id);

    bool hidden = false;
    double gain = 1.0;
    for (const Injector& inj : spec.injectors) {
      if (!in_window(inj, t)) continue;
      std::optional<Rect> occ;
      if (inj.kind == InjectorKind::partial_occlusion) {
        const double ow = tw * inj.strength;
        occ = Rect{x - 0.5 * tw + 0.5 * ow, y, ow, th + 2.0};
      } else if (inj.kind == InjectorKind::full_occlusion) {
        occ = Rect{x, y, tw + 4.0, th + 4.0};
        hidden = true;
      } else if (inj.kind == InjectorKind::illumination_drift) {
        const double span = static_cast<double>(inj.last - inj.first + 2);
        gain *= 1.0 + inj.strength * std::sin(std::numbers::pi * static_cast<double>(t - inj.first + 1) / span);
      }
      if (occ) {
        const PixelRange o = candidate_pixels(occ->cx, occ->cy, occ->w, occ->h, W, H);
        for (std::size_t py = o.y0; py < o.y1; ++py)
          for (std::size_t px = o.x0; px < o.x1; ++px)
            if (inside(ShapeKind::rectangle, occ->cx, occ->cy, occ->w, occ->h, px + 0.5, py + 0.5))
              labels[py * W + px] = static_cast<std::uint16_t>(occluder_id);
      }
    }

    const std::optional<Box> extent = shape_extent(spec.target_shape, x, y, tw, th, W, H);
    seq.annotations.push_back(hidden || !extent ? Annotation::hidden() : Annotation{*extent, 0});

    MsiFrame frame(H, W, B);
    std::mt19937_64 rng(num::derive_seed(seed, t));
    std::normal_distribution<double> noise(0.0, spec.texture_noise);
    for (std::size_t b = 0; b < B; ++b) {
      float* dst = frame.data().data() + b * W * H;
      for (std::size_t i = 0; i < W * H; ++i) {
        const double v = (*materials[labels[i]])[b] * gain + (spec.texture_noise > 0 ? noise(rng) : 0.0);
        dst[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
    seq.frames.push_back(std::move(frame));
  }
  if (max_step > 20.0) seq.attributes.insert(Attribute::FM);
  seq.validate();
  return seq;
}

namespace {

std::vector<double> random_signature(std::mt19937_64& rng, std::size_t bands, double lo = 0.08, double hi = 0.92) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> s(bands);
  for (double& v : s) v = u(rng);
  return s;
}

double rgb_distance(const std::vector<double>& a, const std::vector<double>& b, const CollapseWeights& w) {
  const auto ca = collapse_spectrum(a, w), cb = collapse_spectrum(b, w);
  double d = 0;
  for (std::size_t k = 0; k < 3; ++k) d = std::max(d, std::abs(ca[k] - cb[k]));
  return d;
}

// Target spectrum whose RGB collapse equals the background's: the offset
// lies in the null space of the collapse matrix.
std::vector<double> camouflaged_signature(std::mt19937_64& rng, const std::vector<double>& background,
                                          const CollapseWeights& w, double gap) {
  const std::size_t n = background.size();
  Eigen::MatrixXd m(3, static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < n; ++i) m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = w.rows[k][i];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const Eigen::MatrixXd kernel = svd.matrixV().rightCols(static_cast<Eigen::Index>(n) - 3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Eigen::VectorXd c(kernel.cols());
    for (Eigen::Index j = 0; j < c.size(); ++j) c(j) = g(rng);
    Eigen::VectorXd delta = kernel * c;
    delta *= gap / delta.norm();
    std::vector<double> out(n);
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = background[i] + delta(static_cast<Eigen::Index>(i));
      ok &= out[i] >= 0.06 && out[i] <= 0.94;
    }
    if (ok) return out;
  }
  throw DataError("synth: could not place a camouflaged target spectrum inside [0,1]");
}

}  // namespace

SceneSpec make_scene(SceneFamily family, std::uint64_t seed, const SceneOptions& opts) {
  if (opts.bands.size() <= 3 && family == SceneFamily::camouflage) {
    throw DataError("synth: camouflage scenes need more than 3 bands");
  }
  std::mt19937_64 rng(num::derive_seed(seed, 0xC0FFEE + static_cast<std::uint64_t>(family)));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
  const std::size_t B = opts.bands.size();
  const CollapseWeights cw = collapse_weights(opts.bands);
  const double W = static_cast<double>(opts.width), H = static_cast<double>(opts.height);

  SceneSpec s;
  s.name = to_string(family) + "-" + std::to_string(seed);
  s.height = opts.height;
  s.width = opts.width;
  s.frames = opts.frames;
  s.bands = opts.bands;
  s.target_shape = u01(rng) < 0.5 ? ShapeKind::ellipse : ShapeKind::rectangle;
  s.target_w = std::round(uniform(opts.min_target, opts.max_target));
  s.target_h = std::round(uniform(opts.min_target, opts.max_target));
  s.motion.cx = uniform(0.3 * W, 0.7 * W);
  s.motion.cy = uniform(0.3 * H, 0.7 * H);
  const double speed = uniform(opts.min_speed, opts.max_speed);
  const double heading = uniform(0.0, 2.0 * std::numbers::pi);
  s.motion.vx = speed * std::cos(heading);
  s.motion.vy = speed * std::sin(heading);
  s.motion.turn_rate = uniform(-0.08, 0.08);

  if (family == SceneFamily::camouflage) {
    s.background_signature.resize(B);
    for (double& v : s.background_signature) v = uniform(0.4, 0.6);
    s.target_signature = camouflaged_signature(rng, s.background_signature, cw, opts.camouflage_gap);
    s.injectors.push_back(Injector{InjectorKind::camouflage, 1, opts.frames, 0.0});
    return s;
  }

  s.background_signature = random_signature(rng, B);
  do {
    s.target_signature = random_signature(rng, B);
  } while (rgb_distance(s.target_signature, s.background_signature, cw) < 0.15);
  const int blobs = 3 + static_cast<int>(u01(rng) * 4.0);
  for (int k = 0; k < blobs; ++k) {
    Blob b;
    b.shape = u01(rng) < 0.5 ? ShapeKind::ellipse : ShapeKind::rectangle;
    b.cx = uniform(0, W);
    b.cy = uniform(0, H);
    b.w = uniform(12, 40);
    b.h = uniform(12, 40);
    do {
      b.signature = random_signature(rng, B);
    } while (rgb_distance(b.signature, s.target_signature, cw) < 0.15);
    s.clutter.push_back(std::move(b));
  }

  if (family == SceneFamily::challenge) {
    const std::size_t n = opts.frames;
    if (n < 10) throw DataError("synth: challenge scenes need at least 10 frames");
    s.occluder_signature = random_signature(rng, B);
    const int count = 1 + static_cast<int>(u01(rng) * 2.0);
    for (int k = 0; k < count; ++k) {
      Injector inj;
      inj.kind = static_cast<InjectorKind>(std::min<int>(5, static_cast<int>(u01(rng) * 5.0)));
      if (inj.kind == InjectorKind::camouflage) inj.kind = InjectorKind::illumination_drift;
      const std::size_t len = 3 + static_cast<std::size_t>(u01(rng) * 5.0);
      inj.first = 4 + static_cast<std::size_t>(u01(rng) * static_cast<double>(n - len - 5));
      inj.last = std::min(n, inj.first + len - 1);
      switch (inj.kind) {
        case InjectorKind::partial_occlusion: inj.strength = uniform(0.3, 0.6); break;
        case InjectorKind::illumination_drift: inj.strength = uniform(-0.35, 0.35); break;
        case InjectorKind::small_target:
          inj.first = 1;
          inj.last = n;
          inj.strength = std::round(uniform(5, 8));
          break;
        default: break;
      }
      s.injectors.push_back(inj);
    }
  }
  return s;
}

std::string to_string(SceneFamily f) {
  switch (f) {
    case SceneFamily::plain: return "plain";
    case SceneFamily::camouflage: return "camouflage";
    case SceneFamily::challenge: return "challenge";
  }
  return "plain";
}

SceneFamily parse_family(const std::string& s) {
  if (s == "plain") return SceneFamily::plain;
  if (s == "camouflage") return SceneFamily::camouflage;
  if (s == "challenge") return SceneFamily::challenge;
  throw DataError("unknown scene family '" + s + "'");
}

}  // namespace untrack::msi
