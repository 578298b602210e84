// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/pipeline/train.hpp"

#include <cmath>

#include "untrack/numerics/checkpoint.hpp"
#include "untrack/numerics/ops.hpp"
#include "untrack/numerics/rng.hpp"

namespace untrack::pipeline {

using num::Array;
using num::Var;

double TrainConfig::lr_at(std::size_t step) const {
  const std::size_t epoch = step / std::max<std::size_t>(steps_per_epoch, 1);
  return epoch >= decay_epoch ? lr * decay_factor : lr;
}

void TrainConfig::validate() const {
  if (epochs == 0 || steps_per_epoch == 0) throw std::invalid_argument("train: epochs and steps_per_epoch must be positive");
  if (batch == 0 || unroll == 0) throw std::invalid_argument("train: batch and unroll must be positive");
  if (!(lr > 0) || weight_decay < 0 || !(decay_factor > 0)) throw std::invalid_argument("train: bad learning-rate settings");
  if (center_jitter < 0 || scale_jitter < 0) throw std::invalid_argument("train: jitter must be non-negative");
  if (!(rho_start > 0 && rho_start <= 1)) throw std::invalid_argument("train: rho_start must lie in (0, 1]");
  loss.validate();
}

namespace {

std::size_t window_span(const ModelConfig& m, const TrainConfig& c) { return m.embed.search_frames + c.unroll - 1; }

bool usable(const msi::MsiSequence& s, std::size_t span) {
  if (s.size() < span) return false;
  for (const auto& a : s.annotations)
    if (a.visible()) return true;
  return false;
}

// Last visible box at or before `frame`, else the first one after it.
msi::Box reference_box(const msi::MsiSequence& s, std::size_t frame) {
  for (std::size_t i = frame + 1; i-- > 0;)
    if (s.annotations[i].visible()) return s.annotations[i].box;
  for (std::size_t i = frame + 1; i < s.size(); ++i)
    if (s.annotations[i].visible()) return s.annotations[i].box;
  throw msi::DataError("sequence " + s.name + " has no visible annotation");
}

}  // namespace

Sample draw_sample(const ModelConfig& model, const TrainConfig& cfg, const std::vector<msi::MsiSequence>& data,
                   std::mt19937_64& rng) {
  const std::size_t span = window_span(model, cfg);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (usable(data[i], span)) candidates.push_back(i);
  if (candidates.empty()) throw std::invalid_argument("train: no sequence is long enough for a training window");
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  Sample s;
  s.sequence = candidates[pick(candidates.size())];
  const msi::MsiSequence& seq = data[s.sequence];
  std::vector<std::size_t> visible;
  for (std::size_t i = 0; i < seq.size(); ++i)
    if (seq.annotations[i].visible()) visible.push_back(i);
  s.template_frame = visible[pick(visible.size())];
  s.first_search = pick(seq.size() - span + 1);
  s.templ = crop_input(seq.frames[s.template_frame], seq.annotations[s.template_frame].box, model.template_factor,
                       model.embed.template_size)
                .image;

  const std::size_t N = model.embed.search_frames, side = model.embed.search_size;
  for (std::size_t u = 0; u < cfg.unroll; ++u) {
    const std::size_t last = s.first_search + u + N - 1;
    const msi::Box ref = reference_box(seq, last);
    const double scale = std::exp(cfg.scale_jitter * unit(rng));
    const double crop_side = model.search_factor * std::sqrt(ref.w * ref.h) * scale;
    const double cx = ref.cx() + cfg.center_jitter * crop_side * unit(rng);
    const double cy = ref.cy() + cfg.center_jitter * crop_side * unit(rng);
    const msi::Box jittered{cx - 0.5 * ref.w * scale, cy - 0.5 * ref.h * scale, ref.w * scale, ref.h * scale};
    Window w;
    for (std::size_t n = 0; n < N; ++n) {
      const std::size_t f = last + 1 - N + n;
      const CropInput c = crop_input(seq.frames[f], jittered, model.search_factor, side);
      const msi::Annotation& a = seq.annotations[f];
      const msi::Box pb = c.mapping.to_patch(a.box);
      const double S = static_cast<double>(side);
      const bool inside = a.visible() && pb.cx() >= 0 && pb.cx() < S && pb.cy() >= 0 && pb.cy() < S;
      w.search.push_back(c.image);
      w.targets.push_back(head::make_target(model.head, pb, inside));
    }
    s.windows.push_back(std::move(w));
  }
  return s;
}

SampleLoss sample_loss(num::Binding& bind, const ModelConfig& model, const Sample& s, const head::LossWeights& w,
                       std::optional<double> rho) {
  std::optional<Var> prompt;
  std::vector<Var> terms;
  SampleLoss out;
  for (const Window& win : s.windows) {
    const ForwardOutput f = forward(bind, model, s.templ, win.search, prompt, rho);
    for (std::size_t n = 0; n < f.maps.size(); ++n) {
      const head::LossTerms t = head::frame_loss(model.head, f.maps[n], win.targets[n], w);
      terms.push_back(head::total_loss(t, w));
      out.cls += t.cls.value()[0];
      if (t.regress) {
        out.l1 += t.l1.value()[0];
        out.giou += t.giou.value()[0];
      }
    }
    if (f.next_prompt.valid()) prompt = f.next_prompt;
  }
  const double inv = 1.0 / static_cast<double>(terms.size());
  Var total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = num::add(total, terms[i]);
  out.total = num::scale(total, inv);
  out.cls *= inv;
  out.l1 *= inv;
  out.giou *= inv;
  return out;
}

TrainResult train(const ModelConfig& model, const TrainConfig& cfg, const std::vector<msi::MsiSequence>& data,
                  std::optional<num::ParamStore> init, const StepCallback& on_step) {
  model.validate();
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  for (const auto& s : data)
    if (s.bands.size() != model.embed.bands) {
      throw std::invalid_argument("train: sequence " + s.name + " has " + std::to_string(s.bands.size()) +
                                  " bands, model expects " + std::to_string(model.embed.bands));
    }

  TrainResult r;
  r.params = init ? std::move(*init) : init_model(model, cfg.seed);
  num::OptState opt;
  opt.config.weight_decay = cfg.weight_decay;
  attn::AttnConfig schedule = model.attn;
  schedule.rho_start = cfg.rho_start;
  schedule.total_steps = cfg.total_steps();

  double epoch_sum = 0;
  for (std::size_t step = 0; step < cfg.total_steps(); ++step) {
    StepRecord rec;
    rec.step = step;
    rec.rho = model.eliminate ? attn::keep_ratio(step, schedule) : 1.0;
    rec.lr = cfg.lr_at(step);
    opt.config.lr = rec.lr;
    std::mt19937_64 rng(num::derive_seed(cfg.seed, step + 1));
    num::GradStore grads;
    try {
      for (std::size_t b = 0; b < cfg.batch; ++b) {
        const Sample s = draw_sample(model, cfg, data, rng);
        num::Tape tape;
        num::Binding bind(tape, r.params, true);
        const SampleLoss l = sample_loss(bind, model, s, cfg.loss, rec.rho);
        tape.backward(l.total);
        bind.collect(grads);
        rec.loss += l.total.value()[0];
        rec.cls += l.cls;
        rec.l1 += l.l1;
        rec.giou += l.giou;
      }
    } catch (const num::NumericError& e) {
      std::string where;
      if (cfg.dump_dir) {
        std::filesystem::create_directories(*cfg.dump_dir);
        const auto path = *cfg.dump_dir / "diverged.ckpt";
        num::save_checkpoint(num::Checkpoint{r.params, {{"step", std::to_string(step)}}}, path);
        where = "; state written to " + path.string();
      }
      throw DivergenceError("training diverged at step " + std::to_string(step) + ": " + e.what() + where);
    }
    const double inv = 1.0 / static_cast<double>(cfg.batch);
    for (auto& [name, g] : grads)
      for (double& v : g.data()) v *= inv;
    rec.loss *= inv;
    rec.cls *= inv;
    rec.l1 *= inv;
    rec.giou *= inv;
    num::adamw_step(r.params, grads, opt);
    r.log.push_back(rec);
    if (on_step) on_step(rec);
    epoch_sum += rec.loss;
    if ((step + 1) % cfg.steps_per_epoch == 0) {
      r.epoch_loss.push_back(epoch_sum / static_cast<double>(cfg.steps_per_epoch));
      epoch_sum = 0;
    }
  }
  return r;
}

}  // namespace untrack::pipeline
