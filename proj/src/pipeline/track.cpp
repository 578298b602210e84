// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/pipeline/track.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "untrack/msi/io.hpp"
#include "untrack/prompt/prompt_encoder.hpp"

namespace untrack::pipeline {

std::vector<msi::Box> TrackResult::boxes() const {
  std::vector<msi::Box> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.box);
  return out;
}

namespace {

// Keeps the next crop reference inside sensible bounds after a bad decode.
msi::Box next_reference(const msi::Box& pred, const msi::Box& prev, std::size_t width, std::size_t height) {
  const double W = static_cast<double>(width), H = static_cast<double>(height);
  const bool finite = std::isfinite(pred.x) && std::isfinite(pred.y) && std::isfinite(pred.w) && std::isfinite(pred.h);
  if (!finite) return prev;
  const double w = std::clamp(pred.w, 2.0, W), h = std::clamp(pred.h, 2.0, H);
  const double cx = std::clamp(pred.cx(), 0.0, W), cy = std::clamp(pred.cy(), 0.0, H);
  return msi::Box{cx - 0.5 * w, cy - 0.5 * h, w, h};
}

}  // namespace

TrackResult track(const num::ParamStore& params, const ModelConfig& cfg, const msi::MsiSequence& seq,
                  const TrackOptions& opts) {
  cfg.validate();
  const std::size_t N = cfg.embed.search_frames;
  if (seq.size() < 2) throw msi::DataError("track: sequence " + seq.name + " needs at least 2 frames");
  if (!seq.annotations.front().visible()) throw msi::DataError("track: first-frame target of " + seq.name + " is hidden");
  if (seq.bands.size() != cfg.embed.bands) {
    throw msi::DataError("track: sequence " + seq.name + " has " + std::to_string(seq.bands.size()) +
                         " bands, model expects " + std::to_string(cfg.embed.bands));
  }
  const msi::Box init = seq.annotations.front().box;
  const num::Array templ = crop_input(seq.frames.front(), init, cfg.template_factor, cfg.embed.template_size).image;
  const std::optional<double> rho = cfg.eliminate ? std::optional<double>(cfg.attn.rho_end) : std::nullopt;

  TrackResult out;
  out.sequence = seq.name;
  prompt::PromptState prompt_state(params);
  msi::Box ref = init;
  for (std::size_t t = 1; t < seq.size(); ++t) {
    std::vector<num::Array> search;
    msi::CropMapping mapping;
    for (std::size_t n = 0; n < N; ++n) {
      const std::size_t f = t + 1 >= N - n ? t + 1 - (N - n) : 0;
      const CropInput c = crop_input(seq.frames[f], ref, cfg.search_factor, cfg.embed.search_size);
      search.push_back(c.image);
      mapping = c.mapping;
    }
    num::Tape tape;
    num::Binding bind(tape, params, false);
    std::optional<num::Var> p;
    if (cfg.embed.prompt_len > 0) p = tape.constant(prompt_state.current().tokens);
    const ForwardOutput fo = forward(bind, cfg, templ, search, p, rho);
    const head::Decoded d = head::decode(cfg.head, fo.maps.back().cls.value(), fo.maps.back().reg.value(), mapping);

    FrameResult fr;
    fr.frame = t;
    fr.box = d.frame_box;
    fr.confidence = d.confidence;
    fr.mapping = mapping;
    if (opts.keep_traces) {
      fr.trace = fo.trace;
      fr.prompt = prompt_state.current().tokens;
    }
    if (fo.next_prompt.valid()) fr.prompt_rejected = !prompt_state.update(fo.next_prompt.value(), t);
    out.frames.push_back(std::move(fr));
    ref = next_reference(d.frame_box, ref, seq.frames[t].width(), seq.frames[t].height());
  }
  return out;
}

void write_track(const TrackResult& r, const std::filesystem::path& file) {
  std::ofstream os(file);
  if (!os) throw msi::DataError("cannot write '" + file.string() + "'");
  os << "# sequence " << r.sequence << "\n# frame x y w h confidence\n";
  for (const auto& f : r.frames) {
    os << f.frame << ' ' << msi::format_exact(f.box.x) << ' ' << msi::format_exact(f.box.y) << ' '
       << msi::format_exact(f.box.w) << ' ' << msi::format_exact(f.box.h) << ' ' << msi::format_exact(f.confidence)
       << '\n';
  }
  if (!os) throw msi::DataError("write failed for '" + file.string() + "'");
}

TrackResult read_track(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw msi::DataError("cannot read '" + file.string() + "'");
  TrackResult r;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.rfind("# sequence ", 0) == 0) {
      r.sequence = line.substr(11);
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    FrameResult f;
    if (!(ls >> f.frame >> f.box.x >> f.box.y >> f.box.w >> f.box.h >> f.confidence)) {
      throw msi::DataError(file.string() + ":" + std::to_string(lineno) + ": expected 'frame x y w h confidence'");
    }
    r.frames.push_back(f);
  }
  return r;
}

}  // namespace untrack::pipeline
