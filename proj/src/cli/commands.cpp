// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/cli/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>

#include "untrack/msi/io.hpp"
#include "untrack/numerics/checkpoint.hpp"
#include "untrack/numerics/rng.hpp"
#include "untrack/pipeline/dataset.hpp"
#include "untrack/pipeline/flops.hpp"
#include "untrack/pipeline/metrics.hpp"
#include "untrack/pipeline/report.hpp"
#include "untrack/pipeline/track.hpp"
#include "untrack/pipeline/train.hpp"
#include "untrack/reconstruct/reconstruct.hpp"

namespace untrack::cli {

namespace fs = std::filesystem;
using namespace pipeline;

namespace {

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

fs::path existing(const RunConfig& cfg, const std::string& key) {
  const fs::path p = cfg.path(key);
  if (p.empty()) throw ConfigError(key + " is required for this command");
  if (!fs::exists(p)) throw MissingFileError(key + ": '" + p.string() + "' does not exist");
  return p;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
  return os;
}

std::vector<msi::MsiSequence> dataset(const RunConfig& cfg) {
  auto data = load_dataset(existing(cfg, "data.root"));
  if (data.empty()) throw MissingFileError("data.root: no sequence directories in '" + cfg.str("data.root") + "'");
  return data;
}

void check_bands(const std::vector<msi::MsiSequence>& data, std::size_t bands) {
  for (const auto& s : data)
    if (s.bands.size() != bands) {
      throw num::ShapeError("sequence " + s.name + " has " + std::to_string(s.bands.size()) +
                            " bands but model.bands is " + std::to_string(bands));
    }
}

std::string summary_line(const Metrics& m) {
  return "AUC=" + fmt(m.auc) + " SR50=" + fmt(m.sr50) + " SR75=" + fmt(m.sr75) + " Pre=" + fmt(m.precision) +
         " PreN=" + fmt(m.norm_precision);
}

// Predictions for frames 2..T paired with their ground truth.
EvalReport evaluate_dir(const std::vector<msi::MsiSequence>& data, const fs::path& results) {
  std::vector<SequenceEval> evals;
  for (const auto& seq : data) {
    const fs::path file = results / (seq.name + ".txt");
    if (!fs::exists(file)) throw MissingFileError("no track file for sequence " + seq.name + " in '" + results.string() + "'");
    const TrackResult r = read_track(file);
    if (r.frames.size() + 1 != seq.size()) {
      throw num::ShapeError(file.string() + ": " + std::to_string(r.frames.size()) + " frames, sequence has " +
                            std::to_string(seq.size()) + " (expected one line per frame after the first)");
    }
    std::vector<msi::Annotation> gt(seq.annotations.begin() + 1, seq.annotations.end());
    evals.push_back({seq.name, seq.attributes, evaluate_sequence(r.boxes(), gt)});
  }
  return evaluate(std::move(evals));
}

void cmd_synth(const RunConfig& cfg, const fs::path& out, std::ostream& os) {
  const auto opts = scene_options(cfg);
  const auto families = cfg.list("data.family");
  if (families.empty()) throw ConfigError("data.family is empty");
  const auto seed = static_cast<std::uint64_t>(cfg.integer("run.seed"));
  std::size_t total = 0;
  for (std::size_t k = 0; k < families.size(); ++k) {
    msi::SceneFamily fam;
    try {
      fam = msi::parse_family(families[k]);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("data.family: ") + e.what());
    }
    auto data = synth_dataset(fam, cfg.count("data.count"), num::derive_seed(seed, k), opts);
    if (cfg.flag("data.rgb")) data = collapse_dataset(data);
    save_dataset(data, out);
    total += data.size();
    os << "synth: " << data.size() << " " << families[k] << " sequences\n";
  }
  os << "synth: wrote " << total << " sequences to " << out.string() << "\n";
}

void cmd_train(RunConfig& cfg, const fs::path& out, std::ostream& os) {
  const ModelConfig model = model_config(cfg);
  TrainConfig tc = train_config(cfg);
  tc.dump_dir = out;
  const auto data = dataset(cfg);
  check_bands(data, model.embed.bands);
  std::optional<num::ParamStore> init;
  if (!cfg.str("train.init").empty()) init = num::load_checkpoint(existing(cfg, "train.init")).params;

  auto log = open_out(out / "train_log.csv");
  log << "step,loss,cls,l1,giou,rho,lr\n";
  double window = 0;
  std::size_t seen = 0;
  const std::size_t every = std::max<std::size_t>(1, tc.total_steps() / 20);
  const TrainResult r = train(model, tc, data, std::move(init), [&](const StepRecord& s) {
    log << s.step << ',' << msi::format_exact(s.loss) << ',' << msi::format_exact(s.cls) << ','
        << msi::format_exact(s.l1) << ',' << msi::format_exact(s.giou) << ',' << msi::format_exact(s.rho) << ','
        << msi::format_exact(s.lr) << '\n';
    window += s.loss;
    if (++seen == every || s.step + 1 == tc.total_steps()) {
      os << "train: step " << s.step + 1 << "/" << tc.total_steps() << " loss " << fmt(window / static_cast<double>(seen), 4)
         << " rho " << fmt(s.rho) << "\n" << std::flush;
      window = 0;
      seen = 0;
    }
  });
  auto meta = model_metadata(cfg);
  meta["train.steps"] = std::to_string(tc.total_steps());
  meta["run.seed"] = cfg.str("run.seed");
  num::save_checkpoint({r.params, meta}, out / "model.ckpt");
  os << "train: " << r.params.parameter_count() << " parameters, epoch losses";
  for (double l : r.epoch_loss) os << ' ' << fmt(l, 4);
  os << "\ntrain: checkpoint " << (out / "model.ckpt").string() << "\n";
}

void cmd_track(RunConfig& cfg, const fs::path& out, std::ostream& os) {
  const num::Checkpoint ck = num::load_checkpoint(existing(cfg, "track.checkpoint"));
  apply_model_metadata(cfg, ck.metadata);
  const ModelConfig model = model_config(cfg);
  const auto data = dataset(cfg);
  check_bands(data, model.embed.bands);
  const bool masks = cfg.flag("track.masks");
  for (const auto& seq : data) {
    const TrackResult r = track(ck.params, model, seq, {masks});
    write_track(r, out / (seq.name + ".txt"));
    if (masks) {
      const fs::path dir = out / "masks" / seq.name;
      fs::create_directories(dir);
      for (const auto& f : r.frames) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "frame_%06zu", f.frame + 1);
        write_elimination_masks(f.trace, model.embed.search_grid(), model.embed.search_frames, dir / stem);
      }
    }
    os << "track: " << seq.name << " " << r.frames.size() << " frames\n";
  }
}

void cmd_eval(const RunConfig& cfg, const fs::path& out, std::ostream& os) {
  const EvalReport r = evaluate_dir(dataset(cfg), existing(cfg, "eval.results"));
  auto txt = open_out(out / "report.txt");
  write_eval_text(txt, r);
  auto csv = open_out(out / "report.csv");
  write_eval_csv(csv, r);
  write_eval_text(os, r);
  os << summary_line(r.overall) << "\n";
}

void cmd_plot(const RunConfig& cfg, const fs::path& out, std::ostream& os) {
  const auto data = dataset(cfg);
  std::vector<CurveSeries> series;
  const auto items = cfg.list("plot.results");
  if (items.empty()) throw ConfigError("plot.results needs at least one name=directory pair");
  for (const auto& item : items) {
    const auto eq = item.find('=');
    const std::string name = eq == std::string::npos ? fs::path(item).filename().string() : item.substr(0, eq);
    const fs::path dir = eq == std::string::npos ? fs::path(item) : fs::path(item.substr(eq + 1));
    if (!fs::exists(dir)) throw MissingFileError("plot.results: '" + dir.string() + "' does not exist");
    series.push_back({name, evaluate_dir(data, dir).overall});
    os << name << ": " << summary_line(series.back().metrics) << "\n";
  }
  const std::pair<CurveKind, const char*> kinds[] = {
      {CurveKind::success, "success"}, {CurveKind::precision, "precision"}, {CurveKind::norm_precision, "norm_precision"}};
  for (const auto& [kind, stem] : kinds) {
    auto svg = open_out(out / (std::string(stem) + ".svg"));
    write_curves_svg(svg, kind, series);
    auto csv = open_out(out / (std::string(stem) + ".csv"));
    write_curves_csv(csv, kind, series);
  }
  os << "plot: wrote success, precision and norm_precision charts to " << out.string() << "\n";
}

void cmd_flops(const RunConfig& cfg, const fs::path& out, std::ostream& os) {
  const ModelConfig base = model_config(cfg);
  const double rho = cfg.real("flops.rho");
  if (!(rho > 0 && rho <= 1)) throw ConfigError("flops.rho must lie in (0, 1]");
  auto variant = [&](prompt::PromptMode p, attn::AttnMode a) {
    ModelConfig m = base;
    m.prompt_mode = p;
    m.attn_mode = a;
    m.sync();
    return m;
  };
  const ModelConfig sym_np = variant(prompt::PromptMode::none, attn::AttnMode::full);
  const ModelConfig sym = variant(base.prompt_mode == prompt::PromptMode::none ? prompt::PromptMode::encoder : base.prompt_mode,
                                  attn::AttnMode::full);
  const ModelConfig asym = variant(sym.prompt_mode, attn::AttnMode::asymmetric);
  ModelConfig asym_elim = asym;
  asym_elim.eliminate = true;
  const std::vector<std::pair<std::string, FlopsBreakdown>> rows = {
      {"symmetric, no prompt", count_flops(sym_np, std::nullopt)},
      {"symmetric + prompt", count_flops(sym, std::nullopt)},
      {"asymmetric + prompt", count_flops(asym, std::nullopt)},
      {"asymmetric + prompt + elimination (rho " + fmt(rho, 2) + ")", count_flops(asym_elim, rho)},
  };
  auto csv = open_out(out / "flops.csv");
  write_flops_csv_header(csv);
  auto txt = open_out(out / "flops.txt");
  for (const auto& [label, f] : rows) {
    write_flops_text(txt, label, f);
    write_flops_csv_row(csv, label, f);
    os << std::left;
    os << label << ": " << fmt(static_cast<double>(f.macs()) / 1e9, 2) << " GMAC (" << fmt(static_cast<double>(f.flops()) / 1e9, 2)
       << " GFLOP)\n";
  }
  auto pct = [](std::uint64_t from, std::uint64_t to) {
    return fmt(100.0 * (static_cast<double>(from) - static_cast<double>(to)) / static_cast<double>(from), 1);
  };
  os << "asymmetric vs symmetric: " << pct(rows[1].second.macs(), rows[2].second.macs()) << "% fewer\n";
  os << "elimination vs asymmetric: " << pct(rows[2].second.macs(), rows[3].second.macs()) << "% fewer\n";
  os << "search-frame ladder (all tokens kept / with elimination):\n";
  for (std::size_t n = 1; n <= cfg.count("flops.max_frames"); ++n) {
    ModelConfig m = asym_elim;
    m.embed.search_frames = n;
    m.sync();
    const FlopsBreakdown all = count_flops(m, std::nullopt), pruned = count_flops(m, rho);
    os << "  N=" << n << ": " << fmt(static_cast<double>(all.macs()) / 1e9, 2) << " / "
       << fmt(static_cast<double>(pruned.macs()) / 1e9, 2) << " GMAC\n";
    write_flops_csv_row(csv, "ladder N=" + std::to_string(n) + " all tokens", all);
    write_flops_csv_row(csv, "ladder N=" + std::to_string(n) + " elimination", pruned);
  }
  os << "convention: " << kFlopsConvention << "\n";
}

void cmd_reconstruct(const RunConfig& cfg, const fs::path& out, std::ostream& os) {
  num::Checkpoint ck = num::load_checkpoint(existing(cfg, "reconstruct.checkpoint"));
  const std::string& name = cfg.str("reconstruct.param");
  if (!ck.params.contains(name)) throw ConfigError("reconstruct.param: checkpoint has no parameter '" + name + "'");
  const std::size_t bands = cfg.count("model.bands");
  msi::BandSpec spec = msi::BandSpec::must();
  if (spec.size() != bands) throw ConfigError("reconstruct: model.bands must be " + std::to_string(spec.size()) + " (MUST bands)");
  reconstruct::ExpandOptions opts;
  opts.scratch_infrared = cfg.flag("reconstruct.scratch_infrared");
  opts.seed = static_cast<std::uint64_t>(cfg.integer("run.seed"));
  const num::Array& before = ck.params.get(name);
  const std::string before_shape = num::to_string(before.shape());
  num::Array after = reconstruct::expand_input_layer(before, spec, opts);
  ck.params.replace(name, std::move(after));
  ck.metadata["model.bands"] = std::to_string(bands);
  num::save_checkpoint(ck, out / "model.ckpt");
  os << "reconstruct: " << name << " " << before_shape << " -> "
     << num::to_string(ck.params.get(name).shape()) << "\n";
  os << "reconstruct: checkpoint " << (out / "model.ckpt").string() << "\n";
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"synth", "train", "track", "eval", "flops", "reconstruct", "plot"};
  return names;
}

fs::path output_dir(const std::string& command, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* root = std::getenv("UNTRACK_OUT"); root && *root) return fs::path(root) / command;
  return fs::path("untrack_out") / command;
}

void run_command(const std::string& name, RunConfig cfg, const fs::path& out, std::ostream& os) {
  const std::string& recorded = cfg.str("run.command");
  if (!recorded.empty() && recorded != name) {
    throw ConfigError("configuration was resolved for '" + recorded + "', not '" + name + "'");
  }
  cfg.set("run.command", name);
  fs::create_directories(out);
  if (name == "synth") cmd_synth(cfg, out, os);
  else if (name == "train") cmd_train(cfg, out, os);
  else if (name == "track") cmd_track(cfg, out, os);
  else if (name == "eval") cmd_eval(cfg, out, os);
  else if (name == "flops") cmd_flops(cfg, out, os);
  else if (name == "reconstruct") cmd_reconstruct(cfg, out, os);
  else if (name == "plot") cmd_plot(cfg, out, os);
  else throw ConfigError("unknown command '" + name + "'");
  auto resolved = open_out(out / "config.ini");
  cfg.write(resolved);
}

}  // namespace untrack::cli
