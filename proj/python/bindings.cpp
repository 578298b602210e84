// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "untrack/attn/attention.hpp"
#include "untrack/cli/commands.hpp"
#include "untrack/msi/io.hpp"
#include "untrack/pipeline/dataset.hpp"
#include "untrack/pipeline/flops.hpp"
#include "untrack/pipeline/metrics.hpp"
#include "untrack/reconstruct/reconstruct.hpp"

namespace py = pybind11;
using namespace untrack;

namespace {

py::array_t<float> frames_array(const msi::MsiSequence& s) {
  const std::size_t T = s.size(), B = s.bands.size();
  const std::size_t H = T ? s.frames[0].height() : 0, W = T ? s.frames[0].width() : 0;
  py::array_t<float> out({T, B, H, W});
  float* dst = out.mutable_data();
  for (const auto& f : s.frames) dst = std::copy(f.data().begin(), f.data().end(), dst);
  return out;
}

py::array_t<double> boxes_array(const msi::MsiSequence& s) {
  py::array_t<double> out({s.size(), std::size_t{5}});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& a = s.annotations[i];
    v(i, 0) = a.box.x;
    v(i, 1) = a.box.y;
    v(i, 2) = a.box.w;
    v(i, 3) = a.box.h;
    v(i, 4) = a.flag;
  }
  return out;
}

py::dict metrics_dict(const pipeline::Metrics& m) {
  py::dict d;
  d["frames"] = m.frames;
  d["auc"] = m.auc;
  d["sr50"] = m.sr50;
  d["sr75"] = m.sr75;
  d["precision"] = m.precision;
  d["norm_precision"] = m.norm_precision;
  d["success"] = std::vector<double>(m.success.begin(), m.success.end());
  return d;
}

py::dict flops_dict(const pipeline::FlopsBreakdown& f) {
  py::dict d;
  d["embedding"] = f.embedding;
  d["qk"] = f.qk;
  d["av"] = f.av;
  d["projections"] = f.projections;
  d["mlp"] = f.mlp;
  d["prompt_encoder"] = f.prompt_encoder;
  d["head"] = f.head;
  d["macs"] = f.macs();
  d["flops"] = f.flops();
  std::vector<std::size_t> alive;
  for (const auto& l : f.layers) alive.push_back(l.search_kept);
  d["search_rows"] = alive;
  return d;
}

cli::RunConfig config_from(const std::map<std::string, std::string>& settings) {
  cli::RunConfig c;
  for (const auto& [k, v] : settings) c.set(k, v);
  return c;
}

}  // namespace

PYBIND11_MODULE(_untrack, m) {
  m.doc() = "Multispectral one-stream tracker: data synthesis, metrics, cost accounting and the command runner";

  py::register_exception<cli::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<cli::MissingFileError>(m, "MissingFileError", PyExc_FileNotFoundError);
  py::register_exception<msi::DataError>(m, "DataError", PyExc_RuntimeError);

  py::class_<msi::MsiSequence>(m, "Sequence")
      .def_readonly("name", &msi::MsiSequence::name)
      .def_property_readonly("frames", &frames_array, "float32 [T, B, H, W]")
      .def_property_readonly("annotations", &boxes_array, "[T, 5]: x, y, w, h, flag")
      .def_property_readonly("band_centers",
                             [](const msi::MsiSequence& s) {
                               std::vector<double> c;
                               for (const auto& b : s.bands.bands()) c.push_back(b.center);
                               return c;
                             })
      .def_property_readonly("attributes",
                             [](const msi::MsiSequence& s) {
                               std::vector<std::string> out;
                               for (auto a : s.attributes) out.emplace_back(msi::to_string(a));
                               return out;
                             })
      .def("__len__", &msi::MsiSequence::size)
      .def("save", [](const msi::MsiSequence& s, const std::filesystem::path& dir) { msi::save_sequence(s, dir); });

  m.def(
      "synth",
      [](const std::string& family, std::size_t count, std::uint64_t seed, std::size_t frames, bool rgb) {
        msi::SceneOptions o;
        o.frames = frames;
        auto data = pipeline::synth_dataset(msi::parse_family(family), count, seed, o);
        return rgb ? pipeline::collapse_dataset(data) : data;
      },
      py::arg("family") = "plain", py::arg("count") = 1, py::arg("seed") = 0, py::arg("frames") = 30,
      py::arg("rgb") = false);
  m.def("load_sequence", [](const std::filesystem::path& dir) { return msi::load_sequence(dir); });

  m.def(
      "evaluate",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> pred,
         py::array_t<double, py::array::c_style | py::array::forcecast> gt) {
        if (pred.ndim() != 2 || pred.shape(1) != 4) throw std::invalid_argument("pred must be [n, 4]");
        if (gt.ndim() != 2 || (gt.shape(1) != 4 && gt.shape(1) != 5)) throw std::invalid_argument("gt must be [n, 4] or [n, 5]");
        auto p = pred.unchecked<2>();
        auto g = gt.unchecked<2>();
        std::vector<msi::Box> pb;
        std::vector<msi::Annotation> ga;
        for (py::ssize_t i = 0; i < pred.shape(0); ++i) pb.push_back({p(i, 0), p(i, 1), p(i, 2), p(i, 3)});
        for (py::ssize_t i = 0; i < gt.shape(0); ++i) {
          const int flag = gt.shape(1) == 5 ? static_cast<int>(g(i, 4)) : 0;
          ga.push_back({flag ? msi::Box{} : msi::Box{g(i, 0), g(i, 1), g(i, 2), g(i, 3)}, flag});
        }
        return metrics_dict(pipeline::evaluate_sequence(pb, ga));
      },
      py::arg("pred"), py::arg("gt"), "One-pass metrics for one sequence; gt may carry a fifth flag column.");

  m.def(
      "count_flops",
      [](const std::map<std::string, std::string>& settings, std::optional<double> rho) {
        const auto cfg = cli::model_config(config_from(settings));
        return flops_dict(rho ? pipeline::count_flops(cfg, rho) : pipeline::count_flops(cfg));
      },
      py::arg("settings") = std::map<std::string, std::string>{}, py::arg("rho") = py::none(),
      "MAC counts for the model.* settings (e.g. {'model.profile': 'paper'}).");

  m.def(
      "keep_ratio",
      [](std::size_t step, std::size_t total, double start, double end) {
        attn::AttnConfig c;
        c.total_steps = total;
        c.rho_start = start;
        c.rho_end = end;
        return attn::keep_ratio(step, c);
      },
      py::arg("step"), py::arg("total"), py::arg("start") = 1.0, py::arg("end") = 0.7);
  m.def("keep_count", &attn::keep_count, py::arg("rho"), py::arg("n_prompt"), py::arg("n_template"),
        py::arg("n_search"));

  m.def(
      "blend",
      [](double wavelength) {
        reconstruct::RgbAnchors a;
        const auto b = reconstruct::blend_for(wavelength, a);
        return std::make_tuple(b.blue, b.green, b.red);
      },
      py::arg("wavelength"), "Weights (blue, green, red) used to rebuild a band at this wavelength.");

  m.def(
      "run",
      [](const std::string& command, const std::map<std::string, std::string>& settings,
         const std::filesystem::path& out) {
        std::ostringstream os;
        cli::run_command(command, config_from(settings), out, os);
        return os.str();
      },
      py::arg("command"), py::arg("settings") = std::map<std::string, std::string>{}, py::arg("out"),
      "Run a command-line subcommand in-process; returns its summary text.");
}
