// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/pipeline/report.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace untrack::pipeline {

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void metric_row(std::ostream& os, const std::string& name, const Metrics& m) {
  os << name << ',' << m.frames << ',' << fixed(m.auc, 6) << ',' << fixed(m.sr50, 6) << ',' << fixed(m.sr75, 6) << ','
     << fixed(m.precision, 6) << ',' << fixed(m.norm_precision, 6) << '\n';
}

void metric_line(std::ostream& os, const std::string& name, const Metrics& m) {
  os << std::left << std::setw(16) << name << std::right << std::setw(8) << m.frames;
  for (double v : {m.auc, m.sr50, m.sr75, m.precision, m.norm_precision}) os << std::setw(9) << fixed(100 * v, 1);
  os << '\n';
}

struct Axis {
  double max;
  std::size_t steps;
  const char* label;
  const char* title;
};

Axis axis_for(CurveKind k) {
  switch (k) {
    case CurveKind::success: return {1.0, kOverlapSteps, "overlap threshold", "Success plot"};
    case CurveKind::precision: return {50.0, kPrecisionSteps, "location error threshold (px)", "Precision plot"};
    case CurveKind::norm_precision:
      return {0.5, kNormPrecisionSteps, "normalized location error threshold", "Normalized precision plot"};
  }
  return {1.0, 1, "", ""};
}

const double* curve(const Metrics& m, CurveKind k) {
  switch (k) {
    case CurveKind::success: return m.success.data();
    case CurveKind::precision: return m.precision_curve.data();
    case CurveKind::norm_precision: return m.norm_precision_curve.data();
  }
  return nullptr;
}

double legend_value(const Metrics& m, CurveKind k) {
  switch (k) {
    case CurveKind::success: return m.auc;
    case CurveKind::precision: return m.precision;
    case CurveKind::norm_precision: return m.norm_precision;
  }
  return 0;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_eval_text(std::ostream& os, const EvalReport& r) {
  os << std::left << std::setw(16) << "sequence" << std::right << std::setw(8) << "frames";
  for (const char* h : {"AUC", "SR0.5", "SR0.75", "Pre", "PreN"}) os << std::setw(9) << h;
  os << '\n';
  for (const auto& s : r.sequences) metric_line(os, s.name, s.metrics);
  metric_line(os, "overall", r.overall);
  if (!r.by_attribute.empty()) {
    os << "\nper attribute (sequence count in brackets)\n";
    for (const auto& [a, m] : r.by_attribute) {
      metric_line(os, std::string(msi::to_string(a)) + " [" + std::to_string(r.attribute_counts.at(a)) + "]", m);
    }
  }
}

void write_eval_csv(std::ostream& os, const EvalReport& r) {
  os << "name,frames,auc,sr50,sr75,precision,norm_precision\n";
  for (const auto& s : r.sequences) metric_row(os, s.name, s.metrics);
  metric_row(os, "overall", r.overall);
  for (const auto& [a, m] : r.by_attribute) metric_row(os, "attr:" + std::string(msi::to_string(a)), m);
}

void write_flops_text(std::ostream& os, const std::string& label, const FlopsBreakdown& f) {
  auto g = [](std::uint64_t v) { return fixed(static_cast<double>(v) / 1e9, 3); };
  os << label << "\n"
     << "  embedding       " << g(f.embedding) << " GMAC\n"
     << "  attention QK    " << g(f.qk) << " GMAC\n"
     << "  attention AV    " << g(f.av) << " GMAC\n"
     << "  projections     " << g(f.projections) << " GMAC\n"
     << "  mlp             " << g(f.mlp) << " GMAC\n"
     << "  prompt encoder  " << g(f.prompt_encoder) << " GMAC\n"
     << "  head            " << g(f.head) << " GMAC\n"
     << "  total           " << g(f.macs()) << " GMAC = " << g(f.flops()) << " GFLOP\n"
     << "  search rows per layer:";
  for (const auto& l : f.layers) {
    os << ' ' << l.search;
    if (l.search_kept != l.search) os << "->" << l.search_kept;
  }
  os << "\n  convention: " << kFlopsConvention << '\n';
}

void write_flops_csv_header(std::ostream& os) {
  os << "profile,embedding,qk,av,projections,mlp,prompt_encoder,head,total_macs,total_flops\n";
}

void write_flops_csv_row(std::ostream& os, const std::string& label, const FlopsBreakdown& f) {
  os << label << ',' << f.embedding << ',' << f.qk << ',' << f.av << ',' << f.projections << ',' << f.mlp << ','
     << f.prompt_encoder << ',' << f.head << ',' << f.macs() << ',' << f.flops() << '\n';
}

void write_curves_csv(std::ostream& os, CurveKind kind, const std::vector<CurveSeries>& series) {
  const Axis ax = axis_for(kind);
  os << "threshold";
  for (const auto& s : series) os << ',' << s.name;
  os << '\n';
  for (std::size_t k = 0; k < ax.steps; ++k) {
    os << fixed(ax.max * static_cast<double>(k) / static_cast<double>(ax.steps - 1), 3);
    for (const auto& s : series) os << ',' << fixed(curve(s.metrics, kind)[k], 6);
    os << '\n';
  }
}

void write_curves_svg(std::ostream& os, CurveKind kind, const std::vector<CurveSeries>& series) {
  static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
  const Axis ax = axis_for(kind);
  const double W = 480, H = 360, left = 60, right = 20, top = 30, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double x) { return left + pw * x / ax.max; };
  auto py = [&](double y) { return top + ph * (1.0 - y); };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << ax.title << "</text>\n";
  for (int i = 0; i <= 5; ++i) {
    const double f = i / 5.0;
    os << "<line x1=\"" << px(0) << "\" x2=\"" << px(ax.max) << "\" y1=\"" << py(f) << "\" y2=\"" << py(f)
       << "\" stroke=\"#ddd\"/>\n"
       << "<text x=\"" << left - 6 << "\" y=\"" << py(f) + 4 << "\" text-anchor=\"end\">" << fixed(f, 1) << "</text>\n"
       << "<text x=\"" << px(ax.max * f) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
       << fixed(ax.max * f, ax.max >= 10 ? 0 : 2) << "</text>\n";
  }
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n"
     << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << ax.label << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* c = colors[i % std::size(colors)];
    const double* v = curve(series[i].metrics, kind);
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t k = 0; k < ax.steps; ++k) {
      os << fixed(px(ax.max * static_cast<double>(k) / static_cast<double>(ax.steps - 1)), 2) << ','
         << fixed(py(v[k]), 2) << ' ';
    }
    os << "\"/>\n";
    const double ly = top + 14 + 14 * static_cast<double>(i);
    const double lx = kind == CurveKind::success ? left + 8 : left + pw - 170;
    const double ly2 = kind == CurveKind::success ? top + ph - 10 - 14 * static_cast<double>(series.size() - 1 - i) : ly;
    os << "<line x1=\"" << lx << "\" x2=\"" << lx + 18 << "\" y1=\"" << ly2 - 4 << "\" y2=\"" << ly2 - 4
       << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << lx + 24 << "\" y=\"" << ly2 << "\">" << escape_xml(series[i].name) << " ["
       << fixed(100 * legend_value(series[i].metrics, kind), 1) << "]</text>\n";
  }
  os << "</svg>\n";
}

std::vector<std::filesystem::path> write_elimination_masks(const attn::EliminationTrace& trace, std::size_t grid,
                                                           std::size_t frames, const std::filesystem::path& stem) {
  const std::size_t per = grid * grid;
  std::vector<unsigned char> shade(per * frames, 255);
  const std::size_t layers = trace.size();
  for (std::size_t l = 0; l < layers; ++l) {
    const auto value = static_cast<unsigned char>(layers > 1 ? 160 * l / (layers - 1) : 0);
    for (std::size_t id : trace[l].dropped) {
      if (id >= shade.size()) throw std::out_of_range("elimination mask: search id beyond the window");
      shade[id] = value;
    }
  }
  std::vector<std::filesystem::path> files;
  for (std::size_t f = 0; f < frames; ++f) {
    std::filesystem::path p = stem;
    p += "_s" + std::to_string(f + 1) + ".pgm";
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
    os << "P5\n" << grid << ' ' << grid << "\n255\n";
    os.write(reinterpret_cast<const char*>(shade.data() + f * per), static_cast<std::streamsize>(per));
    files.push_back(p);
  }
  return files;
}

}  // namespace untrack::pipeline
