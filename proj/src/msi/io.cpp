// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/msi/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace untrack::msi {

namespace fs = std::filesystem;

namespace {

constexpr int kFormatVersion = 1;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw DataError("malformed " + what + ": '" + s + "'");
  return v;
}

std::size_t parse_size(const std::string& s, const std::string& what) {
  std::size_t v = 0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw DataError("malformed " + what + ": '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string frame_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06zu.f32", index);
  return buf;
}

}  // namespace

std::string format_exact(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_exact failed");
  return std::string(buf, ptr);
}

void write_groundtruth(const std::vector<Annotation>& annos, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write '" + file.string() + "'");
  for (const Annotation& a : annos) {
    out << format_exact(a.box.x) << ',' << format_exact(a.box.y) << ',' << format_exact(a.box.w) << ','
        << format_exact(a.box.h) << ',' << a.flag << '\n';
  }
}

std::vector<Annotation> read_groundtruth(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open '" + file.string() + "'");
  std::vector<Annotation> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 5) {
      throw DataError(file.filename().string() + " line " + std::to_string(lineno) + " (frame " +
                      std::to_string(out.size() + 1) + "): expected x,y,w,h,flag");
    }
    const std::string where = "annotation for frame " + std::to_string(out.size() + 1);
    Annotation a;
    a.box = Box{parse_double(f[0], where), parse_double(f[1], where), parse_double(f[2], where), parse_double(f[3], where)};
    a.flag = static_cast<int>(parse_size(f[4], where));
    out.push_back(a);
  }
  return out;
}

void save_sequence(const MsiSequence& seq, const fs::path& dir) {
  seq.validate();
  fs::create_directories(dir);
  const std::size_t H = seq.frames.empty() ? 0 : seq.frames.front().height();
  const std::size_t W = seq.frames.empty() ? 0 : seq.frames.front().width();
  {
    std::ofstream meta(dir / "meta");
    if (!meta) throw DataError("cannot write '" + (dir / "meta").string() + "'");
    meta << "version = " << kFormatVersion << '\n';
    meta << "name = " << seq.name << '\n';
    meta << "height = " << H << '\n';
    meta << "width = " << W << '\n';
    meta << "bands = " << seq.bands.size() << '\n';
    meta << "fps = " << format_exact(seq.fps) << '\n';
    meta << "frames = " << seq.frames.size() << '\n';
    for (const Band& b : seq.bands.bands()) {
      meta << "band = " << format_exact(b.start) << ' ' << format_exact(b.end) << ' ' << format_exact(b.center) << ' '
           << format_exact(b.width) << '\n';
    }
    meta << "attributes =";
    bool first = true;
    for (Attribute a : seq.attributes) {
      meta << (first ? " " : ",") << to_string(a);
      first = false;
    }
    meta << '\n';
  }
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const MsiFrame& f = seq.frames[i];
    std::vector<unsigned char> buf(f.data().size() * 4);
    for (std::size_t k = 0; k < f.data().size(); ++k) {
      const auto u = std::bit_cast<std::uint32_t>(f.data()[k]);
      for (int j = 0; j < 4; ++j) buf[k * 4 + j] = static_cast<unsigned char>((u >> (8 * j)) & 0xff);
    }
    std::ofstream out(dir / frame_name(i + 1), std::ios::binary);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("failed writing frame " + std::to_string(i + 1));
  }
  write_groundtruth(seq.annotations, dir / "groundtruth.txt");
}

SequenceHeader load_header(const fs::path& dir) {
  std::ifstream in(dir / "meta");
  if (!in) throw DataError("missing header '" + (dir / "meta").string() + "'");
  SequenceHeader h;
  std::map<std::string, std::string> kv;
  std::vector<Band> bands;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("malformed header line " + std::to_string(lineno) + ": '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "band") {
      std::istringstream bs(value);
      std::string a, b, c, d, extra;
      if (!(bs >> a >> b >> c >> d) || (bs >> extra)) throw DataError("malformed band line " + std::to_string(lineno));
      bands.push_back(Band{parse_double(a, "band"), parse_double(b, "band"), parse_double(c, "band"), parse_double(d, "band")});
      continue;
    }
    if (!kv.emplace(key, value).second) throw DataError("duplicate header key '" + key + "'");
  }
  for (const char* required : {"version", "height", "width", "bands", "fps", "frames"}) {
    if (!kv.count(required)) throw DataError(std::string("header lacks '") + required + "'");
  }
  if (parse_size(kv["version"], "version") != kFormatVersion) throw DataError("unsupported header version " + kv["version"]);
  h.name = kv.count("name") ? kv["name"] : dir.filename().string();
  h.height = parse_size(kv["height"], "height");
  h.width = parse_size(kv["width"], "width");
  h.frames = parse_size(kv["frames"], "frames");
  h.fps = parse_double(kv["fps"], "fps");
  const std::size_t nb = parse_size(kv["bands"], "bands");
  if (bands.size() != nb) {
    throw DataError("header declares " + std::to_string(nb) + " bands but lists " + std::to_string(bands.size()));
  }
  h.bands = BandSpec(std::move(bands));
  if (kv.count("attributes") && !kv["attributes"].empty()) {
    for (const std::string& tok : split(kv["attributes"], ',')) {
      const auto a = parse_attribute(tok);
      if (!a) throw DataError("unknown attribute tag '" + tok + "'");
      h.attributes.insert(*a);
    }
  }
  return h;
}

MsiSequence load_sequence(const fs::path& dir) {
  const SequenceHeader h = load_header(dir);
  MsiSequence seq;
  seq.name = h.name;
  seq.bands = h.bands;
  seq.fps = h.fps;
  seq.attributes = h.attributes;
  const std::size_t n = h.height * h.width * h.bands.size();
  for (std::size_t i = 1; i <= h.frames; ++i) {
    const fs::path p = dir / frame_name(i);
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("missing frame " + std::to_string(i) + " ('" + p.filename().string() + "')");
    std::vector<unsigned char> buf(n * 4);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size() || in.peek() != EOF) {
      throw DataError("frame " + std::to_string(i) + ": size does not match " + std::to_string(h.height) + "x" +
                      std::to_string(h.width) + "x" + std::to_string(h.bands.size()));
    }
    std::vector<float> data(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::uint32_t u = 0;
      for (int j = 0; j < 4; ++j) u |= static_cast<std::uint32_t>(buf[k * 4 + j]) << (8 * j);
      data[k] = std::bit_cast<float>(u);
    }
    seq.frames.emplace_back(h.height, h.width, h.bands.size(), std::move(data));
  }
  seq.annotations = read_groundtruth(dir / "groundtruth.txt");
  if (seq.annotations.size() < seq.frames.size()) {
    throw DataError("groundtruth.txt ends before frame " + std::to_string(seq.annotations.size() + 1) + " of " +
                    std::to_string(seq.frames.size()));
  }
  if (seq.annotations.size() > seq.frames.size()) {
    throw DataError("groundtruth.txt has an extra line for frame " + std::to_string(seq.frames.size() + 1));
  }
  seq.validate();
  return seq;
}

}  // namespace untrack::msi
