// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#include "untrack/msi/types.hpp"

#include <algorithm>
#include <cmath>

namespace untrack::msi {

BandSpec::BandSpec(std::vector<Band> bands) : bands_(std::move(bands)) {
  for (std::size_t i = 0; i < bands_.size(); ++i) {
    const Band& b = bands_[i];
    if (!(b.start < b.end)) throw DataError("band " + std::to_string(i + 1) + ": start must be below end");
    if (b.center < b.start || b.center > b.end) throw DataError("band " + std::to_string(i + 1) + ": center outside range");
    if (i > 0 && !(bands_[i - 1].center < b.center)) throw DataError("bands must be sorted by center");
  }
}

BandSpec BandSpec::must() {
  return BandSpec({{395, 450, 422.5, 55},
                   {455, 520, 487.5, 65},
                   {525, 575, 550, 50},
                   {580, 625, 602.5, 45},
                   {630, 690, 660, 60},
                   {705, 745, 725, 40},
                   {750, 820, 785, 70},
                   {825, 950, 887.5, 125}});
}

BandSpec BandSpec::cie_rgb() {
  return BandSpec({{kCieBlue - 5, kCieBlue + 5, kCieBlue, 10},
                   {kCieGreen - 5, kCieGreen + 5, kCieGreen, 10},
                   {kCieRed - 5, kCieRed + 5, kCieRed, 10}});
}

std::vector<double> BandSpec::centers() const {
  std::vector<double> out;
  out.reserve(bands_.size());
  for (const Band& b : bands_) out.push_back(b.center);
  return out;
}

namespace {
constexpr std::array<std::string_view, kAttributeCount> kAttributeNames = {"POC", "BC", "LR", "SOB", "SV", "MB",
                                                                           "FM",  "SC", "OV", "IV",  "FOC", "CM"};
}

std::string_view to_string(Attribute a) { return kAttributeNames[static_cast<std::size_t>(a)]; }

std::optional<Attribute> parse_attribute(std::string_view s) {
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    if (kAttributeNames[i] == s) return static_cast<Attribute>(i);
  }
  return std::nullopt;
}

const std::array<Attribute, kAttributeCount>& all_attributes() {
  static const std::array<Attribute, kAttributeCount> all = [] {
    std::array<Attribute, kAttributeCount> a{};
    for (std::size_t i = 0; i < kAttributeCount; ++i) a[i] = static_cast<Attribute>(i);
    return a;
  }();
  return all;
}

double iou(const Box& a, const Box& b) {
  const double ax2 = a.x + a.w, ay2 = a.y + a.h, bx2 = b.x + b.w, by2 = b.y + b.h;
  const double iw = std::max(0.0, std::min(ax2, bx2) - std::max(a.x, b.x));
  const double ih = std::max(0.0, std::min(ay2, by2) - std::max(a.y, b.y));
  const double inter = iw * ih;
  // Areas from the corners, so identical boxes give exactly 1.
  const double uni = (ax2 - a.x) * (ay2 - a.y) + (bx2 - b.x) * (by2 - b.y) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

void validate_annotation(const Annotation& a, std::size_t width, std::size_t height) {
  if (a.flag != 0 && a.flag != 1) throw DataError("status flag must be 0 or 1");
  if (a.flag == 1) {
    if (!(a.box == Box{})) throw DataError("hidden target must carry the box [0,0,0,0]");
    return;
  }
  if (!(a.box.w > 0 && a.box.h > 0)) throw DataError("visible target needs a positive box extent");
  if (a.box.x < 0 || a.box.y < 0 || a.box.x + a.box.w > static_cast<double>(width) ||
      a.box.y + a.box.h > static_cast<double>(height)) {
    throw DataError("box lies outside the frame");
  }
}

MsiFrame::MsiFrame(std::size_t height, std::size_t width, std::size_t bands, float fill)
    : height_(height), width_(width), bands_(bands), data_(height * width * bands, fill) {}

MsiFrame::MsiFrame(std::size_t height, std::size_t width, std::size_t bands, std::vector<float> data)
    : height_(height), width_(width), bands_(bands), data_(std::move(data)) {
  if (data_.size() != height * width * bands) throw DataError("frame buffer size does not match H*W*B");
}

bool MsiFrame::in_unit_range() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return v >= 0.0f && v <= 1.0f; });
}

void MsiSequence::validate() const {
  if (frames.size() != annotations.size()) {
    throw DataError("sequence '" + name + "': " + std::to_string(frames.size()) + " frames but " +
                    std::to_string(annotations.size()) + " annotations");
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const MsiFrame& f = frames[i];
    if (f.bands() != bands.size()) {
      throw DataError("frame " + std::to_string(i + 1) + ": " + std::to_string(f.bands()) + " bands, band table has " +
                      std::to_string(bands.size()));
    }
    if (f.height() != frames.front().height() || f.width() != frames.front().width()) {
      throw DataError("frame " + std::to_string(i + 1) + ": size differs from frame 1");
    }
    try {
      validate_annotation(annotations[i], f.width(), f.height());
    } catch (const DataError& e) {
      throw DataError("frame " + std::to_string(i + 1) + ": " + e.what());
    }
  }
}

}  // namespace untrack::msi
