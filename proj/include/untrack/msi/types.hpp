// Copyright (C) 2026 untrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace untrack::msi {

/// Input data violates a documented invariant.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Band {
  double start = 0;   // nm
  double end = 0;     // nm
  double center = 0;  // nm
  double width = 0;   // nm
  friend bool operator==(const Band&, const Band&) = default;
};

/// Ordered list of spectral bands, sorted by center wavelength.
class BandSpec {
 public:
  BandSpec() = default;
  explicit BandSpec(std::vector<Band> bands);

  /// The eight-band camera of the reference UAV benchmark (390-950 nm).
  static BandSpec must();
  /// Three narrow bands sitting exactly on the CIE blue/green/red primaries.
  static BandSpec cie_rgb();

  std::size_t size() const noexcept { return bands_.size(); }
  const Band& operator[](std::size_t i) const { return bands_.at(i); }
  const std::vector<Band>& bands() const noexcept { return bands_; }
  std::vector<double> centers() const;
  friend bool operator==(const BandSpec&, const BandSpec&) = default;

 private:
  std::vector<Band> bands_;
};

inline constexpr double kCieRed = 700.0;
inline constexpr double kCieGreen = 546.1;
inline constexpr double kCieBlue = 435.8;

enum class Attribute { POC, BC, LR, SOB, SV, MB, FM, SC, OV, IV, FOC, CM };
inline constexpr std::size_t kAttributeCount = 12;

std::string_view to_string(Attribute a);
std::optional<Attribute> parse_attribute(std::string_view s);
const std::array<Attribute, kAttributeCount>& all_attributes();

/// Axis-aligned box in pixel units, upper-left corner plus extent.
struct Box {
  double x = 0, y = 0, w = 0, h = 0;

  double cx() const noexcept { return x + 0.5 * w; }
  double cy() const noexcept { return y + 0.5 * h; }
  double area() const noexcept { return w * h; }
  friend bool operator==(const Box&, const Box&) = default;
};

double iou(const Box& a, const Box& b);

/// One ground-truth line: box plus status flag (1 = target not visible).
struct Annotation {
  Box box;
  int flag = 0;

  bool visible() const noexcept { return flag == 0; }
  static Annotation hidden() { return Annotation{Box{}, 1}; }
  friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// Throws DataError if `a` breaks the annotation invariants for a frame of
/// the given size.
void validate_annotation(const Annotation& a, std::size_t width, std::size_t height);

/// H x W x B reflectance raster stored band-major as 32-bit floats.
class MsiFrame {
 public:
  MsiFrame() = default;
  MsiFrame(std::size_t height, std::size_t width, std::size_t bands, float fill = 0.0f);
  MsiFrame(std::size_t height, std::size_t width, std::size_t bands, std::vector<float> data);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t bands() const noexcept { return bands_; }
  std::size_t plane() const noexcept { return height_ * width_; }

  float& at(std::size_t band, std::size_t y, std::size_t x) { return data_[band * plane() + y * width_ + x]; }
  float at(std::size_t band, std::size_t y, std::size_t x) const { return data_[band * plane() + y * width_ + x]; }
  const std::vector<float>& data() const noexcept { return data_; }
  std::vector<float>& data() noexcept { return data_; }

  bool in_unit_range() const noexcept;
  friend bool operator==(const MsiFrame&, const MsiFrame&) = default;

 private:
  std::size_t height_ = 0, width_ = 0, bands_ = 0;
  std::vector<float> data_;
};

struct MsiSequence {
  std::string name;
  BandSpec bands;
  double fps = 5.0;
  std::set<Attribute> attributes;
  std::vector<MsiFrame> frames;
  std::vector<Annotation> annotations;

  std::size_t size() const noexcept { return frames.size(); }
  /// Checks frame uniformity, band counts, and 1:1 annotation alignment.
  void validate() const;
  friend bool operator==(const MsiSequence&, const MsiSequence&) = default;
};

}  // namespace untrack::msi
