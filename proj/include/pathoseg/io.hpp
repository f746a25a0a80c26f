// Copyright 2026 The pathoseg authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// File formats:
//   LBL1  "PSLB" magic, u32-LE width, height, then width*height u32-LE ids,
//         row-major.
//   PSF3  "PSF3" magic, u32-LE width, height, channels, then planar f32-LE
//         planes. Prediction stacks use channels == 3 (foreground, center
//         distance, boundary proximity); semantic probability maps use
//         channels == C+1.
//   PGM   binary P5, 8-bit, or 16-bit big-endian when maxval > 255.
// Dataset manifests are JSON; see docs/formats.md.

#ifndef PATHOSEG_IO_HPP
#define PATHOSEG_IO_HPP

#include <bit>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pathoseg/core.hpp"

namespace pathoseg {

// Loaders refuse rasters above this pixel count to catch corrupted headers
// before they turn into huge allocations.
inline constexpr uint64_t kMaxRasterPixels = UINT64_C(1) << 33;

enum class LabelFormat { kPgm, kLbl1 };

namespace detail {

class ByteReader {
 public:
  explicit ByteReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open file: " + path);
  }

  uint8_t u8() {
    char c;
    if (!in_.get(c)) fail("truncated payload");
    ++offset_;
    return uint8_t(c);
  }

  void bytes(void* dst, size_t n) {
    if (!in_.read(static_cast<char*>(dst), std::streamsize(n))) fail("truncated payload");
    offset_ += n;
  }

  uint32_t u32_le() {
    uint8_t b[4];
    bytes(b, 4);
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
  }

  uint16_t u16_be() {
    uint8_t b[2];
    bytes(b, 2);
    return uint16_t(uint16_t(b[0]) << 8 | b[1]);
  }

  float f32_le() { return std::bit_cast<float>(u32_le()); }

  bool at_eof() {
    in_.peek();
    return in_.eof();
  }

  size_t offset() const { return offset_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(path_ + ": " + what + " (byte offset " + std::to_string(offset_) + ")");
  }

 private:
  std::string path_;
  std::ifstream in_;
  size_t offset_ = 0;
};

class ByteWriter {
 public:
  explicit ByteWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open file for writing: " + path);
  }

  void bytes(const void* src, size_t n) { out_.write(static_cast<const char*>(src), std::streamsize(n)); }
  void u8(uint8_t v) { bytes(&v, 1); }
  void u32_le(uint32_t v) {
    const uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16), uint8_t(v >> 24)};
    bytes(b, 4);
  }
  void u16_be(uint16_t v) {
    const uint8_t b[2] = {uint8_t(v >> 8), uint8_t(v)};
    bytes(b, 2);
  }
  void f32_le(float v) { u32_le(std::bit_cast<uint32_t>(v)); }
  void text(const std::string& s) { bytes(s.data(), s.size()); }

  void close() {
    out_.flush();
    if (!out_) throw IoError("write failed: " + path_);
    out_.close();
  }

 private:
  std::string path_;
  std::ofstream out_;
};

inline void check_dimensions(const ByteReader& r, uint64_t width, uint64_t height) {
  if (width == 0 || height == 0) r.fail("zero image dimension");
  if (width * height > kMaxRasterPixels) r.fail("dimension overflow");
}

// PGM header tokens separated by whitespace, '#' comments run to end of line.
inline uint64_t pgm_header_value(ByteReader& r) {
  int c = r.u8();
  while (true) {
    if (c == '#') {
      while (c != '\n') c = r.u8();
    } else if (std::isspace(c)) {
      c = r.u8();
    } else {
      break;
    }
  }
  if (!std::isdigit(c)) r.fail("malformed PGM header");
  uint64_t value = 0;
  while (std::isdigit(c)) {
    value = value * 10 + uint64_t(c - '0');
    if (value > UINT64_C(0xFFFFFFFF)) r.fail("PGM header value overflow");
    if (r.at_eof()) return value;
    c = r.u8();
  }
  if (!std::isspace(c)) r.fail("malformed PGM header");
  return value;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Label images
// ---------------------------------------------------------------------------

inline LabelImage load_label_image(const std::string& path) {
  detail::ByteReader r(path);
  uint8_t magic[2];
  r.bytes(magic, 2);
  if (magic[0] == 'P' && magic[1] == '5') {
    const uint64_t width = detail::pgm_header_value(r);
    const uint64_t height = detail::pgm_header_value(r);
    const uint64_t maxval = detail::pgm_header_value(r);
    detail::check_dimensions(r, width, height);
    if (maxval == 0 || maxval > 65535) r.fail("PGM maxval out of range");
    std::vector<uint32_t> labels(width * height);
    if (maxval > 255) {
      for (auto& v : labels) v = r.u16_be();
    } else {
      for (auto& v : labels) v = r.u8();
    }
    return LabelImage(uint32_t(width), uint32_t(height), std::move(labels));
  }
  uint8_t rest[2];
  r.bytes(rest, 2);
  if (magic[0] == 'P' && magic[1] == 'S' && rest[0] == 'L' && rest[1] == 'B') {
    const uint32_t width = r.u32_le();
    const uint32_t height = r.u32_le();
    detail::check_dimensions(r, width, height);
    std::vector<uint32_t> labels(size_t(width) * height);
    for (auto& v : labels) v = r.u32_le();
    return LabelImage(width, height, std::move(labels));
  }
  r.fail("bad magic (expected P5 or PSLB)");
}

inline void save_label_image(const LabelImage& labels, const std::string& path,
                             LabelFormat format) {
  detail::ByteWriter w(path);
  if (format == LabelFormat::kLbl1) {
    w.text("PSLB");
    w.u32_le(labels.width());
    w.u32_le(labels.height());
    for (uint32_t v : labels.labels()) w.u32_le(v);
  } else {
    uint32_t max_id = 0;
    for (uint32_t v : labels.labels()) max_id = std::max(max_id, v);
    if (max_id > 65535) {
      throw ValueError("save_label_image: ids exceed 65535, PGM cannot represent them");
    }
    const uint32_t maxval = max_id > 255 ? 65535 : 255;
    w.text("P5\n" + std::to_string(labels.width()) + " " + std::to_string(labels.height()) +
           "\n" + std::to_string(maxval) + "\n");
    if (maxval > 255) {
      for (uint32_t v : labels.labels()) w.u16_be(uint16_t(v));
    } else {
      for (uint32_t v : labels.labels()) w.u8(uint8_t(v));
    }
  }
  w.close();
}

// ---------------------------------------------------------------------------
// PSF3 float stacks
// ---------------------------------------------------------------------------

struct LoadedPlanes {
  uint32_t width = 0;
  uint32_t height = 0;
  std::vector<std::vector<float>> planes;
  uint64_t clamp_warnings = 0;  // out-of-range finite values clamped to [0,1]
};

inline LoadedPlanes load_planes(const std::string& path) {
  detail::ByteReader r(path);
  uint8_t magic[4];
  r.bytes(magic, 4);
  if (!(magic[0] == 'P' && magic[1] == 'S' && magic[2] == 'F' && magic[3] == '3')) {
    r.fail("bad magic (expected PSF3)");
  }
  LoadedPlanes out;
  out.width = r.u32_le();
  out.height = r.u32_le();
  const uint32_t channels = r.u32_le();
  detail::check_dimensions(r, out.width, out.height);
  if (channels == 0 || channels > 4096) r.fail("unreasonable channel count");
  out.planes.resize(channels);
  for (auto& plane : out.planes) {
    plane.resize(size_t(out.width) * out.height);
    for (auto& v : plane) {
      v = r.f32_le();
      if (!std::isfinite(v)) r.fail("non-finite value");
      if (v < 0.0f) {
        v = 0.0f;
        ++out.clamp_warnings;
      } else if (v > 1.0f) {
        v = 1.0f;
        ++out.clamp_warnings;
      }
    }
  }
  return out;
}

inline void save_planes(const std::string& path, uint32_t width, uint32_t height,
                        const std::vector<std::vector<float>>& planes) {
  detail::ByteWriter w(path);
  w.text("PSF3");
  w.u32_le(width);
  w.u32_le(height);
  w.u32_le(uint32_t(planes.size()));
  for (const auto& plane : planes) {
    if (plane.size() != size_t(width) * height) {
      throw ValueError("save_planes: plane length mismatch");
    }
    for (float v : plane) w.f32_le(v);
  }
  w.close();
}

struct LoadedStack {
  PredictionStack stack;
  uint64_t clamp_warnings = 0;
};

inline LoadedStack load_prediction_stack(const std::string& path) {
  LoadedPlanes raw = load_planes(path);
  if (raw.planes.size() != 3) {
    throw FormatError(path + ": prediction stack requires exactly 3 channels, found " +
                      std::to_string(raw.planes.size()));
  }
  return LoadedStack{PredictionStack(raw.width, raw.height, std::move(raw.planes[0]),
                                     std::move(raw.planes[1]), std::move(raw.planes[2])),
                     raw.clamp_warnings};
}

inline void save_prediction_stack(const PredictionStack& stack, const std::string& path) {
  save_planes(path, stack.width(), stack.height(),
              {stack.foreground(), stack.center_distance(), stack.boundary_proximity()});
}

inline SemanticProbMap load_semantic_prob_map(const std::string& path) {
  LoadedPlanes raw = load_planes(path);
  if (raw.planes.size() < 2) {
    throw FormatError(path + ": semantic probability map requires at least 2 channels");
  }
  return SemanticProbMap(raw.width, raw.height, uint32_t(raw.planes.size()) - 1,
                         std::move(raw.planes));
}

inline SemanticLabelImage load_semantic_labels(const std::string& path, uint32_t num_classes) {
  const LabelImage raw = load_label_image(path);
  return SemanticLabelImage(raw.width(), raw.height(), num_classes, raw.labels());
}

// ---------------------------------------------------------------------------
// Dataset manifests
// ---------------------------------------------------------------------------

struct ManifestSample {
  std::string sample_id;
  std::string gt_labels_path;
  std::optional<std::string> prediction_stack_path;
  std::optional<std::string> semantic_gt_path;
  std::optional<std::string> semantic_prob_path;
  std::optional<std::string> split;
};

struct DatasetManifest {
  std::string name;
  std::string base_dir;
  std::vector<ManifestSample> samples;
};

inline DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("samples") || !doc["samples"].is_array()) {
    throw FormatError(path + ": manifest requires a top-level \"samples\" array");
  }

  DatasetManifest manifest;
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  manifest.base_dir = dir.string();
  manifest.name = doc.value("name", std::filesystem::path(path).stem().string());

  auto resolve = [&dir](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (dir / fp).string();
  };

  std::set<std::string> seen;
  for (const auto& entry : doc["samples"]) {
    if (!entry.is_object()) throw FormatError(path + ": sample entries must be objects");
    ManifestSample sample;
    if (!entry.contains("sample_id") || !entry["sample_id"].is_string()) {
      throw FormatError(path + ": sample missing required field \"sample_id\"");
    }
    sample.sample_id = entry["sample_id"].get<std::string>();
    if (!seen.insert(sample.sample_id).second) {
      throw FormatError(path + ": duplicate sample_id \"" + sample.sample_id + "\"");
    }
    if (!entry.contains("gt_labels_path") || !entry["gt_labels_path"].is_string()) {
      throw FormatError(path + ": sample \"" + sample.sample_id +
                        "\" missing required field \"gt_labels_path\"");
    }
    sample.gt_labels_path = resolve(entry["gt_labels_path"].get<std::string>());
    auto optional_path = [&](const char* key) -> std::optional<std::string> {
      if (!entry.contains(key) || entry[key].is_null()) return std::nullopt;
      if (!entry[key].is_string()) {
        throw FormatError(path + ": field \"" + key + "\" must be a string");
      }
      return resolve(entry[key].get<std::string>());
    };
    sample.prediction_stack_path = optional_path("prediction_stack_path");
    sample.semantic_gt_path = optional_path("semantic_gt_path");
    sample.semantic_prob_path = optional_path("semantic_prob_path");
    if (entry.contains("split") && !entry["split"].is_null()) {
      if (!entry["split"].is_string()) throw FormatError(path + ": \"split\" must be a string");
      sample.split = entry["split"].get<std::string>();
    }
    manifest.samples.push_back(std::move(sample));
  }
  return manifest;
}

}  // namespace pathoseg

#endif  // PATHOSEG_IO_HPP
