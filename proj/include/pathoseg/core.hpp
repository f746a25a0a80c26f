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

#ifndef PATHOSEG_CORE_HPP
#define PATHOSEG_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace pathoseg {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file contents or wire data.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range values at construction, violated preconditions.
class ValueError : public Error {
 public:
  using Error::Error;
};

/// An operation that needs a nonempty object received an empty one.
class EmptyObjectError : public ValueError {
 public:
  using ValueError::ValueError;
};

/// Filesystem-level failure (missing file, unreadable path).
class IoError : public Error {
 public:
  using Error::Error;
};

// Instances, seeds and components use 4-connectivity throughout.
inline constexpr int kConnectivity = 4;
inline constexpr int kNeighborDx[4] = {0, -1, 1, 0};
inline constexpr int kNeighborDy[4] = {-1, 0, 0, 1};

// ---------------------------------------------------------------------------
// Binary raster
// ---------------------------------------------------------------------------

/// Binary raster, row-major. Working representation for object masks;
/// the interchange form is MaskRLE.
struct Mask {
  uint32_t width = 0;
  uint32_t height = 0;
  std::vector<uint8_t> data;  // 0 or 1, size width*height

  Mask() = default;
  Mask(uint32_t w, uint32_t h) : width(w), height(h), data(size_t(w) * h, 0) {}
  Mask(uint32_t w, uint32_t h, std::vector<uint8_t> d)
      : width(w), height(h), data(std::move(d)) {
    if (data.size() != size_t(width) * height) {
      throw ValueError("Mask: data length does not match dimensions");
    }
  }

  size_t size() const { return data.size(); }
  bool at(uint32_t x, uint32_t y) const { return data[size_t(y) * width + x] != 0; }
  void set(uint32_t x, uint32_t y, bool v) { data[size_t(y) * width + x] = v ? 1 : 0; }

  uint64_t count() const {
    uint64_t n = 0;
    for (uint8_t v : data) n += v != 0;
    return n;
  }
  bool empty_mask() const { return count() == 0; }

  bool operator==(const Mask& o) const = default;
};

// ---------------------------------------------------------------------------
// Label image
// ---------------------------------------------------------------------------

/// Per-pixel instance ids, 0 = background. Ids are 32-bit and need not be
/// contiguous; whole-slide labelings can exceed 16-bit id ranges.
class LabelImage {
 public:
  LabelImage() = default;
  LabelImage(uint32_t width, uint32_t height)
      : width_(width), height_(height), labels_(size_t(width) * height, 0) {}
  LabelImage(uint32_t width, uint32_t height, std::vector<uint32_t> labels)
      : width_(width), height_(height), labels_(std::move(labels)) {
    if (labels_.size() != size_t(width_) * height_) {
      throw ValueError("LabelImage: label array length does not match dimensions");
    }
  }

  uint32_t width() const { return width_; }
  uint32_t height() const { return height_; }
  size_t size() const { return labels_.size(); }
  const std::vector<uint32_t>& labels() const { return labels_; }
  std::vector<uint32_t>& labels() { return labels_; }

  uint32_t at(uint32_t x, uint32_t y) const { return labels_[size_t(y) * width_ + x]; }
  void set(uint32_t x, uint32_t y, uint32_t v) { labels_[size_t(y) * width_ + x] = v; }

  /// Distinct nonzero ids, ascending.
  std::vector<uint32_t> ids() const {
    std::vector<uint32_t> out(labels_.begin(), labels_.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (!out.empty() && out.front() == 0) out.erase(out.begin());
    return out;
  }

  bool operator==(const LabelImage& o) const = default;

 private:
  uint32_t width_ = 0;
  uint32_t height_ = 0;
  std::vector<uint32_t> labels_;
};

// ---------------------------------------------------------------------------
// Prediction stack
// ---------------------------------------------------------------------------

/// Three planar float rasters: foreground probability, normalized distance to
/// the object center (0 at the center, 1 at the boundary) and boundary
/// proximity (1 on the boundary, falling toward the interior). Background is
/// 1.0 in both distance planes. All values must be finite and in [0,1];
/// ingest paths clamp before constructing.
class PredictionStack {
 public:
  PredictionStack() = default;
  PredictionStack(uint32_t width, uint32_t height)
      : width_(width),
        height_(height),
        foreground_(size_t(width) * height, 0.0f),
        center_distance_(size_t(width) * height, 1.0f),
        boundary_proximity_(size_t(width) * height, 1.0f) {}
  PredictionStack(uint32_t width, uint32_t height, std::vector<float> foreground,
                  std::vector<float> center_distance, std::vector<float> boundary_proximity)
      : width_(width),
        height_(height),
        foreground_(std::move(foreground)),
        center_distance_(std::move(center_distance)),
        boundary_proximity_(std::move(boundary_proximity)) {
    const size_t n = size_t(width_) * height_;
    if (foreground_.size() != n || center_distance_.size() != n ||
        boundary_proximity_.size() != n) {
      throw ValueError("PredictionStack: plane length does not match dimensions");
    }
    for (const auto* plane : {&foreground_, &center_distance_, &boundary_proximity_}) {
      for (float v : *plane) {
        if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
          throw ValueError("PredictionStack: values must be finite and within [0,1]");
        }
      }
    }
  }

  uint32_t width() const { return width_; }
  uint32_t height() const { return height_; }
  size_t size() const { return size_t(width_) * height_; }
  const std::vector<float>& foreground() const { return foreground_; }
  const std::vector<float>& center_distance() const { return center_distance_; }
  const std::vector<float>& boundary_proximity() const { return boundary_proximity_; }

  bool operator==(const PredictionStack& o) const = default;

 private:
  uint32_t width_ = 0;
  uint32_t height_ = 0;
  std::vector<float> foreground_;
  std::vector<float> center_distance_;
  std::vector<float> boundary_proximity_;
};

// ---------------------------------------------------------------------------
// Semantic rasters
// ---------------------------------------------------------------------------

/// C+1 planar probability rasters, channel 0 = background. Per-pixel channel
/// sums must stay within 1e-4 of 1.
class SemanticProbMap {
 public:
  SemanticProbMap() = default;
  SemanticProbMap(uint32_t width, uint32_t height, uint32_t num_classes,
                  std::vector<std::vector<float>> channels)
      : width_(width), height_(height), num_classes_(num_classes), channels_(std::move(channels)) {
    const size_t n = size_t(width_) * height_;
    if (channels_.size() != size_t(num_classes_) + 1) {
      throw ValueError("SemanticProbMap: expected C+1 channels");
    }
    for (const auto& ch : channels_) {
      if (ch.size() != n) throw ValueError("SemanticProbMap: channel length mismatch");
    }
    for (size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (const auto& ch : channels_) {
        if (!std::isfinite(ch[i])) throw ValueError("SemanticProbMap: non-finite probability");
        sum += ch[i];
      }
      if (sum < 1.0 - 1e-4 || sum > 1.0 + 1e-4) {
        throw ValueError("SemanticProbMap: per-pixel channel sum must be 1 within 1e-4");
      }
    }
  }

  uint32_t width() const { return width_; }
  uint32_t height() const { return height_; }
  uint32_t num_classes() const { return num_classes_; }
  const std::vector<std::vector<float>>& channels() const { return channels_; }

 private:
  uint32_t width_ = 0;
  uint32_t height_ = 0;
  uint32_t num_classes_ = 0;
  std::vector<std::vector<float>> channels_;
};

/// Per-pixel class id in {0..C}; 0 = background.
class SemanticLabelImage {
 public:
  SemanticLabelImage() = default;
  SemanticLabelImage(uint32_t width, uint32_t height, uint32_t num_classes,
                     std::vector<uint32_t> classes)
      : width_(width), height_(height), num_classes_(num_classes), classes_(std::move(classes)) {
    if (classes_.size() != size_t(width_) * height_) {
      throw ValueError("SemanticLabelImage: class array length mismatch");
    }
    for (uint32_t v : classes_) {
      if (v > num_classes_) throw ValueError("SemanticLabelImage: class id exceeds C");
    }
  }

  uint32_t width() const { return width_; }
  uint32_t height() const { return height_; }
  uint32_t num_classes() const { return num_classes_; }
  const std::vector<uint32_t>& classes() const { return classes_; }
  uint32_t at(uint32_t x, uint32_t y) const { return classes_[size_t(y) * width_ + x]; }

  bool operator==(const SemanticLabelImage& o) const = default;

 private:
  uint32_t width_ = 0;
  uint32_t height_ = 0;
  uint32_t num_classes_ = 0;
  std::vector<uint32_t> classes_;
};

// ---------------------------------------------------------------------------
// Run-length encoded mask
// ---------------------------------------------------------------------------

/// Alternating run lengths in column-major pixel order, first run counting
/// background pixels (COCO uncompressed convention). Counts must sum to
/// width*height; leading/trailing runs may be zero length.
class MaskRLE {
 public:
  MaskRLE() = default;
  MaskRLE(uint32_t width, uint32_t height, std::vector<uint32_t> counts)
      : width_(width), height_(height), counts_(std::move(counts)) {
    uint64_t sum = 0;
    for (uint32_t c : counts_) sum += c;
    if (sum != uint64_t(width_) * height_) {
      throw ValueError("MaskRLE: counts do not sum to width*height");
    }
  }

  uint32_t width() const { return width_; }
  uint32_t height() const { return height_; }
  const std::vector<uint32_t>& counts() const { return counts_; }

  bool operator==(const MaskRLE& o) const = default;

 private:
  uint32_t width_ = 0;
  uint32_t height_ = 0;
  std::vector<uint32_t> counts_;
};

// ---------------------------------------------------------------------------
// Boxes and prompts
// ---------------------------------------------------------------------------

/// Half-open pixel box: [x_min, x_max) x [y_min, y_max).
struct BoundingBox {
  uint32_t x_min = 0;
  uint32_t y_min = 0;
  uint32_t x_max = 0;
  uint32_t y_max = 0;

  BoundingBox() = default;
  BoundingBox(uint32_t x0, uint32_t y0, uint32_t x1, uint32_t y1)
      : x_min(x0), y_min(y0), x_max(x1), y_max(y1) {
    if (x_min >= x_max || y_min >= y_max) {
      throw ValueError("BoundingBox: requires x_min < x_max and y_min < y_max");
    }
  }

  uint32_t width() const { return x_max - x_min; }
  uint32_t height() const { return y_max - y_min; }
  uint64_t area() const { return uint64_t(width()) * height(); }
  bool contains(uint32_t x, uint32_t y) const {
    return x >= x_min && x < x_max && y >= y_min && y < y_max;
  }

  bool operator==(const BoundingBox& o) const = default;
};

struct PositivePoint {
  uint32_t x = 0, y = 0;
  bool operator==(const PositivePoint&) const = default;
};
struct NegativePoint {
  uint32_t x = 0, y = 0;
  bool operator==(const NegativePoint&) const = default;
};
struct BoxPrompt {
  BoundingBox box;
  bool operator==(const BoxPrompt&) const = default;
};
/// Low-resolution (or full-resolution) float mask prompt. Dimensions may be a
/// declared downscale of the image; consumers resample as needed.
struct MaskPrompt {
  uint32_t width = 0, height = 0;
  std::vector<float> values;
  bool operator==(const MaskPrompt&) const = default;
};

using Prompt = std::variant<PositivePoint, NegativePoint, BoxPrompt, MaskPrompt>;

// ---------------------------------------------------------------------------
// Match table
// ---------------------------------------------------------------------------

struct MatchedPair {
  uint32_t gt_id = 0;
  uint32_t pred_id = 0;
  double iou = 0.0;
};

struct MatchRow {
  double threshold = 0.0;
  uint64_t tp = 0;
  uint64_t fp = 0;
  uint64_t fn = 0;
  std::vector<MatchedPair> pairs;
};

/// Per-IoU-threshold TP/FP/FN with the matched pairs behind each count.
struct MatchTable {
  std::vector<MatchRow> rows;
};

// ---------------------------------------------------------------------------
// Watershed parameters
// ---------------------------------------------------------------------------

/// Thresholds and postprocessing knobs for distance-map instance segmentation.
/// Thresholds live strictly inside (0,1).
class AisParams {
 public:
  AisParams() = default;
  AisParams(double center_threshold, double boundary_threshold, double foreground_threshold,
            double smoothing_sigma, uint64_t min_instance_size)
      : center_threshold_(center_threshold),
        boundary_threshold_(boundary_threshold),
        foreground_threshold_(foreground_threshold),
        smoothing_sigma_(smoothing_sigma),
        min_instance_size_(min_instance_size) {
    validate();
  }

  double center_threshold() const { return center_threshold_; }
  double boundary_threshold() const { return boundary_threshold_; }
  double foreground_threshold() const { return foreground_threshold_; }
  double smoothing_sigma() const { return smoothing_sigma_; }
  uint64_t min_instance_size() const { return min_instance_size_; }

  AisParams with_thresholds(double tc, double tb) const {
    return AisParams(tc, tb, foreground_threshold_, smoothing_sigma_, min_instance_size_);
  }
  AisParams with_sigma(double sigma) const {
    return AisParams(center_threshold_, boundary_threshold_, foreground_threshold_, sigma,
                     min_instance_size_);
  }
  AisParams with_min_size(uint64_t n) const {
    return AisParams(center_threshold_, boundary_threshold_, foreground_threshold_,
                     smoothing_sigma_, n);
  }

 private:
  void validate() const {
    for (double t : {center_threshold_, boundary_threshold_, foreground_threshold_}) {
      if (!(t > 0.0 && t < 1.0)) {
        throw ValueError("AisParams: thresholds must lie strictly inside (0,1)");
      }
    }
    if (!(smoothing_sigma_ >= 0.0) || !std::isfinite(smoothing_sigma_)) {
      throw ValueError("AisParams: smoothing_sigma must be finite and >= 0");
    }
  }

  double center_threshold_ = 0.5;
  double boundary_threshold_ = 0.6;
  double foreground_threshold_ = 0.5;
  double smoothing_sigma_ = 1.6;
  uint64_t min_instance_size_ = 25;
};

// ---------------------------------------------------------------------------
// Conversions
// ---------------------------------------------------------------------------

inline MaskRLE mask_to_rle(const Mask& mask) {
  if (mask.width == 0 || mask.height == 0) {
    throw ValueError("mask_to_rle: mask dimensions must be positive");
  }
  std::vector<uint32_t> counts;
  uint8_t current = 0;  // first run counts background
  uint32_t run = 0;
  for (uint32_t x = 0; x < mask.width; ++x) {
    for (uint32_t y = 0; y < mask.height; ++y) {
      const uint8_t v = mask.at(x, y) ? 1 : 0;
      if (v == current) {
        ++run;
      } else {
        counts.push_back(run);
        current = v;
        run = 1;
      }
    }
  }
  counts.push_back(run);
  return MaskRLE(mask.width, mask.height, std::move(counts));
}

inline Mask rle_to_mask(const MaskRLE& rle) {
  Mask mask(rle.width(), rle.height());
  size_t pos = 0;  // column-major pixel index
  uint8_t value = 0;
  for (uint32_t count : rle.counts()) {
    for (uint32_t i = 0; i < count; ++i, ++pos) {
      if (value) {
        const uint32_t x = uint32_t(pos / rle.height());
        const uint32_t y = uint32_t(pos % rle.height());
        mask.set(x, y, true);
      }
    }
    value = value ? 0 : 1;
  }
  return mask;
}

/// One RLE mask per instance id, sorted ascending by id. Masks are pairwise
/// disjoint and together cover exactly the nonzero pixels.
inline std::vector<std::pair<uint32_t, MaskRLE>> label_image_to_masks(const LabelImage& labels) {
  std::map<uint32_t, Mask> masks;
  for (uint32_t y = 0; y < labels.height(); ++y) {
    for (uint32_t x = 0; x < labels.width(); ++x) {
      const uint32_t id = labels.at(x, y);
      if (id == 0) continue;
      auto [it, inserted] = masks.try_emplace(id, labels.width(), labels.height());
      it->second.set(x, y, true);
    }
  }
  std::vector<std::pair<uint32_t, MaskRLE>> out;
  out.reserve(masks.size());
  for (const auto& [id, mask] : masks) out.emplace_back(id, mask_to_rle(mask));
  return out;
}

inline BoundingBox bounding_box_of(const Mask& mask) {
  uint32_t x0 = mask.width, y0 = mask.height, x1 = 0, y1 = 0;
  bool any = false;
  for (uint32_t y = 0; y < mask.height; ++y) {
    for (uint32_t x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      any = true;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (!any) throw EmptyObjectError("bounding_box_of: mask is empty");
  return BoundingBox(x0, y0, x1 + 1, y1 + 1);
}

// ---------------------------------------------------------------------------
// Shared raster machinery
// ---------------------------------------------------------------------------

/// Binary mask of one instance.
inline Mask mask_of_label(const LabelImage& labels, uint32_t id) {
  Mask mask(labels.width(), labels.height());
  const auto& px = labels.labels();
  for (size_t i = 0; i < px.size(); ++i) mask.data[i] = px[i] == id ? 1 : 0;
  return mask;
}

inline Mask nonzero_mask(const LabelImage& labels) {
  Mask mask(labels.width(), labels.height());
  const auto& px = labels.labels();
  for (size_t i = 0; i < px.size(); ++i) mask.data[i] = px[i] != 0 ? 1 : 0;
  return mask;
}

/// 4-connected components labeled 1..N in row-major discovery order.
inline LabelImage connected_components(const Mask& mask) {
  const uint32_t w = mask.width, h = mask.height;
  LabelImage out(w, h);
  auto& lbl = out.labels();
  uint32_t next = 0;
  std::deque<uint32_t> queue;
  for (uint32_t y = 0; y < h; ++y) {
    for (uint32_t x = 0; x < w; ++x) {
      const size_t idx = size_t(y) * w + x;
      if (!mask.data[idx] || lbl[idx] != 0) continue;
      ++next;
      lbl[idx] = next;
      queue.push_back(uint32_t(idx));
      while (!queue.empty()) {
        const uint32_t cur = queue.front();
        queue.pop_front();
        const uint32_t cx = cur % w, cy = cur / w;
        for (int k = 0; k < kConnectivity; ++k) {
          const int64_t nx = int64_t(cx) + kNeighborDx[k];
          const int64_t ny = int64_t(cy) + kNeighborDy[k];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const size_t nidx = size_t(ny) * w + nx;
          if (mask.data[nidx] && lbl[nidx] == 0) {
            lbl[nidx] = next;
            queue.push_back(uint32_t(nidx));
          }
        }
      }
    }
  }
  return out;
}

/// Relabel to contiguous ids 1..N ordered by each instance's first pixel in
/// row-major order. Id 0 stays background.
inline LabelImage relabel_sequential(const LabelImage& labels) {
  LabelImage out(labels.width(), labels.height());
  std::map<uint32_t, uint32_t> remap;
  const auto& src = labels.labels();
  auto& dst = out.labels();
  uint32_t next = 0;
  for (size_t i = 0; i < src.size(); ++i) {
    if (src[i] == 0) continue;
    auto [it, inserted] = remap.try_emplace(src[i], next + 1);
    if (inserted) ++next;
    dst[i] = it->second;
  }
  return out;
}

inline double mask_iou(const Mask& a, const Mask& b) {
  if (a.width != b.width || a.height != b.height) {
    throw ValueError("mask_iou: dimension mismatch");
  }
  uint64_t inter = 0, uni = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const bool va = a.data[i] != 0, vb = b.data[i] != 0;
    inter += va && vb;
    uni += va || vb;
  }
  if (uni == 0) return 0.0;
  return double(inter) / double(uni);
}

}  // namespace pathoseg

#endif  // PATHOSEG_CORE_HPP
