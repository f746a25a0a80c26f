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
// Instance segmentation from distance-map rasters. The channel conventions
// are fixed so that the target generator and the segmenter are mutual
// inverses: center_distance is 0 at an instance's center and rises to 1 at
// its far edge; boundary_proximity is 1 on the instance boundary and falls
// toward 0 at the deepest interior pixel; background carries 1.0 in both
// distance planes. Seeds are the pixels where both quantities are small and
// the foreground probability is high; the watershed then grows the seeds
// uphill on boundary_proximity inside the foreground mask.

#ifndef PATHOSEG_AIS_HPP
#define PATHOSEG_AIS_HPP

#include <cmath>
#include <cstdint>
#include <queue>
#include <unordered_map>
#include <vector>

#include "pathoseg/core.hpp"
#include "pathoseg/distance.hpp"
#include "pathoseg/metrics.hpp"
#include "pathoseg/parallel.hpp"

namespace pathoseg {

// ---------------------------------------------------------------------------
// Gaussian smoothing
// ---------------------------------------------------------------------------

/// Separable gaussian blur, kernel radius ceil(3*sigma), reflect padding.
/// sigma == 0 returns the input unchanged.
inline std::vector<float> gaussian_smooth(const std::vector<float>& src, uint32_t width,
                                          uint32_t height, double sigma) {
  if (src.size() != size_t(width) * height) {
    throw ValueError("gaussian_smooth: raster size mismatch");
  }
  if (sigma <= 0.0) return src;
  const int radius = int(std::ceil(3.0 * sigma));
  std::vector<double> kernel(size_t(radius) * 2 + 1);
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[size_t(i + radius)] = std::exp(-0.5 * (double(i) * i) / (sigma * sigma));
    norm += kernel[size_t(i + radius)];
  }
  for (auto& k : kernel) k /= norm;

  auto reflect = [](int64_t i, int64_t n) {
    // symmetric padding: -1 -> 0, -2 -> 1, n -> n-1, ...
    while (i < 0 || i >= n) {
      if (i < 0) i = -i - 1;
      if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
  };

  std::vector<float> tmp(src.size());
  for (uint32_t y = 0; y < height; ++y) {
    for (uint32_t x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int64_t sx = reflect(int64_t(x) + k, width);
        acc += kernel[size_t(k + radius)] * src[size_t(y) * width + size_t(sx)];
      }
      tmp[size_t(y) * width + x] = float(acc);
    }
  }
  std::vector<float> out(src.size());
  for (uint32_t y = 0; y < height; ++y) {
    for (uint32_t x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int64_t sy = reflect(int64_t(y) + k, height);
        acc += kernel[size_t(k + radius)] * tmp[size_t(sy) * width + x];
      }
      out[size_t(y) * width + x] = float(acc);
    }
  }
  return out;
}

/// Smooth the two distance planes of a stack; the foreground plane is left
/// untouched. Smoothing a convex combination of [0,1] values stays in [0,1].
inline PredictionStack smooth_stack(const PredictionStack& stack, double sigma) {
  if (sigma <= 0.0) return stack;
  return PredictionStack(
      stack.width(), stack.height(), stack.foreground(),
      gaussian_smooth(stack.center_distance(), stack.width(), stack.height(), sigma),
      gaussian_smooth(stack.boundary_proximity(), stack.width(), stack.height(), sigma));
}

// ---------------------------------------------------------------------------
// Target generation
// ---------------------------------------------------------------------------

/// Distance-map targets for a ground-truth labeling, the model-free inverse
/// of instance_segmentation. Per object: center_distance is the euclidean
/// distance to the object pixel closest to the centroid, normalized by the
/// object's maximum; boundary_proximity is 1 minus the normalized distance to
/// the object's own boundary pixels. Single-pixel or all-boundary objects get
/// center_distance 0 and boundary_proximity 1.
inline PredictionStack generate_targets(const LabelImage& gt) {
  const uint32_t w = gt.width(), h = gt.height();
  const size_t n = size_t(w) * h;
  std::vector<float> foreground(n, 0.0f), center(n, 1.0f), boundary(n, 1.0f);

  struct ObjectInfo {
    std::vector<uint32_t> pixels;  // row-major indices, ascending
    double sum_x = 0.0, sum_y = 0.0;
  };
  std::unordered_map<uint32_t, ObjectInfo> objects;
  const auto& labels = gt.labels();
  for (size_t i = 0; i < n; ++i) {
    if (labels[i] == 0) continue;
    foreground[i] = 1.0f;
    auto& info = objects[labels[i]];
    info.pixels.push_back(uint32_t(i));
    info.sum_x += double(i % w);
    info.sum_y += double(i / w);
  }

  for (auto& [id, info] : objects) {
    const double cx = info.sum_x / double(info.pixels.size());
    const double cy = info.sum_y / double(info.pixels.size());

    // Center = object pixel nearest the centroid; ties go to the smallest
    // row-major index (pixels are already ascending).
    uint32_t center_idx = info.pixels.front();
    double best = std::numeric_limits<double>::infinity();
    for (uint32_t idx : info.pixels) {
      const double dx = double(idx % w) - cx;
      const double dy = double(idx / w) - cy;
      const double d2 = dx * dx + dy * dy;
      if (d2 < best) {
        best = d2;
        center_idx = idx;
      }
    }
    const double ccx = double(center_idx % w), ccy = double(center_idx / w);
    double max_center = 0.0;
    std::vector<double> center_d(info.pixels.size());
    for (size_t k = 0; k < info.pixels.size(); ++k) {
      const double dx = double(info.pixels[k] % w) - ccx;
      const double dy = double(info.pixels[k] / w) - ccy;
      center_d[k] = std::sqrt(dx * dx + dy * dy);
      max_center = std::max(max_center, center_d[k]);
    }

    // Boundary distances on the object's bounding box window.
    uint32_t x0 = w, y0 = h, x1 = 0, y1 = 0;
    for (uint32_t idx : info.pixels) {
      x0 = std::min(x0, idx % w);
      x1 = std::max(x1, idx % w);
      y0 = std::min(y0, idx / w);
      y1 = std::max(y1, idx / w);
    }
    const uint32_t bw = x1 - x0 + 1, bh = y1 - y0 + 1;
    Mask local(bw, bh);
    for (uint32_t idx : info.pixels) local.set(idx % w - x0, idx / w - y0, true);
    // Inside the window the object keeps its true image-border adjacency:
    // window edges coincide with either the image edge or non-object pixels.
    const auto bdist = squared_boundary_distance(local);
    double max_boundary = 0.0;
    for (uint32_t idx : info.pixels) {
      const size_t li = size_t(idx / w - y0) * bw + (idx % w - x0);
      max_boundary = std::max(max_boundary, double(bdist[li]));
    }
    max_boundary = std::sqrt(max_boundary);

    for (size_t k = 0; k < info.pixels.size(); ++k) {
      const uint32_t idx = info.pixels[k];
      center[idx] = max_center > 0.0 ? float(center_d[k] / max_center) : 0.0f;
      const size_t li = size_t(idx / w - y0) * bw + (idx % w - x0);
      const double bd = std::sqrt(double(bdist[li]));
      boundary[idx] = max_boundary > 0.0 ? float(1.0 - bd / max_boundary) : 1.0f;
    }
  }
  return PredictionStack(w, h, std::move(foreground), std::move(center), std::move(boundary));
}

// ---------------------------------------------------------------------------
// Seeds
// ---------------------------------------------------------------------------

/// Seed components: pixels with center_distance below tau_c, boundary
/// proximity below tau_b and foreground above tau_f, labeled as 4-connected
/// components in row-major discovery order. Distance planes are smoothed
/// first when smoothing_sigma > 0. The seed mask grows monotonically in
/// tau_c, tau_b and falling tau_f.
inline LabelImage compute_seeds(const PredictionStack& stack, const AisParams& params) {
  const PredictionStack s = smooth_stack(stack, params.smoothing_sigma());
  Mask seed_mask(s.width(), s.height());
  for (size_t i = 0; i < s.size(); ++i) {
    seed_mask.data[i] = s.center_distance()[i] < params.center_threshold() &&
                                s.boundary_proximity()[i] < params.boundary_threshold() &&
                                s.foreground()[i] > params.foreground_threshold()
                            ? 1
                            : 0;
  }
  return connected_components(seed_mask);
}

// ---------------------------------------------------------------------------
// Seeded watershed
// ---------------------------------------------------------------------------

/// Priority-flood watershed: seed components grow over the height raster in
/// ascending height order, restricted to the mask. Ties resolve by insertion
/// sequence number with row-major seeding, which pins the output exactly on
/// plateaus. Masked pixels unreachable from any seed stay background.
inline LabelImage seeded_watershed(const std::vector<float>& height_raster, uint32_t width,
                                   uint32_t height, const LabelImage& seeds, const Mask& mask) {
  if (height_raster.size() != size_t(width) * height ||
      seeds.width() != width || seeds.height() != height || mask.width != width ||
      mask.height != height) {
    throw ValueError("seeded_watershed: dimension mismatch");
  }
  const auto& seed_labels = seeds.labels();
  for (size_t i = 0; i < seed_labels.size(); ++i) {
    if (seed_labels[i] != 0 && !mask.data[i]) {
      throw ValueError("seeded_watershed: seeds must lie inside the mask");
    }
  }

  struct QueueEntry {
    float height;
    uint64_t seq;
    uint32_t index;
    uint32_t label;
    bool operator>(const QueueEntry& o) const {
      if (height != o.height) return height > o.height;
      return seq > o.seq;
    }
  };

  LabelImage out(width, height, seed_labels);
  auto& labels = out.labels();
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<QueueEntry>> queue;
  uint64_t seq = 0;

  auto push_neighbors = [&](uint32_t index, uint32_t label) {
    const uint32_t x = index % width, y = index / width;
    for (int k = 0; k < kConnectivity; ++k) {
      const int64_t nx = int64_t(x) + kNeighborDx[k];
      const int64_t ny = int64_t(y) + kNeighborDy[k];
      if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
      const uint32_t ni = uint32_t(ny) * width + uint32_t(nx);
      if (mask.data[ni] && labels[ni] == 0) {
        queue.push(QueueEntry{height_raster[ni], seq++, ni, label});
      }
    }
  };

  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0) push_neighbors(uint32_t(i), labels[i]);
  }
  while (!queue.empty()) {
    const QueueEntry e = queue.top();
    queue.pop();
    if (labels[e.index] != 0) continue;
    labels[e.index] = e.label;
    push_neighbors(e.index, e.label);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

/// Drop instances smaller than min_size pixels (ids zeroed, no relabel).
inline LabelImage filter_small_instances(const LabelImage& labels, uint64_t min_size) {
  std::unordered_map<uint32_t, uint64_t> sizes;
  for (uint32_t v : labels.labels()) {
    if (v != 0) ++sizes[v];
  }
  LabelImage out = labels;
  for (auto& v : out.labels()) {
    if (v != 0 && sizes[v] < min_size) v = 0;
  }
  return out;
}

/// smooth -> seeds -> watershed on boundary_proximity -> size filter ->
/// contiguous relabel in row-major first-pixel order.
inline LabelImage instance_segmentation(const PredictionStack& stack, const AisParams& params) {
  const PredictionStack smoothed = smooth_stack(stack, params.smoothing_sigma());
  const AisParams no_more_smoothing(params.center_threshold(), params.boundary_threshold(),
                                    params.foreground_threshold(), 0.0,
                                    params.min_instance_size());
  const LabelImage seeds = compute_seeds(smoothed, no_more_smoothing);
  Mask fg_mask(stack.width(), stack.height());
  for (size_t i = 0; i < stack.size(); ++i) {
    fg_mask.data[i] = stack.foreground()[i] > params.foreground_threshold() ? 1 : 0;
  }
  const LabelImage flooded = seeded_watershed(smoothed.boundary_proximity(), stack.width(),
                                              stack.height(), seeds, fg_mask);
  return relabel_sequential(filter_small_instances(flooded, params.min_instance_size()));
}

// ---------------------------------------------------------------------------
// Threshold grid search
// ---------------------------------------------------------------------------

struct GridSearchSample {
  PredictionStack stack;
  LabelImage gt;
};

struct GridSearchRow {
  double center_threshold = 0.0;
  double boundary_threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  uint64_t n_samples = 0;
};

/// Sweep (tau_c, tau_b); per cell, segment every sample and pool TP/FP/FN at
/// eval_iou before deriving precision/recall/F1. Rows come back sorted by
/// (tau_c, tau_b); aggregation order is fixed, so results do not depend on
/// the worker count.
inline std::vector<GridSearchRow> grid_search(const std::vector<GridSearchSample>& samples,
                                              const std::vector<double>& center_grid,
                                              const std::vector<double>& boundary_grid,
                                              const AisParams& base_params,
                                              double eval_iou = 0.5, uint32_t jobs = 1) {
  if (samples.empty()) throw ValueError("grid_search: at least one sample is required");
  if (center_grid.empty() || boundary_grid.empty()) {
    throw ValueError("grid_search: grids must be nonempty");
  }
  std::vector<GridSearchRow> rows(center_grid.size() * boundary_grid.size());
  parallel_for(rows.size(), jobs, [&](size_t cell) {
    const double tc = center_grid[cell / boundary_grid.size()];
    const double tb = boundary_grid[cell % boundary_grid.size()];
    const AisParams params = base_params.with_thresholds(tc, tb);
    uint64_t tp = 0, fp = 0, fn = 0;
    for (const auto& sample : samples) {
      const LabelImage pred = instance_segmentation(sample.stack, params);
      const MatchRow row = match_at_threshold(iou_table(pred, sample.gt), eval_iou);
      tp += row.tp;
      fp += row.fp;
      fn += row.fn;
    }
    GridSearchRow& out = rows[cell];
    out.center_threshold = tc;
    out.boundary_threshold = tb;
    out.n_samples = samples.size();
    const bool all_empty = tp + fp + fn == 0;
    out.precision = tp + fp == 0 ? (all_empty ? 1.0 : 0.0) : double(tp) / double(tp + fp);
    out.recall = tp + fn == 0 ? (all_empty ? 1.0 : 0.0) : double(tp) / double(tp + fn);
    out.f1 = 2 * tp + fp + fn == 0 ? (all_empty ? 1.0 : 0.0)
                                   : double(2 * tp) / double(2 * tp + fp + fn);
  });
  return rows;
}

}  // namespace pathoseg

#endif  // PATHOSEG_AIS_HPP
