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

#ifndef PATHOSEG_METRICS_HPP
#define PATHOSEG_METRICS_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "pathoseg/core.hpp"

namespace pathoseg {

/// IoU thresholds 0.5 .. 0.95 in steps of 0.05.
inline constexpr std::array<double, 10> kDefaultIouThresholds = {
    0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95};

// ---------------------------------------------------------------------------
// Pairwise IoU table
// ---------------------------------------------------------------------------

/// Sparse pairwise IoU between ground-truth and predicted objects plus
/// per-object pixel counts. Built from a single contingency pass over the
/// pixel pairs; background (id 0) is excluded on both sides.
struct IouTable {
  struct Entry {
    uint32_t gt_id = 0;
    uint32_t pred_id = 0;
    uint64_t intersection = 0;
    double iou = 0.0;
  };

  std::map<uint32_t, uint64_t> gt_sizes;
  std::map<uint32_t, uint64_t> pred_sizes;
  std::vector<Entry> entries;  // sorted by (gt_id, pred_id)

  size_t n_gt() const { return gt_sizes.size(); }
  size_t n_pred() const { return pred_sizes.size(); }
};

inline IouTable iou_table(const LabelImage& pred, const LabelImage& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw ValueError("iou_table: dimension mismatch between pred and gt");
  }
  IouTable table;
  std::unordered_map<uint64_t, uint64_t> contingency;
  const auto& gp = gt.labels();
  const auto& pp = pred.labels();
  for (size_t i = 0; i < gp.size(); ++i) {
    const uint32_t g = gp[i], p = pp[i];
    if (g != 0) ++table.gt_sizes[g];
    if (p != 0) ++table.pred_sizes[p];
    if (g != 0 && p != 0) ++contingency[uint64_t(g) << 32 | p];
  }
  table.entries.reserve(contingency.size());
  for (const auto& [key, inter] : contingency) {
    IouTable::Entry e;
    e.gt_id = uint32_t(key >> 32);
    e.pred_id = uint32_t(key);
    e.intersection = inter;
    const uint64_t uni = table.gt_sizes[e.gt_id] + table.pred_sizes[e.pred_id] - inter;
    e.iou = double(inter) / double(uni);
    table.entries.push_back(e);
  }
  std::sort(table.entries.begin(), table.entries.end(), [](const auto& a, const auto& b) {
    return a.gt_id != b.gt_id ? a.gt_id < b.gt_id : a.pred_id < b.pred_id;
  });
  return table;
}

// ---------------------------------------------------------------------------
// Matching
// ---------------------------------------------------------------------------

/// One-to-one matching at IoU threshold t (strictly above). For t >= 0.5 an
/// object can have at most one partner above the threshold, so greedy
/// matching in descending IoU order is optimal.
inline MatchRow match_at_threshold(const IouTable& table, double t) {
  if (t < 0.5) {
    throw ValueError("match_at_threshold: thresholds below 0.5 are unsupported");
  }
  std::vector<IouTable::Entry> candidates;
  for (const auto& e : table.entries) {
    if (e.iou > t) candidates.push_back(e);
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    return a.gt_id != b.gt_id ? a.gt_id < b.gt_id : a.pred_id < b.pred_id;
  });

  MatchRow row;
  row.threshold = t;
  std::set<uint32_t> used_gt, used_pred;
  for (const auto& e : candidates) {
    if (used_gt.count(e.gt_id) || used_pred.count(e.pred_id)) continue;
    used_gt.insert(e.gt_id);
    used_pred.insert(e.pred_id);
    row.pairs.push_back(MatchedPair{e.gt_id, e.pred_id, e.iou});
  }
  row.tp = row.pairs.size();
  row.fp = table.n_pred() - row.tp;
  row.fn = table.n_gt() - row.tp;
  return row;
}

inline MatchTable match_table(const IouTable& table, const std::vector<double>& thresholds) {
  MatchTable out;
  out.rows.reserve(thresholds.size());
  for (double t : thresholds) out.rows.push_back(match_at_threshold(table, t));
  return out;
}

// ---------------------------------------------------------------------------
// Instance metrics
// ---------------------------------------------------------------------------

inline std::vector<double> default_thresholds() {
  return std::vector<double>(kDefaultIouThresholds.begin(), kDefaultIouThresholds.end());
}

/// Per-threshold segmentation accuracy TP/(TP+FP+FN). Empty-versus-empty
/// scores 1.0; an empty side against a nonempty one scores 0.0.
inline double segmentation_accuracy(const MatchRow& row) {
  const uint64_t denom = row.tp + row.fp + row.fn;
  if (denom == 0) return 1.0;
  return double(row.tp) / double(denom);
}

inline double mean_segmentation_accuracy(const IouTable& table,
                                         const std::vector<double>& thresholds) {
  if (thresholds.empty()) throw ValueError("mean_segmentation_accuracy: no thresholds");
  double sum = 0.0;
  for (double t : thresholds) sum += segmentation_accuracy(match_at_threshold(table, t));
  return sum / double(thresholds.size());
}

inline double mean_segmentation_accuracy(const LabelImage& pred, const LabelImage& gt,
                                         const std::vector<double>& thresholds =
                                             default_thresholds()) {
  return mean_segmentation_accuracy(iou_table(pred, gt), thresholds);
}

/// Precision, recall and F1 across IoU thresholds.
struct DetectionCurve {
  struct Point {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    uint64_t tp = 0, fp = 0, fn = 0;
  };
  std::vector<Point> points;
};

inline DetectionCurve::Point detection_point(const MatchRow& row) {
  DetectionCurve::Point p;
  p.threshold = row.threshold;
  p.tp = row.tp;
  p.fp = row.fp;
  p.fn = row.fn;
  const bool both_empty = row.tp + row.fp + row.fn == 0;
  p.precision = row.tp + row.fp == 0 ? (both_empty ? 1.0 : 0.0)
                                     : double(row.tp) / double(row.tp + row.fp);
  p.recall = row.tp + row.fn == 0 ? (both_empty ? 1.0 : 0.0)
                                  : double(row.tp) / double(row.tp + row.fn);
  p.f1 = 2 * row.tp + row.fp + row.fn == 0
             ? (both_empty ? 1.0 : 0.0)
             : double(2 * row.tp) / double(2 * row.tp + row.fp + row.fn);
  return p;
}

inline DetectionCurve detection_metrics(const LabelImage& pred, const LabelImage& gt,
                                        const std::vector<double>& thresholds =
                                            default_thresholds()) {
  const IouTable table = iou_table(pred, gt);
  DetectionCurve curve;
  curve.points.reserve(thresholds.size());
  for (double t : thresholds) curve.points.push_back(detection_point(match_at_threshold(table, t)));
  return curve;
}

// ---------------------------------------------------------------------------
// Dice
// ---------------------------------------------------------------------------

/// 2*sum(p*t) / (sum(p) + sum(t)); 1.0 when both sides are all zero.
inline double dice(const std::vector<float>& pred, const Mask& gt) {
  if (pred.size() != gt.data.size()) throw ValueError("dice: dimension mismatch");
  double inter = 0.0, p_sum = 0.0, t_sum = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double p = pred[i];
    const double t = gt.data[i] ? 1.0 : 0.0;
    inter += p * t;
    p_sum += p;
    t_sum += t;
  }
  if (p_sum + t_sum == 0.0) return 1.0;
  return 2.0 * inter / (p_sum + t_sum);
}

inline double dice(const Mask& pred, const Mask& gt) {
  if (pred.width != gt.width || pred.height != gt.height) {
    throw ValueError("dice: dimension mismatch");
  }
  uint64_t inter = 0, p_sum = 0, t_sum = 0;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    const bool p = pred.data[i] != 0, t = gt.data[i] != 0;
    inter += p && t;
    p_sum += p;
    t_sum += t;
  }
  if (p_sum + t_sum == 0) return 1.0;
  return 2.0 * double(inter) / double(p_sum + t_sum);
}

// ---------------------------------------------------------------------------
// Semantic metrics
// ---------------------------------------------------------------------------

/// Per-pixel argmax over channels; ties resolve to the lowest class index.
inline SemanticLabelImage semantic_argmax(const SemanticProbMap& probs) {
  const size_t n = size_t(probs.width()) * probs.height();
  std::vector<uint32_t> classes(n, 0);
  for (size_t i = 0; i < n; ++i) {
    uint32_t best_class = 0;
    float best = probs.channels()[0][i];
    for (uint32_t c = 1; c < uint32_t(probs.channels().size()); ++c) {
      if (probs.channels()[c][i] > best) {
        best = probs.channels()[c][i];
        best_class = c;
      }
    }
    classes[i] = best_class;
  }
  return SemanticLabelImage(probs.width(), probs.height(), probs.num_classes(),
                            std::move(classes));
}

/// Per-class dice with class-frequency weights drawn from the ground truth.
struct SemanticReport {
  uint32_t num_classes = 0;              // C foreground classes
  std::vector<double> per_class_dice;    // C+1 values, index 0 = background
  std::vector<double> class_frequencies; // gt pixel share per class, sums to 1
  double weighted_dice = 0.0;
};

inline SemanticReport weighted_dice(const SemanticLabelImage& pred,
                                    const SemanticLabelImage& gt, uint32_t num_classes) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw ValueError("weighted_dice: dimension mismatch");
  }
  const size_t n = pred.classes().size();
  for (uint32_t v : pred.classes()) {
    if (v > num_classes) throw ValueError("weighted_dice: pred class id exceeds C");
  }
  for (uint32_t v : gt.classes()) {
    if (v > num_classes) throw ValueError("weighted_dice: gt class id exceeds C");
  }

  SemanticReport report;
  report.num_classes = num_classes;
  report.per_class_dice.resize(num_classes + 1, 0.0);
  report.class_frequencies.resize(num_classes + 1, 0.0);

  std::vector<uint64_t> inter(num_classes + 1, 0), p_count(num_classes + 1, 0),
      t_count(num_classes + 1, 0);
  for (size_t i = 0; i < n; ++i) {
    const uint32_t p = pred.classes()[i], t = gt.classes()[i];
    ++p_count[p];
    ++t_count[t];
    if (p == t) ++inter[p];
  }
  for (uint32_t c = 0; c <= num_classes; ++c) {
    const uint64_t denom = p_count[c] + t_count[c];
    report.per_class_dice[c] = denom == 0 ? 1.0 : 2.0 * double(inter[c]) / double(denom);
    report.class_frequencies[c] = n == 0 ? 0.0 : double(t_count[c]) / double(n);
    report.weighted_dice += report.class_frequencies[c] * report.per_class_dice[c];
  }
  return report;
}

// ---------------------------------------------------------------------------
// Dataset aggregation
// ---------------------------------------------------------------------------

struct DatasetAggregate {
  double mean = 0.0;
  std::vector<std::pair<std::string, double>> per_image;  // (sample_id, score)
};

inline DatasetAggregate aggregate_dataset(
    const std::vector<std::pair<std::string, double>>& per_image_scores) {
  if (per_image_scores.empty()) {
    throw ValueError("aggregate_dataset: at least one image is required");
  }
  DatasetAggregate out;
  out.per_image = per_image_scores;
  double sum = 0.0;
  for (const auto& [id, score] : per_image_scores) sum += score;
  out.mean = sum / double(per_image_scores.size());
  return out;
}

}  // namespace pathoseg

#endif  // PATHOSEG_METRICS_HPP
