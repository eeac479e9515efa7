#pragma once

// Object-detection evaluation: IoU, thresholding, greedy matching,
// precision/recall curves, all-point interpolated AP, mAP and F1-confidence.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bdspell/error.hpp"

namespace bdspell::metrics {

// [x_min, y_min, width, height]; normalized or absolute, consistently per dataset.
struct Box {
  double x_min = 0.0;
  double y_min = 0.0;
  double width = 0.0;
  double height = 0.0;

  double area() const { return width * height; }
};

struct GroundTruth {
  std::string image_id;
  std::string label;
  Box box;
};

struct Prediction {
  std::string image_id;
  std::string label;
  Box box;
  double score = 0.0;
};

// Zero-area boxes give 0.
double iou(const Box& a, const Box& b);

// 1 when score > threshold (strict), else 0.
int classify_at(double score, double threshold);

struct MatchResult {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t n_gt = 0;
  // Class predictions in descending score order (stable for ties).
  std::vector<std::size_t> order;   // indices into the input prediction list
  std::vector<double> scores;
  std::vector<bool> is_tp;
};

// Predictions of `label`, highest score first, each take the unmatched
// ground truth of the same image and class with the highest IoU, provided
// IoU >= iou_threshold.
MatchResult match_and_count(std::span<const GroundTruth> gts, std::span<const Prediction> preds,
                            const std::string& label, double iou_threshold);

struct PRPoint {
  double threshold = 0.0;  // score of the last prediction admitted
  double precision = 0.0;
  double recall = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

// One point per prediction in rank order.
std::vector<PRPoint> pr_curve(const MatchResult& match);

struct APResult {
  double value = 0.0;
  bool zero_gt = false;  // set when there were no points to integrate
};

// Points must be sorted by recall ascending. The precision envelope is made
// non-increasing from the right, then sum (r_k - r_{k-1}) * p_interp(r_k).
APResult average_precision(std::span<const PRPoint> points);

std::vector<double> default_iou_thresholds();  // 0.50, 0.55, ..., 0.95
std::vector<double> default_conf_grid();       // 0.000, 0.005, ..., 1.000

struct ClassAP {
  std::string label;
  std::size_t n_gt = 0;
  std::vector<double> ap;  // aligned with EvalReport::iou_thresholds
  double ap50 = 0.0;
  double ap50_95 = 0.0;
};

struct F1Point {
  double conf = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  std::vector<double> iou_thresholds;
  std::vector<ClassAP> classes;  // classes with at least one ground truth
  std::vector<std::string> excluded_classes;  // predicted but never in ground truth
  double map50 = 0.0;
  double map50_95 = 0.0;
  std::vector<F1Point> f1_curve;  // IoU 0.5, counts pooled over classes
  F1Point best_f1;
  double precision = 0.0;  // at best_f1.conf
  double recall = 0.0;

  nlohmann::json to_json() const;
  std::string table() const;
};

struct EvalOptions {
  std::vector<double> iou_thresholds = default_iou_thresholds();
  std::vector<double> conf_grid = default_conf_grid();
};

class MetricsError : public InputError {
 public:
  using InputError::InputError;
};

// Throws MetricsError on empty ground truth or a mixed box convention
// (one side all normalized while the other has coordinates > 1.5).
EvalReport evaluate(std::span<const GroundTruth> gts, std::span<const Prediction> preds,
                    const EvalOptions& options = {});

std::vector<GroundTruth> ground_truth_from_json(const nlohmann::json& doc);
std::vector<Prediction> predictions_from_json(const nlohmann::json& doc);

}  // namespace bdspell::metrics
