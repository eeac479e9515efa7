#include "bdspell/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace bdspell::metrics {

using nlohmann::json;

double iou(const Box& a, const Box& b) {
  if (a.area() <= 0.0 || b.area() <= 0.0) return 0.0;
  const double ix = std::min(a.x_min + a.width, b.x_min + b.width) - std::max(a.x_min, b.x_min);
  const double iy = std::min(a.y_min + a.height, b.y_min + b.height) - std::max(a.y_min, b.y_min);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

int classify_at(double score, double threshold) { return score > threshold ? 1 : 0; }

MatchResult match_and_count(std::span<const GroundTruth> gts, std::span<const Prediction> preds,
                            const std::string& label, double iou_threshold) {
  MatchResult out;
  std::map<std::string, std::vector<std::size_t>> gt_by_image;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    if (gts[i].label == label) {
      gt_by_image[gts[i].image_id].push_back(i);
      ++out.n_gt;
    }
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].label == label) out.order.push_back(i);
  }
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });

  std::vector<bool> used(gts.size(), false);
  for (std::size_t idx : out.order) {
    const Prediction& p = preds[idx];
    double best = -1.0;
    std::size_t best_gt = 0;
    if (auto it = gt_by_image.find(p.image_id); it != gt_by_image.end()) {
      for (std::size_t g : it->second) {
        if (used[g]) continue;
        const double v = iou(p.box, gts[g].box);
        if (v > best) {
          best = v;
          best_gt = g;
        }
      }
    }
    const bool hit = best >= iou_threshold && best > 0.0;
    if (hit) used[best_gt] = true;
    out.scores.push_back(p.score);
    out.is_tp.push_back(hit);
    hit ? ++out.tp : ++out.fp;
  }
  out.fn = out.n_gt - out.tp;
  return out;
}

std::vector<PRPoint> pr_curve(const MatchResult& match) {
  std::vector<PRPoint> points;
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < match.is_tp.size(); ++k) {
    match.is_tp[k] ? ++tp : ++fp;
    PRPoint p;
    p.threshold = match.scores[k];
    p.tp = tp;
    p.fp = fp;
    p.fn = match.n_gt - tp;
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    p.recall = match.n_gt ? static_cast<double>(tp) / static_cast<double>(match.n_gt) : 0.0;
    points.push_back(p);
  }
  return points;
}

APResult average_precision(std::span<const PRPoint> points) {
  if (points.empty()) return {0.0, true};
  std::vector<double> envelope(points.size());
  double running = 0.0;
  for (std::size_t k = points.size(); k-- > 0;) {
    running = std::max(running, points[k].precision);
    envelope[k] = running;
  }
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    ap += (points[k].recall - prev_recall) * envelope[k];
    prev_recall = points[k].recall;
  }
  return {std::clamp(ap, 0.0, 1.0), false};
}

std::vector<double> default_iou_thresholds() {
  std::vector<double> out;
  for (int i = 10; i <= 19; ++i) out.push_back(i / 20.0);
  return out;
}

std::vector<double> default_conf_grid() {
  std::vector<double> out;
  for (int i = 0; i <= 200; ++i) out.push_back(i / 200.0);
  return out;
}

namespace {

bool all_normalized(auto&& records) {
  for (const auto& r : records) {
    const Box& b = r.box;
    if (b.x_min > 1.0 || b.y_min > 1.0 || b.x_min + b.width > 1.0 + 1e-9 ||
        b.y_min + b.height > 1.0 + 1e-9) {
      return false;
    }
  }
  return true;
}

bool any_large(auto&& records) {
  for (const auto& r : records) {
    const Box& b = r.box;
    if (b.x_min > 1.5 || b.y_min > 1.5 || b.width > 1.5 || b.height > 1.5 ||
        b.x_min + b.width > 1.5 || b.y_min + b.height > 1.5) {
      return true;
    }
  }
  return false;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

EvalReport evaluate(std::span<const GroundTruth> gts, std::span<const Prediction> preds,
                    const EvalOptions& options) {
  if (gts.empty()) throw MetricsError("evaluation needs at least one ground-truth box");
  if (options.iou_thresholds.empty()) throw MetricsError("no IoU thresholds given");
  for (const auto& p : preds) {
    if (!(p.score >= 0.0 && p.score <= 1.0)) throw MetricsError("prediction score outside [0,1]");
  }
  if ((all_normalized(gts) && any_large(preds)) || (all_normalized(preds) && !preds.empty() &&
                                                    any_large(gts))) {
    throw MetricsError(
        "box convention mismatch: one file is normalized while the other has coordinates > 1.5");
  }

  EvalReport report;
  report.iou_thresholds = options.iou_thresholds;

  std::set<std::string> gt_labels, pred_labels;
  for (const auto& g : gts) gt_labels.insert(g.label);
  for (const auto& p : preds) pred_labels.insert(p.label);
  for (const auto& l : pred_labels) {
    if (!gt_labels.count(l)) report.excluded_classes.push_back(l);
  }

  auto ap_at = [&](const std::string& label, double thr) {
    return average_precision(pr_curve(match_and_count(gts, preds, label, thr))).value;
  };

  std::vector<double> ap50s, ap50_95s;
  for (const auto& label : gt_labels) {
    ClassAP cls;
    cls.label = label;
    for (const auto& g : gts) cls.n_gt += g.label == label;
    for (double thr : options.iou_thresholds) cls.ap.push_back(ap_at(label, thr));
    cls.ap50 = ap_at(label, 0.5);
    cls.ap50_95 = mean(cls.ap);
    ap50s.push_back(cls.ap50);
    ap50_95s.push_back(cls.ap50_95);
    report.classes.push_back(std::move(cls));
  }
  report.map50 = mean(ap50s);
  report.map50_95 = mean(ap50_95s);

  // F1 against confidence: predictions with classify_at(score, conf) == 1.
  std::vector<MatchResult> matches;
  for (const auto& label : gt_labels) matches.push_back(match_and_count(gts, preds, label, 0.5));
  const std::size_t total_gt = gts.size();
  for (double conf : options.conf_grid) {
    std::size_t tp = 0, fp = 0;
    for (const auto& m : matches) {
      // Greedy matching is sequential in score order, so the thresholded
      // result is a prefix of the full one.
      for (std::size_t k = 0; k < m.scores.size(); ++k) {
        if (!classify_at(m.scores[k], conf)) continue;
        m.is_tp[k] ? ++tp : ++fp;
      }
    }
    for (const auto& l : report.excluded_classes) {
      for (const auto& p : preds) fp += p.label == l && classify_at(p.score, conf);
    }
    F1Point pt;
    pt.conf = conf;
    pt.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    pt.recall = static_cast<double>(tp) / static_cast<double>(total_gt);
    pt.f1 = pt.precision + pt.recall > 0.0
                ? 2.0 * pt.precision * pt.recall / (pt.precision + pt.recall)
                : 0.0;
    report.f1_curve.push_back(pt);
    if (pt.f1 > report.best_f1.f1 || report.f1_curve.size() == 1) report.best_f1 = pt;
  }
  report.precision = report.best_f1.precision;
  report.recall = report.best_f1.recall;
  return report;
}

json EvalReport::to_json() const {
  json classes_json = json::array();
  for (const auto& c : classes) {
    classes_json.push_back({{"label", c.label},
                            {"n_gt", c.n_gt},
                            {"ap", c.ap},
                            {"ap50", c.ap50},
                            {"ap50_95", c.ap50_95}});
  }
  json curve = json::array();
  for (const auto& p : f1_curve) {
    curve.push_back({{"conf", p.conf}, {"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}});
  }
  return {{"iou_thresholds", iou_thresholds},
          {"classes", std::move(classes_json)},
          {"excluded_classes", excluded_classes},
          {"map50", map50},
          {"map50_95", map50_95},
          {"precision", precision},
          {"recall", recall},
          {"f1_curve", std::move(curve)},
          {"best_f1",
           {{"conf", best_f1.conf},
            {"precision", best_f1.precision},
            {"recall", best_f1.recall},
            {"f1", best_f1.f1}}}};
}

std::string EvalReport::table() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << std::left << std::setw(16) << "class" << std::right << std::setw(8) << "n_gt"
      << std::setw(12) << "AP@0.5" << std::setw(14) << "AP@.5:.95" << '\n';
  for (const auto& c : classes) {
    out << std::left << std::setw(16) << c.label << std::right << std::setw(8) << c.n_gt
        << std::setw(12) << c.ap50 << std::setw(14) << c.ap50_95 << '\n';
  }
  out << std::left << std::setw(16) << "all" << std::right << std::setw(8) << "" << std::setw(12)
      << map50 << std::setw(14) << map50_95 << '\n';
  out << "best F1 " << best_f1.f1 << " at conf " << best_f1.conf << " (P " << precision << ", R "
      << recall << ")\n";
  if (!excluded_classes.empty()) {
    out << "excluded (no ground truth):";
    for (const auto& l : excluded_classes) out << ' ' << l;
    out << '\n';
  }
  return out.str();
}

namespace {

Box box_from_json(const json& v, const std::string& ctx) {
  if (!v.is_array() || v.size() != 4) throw MetricsError(ctx + ": box must be [x, y, w, h]");
  for (const auto& x : v) {
    if (!x.is_number()) throw MetricsError(ctx + ": box entries must be numbers");
  }
  Box b{v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
  if (b.width < 0.0 || b.height < 0.0) throw MetricsError(ctx + ": negative box size");
  return b;
}

std::string string_field(const json& item, const char* key, const std::string& ctx) {
  auto it = item.find(key);
  if (it == item.end()) throw MetricsError(ctx + ": missing '" + key + "'");
  if (it->is_string()) {
    if (it->get<std::string>().empty()) throw MetricsError(ctx + ": empty '" + key + "'");
    return it->get<std::string>();
  }
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw MetricsError(ctx + ": '" + key + "' must be a string");
}

}  // namespace

std::vector<GroundTruth> ground_truth_from_json(const json& doc) {
  if (!doc.is_array()) throw MetricsError("ground truth must be a JSON array");
  std::vector<GroundTruth> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string ctx = "ground_truth[" + std::to_string(i) + "]";
    if (!doc[i].is_object() || !doc[i].contains("box")) throw MetricsError(ctx + ": missing box");
    out.push_back({string_field(doc[i], "image_id", ctx), string_field(doc[i], "label", ctx),
                   box_from_json(doc[i]["box"], ctx)});
  }
  return out;
}

std::vector<Prediction> predictions_from_json(const json& doc) {
  if (!doc.is_array()) throw MetricsError("predictions must be a JSON array");
  std::vector<Prediction> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string ctx = "predictions[" + std::to_string(i) + "]";
    const json& item = doc[i];
    if (!item.is_object() || !item.contains("box")) throw MetricsError(ctx + ": missing box");
    if (!item.contains("score") || !item["score"].is_number()) {
      throw MetricsError(ctx + ": 'score' must be a number");
    }
    const double score = item["score"].get<double>();
    if (!(score >= 0.0 && score <= 1.0)) throw MetricsError(ctx + ": score outside [0,1]");
    out.push_back({string_field(item, "image_id", ctx), string_field(item, "label", ctx),
                   box_from_json(item["box"], ctx), score});
  }
  return out;
}

}  // namespace bdspell::metrics
