#pragma once

// Naive reference evaluator: re-matches from scratch at every score cutoff and
// integrates the upper precision envelope over the distinct recall levels.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bdspell/metrics.hpp"
#include "bdspell/simulator.hpp"

namespace bdspell::testing {

inline double ref_iou(const metrics::Box& a, const metrics::Box& b) {
  const double w = std::max(0.0, std::min(a.x_min + a.width, b.x_min + b.width) -
                                     std::max(a.x_min, b.x_min));
  const double h = std::max(0.0, std::min(a.y_min + a.height, b.y_min + b.height) -
                                     std::max(a.y_min, b.y_min));
  const double inter = w * h;
  const double uni = a.width * a.height + b.width * b.height - inter;
  if (a.width * a.height == 0.0 || b.width * b.height == 0.0 || uni <= 0.0) return 0.0;
  return inter / uni;
}

// TP count among predictions of `label` with score >= cutoff.
inline std::pair<int, int> ref_counts(const std::vector<metrics::GroundTruth>& gts,
                                      const std::vector<metrics::Prediction>& preds,
                                      const std::string& label, double thr, double cutoff) {
  std::vector<const metrics::Prediction*> kept;
  for (const auto& p : preds) {
    if (p.label == label && p.score >= cutoff) kept.push_back(&p);
  }
  std::sort(kept.begin(), kept.end(), [](auto* a, auto* b) { return a->score > b->score; });
  std::vector<bool> taken(gts.size(), false);
  int tp = 0, fp = 0;
  for (const auto* p : kept) {
    int best = -1;
    double best_iou = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || gts[g].label != label || gts[g].image_id != p->image_id) continue;
      const double v = ref_iou(p->box, gts[g].box);
      if (v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0 && best_iou >= thr) {
      taken[best] = true;
      ++tp;
    } else {
      ++fp;
    }
  }
  return {tp, fp};
}

inline double ref_ap(const std::vector<metrics::GroundTruth>& gts,
                     const std::vector<metrics::Prediction>& preds, const std::string& label,
                     double thr) {
  int n_gt = 0;
  for (const auto& g : gts) n_gt += g.label == label;
  std::set<double, std::greater<>> cutoffs;
  for (const auto& p : preds) {
    if (p.label == label) cutoffs.insert(p.score);
  }
  std::vector<std::pair<double, double>> pr;  // (recall, precision)
  for (double s : cutoffs) {
    const auto [tp, fp] = ref_counts(gts, preds, label, thr, s);
    pr.emplace_back(double(tp) / n_gt, double(tp) / (tp + fp));
  }
  std::set<double> recalls;
  for (const auto& [r, p] : pr) recalls.insert(r);
  double ap = 0.0, prev = 0.0;
  for (double r : recalls) {
    double best = 0.0;
    for (const auto& [r2, p2] : pr) {
      if (r2 >= r) best = std::max(best, p2);
    }
    ap += (r - prev) * best;
    prev = r;
  }
  return ap;
}

struct Dataset {
  std::vector<metrics::GroundTruth> gts;
  std::vector<metrics::Prediction> preds;
};

// Three classes over twenty images: jittered true positives of varying
// quality, duplicates, misses, background false positives and class swaps.
// Scores are distinct.
inline Dataset synthetic_dataset(std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  const std::string classes[] = {"ka", "kha", "ga"};
  auto rand_box = [&] {
    const double w = rng.uniform(0.05, 0.3), h = rng.uniform(0.05, 0.3);
    return metrics::Box{rng.uniform(0, 1 - w), rng.uniform(0, 1 - h), w, h};
  };
  std::set<double> used;
  auto score = [&](double lo, double hi) {
    double s;
    do s = rng.uniform(lo, hi);
    while (!used.insert(s).second);
    return s;
  };
  for (int img = 0; img < 20; ++img) {
    const std::string id = "img" + std::to_string(img);
    for (const std::string& cls : classes) {
      // Every image carries at least one box of the first class.
      const std::size_t n = cls == classes[0] ? 1 + rng.index(2) : rng.index(3);
      for (std::size_t k = 0; k < n; ++k) {
        const metrics::Box b = rand_box();
        d.gts.push_back({id, cls, b});
        if (rng.bernoulli(0.8)) {
          const double j = rng.uniform(0.0, 0.35);
          metrics::Box p{b.x_min + j * b.width * (rng.uniform() - 0.5),
                         b.y_min + j * b.height * (rng.uniform() - 0.5),
                         b.width * (1 + j * (rng.uniform() - 0.5)),
                         b.height * (1 + j * (rng.uniform() - 0.5))};
          d.preds.push_back({id, cls, p, score(0.3, 1.0)});
          if (rng.bernoulli(0.2)) d.preds.push_back({id, cls, p, score(0.1, 0.9)});
        }
        if (rng.bernoulli(0.1)) d.preds.push_back({id, classes[(k + 1) % 3], b, score(0.0, 0.7)});
      }
      if (rng.bernoulli(0.3)) d.preds.push_back({id, cls, rand_box(), score(0.0, 0.8)});
    }
  }
  return d;
}

}  // namespace bdspell::testing
