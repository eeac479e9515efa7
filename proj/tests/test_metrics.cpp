#include <doctest.h>

#include <cmath>

#include "bdspell/metrics.hpp"
#include "metrics_oracle.hpp"

using namespace bdspell;
using namespace bdspell::metrics;

TEST_CASE("iou examples") {
  const Box a{0, 0, 2, 2};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, Box{5, 5, 1, 1}) == 0.0);
  CHECK(iou(a, Box{2, 0, 2, 2}) == 0.0);  // touching edges
  CHECK(std::abs(iou(a, Box{1, 1, 2, 2}) - 1.0 / 7.0) < 1e-12);
  CHECK(iou(a, Box{0, 0, 0, 2}) == 0.0);
  CHECK(iou(Box{0, 0, 0, 0}, Box{0, 0, 0, 0}) == 0.0);
}

TEST_CASE("iou fuzz: symmetry, range, scale invariance, reference") {
  Rng rng(3);
  for (int i = 0; i < 5000; ++i) {
    const Box a{rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 0.5), rng.uniform(0, 0.5)};
    const Box b{rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 0.5), rng.uniform(0, 0.5)};
    const double v = iou(a, b);
    CHECK(v == iou(b, a));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(std::abs(v - testing::ref_iou(a, b)) < 1e-12);
    const double k = rng.uniform(0.01, 1000);
    const Box sa{a.x_min * k, a.y_min * k, a.width * k, a.height * k};
    const Box sb{b.x_min * k, b.y_min * k, b.width * k, b.height * k};
    CHECK(std::abs(iou(sa, sb) - v) < 1e-12);
  }
}

TEST_CASE("classify_at is strict") {
  CHECK(classify_at(0.9, 0.5) == 1);
  CHECK(classify_at(0.5, 0.5) == 0);
  CHECK(classify_at(0.336, 0.335) == 1);
}

TEST_CASE("match examples") {
  const std::vector<GroundTruth> one{{"i", "ka", {0, 0, 1, 1}}};
  const Box close{0, 0, 1, 0.9};  // IoU 0.9
  CHECK(iou(close, one[0].box) == doctest::Approx(0.9));

  std::vector<Prediction> preds{{"i", "ka", close, 0.8}};
  auto m = match_and_count(one, preds, "ka", 0.5);
  CHECK(m.tp == 1);
  CHECK(m.fp == 0);
  CHECK(m.fn == 0);

  preds.push_back({"i", "ka", {0, 0, 0.9, 1}, 0.7});
  m = match_and_count(one, preds, "ka", 0.5);
  CHECK(m.tp == 1);
  CHECK(m.fp == 1);
  CHECK(m.fn == 0);
  CHECK(m.is_tp == std::vector<bool>{true, false});

  const std::vector<GroundTruth> two{{"i", "ka", {0, 0, 1, 1}}, {"j", "ka", {0, 0, 1, 1}}};
  m = match_and_count(two, {}, "ka", 0.5);
  CHECK(m.tp == 0);
  CHECK(m.fp == 0);
  CHECK(m.fn == 2);

  // Other images and classes never match.
  const std::vector<Prediction> stray{{"j", "ka", close, 0.9}, {"i", "kha", close, 0.9}};
  m = match_and_count(one, stray, "ka", 0.5);
  CHECK(m.tp == 0);
  CHECK(m.fp == 1);
  CHECK(m.fn == 1);
}

TEST_CASE("average precision examples") {
  MatchResult m;
  m.n_gt = 2;
  m.scores = {0.9, 0.8, 0.7};
  m.is_tp = {true, false, true};
  const auto pts = pr_curve(m);
  CHECK(pts[2].precision == doctest::Approx(2.0 / 3.0));
  CHECK(std::abs(average_precision(pts).value - (0.5 * 1.0 + 0.5 * 2.0 / 3.0)) < 1e-15);

  m.is_tp = {true, true, false};
  CHECK(average_precision(pr_curve(m)).value == 1.0);
  m.is_tp = {false, false, false};
  CHECK(average_precision(pr_curve(m)).value == 0.0);

  const APResult empty = average_precision({});
  CHECK(empty.value == 0.0);
  CHECK(empty.zero_gt);
}

TEST_CASE("perfect single-class predictions") {
  std::vector<GroundTruth> gts;
  std::vector<Prediction> preds;
  for (int i = 0; i < 5; ++i) {
    const Box b{0.1 * i, 0.1, 0.1, 0.2};
    gts.push_back({"img" + std::to_string(i), "ka", b});
    preds.push_back({"img" + std::to_string(i), "ka", b, 0.5 + 0.1 * i});
  }
  const EvalReport r = evaluate(gts, preds);
  CHECK(r.map50 == 1.0);
  CHECK(r.map50_95 == 1.0);
  CHECK(r.best_f1.f1 == 1.0);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
}

TEST_CASE("evaluate matches the brute-force reference") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const auto d = testing::synthetic_dataset(seed);
    const EvalReport r = evaluate(d.gts, d.preds);
    REQUIRE(r.classes.size() == 3);
    double m50 = 0, m5095 = 0;
    for (const ClassAP& c : r.classes) {
      for (std::size_t t = 0; t < r.iou_thresholds.size(); ++t) {
        const double ref = testing::ref_ap(d.gts, d.preds, c.label, r.iou_thresholds[t]);
        CHECK(std::abs(c.ap[t] - ref) < 1e-9);
      }
      const double ref50 = testing::ref_ap(d.gts, d.preds, c.label, 0.5);
      CHECK(std::abs(c.ap50 - ref50) < 1e-9);
      double sum = 0;
      for (double v : c.ap) sum += v;
      CHECK(std::abs(c.ap50_95 - sum / c.ap.size()) < 1e-12);
      m50 += c.ap50;
      m5095 += c.ap50_95;
    }
    CHECK(std::abs(r.map50 - m50 / 3) < 1e-12);
    CHECK(std::abs(r.map50_95 - m5095 / 3) < 1e-12);
    CHECK(r.map50 > 0.3);
    CHECK(r.map50 < 1.0);

    // F1 curve: pooled counts at IoU 0.5 over predictions strictly above conf.
    int n_gt = static_cast<int>(d.gts.size());
    for (std::size_t k = 0; k < r.f1_curve.size(); k += 17) {
      const F1Point& pt = r.f1_curve[k];
      int tp = 0, fp = 0;
      for (const char* cls : {"ka", "kha", "ga"}) {
        const auto [a, b] =
            testing::ref_counts(d.gts, d.preds, cls, 0.5, std::nextafter(pt.conf, 2.0));
        tp += a;
        fp += b;
      }
      const double p = tp + fp ? double(tp) / (tp + fp) : 0.0;
      const double rc = double(tp) / n_gt;
      CHECK(std::abs(pt.precision - p) < 1e-12);
      CHECK(std::abs(pt.recall - rc) < 1e-12);
    }
    for (const F1Point& pt : r.f1_curve) CHECK(pt.f1 <= r.best_f1.f1);
  }
}

TEST_CASE("AP depends only on score ranks") {
  const auto d = testing::synthetic_dataset(9);
  auto moved = d.preds;
  for (auto& p : moved) p.score = std::pow(p.score, 3.0) * 0.5 + 0.1;
  const EvalReport a = evaluate(d.gts, d.preds);
  const EvalReport b = evaluate(d.gts, moved);
  for (std::size_t c = 0; c < a.classes.size(); ++c) {
    for (std::size_t t = 0; t < a.iou_thresholds.size(); ++t) {
      CHECK(a.classes[c].ap[t] == b.classes[c].ap[t]);
    }
  }
}

TEST_CASE("duplicating a true positive never raises AP") {
  const auto d = testing::synthetic_dataset(5);
  const EvalReport base = evaluate(d.gts, d.preds);
  for (std::size_t i = 0; i < d.preds.size(); i += 3) {
    auto preds = d.preds;
    preds.push_back(preds[i]);
    const EvalReport r = evaluate(d.gts, preds);
    for (std::size_t c = 0; c < r.classes.size(); ++c) {
      for (std::size_t t = 0; t < r.iou_thresholds.size(); ++t) {
        CHECK(r.classes[c].ap[t] <= base.classes[c].ap[t] + 1e-12);
      }
    }
  }
}

TEST_CASE("evaluate errors and excluded classes") {
  CHECK_THROWS_AS(evaluate({}, {}), MetricsError);
  const std::vector<GroundTruth> gts{{"i", "ka", {0.1, 0.1, 0.2, 0.2}}};
  const std::vector<Prediction> pixels{{"i", "ka", {40, 40, 80, 80}, 0.9}};
  CHECK_THROWS_AS(evaluate(gts, pixels), MetricsError);
  const std::vector<Prediction> bad_score{{"i", "ka", {0.1, 0.1, 0.2, 0.2}, 1.5}};
  CHECK_THROWS_AS(evaluate(gts, bad_score), MetricsError);

  const std::vector<Prediction> extra{{"i", "ka", {0.1, 0.1, 0.2, 0.2}, 0.9},
                                      {"i", "ga", {0.5, 0.5, 0.2, 0.2}, 0.8}};
  const EvalReport r = evaluate(gts, extra);
  CHECK(r.classes.size() == 1);
  CHECK(r.excluded_classes == std::vector<std::string>{"ga"});
  CHECK(r.map50 == 1.0);
  CHECK(r.f1_curve.front().precision == 0.5);
}

TEST_CASE("report carries every headline score") {
  const auto d = testing::synthetic_dataset(2);
  const nlohmann::json j = evaluate(d.gts, d.preds).to_json();
  for (const char* key : {"map50", "map50_95", "precision", "recall", "best_f1", "f1_curve",
                          "classes", "iou_thresholds", "excluded_classes"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["best_f1"].contains("conf"));
  CHECK(j["best_f1"].contains("f1"));
  CHECK(j["f1_curve"].size() == 201);
  CHECK(j["iou_thresholds"].size() == 10);
}

TEST_CASE("JSON readers") {
  const auto gts = ground_truth_from_json(nlohmann::json::parse(
      R"([{"image_id":"a","label":"ka","box":[0.1,0.2,0.3,0.4]}])"));
  REQUIRE(gts.size() == 1);
  CHECK(gts[0].box.height == 0.4);
  const auto preds = predictions_from_json(nlohmann::json::parse(
      R"([{"image_id":"a","label":"ka","box":[0.1,0.2,0.3,0.4],"score":0.7}])"));
  CHECK(preds[0].score == 0.7);
  CHECK_THROWS_AS(ground_truth_from_json(nlohmann::json::parse(R"([{"image_id":"a"}])")),
                  InputError);
  CHECK_THROWS_AS(predictions_from_json(nlohmann::json::parse(
                      R"([{"image_id":"a","label":"ka","box":[0,0,1,1]}])")),
                  InputError);
  CHECK_THROWS_AS(ground_truth_from_json(nlohmann::json::parse(
                      R"([{"image_id":"","label":"ka","box":[0,0,1,1]}])")),
                  InputError);
  CHECK_THROWS_AS(ground_truth_from_json(nlohmann::json::parse(
                      R"([{"image_id":"a","label":"ka","box":[0,0,-1,1]}])")),
                  InputError);
}

TEST_CASE("reference evaluator reproduces the hand-computed staircase") {
  // Two ground truths; ranked predictions TP, FP, TP.
  const std::vector<GroundTruth> gts{{"i", "ka", {0, 0, 1, 1}}, {"i", "ka", {2, 2, 1, 1}}};
  const std::vector<Prediction> preds{{"i", "ka", {0, 0, 1, 1}, 0.9},
                                      {"i", "ka", {5, 5, 1, 1}, 0.8},
                                      {"i", "ka", {2, 2, 1, 1}, 0.7}};
  const double expected = 0.5 * 1.0 + 0.5 * (2.0 / 3.0);
  CHECK(std::abs(testing::ref_ap(gts, preds, "ka", 0.5) - expected) < 1e-15);
  CHECK(std::abs(evaluate(gts, preds).classes[0].ap50 - expected) < 1e-15);
}
