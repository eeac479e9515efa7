#include <doctest.h>

#include <cmath>

#include "bdspell/confirmer.hpp"
#include "bdspell/simulator.hpp"

using namespace bdspell;

namespace {

DetectionFrame frame_of(double t, std::vector<std::pair<std::string, double>> dets) {
  DetectionFrame f{t, {}};
  for (auto& [label, conf] : dets) f.detections.push_back({label, conf, {0.4, 0.4, 0.2, 0.2}});
  return f;
}

// Feeds a constant single-detection stream; returns the 1-based confirming frame.
std::size_t frames_until(const ConfirmConfig& cfg, const std::string& label, double conf,
                         std::size_t limit = 10000) {
  Confirmer c(cfg);
  for (std::size_t i = 1; i <= limit; ++i) {
    if (auto sym = c.ingest(frame_of(i / 45.0, {{label, conf}}))) {
      CHECK(sym->frames_to_confirm == i);
      return i;
    }
  }
  return 0;
}

}  // namespace

TEST_CASE("examples") {
  CHECK(frames_until({Strategy::cumulative_confidence, 5, 1}, "ka", 1.0) == 6);
  CHECK(frames_until({Strategy::cumulative_confidence, 50, 1}, "ka", 0.8333) == 61);
  CHECK(frames_until({Strategy::cumulative_confidence, 50, 1}, "ka", 0.85) == 59);
  CHECK(frames_until({Strategy::detection_count, 10, 1}, "ka", 0.4) == 11);
}

TEST_CASE("alternating ka/kha: ka confirms first") {
  // Brute force over both running sums: ka adds 0.9 on odd frames, kha 0.3 on even.
  std::size_t expected = 0;
  {
    int ka_tenths = 0, kha_tenths = 0;
    for (std::size_t i = 1; i < 100 && !expected; ++i) {
      (i % 2 ? ka_tenths : kha_tenths) += i % 2 ? 9 : 3;
      if (ka_tenths > 50 || kha_tenths > 50) expected = i;
    }
    REQUIRE(ka_tenths > 50);
    REQUIRE(kha_tenths <= 50);
  }
  CHECK(expected == 11);

  Confirmer c({Strategy::cumulative_confidence, 5, 1});
  for (std::size_t i = 1; i < 100; ++i) {
    auto sym = c.ingest(frame_of(i * 0.1, {{i % 2 ? "ka" : "kha", i % 2 ? 0.9 : 0.3}}));
    if (sym) {
      CHECK(sym->label == "ka");
      CHECK(i == expected);
      CHECK(sym->score > 5.0);
      break;
    }
  }
}

TEST_CASE("per-frame contribution is the mean confidence or the count") {
  Confirmer conf({Strategy::cumulative_confidence, 100, 1});
  conf.ingest(frame_of(0, {{"ka", 0.2}, {"ka", 0.6}, {"kha", 0.5}}));
  CHECK(conf.score("ka") == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(conf.score("kha") == doctest::Approx(0.5).epsilon(1e-15));

  Confirmer count({Strategy::detection_count, 100, 1});
  count.ingest(frame_of(0, {{"ka", 0.2}, {"ka", 0.6}, {"kha", 0.5}}));
  CHECK(count.score("ka") == 2.0);
  CHECK(count.score("kha") == 1.0);
  CHECK(count.score("ga") == 0.0);
}

TEST_CASE("exactly delta does not confirm") {
  Confirmer c({Strategy::detection_count, 3, 1});
  for (int i = 1; i <= 3; ++i) CHECK_FALSE(c.ingest(frame_of(i, {{"ka", 1}})));
  CHECK(c.score("ka") == 3.0);
  CHECK(c.ingest(frame_of(4, {{"ka", 1}})));
}

TEST_CASE("simultaneous crossing: highest wins, ties go to the smaller label") {
  Confirmer c({Strategy::cumulative_confidence, 1, 1});
  c.ingest(frame_of(0, {{"kha", 0.9}, {"ka", 0.8}}));
  auto sym = c.ingest(frame_of(1, {{"kha", 0.9}, {"ka", 0.8}}));
  REQUIRE(sym);
  CHECK(sym->label == "kha");

  Confirmer tie({Strategy::detection_count, 1, 1});
  tie.ingest(frame_of(0, {{"kha", 1}, {"ka", 1}}));
  sym = tie.ingest(frame_of(1, {{"kha", 1}, {"ka", 1}}));
  REQUIRE(sym);
  CHECK(sym->label == "ka");
  CHECK(tie.scores().empty());
}

TEST_CASE("decay multiplies before the update") {
  Confirmer c({Strategy::detection_count, 100, 0.5});
  c.ingest(frame_of(0, {{"ka", 1}}));
  c.ingest(frame_of(1, {{"ka", 1}}));
  CHECK(c.score("ka") == 1.5);
  c.ingest(frame_of(2, {}));
  CHECK(c.score("ka") == 0.75);
  // Geometric bound: with decay d the score never exceeds 1/(1-d).
  Confirmer never({Strategy::detection_count, 2, 0.5});
  for (int i = 0; i < 200; ++i) CHECK_FALSE(never.ingest(frame_of(i, {{"ka", 1}})));
}

TEST_CASE("malformed and out-of-order frames leave state untouched") {
  Confirmer c({Strategy::cumulative_confidence, 50, 1});
  c.ingest(frame_of(1.0, {{"ka", 0.5}}));
  const auto before = c.scores();

  CHECK_THROWS_AS(c.ingest(frame_of(1.1, {{"ka", 1.7}})), InvariantError);
  CHECK_THROWS_AS(c.ingest(frame_of(1.1, {{"ka", -0.1}})), InvariantError);
  CHECK_THROWS_AS(c.ingest(frame_of(0.5, {{"ka", 0.5}})), InvariantError);
  CHECK_THROWS_AS(c.ingest(frame_of(-1.0, {})), InvariantError);
  CHECK_THROWS_AS(c.ingest(frame_of(std::nan(""), {})), InvariantError);
  DetectionFrame wide{1.2, {{"ka", 0.5, {0.8, 0.1, 0.3, 0.1}}}};
  CHECK_THROWS_AS(c.ingest(wide), InvariantError);

  CHECK(c.scores() == before);
  CHECK(c.frames_seen() == 1);
  CHECK(c.last_t() == 1.0);
  CHECK_NOTHROW(c.ingest(frame_of(1.0, {{"ka", 0.5}})));
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS((ConfirmConfig{Strategy::cumulative_confidence, 0, 1}.validate()), InvariantError);
  CHECK_THROWS_AS((ConfirmConfig{Strategy::cumulative_confidence, -3, 1}.validate()),
                  InvariantError);
  CHECK_THROWS_AS((ConfirmConfig{Strategy::cumulative_confidence, 5, 0}.validate()), InvariantError);
  CHECK_THROWS_AS((ConfirmConfig{Strategy::cumulative_confidence, 5, 1.1}.validate()),
                  InvariantError);
  CHECK_NOTHROW((ConfirmConfig{Strategy::detection_count, 0.1, 0.01}.validate()));
  CHECK(parse_strategy("count") == Strategy::detection_count);
  CHECK(parse_strategy("confidence") == Strategy::cumulative_confidence);
  CHECK_FALSE(parse_strategy("votes"));
}

TEST_CASE("closed form on a 20x5 grid") {
  // c = j/20, so k*c > delta  <=>  k*j > 20*delta, all in integers.
  for (int j = 1; j <= 20; ++j) {
    for (int delta : {5, 10, 20, 30, 50}) {
      const std::size_t oracle = static_cast<std::size_t>(20 * delta / j + 1);
      CHECK(frames_until({Strategy::cumulative_confidence, double(delta), 1}, "ka", j / 20.0) ==
            oracle);
    }
  }
}

TEST_CASE("frames to confirm is non-decreasing in delta") {
  for (double c : {0.31, 0.5, 0.8333, 0.97}) {
    std::size_t prev = 0;
    for (double d : {5.0, 10.0, 20.0, 30.0, 50.0}) {
      const std::size_t k = frames_until({Strategy::cumulative_confidence, d, 1}, "ka", c);
      CHECK(k >= prev);
      prev = k;
    }
  }
}

TEST_CASE("random streams: determinism, strict threshold, full reset") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const char* labels[] = {"ka", "kha", "ga", "a"};
    std::vector<DetectionFrame> frames;
    for (int i = 0; i < 400; ++i) {
      DetectionFrame f{i / 45.0, {}};
      const std::size_t n = rng.index(4);
      for (std::size_t k = 0; k < n; ++k) {
        f.detections.push_back({labels[rng.index(4)], rng.uniform(), {0.1, 0.1, 0.2, 0.2}});
      }
      frames.push_back(std::move(f));
    }
    for (Strategy s : {Strategy::cumulative_confidence, Strategy::detection_count}) {
      const ConfirmConfig cfg{s, 3.0 + static_cast<double>(seed % 5), seed % 3 ? 1.0 : 0.95};
      Confirmer a(cfg), b(cfg);
      for (const DetectionFrame& f : frames) {
        const auto sa = a.ingest(f);
        const auto sb = b.ingest(f);
        REQUIRE(sa.has_value() == sb.has_value());
        for (const auto& [label, score] : a.scores()) CHECK(score >= 0.0);
        if (sa) {
          CHECK(sa->label == sb->label);
          CHECK(sa->score == sb->score);
          CHECK(sa->score > cfg.delta);
          CHECK(sa->frames_to_confirm >= 1);
          CHECK(a.scores().empty());
          CHECK(a.frames_seen() == 0);
        } else {
          for (const auto& [label, score] : a.scores()) CHECK(score <= cfg.delta);
        }
      }
    }
  }
}

TEST_CASE("wrong-first probability falls as delta grows") {
  // True class every frame at mean 0.83 with 10% misses, plus one false label
  // per frame drawn uniformly from three look-alikes at confidence U[0, 0.83).
  const double deltas[] = {1, 2, 3, 5, 10, 20};
  for (Strategy s : {Strategy::detection_count, Strategy::cumulative_confidence}) {
    std::vector<double> wrong_rate;
    for (double d : deltas) {
      Rng rng(99);
      std::size_t wrong = 0, trials = 2000;
      for (std::size_t t = 0; t < trials; ++t) {
        Confirmer c({s, d, 1});
        for (int i = 1; i <= 200; ++i) {
          DetectionFrame f{i / 45.0, {}};
          if (!rng.bernoulli(0.1)) {
            f.detections.push_back({"ka", std::clamp(rng.normal(0.83, 0.05), 0.0, 1.0), {}});
          }
          const char* fakes[] = {"kha", "ga", "gha"};
          f.detections.push_back({fakes[rng.index(3)], rng.uniform(0, 0.83), {}});
          if (auto sym = c.ingest(f)) {
            wrong += sym->label != "ka";
            break;
          }
        }
      }
      wrong_rate.push_back(double(wrong) / trials);
    }
    CAPTURE(to_string(s));
    CHECK(wrong_rate.front() > 0.0);
    for (std::size_t i = 1; i < wrong_rate.size(); ++i) CHECK(wrong_rate[i] <= wrong_rate[i - 1]);
    CHECK(wrong_rate.back() < 0.01);
  }
}
