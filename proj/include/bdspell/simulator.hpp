#pragma once

// Stand-in for the camera and detector: turns a spelling plan into a timed,
// noisy DetectionFrame stream, reads and writes JSONL traces, and runs the
// delta/strategy accuracy grid.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "bdspell/alphabet.hpp"
#include "bdspell/confirmer.hpp"
#include "bdspell/planner.hpp"

namespace bdspell {

// Defaults: 45 fps and a 0.83 mean confidence reproduce ~60 frames and
// ~1.33 s per sign at delta = 50. The capture rate is inferred from
// those two numbers, not a measured camera rate.
struct SensorProfile {
  double fps = 45.0;
  std::size_t hold_frames = 70;  // frames each sign is held
  std::size_t gap_frames = 10;   // blank frames between signs
  double conf_mean = 0.83;
  double conf_std = 0.05;
  double false_rate = 0.0;       // per-frame chance of one extra wrong-class detection
  double miss_rate = 0.0;        // per-frame chance the true detection is dropped
  std::size_t confusers = 0;     // look-alike pool size per class; 0 = whole alphabet
  double bbox_jitter = 0.0;
  std::uint64_t seed = 0;

  void validate() const;  // throws InvariantError

  static SensorProfile noiseless(double conf = 0.83);
  // Profile used by bench and by `simulate --noise on`.
  static SensorProfile default_noisy();
};

nlohmann::json to_json(const SensorProfile& profile);
SensorProfile profile_from_json(const nlohmann::json& doc);

struct Trace {
  SensorProfile profile;
  std::vector<std::string> labels;
  std::vector<std::size_t> segment_starts;  // index into frames where each label's hold begins
  std::vector<DetectionFrame> frames;
};

// Frames for each label: hold_frames of the true sign, then gap_frames blank,
// except after the last label. Frame i (1-based) is stamped i / fps.
Trace simulate(const std::vector<std::string>& labels, const SensorProfile& profile,
               const RuleSet& rules);
inline Trace simulate(const SpellingPlan& plan, const SensorProfile& profile, const RuleSet& rules) {
  return simulate(plan.labels, profile, rules);
}

// Header line {"profile":{...},"labels":[...]} followed by one frame message per line.
void write_trace(std::ostream& out, const Trace& trace);

// Streams frames from JSONL. Blank lines and header lines (objects carrying
// "profile") are skipped. Errors name the 1-based line number.
class TraceReader {
 public:
  explicit TraceReader(std::istream& in);
  std::optional<DetectionFrame> next();
  std::size_t line() const noexcept { return line_; }
  const std::optional<SensorProfile>& profile() const noexcept { return profile_; }

 private:
  std::istream* in_;
  std::size_t line_ = 0;
  std::optional<SensorProfile> profile_;
};

std::vector<DetectionFrame> read_trace(std::istream& in);

struct ReplayOptions {
  bool pace = false;  // sleep for the inter-frame delta before each frame
};

// Yields frames in file order to `sink`; returns the number of frames.
std::size_t replay(const std::filesystem::path& path,
                   const std::function<void(const DetectionFrame&)>& sink,
                   ReplayOptions options = {});

struct BenchCell {
  double delta = 0.0;
  Strategy strategy = Strategy::cumulative_confidence;
  std::size_t trials = 0;
  std::size_t correct = 0;
  std::size_t confirmed = 0;
  double accuracy = 0.0;      // correct / trials
  double mean_frames = 0.0;   // mean frames-to-confirm over confirmed trials
};

struct BenchReport {
  SensorProfile profile;
  std::size_t words = 0;
  std::size_t characters = 0;
  std::vector<BenchCell> cells;  // delta-major, strategy-minor

  const BenchCell* cell(double delta, Strategy strategy) const;
  std::string table() const;
  nlohmann::json to_json() const;
};

// Each planned sign is one trial: its hold window goes through a fresh
// confirmer and the first confirmation is compared with the planned label.
// Every word gets its own seed derived from profile.seed, and all cells see
// the same simulated frames.
BenchReport bench(const std::vector<std::string>& words, const std::vector<double>& deltas,
                  const std::vector<Strategy>& strategies, const SensorProfile& profile,
                  const RuleSetPtr& rules);

// Hand-picked Bengali words, all spellable with the shipped ruleset.
const std::vector<std::string>& builtin_words();

// Words assembled from the ruleset so that each coverage kind recurs
// (cycled word by word). Every word is plannable and has no run of more than
// `max_repeat` identical consecutive signs.
std::vector<std::string> generate_corpus(const RuleSetPtr& rules, std::size_t count,
                                         std::uint64_t seed, std::size_t max_repeat = 5);

// builtin_words() followed by generated words, `count` in total.
std::vector<std::string> standard_corpus(const RuleSetPtr& rules, std::size_t count,
                                         std::uint64_t seed = 2024);

// Portable sampling on top of mt19937_64 (the std distributions are
// implementation-defined, which would break cross-platform trace identity).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();                         // [0, 1)
  double uniform(double lo, double hi);     // [lo, hi)
  double normal(double mean, double stddev);
  std::size_t index(std::size_t n);         // [0, n)
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace bdspell
