#pragma once

// Temporal confirmation of a recognized sign from noisy per-frame detections.
//
// Each frame adds, per label, either the mean confidence of that label's
// detections (cumulative_confidence) or their count (detection_count) to a
// running score. A label is confirmed once its score strictly exceeds delta;
// every score then returns to zero.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bdspell {

enum class Strategy { cumulative_confidence, detection_count };

std::string_view to_string(Strategy strategy);
// Accepts "cumulative_confidence"/"confidence" and "detection_count"/"count".
std::optional<Strategy> parse_strategy(std::string_view text);

struct ConfirmConfig {
  Strategy strategy = Strategy::cumulative_confidence;
  double delta = 50.0;
  double decay = 1.0;  // per-frame multiplier applied to every score before the update

  // Throws InvariantError unless delta > 0 and 0 < decay <= 1.
  void validate() const;
};

// [x_min, y_min, width, height], normalized to [0, 1].
using NormalizedBox = std::array<double, 4>;

struct Detection {
  std::string label;
  double conf = 0.0;
  NormalizedBox bbox{0.0, 0.0, 0.0, 0.0};

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct DetectionFrame {
  double t = 0.0;  // seconds since session start
  std::vector<Detection> detections;

  friend bool operator==(const DetectionFrame&, const DetectionFrame&) = default;
};

// Throws InvariantError for out-of-range confidence, box or timestamp.
void validate_frame(const DetectionFrame& frame);

struct ConfirmedSymbol {
  std::string label;
  double score = 0.0;
  std::size_t frames_to_confirm = 0;
  double t = 0.0;
};

class Confirmer {
 public:
  explicit Confirmer(ConfirmConfig config = {});

  // Rejects malformed or out-of-order frames without touching state.
  std::optional<ConfirmedSymbol> ingest(const DetectionFrame& frame);

  // Clears every score and the frame counter; the clock is kept.
  void reset();
  // Replaces the config and resets.
  void reconfigure(const ConfirmConfig& config);

  const ConfirmConfig& config() const noexcept { return config_; }
  double score(std::string_view label) const;
  std::map<std::string, double> scores() const;
  std::size_t frames_seen() const noexcept { return frames_seen_; }
  std::optional<double> last_t() const noexcept { return last_t_; }

 private:
  // Neumaier-compensated running sum.
  struct Accumulator {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x);
    void scale(double factor);
    double value() const { return sum + carry; }
  };

  ConfirmConfig config_;
  std::map<std::string, Accumulator, std::less<>> acc_;
  std::size_t frames_seen_ = 0;
  std::optional<double> last_t_;
};

}  // namespace bdspell
