#include "bdspell/confirmer.hpp"

#include <cmath>

#include "bdspell/error.hpp"

namespace bdspell {

namespace {
// Slack for x_min + width <= 1 after float rounding.
constexpr double kBoxSlack = 1e-9;

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }
}  // namespace

std::string_view to_string(Strategy strategy) {
  return strategy == Strategy::cumulative_confidence ? "cumulative_confidence"
                                                     : "detection_count";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
  if (text == "cumulative_confidence" || text == "confidence") {
    return Strategy::cumulative_confidence;
  }
  if (text == "detection_count" || text == "count") return Strategy::detection_count;
  return std::nullopt;
}

void ConfirmConfig::validate() const {
  if (!(std::isfinite(delta) && delta > 0.0)) {
    throw InvariantError("delta must be > 0, got " + std::to_string(delta));
  }
  if (!(decay > 0.0 && decay <= 1.0)) {
    throw InvariantError("decay must be in (0, 1], got " + std::to_string(decay));
  }
}

void validate_frame(const DetectionFrame& frame) {
  if (!(std::isfinite(frame.t) && frame.t >= 0.0)) {
    throw InvariantError("frame t must be a finite non-negative number");
  }
  for (std::size_t i = 0; i < frame.detections.size(); ++i) {
    const Detection& d = frame.detections[i];
    const std::string ctx = "detections[" + std::to_string(i) + "]";
    if (d.label.empty()) throw InvariantError(ctx + ": empty label");
    if (!in_unit(d.conf)) {
      throw InvariantError(ctx + ": conf " + std::to_string(d.conf) + " outside [0,1]");
    }
    for (double v : d.bbox) {
      if (!in_unit(v)) throw InvariantError(ctx + ": bbox component outside [0,1]");
    }
    if (d.bbox[0] + d.bbox[2] > 1.0 + kBoxSlack || d.bbox[1] + d.bbox[3] > 1.0 + kBoxSlack) {
      throw InvariantError(ctx + ": bbox extends past the frame");
    }
  }
}

void Confirmer::Accumulator::add(double x) {
  const double t = sum + x;
  if (std::abs(sum) >= std::abs(x)) {
    carry += (sum - t) + x;
  } else {
    carry += (x - t) + sum;
  }
  sum = t;
}

void Confirmer::Accumulator::scale(double factor) {
  sum *= factor;
  carry *= factor;
}

Confirmer::Confirmer(ConfirmConfig config) : config_(config) { config_.validate(); }

std::optional<ConfirmedSymbol> Confirmer::ingest(const DetectionFrame& frame) {
  validate_frame(frame);
  if (last_t_ && frame.t < *last_t_) {
    throw InvariantError("frame t=" + std::to_string(frame.t) + " is earlier than previous t=" +
                         std::to_string(*last_t_));
  }

  // Per-label sum and count for this frame.
  std::map<std::string_view, std::pair<double, std::size_t>> per_label;
  for (const Detection& d : frame.detections) {
    auto& [sum, count] = per_label[d.label];
    sum += d.conf;
    ++count;
  }

  last_t_ = frame.t;
  ++frames_seen_;
  if (config_.decay != 1.0) {
    for (auto& [label, acc] : acc_) acc.scale(config_.decay);
  }
  for (const auto& [label, stats] : per_label) {
    const auto& [sum, count] = stats;
    const double contribution = config_.strategy == Strategy::cumulative_confidence
                                    ? sum / static_cast<double>(count)
                                    : static_cast<double>(count);
    auto it = acc_.find(label);
    if (it == acc_.end()) it = acc_.emplace(std::string(label), Accumulator{}).first;
    it->second.add(contribution);
  }

  // Highest score above delta wins; map order gives the lexicographic tie-break.
  const std::string* winner = nullptr;
  double best = 0.0;
  for (const auto& [label, acc] : acc_) {
    const double v = acc.value();
    if (v > config_.delta && (winner == nullptr || v > best)) {
      winner = &label;
      best = v;
    }
  }
  if (winner == nullptr) return std::nullopt;

  ConfirmedSymbol sym{*winner, best, frames_seen_, frame.t};
  reset();
  return sym;
}

void Confirmer::reset() {
  acc_.clear();
  frames_seen_ = 0;
}

void Confirmer::reconfigure(const ConfirmConfig& config) {
  config.validate();
  config_ = config;
  reset();
}

double Confirmer::score(std::string_view label) const {
  auto it = acc_.find(label);
  return it == acc_.end() ? 0.0 : it->second.value();
}

std::map<std::string, double> Confirmer::scores() const {
  std::map<std::string, double> out;
  for (const auto& [label, acc] : acc_) out.emplace(label, acc.value());
  return out;
}

}  // namespace bdspell
