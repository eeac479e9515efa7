#pragma once

// JSON wire schema shared by the streaming session, trace files and the CLI.
//
// Inbound:  {"type":"frame","t":0.022,"detections":[{"label":"ka","conf":0.91,"bbox":[x,y,w,h]}]}
//           {"type":"set_config","delta":30,"strategy":"confidence"}
//           {"type":"reset"}
// Outbound: confirmed, compose_event, accumulators, ack, error.

#include <map>
#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "bdspell/composer.hpp"
#include "bdspell/confirmer.hpp"

namespace bdspell::wire {

struct FrameMessage {
  DetectionFrame frame;
};

struct SetConfigMessage {
  std::optional<double> delta;
  std::optional<Strategy> strategy;
  std::optional<double> decay;
};

struct ResetMessage {};

using Inbound = std::variant<FrameMessage, SetConfigMessage, ResetMessage>;

// Throws InputError for schema problems (missing/ill-typed fields, unknown type).
Inbound parse_inbound(const nlohmann::json& msg);
DetectionFrame parse_frame(const nlohmann::json& msg);

nlohmann::json frame_message(const DetectionFrame& frame);
nlohmann::json set_config_message(const SetConfigMessage& msg);
nlohmann::json reset_message();

nlohmann::json confirmed_message(const ConfirmedSymbol& sym);
nlohmann::json compose_event_message(const ComposeEvent& ev);
nlohmann::json accumulators_message(const std::map<std::string, double>& scores);
nlohmann::json ack_message(const std::string& op, bool staged);
nlohmann::json error_message(const std::string& reason);

}  // namespace bdspell::wire
