#include "bdspell/wire.hpp"

namespace bdspell::wire {

using nlohmann::json;

namespace {

double require_number(const json& obj, const char* key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw InputError(ctx + ": '" + key + "' must be a number");
  }
  return it->get<double>();
}

}  // namespace

DetectionFrame parse_frame(const json& msg) {
  if (!msg.is_object()) throw InputError("frame: expected an object");
  DetectionFrame frame;
  frame.t = require_number(msg, "t", "frame");
  auto dets = msg.find("detections");
  if (dets == msg.end()) return frame;
  if (!dets->is_array()) throw InputError("frame: 'detections' must be an array");
  for (std::size_t i = 0; i < dets->size(); ++i) {
    const json& d = (*dets)[i];
    const std::string ctx = "detections[" + std::to_string(i) + "]";
    if (!d.is_object()) throw InputError(ctx + ": expected an object");
    Detection det;
    auto label = d.find("label");
    if (label == d.end() || !label->is_string()) throw InputError(ctx + ": 'label' must be a string");
    det.label = label->get<std::string>();
    det.conf = require_number(d, "conf", ctx);
    if (auto box = d.find("bbox"); box != d.end()) {
      if (!box->is_array() || box->size() != 4) {
        throw InputError(ctx + ": 'bbox' must be [x_min, y_min, width, height]");
      }
      for (std::size_t k = 0; k < 4; ++k) {
        if (!(*box)[k].is_number()) throw InputError(ctx + ": bbox entries must be numbers");
        det.bbox[k] = (*box)[k].get<double>();
      }
    }
    frame.detections.push_back(std::move(det));
  }
  return frame;
}

Inbound parse_inbound(const json& msg) {
  if (!msg.is_object()) throw InputError("message must be a JSON object");
  auto type = msg.find("type");
  if (type == msg.end() || !type->is_string()) throw InputError("message needs a string 'type'");
  const auto kind = type->get<std::string>();
  if (kind == "frame") return FrameMessage{parse_frame(msg)};
  if (kind == "reset") return ResetMessage{};
  if (kind == "set_config") {
    SetConfigMessage out;
    if (msg.contains("delta")) out.delta = require_number(msg, "delta", "set_config");
    if (msg.contains("decay")) out.decay = require_number(msg, "decay", "set_config");
    if (auto s = msg.find("strategy"); s != msg.end()) {
      if (!s->is_string()) throw InputError("set_config: 'strategy' must be a string");
      out.strategy = parse_strategy(s->get<std::string>());
      if (!out.strategy) throw InputError("set_config: unknown strategy '" + s->get<std::string>() + "'");
    }
    return out;
  }
  throw InputError("unknown message type '" + kind + "'");
}

json frame_message(const DetectionFrame& frame) {
  json dets = json::array();
  for (const Detection& d : frame.detections) {
    dets.push_back({{"label", d.label}, {"conf", d.conf}, {"bbox", d.bbox}});
  }
  return {{"type", "frame"}, {"t", frame.t}, {"detections", std::move(dets)}};
}

json set_config_message(const SetConfigMessage& msg) {
  json out{{"type", "set_config"}};
  if (msg.delta) out["delta"] = *msg.delta;
  if (msg.strategy) out["strategy"] = to_string(*msg.strategy);
  if (msg.decay) out["decay"] = *msg.decay;
  return out;
}

json reset_message() { return {{"type", "reset"}}; }

json confirmed_message(const ConfirmedSymbol& sym) {
  return {{"type", "confirmed"},
          {"label", sym.label},
          {"score", sym.score},
          {"frames", sym.frames_to_confirm},
          {"t", sym.t}};
}

json compose_event_message(const ComposeEvent& ev) {
  return {{"type", "compose_event"},
          {"kind", to_string(ev.kind)},
          {"detail", ev.detail},
          {"buffer_text", ev.buffer_text},
          {"mode", to_string(ev.mode)}};
}

json accumulators_message(const std::map<std::string, double>& scores) {
  json s = json::object();
  for (const auto& [label, v] : scores) s[label] = v;
  return {{"type", "accumulators"}, {"scores", std::move(s)}};
}

json ack_message(const std::string& op, bool staged) {
  return {{"type", "ack"}, {"op", op}, {"staged", staged}};
}

json error_message(const std::string& reason) { return {{"type", "error"}, {"reason", reason}}; }

}  // namespace bdspell::wire
