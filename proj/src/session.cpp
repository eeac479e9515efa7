#include "bdspell/service.hpp"

#include <variant>

namespace bdspell {

using nlohmann::json;

Session::Session(std::string id, ConfirmConfig config, RuleSetPtr rules, SessionOptions options)
    : id_(std::move(id)),
      rules_(rules),
      options_(options),
      confirmer_(config),
      composer_(std::move(rules)),
      created_at_(Clock::now()),
      last_active_(created_at_) {
  if (options_.snapshot_every == 0) options_.snapshot_every = 1;
}

void Session::record_to(const std::string& path) {
  auto out = std::make_unique<std::ofstream>(path, std::ios::trunc);
  if (!*out) throw InputError("cannot open trace sink '" + path + "'");
  sink_ = std::move(out);
}

void Session::record(const json& msg) {
  if (sink_) *sink_ << msg.dump() << '\n' << std::flush;
}

std::vector<json> Session::handle(const json& msg) {
  last_active_ = Clock::now();
  record(msg);
  wire::Inbound inbound;
  try {
    inbound = wire::parse_inbound(msg);
  } catch (const Error& e) {
    return {wire::error_message(e.what())};
  }
  return std::visit(
      [this](const auto& m) -> std::vector<json> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, wire::FrameMessage>) {
          return on_frame(m.frame);
        } else if constexpr (std::is_same_v<T, wire::SetConfigMessage>) {
          return on_set_config(m);
        } else {
          return on_reset();
        }
      },
      inbound);
}

std::vector<json> Session::feed(const DetectionFrame& frame) {
  return handle(wire::frame_message(frame));
}

std::vector<json> Session::on_frame(const DetectionFrame& frame) {
  for (const Detection& d : frame.detections) {
    if (!rules_->contains(d.label)) return {wire::error_message("unknown label '" + d.label + "'")};
  }
  std::optional<ConfirmedSymbol> sym;
  try {
    sym = confirmer_.ingest(frame);
  } catch (const Error& e) {
    return {wire::error_message(e.what())};
  }

  std::vector<json> out;
  if (sym) {
    out.push_back(wire::confirmed_message(*sym));
    for (const ComposeEvent& ev : composer_.apply(*sym)) {
      out.push_back(wire::compose_event_message(ev));
    }
    apply_pending();
    since_snapshot_ = 0;
    out.push_back(wire::accumulators_message(confirmer_.scores()));
    ++since_snapshot_;
    return out;
  }
  if (options_.full_rate || since_snapshot_ % options_.snapshot_every == 0) {
    out.push_back(wire::accumulators_message(confirmer_.scores()));
  }
  ++since_snapshot_;
  return out;
}

std::vector<json> Session::on_set_config(const wire::SetConfigMessage& msg) {
  ConfirmConfig next = pending_.value_or(confirmer_.config());
  if (msg.delta) next.delta = *msg.delta;
  if (msg.strategy) next.strategy = *msg.strategy;
  if (msg.decay) next.decay = *msg.decay;
  try {
    next.validate();
  } catch (const Error& e) {
    return {wire::error_message(e.what())};
  }
  pending_ = next;
  // Nothing has accumulated since the last reset, so the new regime can start now.
  const bool staged = confirmer_.frames_seen() != 0;
  if (!staged) apply_pending();
  return {wire::ack_message("set_config", staged)};
}

std::vector<json> Session::on_reset() {
  confirmer_.reset();
  composer_.reset();
  apply_pending();
  since_snapshot_ = 0;
  return {wire::ack_message("reset", false),
          wire::compose_event_message(
              ComposeEvent{EventKind::deleted, "session reset", composer_.render(), composer_.mode()})};
}

void Session::apply_pending() {
  if (!pending_) return;
  confirmer_.reconfigure(*pending_);
  pending_.reset();
}

json Session::snapshot() const {
  const ConfirmConfig& cfg = confirmer_.config();
  json out{{"session_id", id_},
           {"buffer_text", composer_.render()},
           {"mode", to_string(composer_.mode())},
           {"scores", wire::accumulators_message(confirmer_.scores())["scores"]},
           {"config",
            {{"delta", cfg.delta}, {"strategy", to_string(cfg.strategy)}, {"decay", cfg.decay}}}};
  if (pending_) {
    out["pending_config"] = {{"delta", pending_->delta},
                             {"strategy", to_string(pending_->strategy)},
                             {"decay", pending_->decay}};
  }
  return out;
}

SessionManager::SessionManager(SessionOptions options) : options_(options) {}

void SessionManager::add_ruleset(const std::string& id, RuleSetPtr rules) {
  std::lock_guard lock(mutex_);
  rulesets_[id] = std::move(rules);
}

RuleSetPtr SessionManager::ruleset(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = rulesets_.find(id);
  if (it == rulesets_.end()) throw InputError("unknown ruleset '" + id + "'");
  return it->second;
}

std::string SessionManager::open_session(const ConfirmConfig& config,
                                         const std::string& ruleset_id) {
  config.validate();
  RuleSetPtr rules = ruleset(ruleset_id);
  std::lock_guard lock(mutex_);
  const std::string id = "s" + std::to_string(next_id_++);
  auto e = std::make_shared<Entry>();
  e->session = std::make_unique<Session>(id, config, std::move(rules), options_);
  sessions_.emplace(id, std::move(e));
  return id;
}

bool SessionManager::close_session(const std::string& id) {
  std::lock_guard lock(mutex_);
  return sessions_.erase(id) > 0;
}

bool SessionManager::has_session(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return sessions_.count(id) > 0;
}

std::size_t SessionManager::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

std::shared_ptr<SessionManager::Entry> SessionManager::entry(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw InputError("unknown session '" + id + "'");
  return it->second;
}

std::vector<json> SessionManager::handle(const std::string& id, const json& msg) {
  auto e = entry(id);
  std::lock_guard lock(e->mutex);
  return e->session->handle(msg);
}

json SessionManager::snapshot(const std::string& id) const {
  auto e = entry(id);
  std::lock_guard lock(e->mutex);
  return e->session->snapshot();
}

void SessionManager::record_to(const std::string& id, const std::string& path) {
  auto e = entry(id);
  std::lock_guard lock(e->mutex);
  e->session->record_to(path);
}

ConfirmConfig SessionManager::default_config() const {
  std::lock_guard lock(mutex_);
  return default_config_;
}

void SessionManager::set_default_config(const ConfirmConfig& config) {
  config.validate();
  std::lock_guard lock(mutex_);
  default_config_ = config;
}

std::size_t SessionManager::expire(Clock::time_point now, Clock::duration idle) {
  std::lock_guard lock(mutex_);
  std::size_t dropped = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    std::unique_lock session_lock(it->second->mutex, std::try_to_lock);
    if (session_lock.owns_lock() && now - it->second->session->last_active() > idle) {
      session_lock.unlock();
      it = sessions_.erase(it);
      ++dropped;
    } else {
      ++it;
    }
  }
  return dropped;
}

}  // namespace bdspell
