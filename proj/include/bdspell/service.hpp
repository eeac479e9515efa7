#pragma once

// Session-oriented streaming service: one confirmer and one composer per
// session, driven by wire messages.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bdspell/alphabet.hpp"
#include "bdspell/composer.hpp"
#include "bdspell/confirmer.hpp"
#include "bdspell/planner.hpp"
#include "bdspell/wire.hpp"

namespace bdspell {

using Clock = std::chrono::steady_clock;

struct SessionOptions {
  std::size_t snapshot_every = 5;  // accumulator snapshot throttle, in frames
  bool full_rate = false;          // snapshot after every frame
};

class Session {
 public:
  Session(std::string id, ConfirmConfig config, RuleSetPtr rules, SessionOptions options = {});

  // Processes one inbound message and returns the outbound messages in order.
  // Never throws for bad input: errors become {"type":"error"} messages and
  // leave the session untouched.
  std::vector<nlohmann::json> handle(const nlohmann::json& msg);
  std::vector<nlohmann::json> feed(const DetectionFrame& frame);

  // Copies every inbound message, as received, to `path` as JSONL.
  void record_to(const std::string& path);

  nlohmann::json snapshot() const;

  const std::string& id() const noexcept { return id_; }
  const Confirmer& confirmer() const noexcept { return confirmer_; }
  const Composer& composer() const noexcept { return composer_; }
  const std::optional<ConfirmConfig>& pending_config() const noexcept { return pending_; }
  Clock::time_point created_at() const noexcept { return created_at_; }
  Clock::time_point last_active() const noexcept { return last_active_; }

 private:
  std::vector<nlohmann::json> on_frame(const DetectionFrame& frame);
  std::vector<nlohmann::json> on_set_config(const wire::SetConfigMessage& msg);
  std::vector<nlohmann::json> on_reset();
  void apply_pending();
  void record(const nlohmann::json& msg);

  std::string id_;
  RuleSetPtr rules_;
  SessionOptions options_;
  Confirmer confirmer_;
  Composer composer_;
  std::optional<ConfirmConfig> pending_;
  std::size_t since_snapshot_ = 0;
  Clock::time_point created_at_;
  Clock::time_point last_active_;
  std::unique_ptr<std::ofstream> sink_;
};

class SessionManager {
 public:
  explicit SessionManager(SessionOptions options = {});

  void add_ruleset(const std::string& id, RuleSetPtr rules);
  RuleSetPtr ruleset(const std::string& id) const;  // throws InputError

  // Throws InputError for an unknown ruleset, InvariantError for a bad config.
  std::string open_session(const ConfirmConfig& config, const std::string& ruleset_id = "default");
  bool close_session(const std::string& id);
  bool has_session(const std::string& id) const;
  std::size_t session_count() const;

  // Runs one message through the session under its lock.
  std::vector<nlohmann::json> handle(const std::string& id, const nlohmann::json& msg);
  nlohmann::json snapshot(const std::string& id) const;
  void record_to(const std::string& id, const std::string& path);

  ConfirmConfig default_config() const;
  void set_default_config(const ConfirmConfig& config);

  // Drops sessions idle for longer than `idle`; returns how many.
  std::size_t expire(Clock::time_point now, Clock::duration idle = std::chrono::minutes(10));

 private:
  struct Entry {
    std::mutex mutex;
    std::unique_ptr<Session> session;
  };
  std::shared_ptr<Entry> entry(const std::string& id) const;

  SessionOptions options_;
  mutable std::mutex mutex_;
  std::map<std::string, RuleSetPtr> rulesets_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  ConfirmConfig default_config_;
  std::uint64_t next_id_ = 1;
};

// REST + JSONL session endpoints:
//   GET  /v1/alphabet          ruleset JSON
//   POST /v1/plan              {"text": "..."} -> plan
//   POST /v1/eval              {"ground_truth": [...], "predictions": [...]} -> report
//   GET  /v1/config, PUT /v1/config
//   POST /v1/session           {"delta":..,"strategy":..,"ruleset":..} -> {"session_id":..}
//   POST /v1/session/{id}      inbound JSONL -> outbound JSONL
//   GET  /v1/session/{id}      snapshot
//   DELETE /v1/session/{id}
class HttpService {
 public:
  explicit HttpService(SessionManager& sessions);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  // Binds to `port` (0 = any free port) and returns the bound port.
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

nlohmann::json plan_to_json(const SpellingPlan& plan);

}  // namespace bdspell
