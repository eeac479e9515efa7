#include <sstream>

#include <httplib.h>

#include "bdspell/metrics.hpp"
#include "bdspell/planner.hpp"
#include "bdspell/service.hpp"

namespace bdspell {

using nlohmann::json;

json plan_to_json(const SpellingPlan& plan) {
  json segments = json::array();
  for (const PlanSegment& s : plan.segments) {
    segments.push_back({{"offset", s.offset},
                        {"text", s.text},
                        {"coverage", to_string(s.coverage)},
                        {"labels", s.labels}});
  }
  return {{"target", plan.target}, {"labels", plan.labels}, {"coverage", std::move(segments)}};
}

namespace {

constexpr const char* kJson = "application/json";
constexpr const char* kJsonl = "application/x-ndjson";

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void reply_error(httplib::Response& res, int status, const std::string& reason) {
  reply(res, status, wire::error_message(reason));
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("request body is not JSON: ") + e.what());
  }
}

ConfirmConfig config_from(const json& body, ConfirmConfig base) {
  if (!body.is_object()) throw InputError("expected a JSON object");
  if (auto d = body.find("delta"); d != body.end()) {
    if (!d->is_number()) throw InputError("'delta' must be a number");
    base.delta = d->get<double>();
  }
  if (auto d = body.find("decay"); d != body.end()) {
    if (!d->is_number()) throw InputError("'decay' must be a number");
    base.decay = d->get<double>();
  }
  if (auto s = body.find("strategy"); s != body.end()) {
    const auto parsed = s->is_string() ? parse_strategy(s->get<std::string>()) : std::nullopt;
    if (!parsed) throw InputError("unknown strategy");
    base.strategy = *parsed;
  }
  base.validate();
  return base;
}

json config_json(const ConfirmConfig& c) {
  return {{"delta", c.delta}, {"strategy", to_string(c.strategy)}, {"decay", c.decay}};
}

// Maps library errors onto HTTP status codes.
template <typename F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const InvariantError& e) {
    reply_error(res, 422, e.what());
  } catch (const InputError& e) {
    reply_error(res, 400, e.what());
  } catch (const std::exception& e) {
    reply_error(res, 500, e.what());
  }
}

}  // namespace

struct HttpService::Impl {
  SessionManager& sessions;
  httplib::Server server;

  explicit Impl(SessionManager& s) : sessions(s) { routes(); }

  void routes() {
    server.Get("/v1/alphabet", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { reply(res, 200, sessions.ruleset("default")->to_json()); });
    });

    server.Post("/v1/plan", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = parse_body(req);
        if (!body.contains("text") || !body["text"].is_string()) {
          throw InputError("'text' must be a string");
        }
        const std::string rs = body.value("ruleset", std::string("default"));
        try {
          reply(res, 200, plan_to_json(plan(body["text"].get<std::string>(), sessions.ruleset(rs))));
        } catch (const PlanError& e) {
          reply(res, 422, {{"type", "error"}, {"reason", e.what()}, {"offset", e.offset()}});
        }
      });
    });

    server.Post("/v1/eval", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = parse_body(req);
        if (!body.contains("ground_truth") || !body.contains("predictions")) {
          throw InputError("body needs 'ground_truth' and 'predictions'");
        }
        const auto gts = metrics::ground_truth_from_json(body["ground_truth"]);
        const auto preds = metrics::predictions_from_json(body["predictions"]);
        metrics::EvalOptions opts;
        if (auto t = body.find("iou_thresholds"); t != body.end()) {
          opts.iou_thresholds = t->get<std::vector<double>>();
        }
        reply(res, 200, metrics::evaluate(gts, preds, opts).to_json());
      });
    });

    server.Get("/v1/config", [this](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, config_json(sessions.default_config()));
    });

    server.Put("/v1/config", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const ConfirmConfig cfg = config_from(parse_body(req), sessions.default_config());
        sessions.set_default_config(cfg);
        reply(res, 200, config_json(cfg));
      });
    });

    server.Post("/v1/session", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = parse_body(req);
        const ConfirmConfig cfg = config_from(body, sessions.default_config());
        const std::string rs = body.value("ruleset", std::string("default"));
        const std::string id = sessions.open_session(cfg, rs);
        reply(res, 201, {{"session_id", id}, {"config", config_json(cfg)}});
      });
    });

    server.Post(R"(/v1/session/([A-Za-z0-9_-]+))",
                [this](const httplib::Request& req, httplib::Response& res) {
                  guarded(res, [&] {
                    const std::string id = req.matches[1];
                    if (!sessions.has_session(id)) {
                      reply_error(res, 404, "unknown session '" + id + "'");
                      return;
                    }
                    std::istringstream in(req.body);
                    std::ostringstream out;
                    std::string line;
                    while (std::getline(in, line)) {
                      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                      std::vector<json> replies;
                      try {
                        replies = sessions.handle(id, json::parse(line));
                      } catch (const json::parse_error& e) {
                        replies = {wire::error_message(std::string("bad JSON: ") + e.what())};
                      }
                      for (const json& r : replies) out << r.dump() << '\n';
                    }
                    res.status = 200;
                    res.set_content(out.str(), kJsonl);
                  });
                });

    server.Get(R"(/v1/session/([A-Za-z0-9_-]+))",
               [this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.matches[1];
                 if (!sessions.has_session(id)) return reply_error(res, 404, "unknown session");
                 guarded(res, [&] { reply(res, 200, sessions.snapshot(id)); });
               });

    server.Delete(R"(/v1/session/([A-Za-z0-9_-]+))",
                  [this](const httplib::Request& req, httplib::Response& res) {
                    const std::string id = req.matches[1];
                    if (!sessions.close_session(id)) return reply_error(res, 404, "unknown session");
                    reply(res, 200, {{"closed", id}});
                  });
  }
};

HttpService::HttpService(SessionManager& sessions) : impl_(std::make_unique<Impl>(sessions)) {}
HttpService::~HttpService() = default;

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  if (!impl_->server.bind_to_port(host, port)) {
    throw InputError("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpService::listen() { impl_->server.listen_after_bind(); }
void HttpService::stop() { impl_->server.stop(); }

}  // namespace bdspell
