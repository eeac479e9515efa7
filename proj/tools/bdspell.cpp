// bdspell: command-line front end for the fingerspelling pipeline.
//
//   bdspell plan "রক্ত"
//   bdspell simulate --text "আম" --noise off | bdspell compose --delta 50
//   bdspell bench --deltas 5,10,20,30,50 --strategy both --seed 7
//
// Exit status: 0 ok, 1 input error, 2 invariant violation.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "bdspell/alphabet.hpp"
#include "bdspell/composer.hpp"
#include "bdspell/confirmer.hpp"
#include "bdspell/metrics.hpp"
#include "bdspell/planner.hpp"
#include "bdspell/service.hpp"
#include "bdspell/simulator.hpp"
#include "bdspell/wire.hpp"

using namespace bdspell;
using nlohmann::json;

namespace {

struct Common {
  std::string ruleset;
  double delta = 50.0;
  std::string strategy = "confidence";
  double decay = 1.0;
  std::optional<std::uint64_t> seed;
  bool json = false;
  std::string out;
};

RuleSetPtr rules_for(const Common& c) {
  if (c.ruleset.empty()) return load_default_ruleset();
  return std::make_shared<const RuleSet>(RuleSet::load(c.ruleset));
}

Strategy strategy_of(const std::string& text) {
  const auto s = parse_strategy(text);
  if (!s) throw InputError("unknown strategy '" + text + "' (expected confidence or count)");
  return *s;
}

ConfirmConfig config_for(const Common& c) {
  ConfirmConfig cfg;
  cfg.strategy = strategy_of(c.strategy);
  cfg.delta = c.delta;
  cfg.decay = c.decay;
  cfg.validate();
  return cfg;
}

std::uint64_t seed_for(const Common& c) {
  if (c.seed) return *c.seed;
  const std::uint64_t s = (std::uint64_t{std::random_device{}()} << 32) | std::random_device{}();
  std::cerr << "seed: " << s << '\n';
  return s;
}

// Runs `body` with stdout or --out as the destination.
template <typename F>
void with_output(const std::string& path, F&& body) {
  if (path.empty() || path == "-") {
    body(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + path + "'");
  body(f);
}

template <typename F>
void with_input(const std::string& path, F&& body) {
  if (path.empty() || path == "-") return body(std::cin);
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot read '" + path + "'");
  body(f);
}

json read_json_file(const std::string& path) {
  json doc;
  with_input(path, [&](std::istream& in) {
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw InputError(path + ": " + e.what());
    }
  });
  return doc;
}

void print_event(std::ostream& err, const ComposeEvent& ev) {
  err << to_string(ev.kind) << '\t' << ev.detail << '\t' << ev.buffer_text << '\t'
      << to_string(ev.mode) << '\n';
}

int run_compose(const Common& c, const std::string& input, bool quiet) {
  const RuleSetPtr rules = rules_for(c);
  Confirmer confirmer(config_for(c));
  Composer composer(rules);
  json log = json::array();
  with_input(input, [&](std::istream& in) {
    TraceReader reader(in);
    while (auto frame = reader.next()) {
      std::optional<ConfirmedSymbol> sym;
      try {
        sym = confirmer.ingest(*frame);
      } catch (const Error& e) {
        throw InvariantError("trace line " + std::to_string(reader.line()) + ": " + e.what());
      }
      if (!sym) continue;
      if (c.json) log.push_back(wire::confirmed_message(*sym));
      for (const ComposeEvent& ev : composer.apply(*sym)) {
        if (c.json) log.push_back(wire::compose_event_message(ev));
        if (!quiet && !c.json) print_event(std::cerr, ev);
      }
    }
  });
  with_output(c.out, [&](std::ostream& out) {
    if (c.json) {
      out << json{{"text", composer.render()}, {"mode", to_string(composer.mode())}, {"events", log}}
                 .dump(2)
          << '\n';
    } else {
      out << composer.render() << '\n';
    }
  });
  return 0;
}

int run_plan(const Common& c, const std::string& text) {
  const SpellingPlan p = plan(text, rules_for(c));
  with_output(c.out, [&](std::ostream& out) {
    if (c.json) {
      out << plan_to_json(p).dump(2) << '\n';
      return;
    }
    for (std::size_t i = 0; i < p.labels.size(); ++i) out << (i ? " " : "") << p.labels[i];
    out << '\n';
  });
  return 0;
}

SensorProfile profile_for(const Common& c, const std::string& noise, double fps,
                          std::optional<double> conf) {
  SensorProfile profile;
  if (noise == "on") {
    profile = SensorProfile::default_noisy();
  } else if (noise == "off") {
    profile = SensorProfile::noiseless();
  } else {
    throw InputError("--noise must be on or off");
  }
  profile.fps = fps;
  if (conf) profile.conf_mean = *conf;
  profile.seed = seed_for(c);
  profile.validate();
  return profile;
}

int run_simulate(const Common& c, const std::string& text, const std::vector<std::string>& labels,
                 const std::string& noise, double fps, std::optional<double> conf) {
  const RuleSetPtr rules = rules_for(c);
  if (text.empty() == labels.empty()) throw InputError("give exactly one of --text or --labels");
  const std::vector<std::string> seq = text.empty() ? labels : plan(text, rules).labels;
  const Trace trace = simulate(seq, profile_for(c, noise, fps, conf), *rules);
  with_output(c.out, [&](std::ostream& out) { write_trace(out, trace); });
  return 0;
}

int run_replay(const Common& c, const std::string& input, bool pace, bool full_rate,
               const std::string& url) {
  const ConfirmConfig cfg = config_for(c);
  std::vector<json> outbound;

  if (!url.empty()) {
    httplib::Client client(url);
    json open = {{"delta", cfg.delta}, {"strategy", to_string(cfg.strategy)}, {"decay", cfg.decay}};
    auto created = client.Post("/v1/session", open.dump(), "application/json");
    if (!created || created->status != 201) throw InputError("cannot open a session at " + url);
    const std::string id = json::parse(created->body).at("session_id");
    std::ostringstream body;
    with_input(input, [&](std::istream& in) {
      TraceReader reader(in);
      while (auto frame = reader.next()) body << wire::frame_message(*frame).dump() << '\n';
    });
    auto res = client.Post("/v1/session/" + id, body.str(), "application/x-ndjson");
    if (!res || res->status != 200) throw InputError("session request failed at " + url);
    std::istringstream lines(res->body);
    for (std::string line; std::getline(lines, line);) {
      if (!line.empty()) outbound.push_back(json::parse(line));
    }
    client.Delete("/v1/session/" + id);
  } else {
    SessionOptions opts;
    opts.full_rate = full_rate;
    Session session("replay", cfg, rules_for(c), opts);
    std::vector<DetectionFrame> frames;
    with_input(input, [&](std::istream& in) {
      TraceReader reader(in);
      while (auto frame = reader.next()) frames.push_back(std::move(*frame));
    });
    std::optional<double> last;
    for (const DetectionFrame& f : frames) {
      if (pace && last && f.t > *last) {
        std::this_thread::sleep_for(std::chrono::duration<double>(f.t - *last));
      }
      last = f.t;
      for (json& m : session.handle(wire::frame_message(f))) {
        if (pace) std::cout << m.dump() << '\n' << std::flush;
        outbound.push_back(std::move(m));
      }
    }
  }

  if (pace && url.empty()) return 0;
  with_output(c.out, [&](std::ostream& out) {
    for (const json& m : outbound) out << m.dump() << '\n';
  });
  return 0;
}

std::vector<double> parse_deltas(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("bad delta '" + item + "'");
    }
  }
  if (out.empty()) throw InputError("--deltas is empty");
  return out;
}

int run_bench(const Common& c, const std::string& deltas, std::size_t words,
              const std::string& noise, double fps, std::optional<double> conf) {
  const RuleSetPtr rules = rules_for(c);
  std::vector<Strategy> strategies;
  if (c.strategy == "both") {
    strategies = {Strategy::detection_count, Strategy::cumulative_confidence};
  } else {
    strategies = {strategy_of(c.strategy)};
  }
  const SensorProfile profile = profile_for(c, noise, fps, conf);
  const auto corpus = standard_corpus(rules, words, profile.seed);
  const BenchReport report = bench(corpus, parse_deltas(deltas), strategies, profile, rules);
  with_output(c.out, [&](std::ostream& out) {
    if (c.json) {
      out << report.to_json().dump(2) << '\n';
    } else {
      out << report.table();
    }
  });
  return 0;
}

int run_eval(const Common& c, const std::string& gt_path, const std::string& pred_path) {
  const auto gts = metrics::ground_truth_from_json(read_json_file(gt_path));
  const auto preds = metrics::predictions_from_json(read_json_file(pred_path));
  const metrics::EvalReport report = metrics::evaluate(gts, preds);
  with_output(c.out, [&](std::ostream& out) {
    if (c.json) {
      out << report.to_json().dump(2) << '\n';
    } else {
      out << report.table();
    }
  });
  return 0;
}

std::atomic<HttpService*> g_service{nullptr};

extern "C" void on_signal(int) {
  if (HttpService* s = g_service.load()) s->stop();
}

int run_serve(const Common& c, const std::string& host, int port, std::size_t snapshot_every,
              bool full_rate, double idle_minutes) {
  SessionOptions opts;
  opts.snapshot_every = snapshot_every;
  opts.full_rate = full_rate;
  if (snapshot_every == 0) throw InvariantError("--snapshot-every must be positive");
  SessionManager sessions(opts);
  sessions.add_ruleset("default", rules_for(c));
  sessions.set_default_config(config_for(c));

  HttpService service(sessions);
  const int bound = service.bind(host, port);
  std::cerr << "listening on http://" << host << ':' << bound << '\n';

  std::atomic<bool> running{true};
  const auto idle = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double, std::ratio<60>>(idle_minutes));
  std::thread reaper([&] {
    while (running) {
      std::this_thread::sleep_for(std::chrono::seconds(1));
      sessions.expire(Clock::now(), idle);
    }
  });

  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  service.listen();
  g_service = nullptr;
  running = false;
  reaper.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bengali fingerspelling pipeline: plan, simulate, compose, bench, eval, serve"};
  app.require_subcommand(1);
  Common c;
  if (const char* env = std::getenv("BDSPELL_RULESET")) c.ruleset = env;

  auto add_ruleset = [&](CLI::App* sub) {
    sub->add_option("--ruleset", c.ruleset, "ruleset JSON (default: $BDSPELL_RULESET or shipped)");
  };
  auto add_confirm = [&](CLI::App* sub) {
    sub->add_option("--delta", c.delta, "confirmation threshold")->capture_default_str();
    sub->add_option("--strategy", c.strategy, "confidence | count")->capture_default_str();
    sub->add_option("--decay", c.decay, "per-frame score multiplier in (0, 1]")
        ->capture_default_str();
  };
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", c.out, "output file (default stdout)");
  };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", c.seed, "RNG seed (random and printed to stderr when omitted)");
  };

  std::string input, text, noise = "off", deltas = "5,10,20,30,50", gt, pred, url, host = "127.0.0.1";
  std::vector<std::string> labels;
  double fps = 45.0, idle_minutes = 10.0;
  std::optional<double> conf;
  std::size_t words = 300, snapshot_every = 5;
  bool quiet = false, pace = false, full_rate = false;
  int port = 8080;

  auto* compose = app.add_subcommand("compose", "JSONL frames -> composed text");
  compose->add_option("input", input, "trace file (default stdin)");
  add_ruleset(compose);
  add_confirm(compose);
  add_out(compose);
  compose->add_flag("--json", c.json, "print text and event log as JSON");
  compose->add_flag("-q,--quiet", quiet, "suppress the event log on stderr");

  auto* planc = app.add_subcommand("plan", "text -> sign label sequence");
  planc->add_option("text", text, "Bengali text")->required();
  add_ruleset(planc);
  add_out(planc);
  planc->add_flag("--json", c.json, "print the full plan with coverage");

  auto* sim = app.add_subcommand("simulate", "text or labels -> JSONL detection trace");
  sim->add_option("--text", text, "Bengali text to spell");
  sim->add_option("--labels", labels, "explicit label sequence")->delimiter(',');
  sim->add_option("--noise", noise, "on | off")->capture_default_str();
  sim->add_option("--fps", fps, "frames per second")->capture_default_str();
  sim->add_option("--conf", conf, "mean detection confidence");
  add_seed(sim);
  add_ruleset(sim);
  add_out(sim);

  auto* rep = app.add_subcommand("replay", "stream a trace into a session, print outbound JSONL");
  rep->add_option("input", input, "trace file (default stdin)");
  rep->add_flag("--pace", pace, "sleep between frames at the recorded rate");
  rep->add_flag("--full-rate", full_rate, "accumulator snapshot after every frame");
  rep->add_option("--url", url, "running server, e.g. http://127.0.0.1:8080");
  add_ruleset(rep);
  add_confirm(rep);
  add_out(rep);

  auto* ben = app.add_subcommand("bench", "accuracy grid over delta and strategy");
  ben->add_option("--deltas", deltas, "comma-separated thresholds")->capture_default_str();
  ben->add_option("--words", words, "corpus size in words")->capture_default_str();
  ben->add_option("--noise", noise, "on | off");
  ben->add_option("--fps", fps, "frames per second")->capture_default_str();
  ben->add_option("--conf", conf, "mean detection confidence");
  ben->add_option("--strategy", c.strategy, "confidence | count | both");
  add_seed(ben);
  add_ruleset(ben);
  add_out(ben);
  ben->add_flag("--json", c.json, "machine-readable report");

  auto* ev = app.add_subcommand("eval", "detection metrics from ground truth and predictions");
  ev->add_option("--gt", gt, "ground-truth JSON")->required();
  ev->add_option("--pred", pred, "predictions JSON")->required();
  add_out(ev);
  ev->add_flag("--json", c.json, "machine-readable report");

  auto* srv = app.add_subcommand("serve", "run the HTTP/JSONL service");
  srv->add_option("--host", host)->capture_default_str();
  srv->add_option("--port", port, "0 picks a free port")->capture_default_str();
  srv->add_option("--snapshot-every", snapshot_every, "accumulator snapshot throttle in frames")
      ->capture_default_str();
  srv->add_flag("--full-rate", full_rate, "snapshot after every frame");
  srv->add_option("--idle-timeout", idle_minutes, "session idle timeout in minutes")
      ->capture_default_str();
  add_ruleset(srv);
  add_confirm(srv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*compose) return run_compose(c, input, quiet);
    if (*planc) return run_plan(c, text);
    if (*sim) return run_simulate(c, text, labels, noise, fps, conf);
    if (*rep) return run_replay(c, input, pace, full_rate, url);
    if (*ben) {
      if (!ben->count("--noise")) noise = "on";
      if (!ben->count("--strategy")) c.strategy = "both";
      return run_bench(c, deltas, words, noise, fps, conf);
    }
    if (*ev) return run_eval(c, gt, pred);
    if (*srv) return run_serve(c, host, port, snapshot_every, full_rate, idle_minutes);
  } catch (const PlanError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
