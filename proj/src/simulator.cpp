#include "bdspell/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "bdspell/unicode.hpp"
#include "bdspell/wire.hpp"

namespace bdspell {

using nlohmann::json;

namespace {

constexpr NormalizedBox kHandBox{0.35, 0.30, 0.30, 0.40};

NormalizedBox jittered_box(Rng& rng, double jitter) {
  if (jitter <= 0.0) return kHandBox;
  NormalizedBox box = kHandBox;
  for (double& v : box) v = std::clamp(v + rng.uniform(-jitter, jitter), 0.0, 1.0);
  box[2] = std::min(box[2], 1.0 - box[0]);
  box[3] = std::min(box[3], 1.0 - box[1]);
  return box;
}

}  // namespace

double Rng::uniform() {
  // Top 53 bits -> [0, 1).
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal(double mean, double stddev) {
  double z;
  if (spare_) {
    z = *spare_;
    spare_.reset();
  } else {
    // Box-Muller; 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    z = r * std::cos(2.0 * std::numbers::pi * u2);
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
  }
  return mean + stddev * z;
}

std::size_t Rng::index(std::size_t n) {
  return static_cast<std::size_t>(uniform() * static_cast<double>(n));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

void SensorProfile::validate() const {
  auto fail = [](const std::string& msg) { throw InvariantError("sensor profile: " + msg); };
  if (!(std::isfinite(fps) && fps > 0.0)) fail("fps must be > 0");
  if (hold_frames < 1) fail("hold_frames must be >= 1");
  if (!(conf_mean >= 0.0 && conf_mean <= 1.0)) fail("conf_mean must be in [0,1]");
  if (!(conf_std >= 0.0 && std::isfinite(conf_std))) fail("conf_std must be >= 0");
  if (!(false_rate >= 0.0 && false_rate < 1.0)) fail("false_rate must be in [0,1)");
  if (!(miss_rate >= 0.0 && miss_rate < 1.0)) fail("miss_rate must be in [0,1)");
  if (!(bbox_jitter >= 0.0 && bbox_jitter < 0.3)) fail("bbox_jitter must be in [0,0.3)");
}

SensorProfile SensorProfile::noiseless(double conf) {
  SensorProfile p;
  p.conf_mean = conf;
  p.conf_std = 0.0;
  return p;
}

SensorProfile SensorProfile::default_noisy() {
  SensorProfile p;
  p.conf_std = 0.05;
  p.false_rate = 0.7;
  p.miss_rate = 0.05;
  p.confusers = 1;
  p.bbox_jitter = 0.01;
  p.hold_frames = 80;
  return p;
}

json to_json(const SensorProfile& p) {
  return {{"fps", p.fps},
          {"hold_frames", p.hold_frames},
          {"gap_frames", p.gap_frames},
          {"conf_mean", p.conf_mean},
          {"conf_std", p.conf_std},
          {"false_rate", p.false_rate},
          {"miss_rate", p.miss_rate},
          {"confusers", p.confusers},
          {"bbox_jitter", p.bbox_jitter},
          {"seed", p.seed}};
}

SensorProfile profile_from_json(const json& doc) {
  if (!doc.is_object()) throw InputError("profile must be an object");
  SensorProfile p;
  try {
    p.fps = doc.value("fps", p.fps);
    p.hold_frames = doc.value("hold_frames", p.hold_frames);
    p.gap_frames = doc.value("gap_frames", p.gap_frames);
    p.conf_mean = doc.value("conf_mean", p.conf_mean);
    p.conf_std = doc.value("conf_std", p.conf_std);
    p.false_rate = doc.value("false_rate", p.false_rate);
    p.miss_rate = doc.value("miss_rate", p.miss_rate);
    p.confusers = doc.value("confusers", p.confusers);
    p.bbox_jitter = doc.value("bbox_jitter", p.bbox_jitter);
    p.seed = doc.value("seed", p.seed);
  } catch (const json::exception& e) {
    throw InputError(std::string("profile: ") + e.what());
  }
  p.validate();
  return p;
}

Trace simulate(const std::vector<std::string>& labels, const SensorProfile& profile,
               const RuleSet& rules) {
  profile.validate();
  const auto& classes = rules.classes();
  Trace trace;
  trace.profile = profile;
  trace.labels = labels;

  Rng rng(profile.seed);
  std::size_t frame_no = 0;
  auto stamp = [&] { return static_cast<double>(++frame_no) / profile.fps; };

  for (std::size_t li = 0; li < labels.size(); ++li) {
    const std::string& label = labels[li];
    const auto self = static_cast<std::size_t>(&rules.class_of(label) - classes.data());

    std::vector<std::size_t> pool;
    if (profile.confusers == 0) {
      for (std::size_t k = 0; k < classes.size(); ++k) {
        if (k != self) pool.push_back(k);
      }
    } else {
      for (std::size_t k = 1; k <= profile.confusers && k < classes.size(); ++k) {
        pool.push_back((self + k) % classes.size());
      }
    }

    trace.segment_starts.push_back(trace.frames.size());
    for (std::size_t f = 0; f < profile.hold_frames; ++f) {
      DetectionFrame frame;
      frame.t = stamp();
      const bool missed = rng.bernoulli(profile.miss_rate);
      if (!missed) {
        double conf = profile.conf_mean;
        if (profile.conf_std > 0.0) {
          conf = std::clamp(rng.normal(profile.conf_mean, profile.conf_std), 0.0, 1.0);
        }
        frame.detections.push_back({label, conf, jittered_box(rng, profile.bbox_jitter)});
      }
      if (profile.false_rate > 0.0 && !pool.empty() && rng.bernoulli(profile.false_rate)) {
        const std::size_t k = pool[rng.index(pool.size())];
        const double conf = rng.uniform(0.0, profile.conf_mean);
        frame.detections.push_back({classes[k].label, conf, jittered_box(rng, profile.bbox_jitter)});
      }
      trace.frames.push_back(std::move(frame));
    }
    if (li + 1 < labels.size()) {
      for (std::size_t g = 0; g < profile.gap_frames; ++g) {
        trace.frames.push_back(DetectionFrame{stamp(), {}});
      }
    }
  }
  return trace;
}

void write_trace(std::ostream& out, const Trace& trace) {
  out << json{{"profile", to_json(trace.profile)}, {"labels", trace.labels}}.dump() << '\n';
  for (const DetectionFrame& f : trace.frames) out << wire::frame_message(f).dump() << '\n';
}

TraceReader::TraceReader(std::istream& in) : in_(&in) {}

std::optional<DetectionFrame> TraceReader::next() {
  std::string text;
  while (std::getline(*in_, text)) {
    ++line_;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json doc = json::parse(text);
      if (doc.is_object() && doc.contains("profile")) {
        profile_ = profile_from_json(doc.at("profile"));
        continue;
      }
      if (!doc.is_object() || doc.value("type", std::string{}) != "frame") {
        throw InputError("expected a frame message");
      }
      return wire::parse_frame(doc);
    } catch (const json::exception& e) {
      throw InputError("trace line " + std::to_string(line_) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError("trace line " + std::to_string(line_) + ": " + e.what());
    }
  }
  return std::nullopt;
}

std::vector<DetectionFrame> read_trace(std::istream& in) {
  TraceReader reader(in);
  std::vector<DetectionFrame> frames;
  while (auto f = reader.next()) frames.push_back(std::move(*f));
  return frames;
}

std::size_t replay(const std::filesystem::path& path,
                   const std::function<void(const DetectionFrame&)>& sink, ReplayOptions options) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read trace '" + path.string() + "'");
  TraceReader reader(in);
  std::size_t count = 0;
  std::optional<double> prev;
  while (auto frame = reader.next()) {
    if (options.pace && prev && frame->t > *prev) {
      std::this_thread::sleep_for(std::chrono::duration<double>(frame->t - *prev));
    }
    prev = frame->t;
    sink(*frame);
    ++count;
  }
  return count;
}

const BenchCell* BenchReport::cell(double delta, Strategy strategy) const {
  for (const BenchCell& c : cells) {
    if (c.delta == delta && c.strategy == strategy) return &c;
  }
  return nullptr;
}

std::string BenchReport::table() const {
  std::set<double> deltas;
  for (const BenchCell& c : cells) deltas.insert(c.delta);
  std::ostringstream out;
  out << std::fixed;
  out << std::setw(10) << "delta" << std::setw(16) << "acc(count)" << std::setw(16)
      << "acc(conf)" << std::setw(14) << "frames(count)" << std::setw(14) << "frames(conf)"
      << '\n';
  auto pct = [](const BenchCell* c) -> std::string {
    if (!c) return "-";
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << 100.0 * c->accuracy << '%';
    return s.str();
  };
  auto frames = [](const BenchCell* c) -> std::string {
    if (!c) return "-";
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << c->mean_frames;
    return s.str();
  };
  for (double d : deltas) {
    const BenchCell* n = cell(d, Strategy::detection_count);
    const BenchCell* c = cell(d, Strategy::cumulative_confidence);
    out << std::setw(10) << std::setprecision(1) << d << std::setw(16) << pct(n) << std::setw(16)
        << pct(c) << std::setw(14) << frames(n) << std::setw(14) << frames(c) << '\n';
  }
  out << "words=" << words << " characters=" << characters << " seed=" << profile.seed << '\n';
  return out.str();
}

json BenchReport::to_json() const {
  json rows = json::array();
  for (const BenchCell& c : cells) {
    rows.push_back({{"delta", c.delta},
                    {"strategy", bdspell::to_string(c.strategy)},
                    {"trials", c.trials},
                    {"correct", c.correct},
                    {"confirmed", c.confirmed},
                    {"accuracy", c.accuracy},
                    {"mean_frames", c.mean_frames}});
  }
  return {{"profile", bdspell::to_json(profile)},
          {"words", words},
          {"characters", characters},
          {"cells", std::move(rows)}};
}

BenchReport bench(const std::vector<std::string>& words, const std::vector<double>& deltas,
                  const std::vector<Strategy>& strategies, const SensorProfile& profile,
                  const RuleSetPtr& rules) {
  if (words.empty()) throw InputError("bench needs a non-empty corpus");
  profile.validate();

  BenchReport report;
  report.profile = profile;
  report.words = words.size();
  for (double d : deltas) {
    for (Strategy s : strategies) {
      ConfirmConfig{s, d, 1.0}.validate();
      report.cells.push_back(BenchCell{d, s});
    }
  }
  std::vector<double> frame_sums(report.cells.size(), 0.0);

  for (std::size_t w = 0; w < words.size(); ++w) {
    const SpellingPlan p = plan(words[w], rules);
    SensorProfile word_profile = profile;
    word_profile.seed = mix_seed(profile.seed, w);
    const Trace trace = simulate(p.labels, word_profile, *rules);
    report.characters += p.labels.size();

    for (std::size_t ci = 0; ci < report.cells.size(); ++ci) {
      BenchCell& cell = report.cells[ci];
      for (std::size_t k = 0; k < p.labels.size(); ++k) {
        Confirmer confirmer(ConfirmConfig{cell.strategy, cell.delta, 1.0});
        const std::size_t start = trace.segment_starts[k];
        ++cell.trials;
        for (std::size_t f = start; f < start + profile.hold_frames; ++f) {
          if (auto sym = confirmer.ingest(trace.frames[f])) {
            ++cell.confirmed;
            frame_sums[ci] += static_cast<double>(f - start + 1);
            if (sym->label == p.labels[k]) ++cell.correct;
            break;
          }
        }
      }
    }
  }
  for (std::size_t ci = 0; ci < report.cells.size(); ++ci) {
    BenchCell& cell = report.cells[ci];
    cell.accuracy = cell.trials ? static_cast<double>(cell.correct) / cell.trials : 0.0;
    cell.mean_frames = cell.confirmed ? frame_sums[ci] / cell.confirmed : 0.0;
  }
  return report;
}

const std::vector<std::string>& builtin_words() {
  static const std::vector<std::string> words = {
      "আম",      "মা",       "বাবা",     "কলম",     "বই",       "নদী",      "রক্ত",
      "মন্দ",     "গ্রাম",     "দুধ",      "শাপলা",   "বাংলা",    "অ্যাপ",     "ঋণ",
      "একতা",    "ওষুধ",     "ছাত্র",     "পত্র",      "মন্ত্র",     "স্ত্রী",      "স্কুল",
      "বস্ত্র",     "চন্দ্র",     "ডাল",     "টাকা",     "বাড়ি",     "উৎস",      "ইলিশ",
      "আমার বাংলা", "আকাশ",   "জল",      "লাল",     "নীল",     "গাছ",      "মাছ",
      "ভাত",     "দেশ",      "মানুষ",    "বন্ধু",     "সপ্তাহ",    "রং",       "চাঁদ",
      "২০২৪",    "১৯৭১",     "সাল ১৯৫২", "কৈ",      "উপর",     "এক",       "দুই",
      "তিন",     "চার",      "পাঁচ",     "সাত",     "আট",      "দশ",       "আজ",
      "কাল",     "ভালো",     "অংক",     "ইট",      "ঋতু",      "ওজন",      "এলাকা",
      "আলো",     "কলা",      "জামা",    "সবুজ",    "শহর",     "নগর",      "রাত",
      "দিন",     "বছর",      "সকাল",    "বাজার",   "পথ",      "হাত",      "পা",
      "চোখ",     "কান",      "নাক",     "মুখ",      "দাঁত",     "চুল",       "মন",
      "প্রাণ",     "ক্লাস",      "স্মরণ",     "সম্পদ",    "সম্প্রতি",   "যন্ত্র",      "লজ্জা",
      "বিচ্ছেদ",   "অ্যাসিড",   "তিন দিন",  "৫ টাকা",   "১০০",     "কেন্দ্র",     "উদ্ধার",
  };
  return words;
}

namespace {

std::size_t longest_repeat(const std::vector<std::string>& labels) {
  std::size_t best = 0, run = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    run = (i > 0 && labels[i] == labels[i - 1]) ? run + 1 : 1;
    best = std::max(best, run);
  }
  return best;
}

}  // namespace

std::vector<std::string> generate_corpus(const RuleSetPtr& rules, std::size_t count,
                                         std::uint64_t seed, std::size_t max_repeat) {
  const RuleSet& rs = *rules;
  std::vector<std::string> consonants, vowel_signs, digits;
  for (const SignClass& cls : rs.classes()) {
    switch (cls.role) {
      case Role::consonant: consonants.push_back(cls.codepoints); break;
      case Role::dependent_vowel: vowel_signs.push_back(cls.codepoints); break;
      case Role::numeral: digits.push_back(cls.codepoints); break;
    }
  }
  std::vector<std::string> independents, hidden, c2, c3;
  for (const auto& v : rs.vowels()) independents.push_back(v.independent_codepoints);
  for (const auto& h : rs.hidden()) hidden.push_back(h.result_codepoints);
  for (const auto& c : rs.compounds2()) c2.push_back(c.result_codepoints);
  for (const auto& c : rs.compounds3()) c3.push_back(c.result_codepoints);

  Rng rng(seed);
  auto pick = [&](const std::vector<std::string>& v) -> const std::string& {
    return v[rng.index(v.size())];
  };
  auto syllable = [&] {
    std::string s = pick(consonants);
    if (rng.bernoulli(0.5)) s += pick(vowel_signs);
    return s;
  };

  const std::vector<const std::vector<std::string>*> featured = {
      &consonants, &independents, &hidden, &c2, &c3, &digits, nullptr /* space */};

  std::set<std::string> seen;
  std::vector<std::string> out;
  std::size_t attempts = 0;
  while (out.size() < count && attempts < count * 50) {
    const auto* kind = featured[attempts++ % featured.size()];
    std::string word;
    if (kind == &digits) {
      const std::size_t len = 1 + rng.index(4);
      for (std::size_t i = 0; i < len; ++i) word += pick(digits);
    } else if (kind == nullptr) {
      word = syllable() + syllable() + " " + syllable();
    } else {
      if (rng.bernoulli(0.6)) word += syllable();
      word += pick(*kind);
      if (rng.bernoulli(0.7)) word += syllable();
    }
    word = unicode::nfc(word);
    if (seen.count(word)) continue;
    try {
      const SpellingPlan p = plan(word, rules);
      if (longest_repeat(p.labels) > max_repeat) continue;
    } catch (const PlanError&) {
      continue;
    }
    seen.insert(word);
    out.push_back(std::move(word));
  }
  return out;
}

std::vector<std::string> standard_corpus(const RuleSetPtr& rules, std::size_t count,
                                         std::uint64_t seed) {
  std::vector<std::string> out;
  for (const auto& w : builtin_words()) {
    if (out.size() >= count) break;
    out.push_back(unicode::nfc(w));
  }
  if (out.size() < count) {
    for (auto& w : generate_corpus(rules, count - out.size(), seed)) out.push_back(std::move(w));
  }
  return out;
}

}  // namespace bdspell
