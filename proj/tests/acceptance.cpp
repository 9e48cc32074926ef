// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances and time limits are fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <future>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "keyframe/caption.hpp"
#include "keyframe/eval.hpp"
#include "keyframe/layout.hpp"
#include "keyframe/sampler.hpp"
#include "keyframe/score_model.hpp"
#include "keyframe/text_io.hpp"
#include "oracle_select.hpp"
#include "sha256.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace keyframe;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kFixtureLimitMs = 1.0;
constexpr double kOracleLimitS = 10.0;
constexpr double kRecallLimitS = 60.0;
constexpr double kBenchLimitMs = 100.0;
constexpr double kDoublingFactor = 8.0;
constexpr std::int64_t kStructuralBound = 20;
constexpr const char* kTemplateSha256 =
    "002829a2b65b01fec117952a432a6db18466c7b4b3184c73ba325f3407c1c576";

// Noisy planted-event spec for the statistical recall check.
SyntheticEventSpec noisy_spec() {
  SyntheticEventSpec spec;
  spec.duration_s = 3600;
  spec.num_events = 8;
  spec.event_width_s = 10;
  spec.event_amplitude = 0.2;
  spec.base_score = 0.2;
  spec.noise_sigma = 0.05;
  spec.seed = 1000;
  return spec;
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Outcome fail(std::string detail) { return {false, std::move(detail)}; }

std::vector<double> times_of(const std::vector<PoolEntry>& entries) {
  std::vector<double> out;
  for (const auto& e : entries) out.push_back(e.timestamp_s);
  return out;
}

Outcome fixture_fidelity() {
  auto series = load_score_series(fs::path(KF_FIXTURE_DIR) / "worked_pool.scores.tsv");
  SamplingConfig cfg;
  cfg.alpha = 4;
  cfg.max_frames = 3;
  cfg.delta0_s = 20;
  cfg.decay_lambda = 0.5;
  auto pool = candidate_pool(series, cfg);
  if (times_of(pool.entries) != std::vector<double>{100, 5, 0, 10}) {
    return fail("unexpected candidate pool");
  }
  double best_ms = 1e9;
  SelectionResult r;
  for (int i = 0; i < 5; ++i) {
    auto start = Clock::now();
    r = tass_select(pool, cfg);
    best_ms = std::min(best_ms, seconds_since(start) * 1e3);
  }
  if (times_of(r.selected) != std::vector<double>{0, 5, 100}) return fail("selected differs");
  if (r.selection_order != std::vector<std::int64_t>{100, 5, 0}) return fail("order differs");
  if (r.delta_at_selection != std::vector<double>{20, 20, 5}) return fail("deltas differ");
  std::ostringstream d;
  d << "selected [0, 5, 100], order [100, 5, 0], deltas [20, 20, 5], " << best_ms << " ms";
  if (best_ms >= kFixtureLimitMs) return fail(d.str());
  return {true, d.str()};
}

Outcome oracle_equivalence() {
  auto start = Clock::now();
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    std::mt19937_64 rng(seed);
    auto c = testing::random_case(rng, oracle::kMaxOraclePool);
    if (!(tass_select(c.pool, c.cfg) == oracle::oracle_select(c.pool, c.cfg))) {
      return fail("mismatch at seed " + std::to_string(seed));
    }
  }
  double s = seconds_since(start);
  std::ostringstream d;
  d << "1000/1000 pools identical, " << s << " s";
  if (s >= kOracleLimitS) return fail(d.str());
  return {true, d.str()};
}

Outcome pool_cap() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    ScoreSeries s;
    auto n = std::uniform_int_distribution<int>(1, 2000)(rng);
    bool coarse = i % 3 == 0;
    for (int k = 0; k < n; ++k) {
      double v = coarse ? 0.5 * std::uniform_int_distribution<int>(-2, 2)(rng) : u(rng);
      s.records.push_back({k, static_cast<double>(k), v});
    }
    SamplingConfig cfg;
    cfg.alpha = std::uniform_int_distribution<int>(1, 8)(rng);
    cfg.max_frames = std::uniform_int_distribution<int>(1, 300)(rng);
    auto pool = candidate_pool(s, cfg);
    if (pool.entries.size() > static_cast<std::size_t>(cfg.alpha * cfg.max_frames)) {
      return fail("cap exceeded on series " + std::to_string(i));
    }
    if (!pool.fallback_used) {
      for (const auto& e : pool.entries) {
        if (!(e.score > pool.s_mean)) return fail("score at or below mean on series " + std::to_string(i));
      }
    }
  }

  ScoreSeries big;
  for (int k = 0; k < 2000; ++k) {
    double v = k < 1500 ? 0.6 + 1e-4 * (k % 101) : -0.5;
    big.records.push_back({k, static_cast<double>(k), v});
  }
  SamplingConfig cfg;
  cfg.alpha = 4;
  cfg.max_frames = 256;
  auto pool = candidate_pool(big, cfg);
  if (pool.entries.size() != 1024) return fail("1500 above mean gave " + std::to_string(pool.entries.size()));
  return {true, "500 series within cap; 1500 above mean -> 1024"};
}

Outcome invariant_suite() {
  std::vector<testing::RandomCase> cases;
  std::vector<SelectionResult> results;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    std::mt19937_64 rng(seed + 50'000);
    cases.push_back(testing::random_case(rng, 256));
    results.push_back(tass_select(cases.back().pool, cases.back().cfg));
    if (auto problem = testing::check_selection(cases.back().pool, cases.back().cfg, results.back())) {
      return fail("seed " + std::to_string(seed) + ": " + *problem);
    }
  }
  std::vector<std::future<bool>> workers;
  for (int w = 0; w < 8; ++w) {
    workers.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = 0; i < cases.size(); ++i) {
        auto k = (i + static_cast<std::size_t>(w) * 61) % cases.size();
        if (!(tass_select(cases[k].pool, cases[k].cfg) == results[k])) return false;
      }
      return true;
    }));
  }
  for (auto& f : workers) {
    if (!f.get()) return fail("concurrent run differed");
  }
  return {true, "500 inputs hold every invariant; 8 threads agree"};
}

std::vector<LayoutFrame> frames_at(const std::vector<double>& times) {
  std::vector<LayoutFrame> out;
  for (std::size_t i = 0; i < times.size(); ++i) out.push_back({static_cast<std::int64_t>(i), times[i]});
  return out;
}

Outcome duration_independence() {
  LayoutOptions opt;
  opt.grid_h = 2;
  opt.grid_w = 2;
  opt.merge_factor = 2;
  std::vector<double> a, b;
  for (int i = 0; i < 12; ++i) {
    a.push_back(30.0 * i);
    b.push_back(3000.0 * i);
  }
  auto la = build_layout(frames_at(a), opt);
  auto lb = build_layout(frames_at(b), opt);
  if (la.positions != lb.positions) return fail("positions depend on timestamps");
  auto time_tokens = std::count_if(la.elements.begin(), la.elements.end(),
                                   [](const LayoutElement& e) { return e.kind == ElementKind::time_text; });
  if (time_tokens != 6) return fail(std::to_string(time_tokens) + " time tokens");
  auto golden = text_io::read_file(fs::path(KF_GOLDEN_DIR) / "layout_12f_g2.tsv");
  if (format_layout_dump(la) != golden) return fail("golden dump differs");
  return {true, "x100 scaling leaves positions unchanged; 6 time tokens; golden matches"};
}

Outcome comparator_contrast() {
  auto absolute = qwen_absolute_positions({0, 3600}, 2, 2, 1.0);
  std::int64_t abs_max = 0;
  for (const auto& p : absolute) abs_max = std::max(abs_max, p.t);
  LayoutOptions opt;
  opt.grid_h = 2;
  opt.grid_w = 2;
  auto layout = build_layout(frames_at({0, 3600}), opt);
  std::int64_t seq_max = 0;
  for (const auto& p : layout.positions) seq_max = std::max(seq_max, p.t);
  std::ostringstream d;
  d << "absolute max t " << abs_max << ", sequential max t " << seq_max;
  if (abs_max != 3600 || !(seq_max < kStructuralBound)) return fail(d.str());
  return {true, d.str()};
}

Outcome synthetic_recall() {
  auto start = Clock::now();
  auto spec = load_event_spec(fs::path(KF_FIXTURE_DIR) / "noiseless_events.json");
  SamplingConfig cfg;
  cfg.alpha = 4;
  cfg.max_frames = 16;
  cfg.delta0_s = 20;
  cfg.decay_lambda = 0.5;
  auto data = synth_series(spec);
  auto tass = evaluate(Strategy::tass, data, spec.duration_s, cfg, spec.event_width_s);
  auto uni = evaluate(Strategy::uniform, data, spec.duration_s, cfg, spec.event_width_s);

  auto noisy = noisy_spec();
  auto rows = evaluate_seeds(noisy, {Strategy::tass, Strategy::uniform}, 200, cfg,
                             noisy.event_width_s, 4);
  std::vector<double> tr, ur;
  for (const auto& r : rows) (r.strategy == Strategy::tass ? tr : ur).push_back(r.report.recall);
  double tm = median(tr);
  double um = median(ur);
  double s = seconds_since(start);

  std::ostringstream d;
  d << "noiseless tass " << tass.recall << " uniform " << uni.recall << "; 200 noisy seeds median tass "
    << tm << " uniform " << um << "; " << s << " s";
  bool ok = tass.recall == 1.0 && uni.recall < 1.0 && tm >= um && s < kRecallLimitS;
  return {ok, d.str()};
}

Outcome timestamp_formatting() {
  if (format_timestamp(83, TimestampStyle::mm_ss) != "01:23") return fail("83 mm_ss");
  if (format_timestamp(83, TimestampStyle::seconds_suffix) != "83s") return fail("83 seconds");
  if (format_timestamp(3725, TimestampStyle::hh_mm_ss) != "1:02:05") return fail("3725 hh_mm_ss");
  for (std::int64_t x = 0; x <= 86400; ++x) {
    for (auto style : {TimestampStyle::mm_ss, TimestampStyle::seconds_suffix, TimestampStyle::hh_mm_ss}) {
      for (double frac : {0.0, 0.5}) {
        auto v = static_cast<double>(x) + frac;
        if (parse_timestamp(format_timestamp(v, style)) != x) {
          return fail("round trip failed at " + std::to_string(v));
        }
      }
    }
  }
  return {true, "01:23, 83s, 1:02:05; parse(format(x)) == floor(x) on 0..86400"};
}

Outcome bench_sanity() {
  auto rows = bench_sampler(Strategy::tass, {512, 1024, 2048, 4096}, 256, 7);
  std::ostringstream d;
  bool ok = true;
  for (const auto& r : rows) d << r.pool_size << ":" << r.median_ns / 1e6 << "ms ";
  auto at_1024 = std::find_if(rows.begin(), rows.end(), [](const BenchRow& r) { return r.pool_size == 1024; });
  if (at_1024 == rows.end() || at_1024->median_ns / 1e6 >= kBenchLimitMs) ok = false;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    double prev = std::max<double>(static_cast<double>(rows[i - 1].median_ns), 1.0);
    if (static_cast<double>(rows[i].median_ns) > kDoublingFactor * prev) ok = false;
  }
  return {ok, d.str()};
}

Outcome prompt_fidelity() {
  auto asset = text_io::read_file(fs::path(KF_ASSET_DIR) / "caption_prompt_v1.txt");
  if (testing::sha256_hex(std::string(caption_prompt_template())) != kTemplateSha256) {
    return fail("template checksum differs");
  }
  if (asset != caption_prompt_template()) return fail("embedded template differs from asset");
  auto prompt = render_prompt({"What color is the car?", {"red", "blue"}});
  std::istringstream in(asset);
  std::size_t core = 0;
  bool in_core = false;
  for (std::string line; std::getline(in, line);) {
    if (line == "Core requirements:") {
      in_core = true;
      continue;
    }
    if (in_core && line.size() > 2 && line[1] == '.' && line[0] == static_cast<char>('1' + core)) {
      if (prompt.find(line + "\n") == std::string::npos) return fail("missing core line " + line);
      ++core;
    }
  }
  if (core != 5) return fail(std::to_string(core) + " core lines");
  if (prompt.find("Output Key Image Caption:") == std::string::npos) return fail("missing output cue");
  if (prompt.find("Here is the question: What color is the car?") == std::string::npos) {
    return fail("question not substituted");
  }
  return {true, "5 core lines and output cue verbatim; checksum pinned"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
  };
  const Criterion criteria[] = {
      {"selection fixture fidelity", fixture_fidelity},
      {"oracle equivalence", oracle_equivalence},
      {"candidate pool cap", pool_cap},
      {"selection invariant suite", invariant_suite},
      {"layout duration independence", duration_independence},
      {"absolute position comparator", comparator_contrast},
      {"synthetic event recall", synthetic_recall},
      {"timestamp formatting", timestamp_formatting},
      {"sampler bench sanity", bench_sanity},
      {"caption prompt fidelity", prompt_fidelity},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    if (!o.pass) ++failures;
    std::printf("%s  %s  (%s)\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures,
              std::size(criteria));
  return failures == 0 ? 0 : 1;
}
