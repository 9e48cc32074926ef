#include "keyframe/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include <json.hpp>

#include "keyframe/errors.hpp"
#include "keyframe/text_io.hpp"

namespace keyframe {

namespace {

using Clock = std::chrono::steady_clock;

constexpr int kPlacementAttempts = 10000;

std::int64_t elapsed_ns(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() -
                                                              start)
      .count();
}

std::string fmt(double v) { return text_io::format_real(v); }

std::string report_cells(const EvalReport& r) {
  return fmt(r.recall) + '\t' + fmt(r.mean_min_interval_s) + '\t' +
         fmt(r.span_coverage) + '\t' + std::to_string(r.wall_time_ns);
}

}  // namespace

void validate(const SyntheticEventSpec& spec) {
  if (!std::isfinite(spec.duration_s) || spec.duration_s <= 0.0) {
    throw ValidationError("duration_s must be positive");
  }
  if (spec.num_events <= 0) throw ValidationError("num_events must be positive");
  if (!std::isfinite(spec.event_width_s) || spec.event_width_s <= 0.0) {
    throw ValidationError("event_width_s must be positive");
  }
  if (!std::isfinite(spec.event_amplitude) || spec.event_amplitude <= 0.0) {
    throw ValidationError("event_amplitude must be positive");
  }
  if (!std::isfinite(spec.noise_sigma) || spec.noise_sigma < 0.0) {
    throw ValidationError("noise_sigma must be non-negative");
  }
  if (!(static_cast<double>(spec.num_events) * spec.event_width_s <
        spec.duration_s)) {
    throw ValidationError("num_events * event_width_s must be below duration");
  }
  if (!std::isfinite(spec.base_score) || spec.base_score < -1.0 ||
      spec.base_score + spec.event_amplitude > 1.0) {
    throw ValidationError("base_score + event_amplitude must not exceed 1");
  }
}

SyntheticEventSpec parse_event_spec(std::string_view json,
                                    const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source, 1, "json", e.what());
  }
  if (!doc.is_object()) throw ParseError(source, 1, "json", "expected an object");

  SyntheticEventSpec spec;
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "duration_s") {
        spec.duration_s = value.get<double>();
      } else if (key == "num_events") {
        spec.num_events = value.get<std::int64_t>();
      } else if (key == "event_width_s") {
        spec.event_width_s = value.get<double>();
      } else if (key == "event_amplitude") {
        spec.event_amplitude = value.get<double>();
      } else if (key == "base_score") {
        spec.base_score = value.get<double>();
      } else if (key == "noise_sigma") {
        spec.noise_sigma = value.get<double>();
      } else if (key == "seed") {
        spec.seed = value.get<std::uint64_t>();
      } else {
        throw ParseError(source, 1, key, "unknown key");
      }
    } catch (const nlohmann::json::type_error& e) {
      throw ParseError(source, 1, key, e.what());
    }
  }
  validate(spec);
  return spec;
}

SyntheticEventSpec load_event_spec(const std::filesystem::path& path) {
  return parse_event_spec(text_io::read_file(path), path.string());
}

double raised_cosine_bump(double x) {
  if (x < -1.0 || x > 1.0) return 0.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * x));
}

SyntheticSeries synth_series(const SyntheticEventSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);

  const auto samples = static_cast<std::int64_t>(std::floor(spec.duration_s));
  const auto lo = static_cast<std::int64_t>(std::ceil(spec.event_width_s));
  const auto hi = static_cast<std::int64_t>(
      std::floor(static_cast<double>(samples - 1) - spec.event_width_s));
  if (lo > hi) throw PlacementError("duration too short for one event");

  // Supports [c - w, c + w] must not overlap.
  std::vector<double> centers;
  std::uniform_int_distribution<std::int64_t> pick(lo, hi);
  for (std::int64_t e = 0; e < spec.num_events; ++e) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      auto c = static_cast<double>(pick(rng));
      bool clear = std::all_of(centers.begin(), centers.end(), [&](double o) {
        return std::abs(c - o) >= 2.0 * spec.event_width_s;
      });
      if (clear) {
        centers.push_back(c);
        placed = true;
      }
    }
    if (!placed) {
      throw PlacementError("could not place event " + std::to_string(e + 1) +
                           " of " + std::to_string(spec.num_events));
    }
  }
  std::sort(centers.begin(), centers.end());

  SyntheticSeries out;
  out.event_centers = centers;
  auto& series = out.series;
  series.video_id = "synthetic-" + std::to_string(spec.seed);
  series.query_id = "planted-events";
  series.extraction_fps = 1.0;
  series.records.reserve(static_cast<std::size_t>(samples));
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  for (std::int64_t i = 0; i < samples; ++i) {
    auto t = static_cast<double>(i);
    double s = spec.base_score;
    for (double c : centers) {
      s += spec.event_amplitude * raised_cosine_bump((t - c) / spec.event_width_s);
    }
    if (spec.noise_sigma > 0.0) s += noise(rng);
    series.records.push_back({i, t, std::clamp(s, -1.0, 1.0)});
  }
  return out;
}

double event_recall(std::span<const double> selected,
                    std::span<const double> event_centers,
                    double tolerance_s) {
  if (event_centers.empty()) throw EmptyInputError("no events to recall");
  if (!(tolerance_s > 0.0)) throw ValidationError("tolerance must be positive");
  std::size_t hit = 0;
  for (double c : event_centers) {
    bool found = std::any_of(selected.begin(), selected.end(), [&](double t) {
      return std::abs(t - c) <= tolerance_s;
    });
    if (found) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(event_centers.size());
}

Coverage coverage_metrics(std::span<const double> selected,
                          double duration_s) {
  if (selected.size() < 2) {
    throw InsufficientSelectionError("coverage needs at least two picks");
  }
  if (!(duration_s > 0.0)) throw ValidationError("duration must be positive");
  std::vector<double> sorted(selected.begin(), selected.end());
  std::sort(sorted.begin(), sorted.end());
  double gaps = 0.0;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    gaps += sorted[i] - sorted[i - 1];
  }
  Coverage c;
  c.mean_interval_s = gaps / static_cast<double>(sorted.size() - 1);
  c.span_coverage = (sorted.back() - sorted.front()) / duration_s;
  return c;
}

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::tass: return "tass";
    case Strategy::uniform: return "uniform";
    case Strategy::topk: return "topk";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "tass") return Strategy::tass;
  if (name == "uniform") return Strategy::uniform;
  if (name == "topk") return Strategy::topk;
  throw ValidationError("unknown strategy '" + std::string(name) + "'");
}

StrategyRun run_strategy(Strategy strategy, const ScoreSeries& series,
                         const SamplingConfig& cfg, double duration_s) {
  StrategyRun run;
  auto start = Clock::now();
  switch (strategy) {
    case Strategy::tass: {
      auto result = tass_select(candidate_pool(series, cfg), cfg);
      for (const auto& e : result.selected) run.timestamps.push_back(e.timestamp_s);
      break;
    }
    case Strategy::uniform:
      run.timestamps = uniform_select(duration_s, cfg.max_frames);
      break;
    case Strategy::topk:
      run.timestamps = topk_select(series, cfg.max_frames);
      break;
  }
  run.wall_time_ns = elapsed_ns(start);
  return run;
}

EvalReport evaluate(Strategy strategy, const SyntheticSeries& data,
                    double duration_s, const SamplingConfig& cfg,
                    double tolerance_s) {
  auto run = run_strategy(strategy, data.series, cfg, duration_s);
  EvalReport report;
  report.recall = event_recall(run.timestamps, data.event_centers, tolerance_s);
  if (run.timestamps.size() >= 2) {
    auto cov = coverage_metrics(run.timestamps, duration_s);
    report.mean_min_interval_s = cov.mean_interval_s;
    report.span_coverage = cov.span_coverage;
  }
  report.wall_time_ns = run.wall_time_ns;
  report.config_echo = cfg;
  return report;
}

std::vector<SeedResult> evaluate_seeds(const SyntheticEventSpec& spec,
                                       const std::vector<Strategy>& strategies,
                                       std::int64_t seeds,
                                       const SamplingConfig& cfg,
                                       double tolerance_s, unsigned threads) {
  if (seeds <= 0) throw ValidationError("seed count must be positive");
  if (strategies.empty()) throw ValidationError("no strategies given");
  validate(spec);
  validate(cfg);

  const auto n = static_cast<std::size_t>(seeds);
  std::vector<SeedResult> results(n * strategies.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};

  auto worker = [&] {
    for (auto i = next++; i < n && !failed; i = next++) {
      try {
        auto s = spec;
        s.seed = spec.seed + i;
        auto data = synth_series(s);
        for (std::size_t k = 0; k < strategies.size(); ++k) {
          results[i * strategies.size() + k] = {
              s.seed, strategies[k],
              evaluate(strategies[k], data, s.duration_s, cfg, tolerance_s)};
        }
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

double median(std::vector<double> values) {
  if (values.empty()) throw EmptyInputError("median of nothing");
  std::sort(values.begin(), values.end());
  auto mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

CandidatePool make_bench_pool(std::int64_t size, std::uint64_t seed) {
  if (size <= 0) throw ValidationError("pool size must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> score(-1.0, 1.0);
  CandidatePool pool;
  pool.cap = size;
  // Timestamps spread over four times the pool size at 1 FPS.
  std::vector<std::int64_t> slots(static_cast<std::size_t>(size * 4));
  for (std::size_t i = 0; i < slots.size(); ++i) {
    slots[i] = static_cast<std::int64_t>(i);
  }
  std::shuffle(slots.begin(), slots.end(), rng);
  for (std::int64_t i = 0; i < size; ++i) {
    auto slot = slots[static_cast<std::size_t>(i)];
    pool.entries.push_back({static_cast<double>(slot), score(rng), slot});
  }
  std::sort(pool.entries.begin(), pool.entries.end(),
            [](const PoolEntry& a, const PoolEntry& b) {
              return score_priority_less(a.score, a.timestamp_s, b.score,
                                         b.timestamp_s);
            });
  return pool;
}

std::vector<BenchRow> bench_sampler(Strategy strategy,
                                    std::vector<std::int64_t> pool_sizes,
                                    std::int64_t n_max, int repetitions,
                                    std::uint64_t seed) {
  if (repetitions < 3) throw ValidationError("repetitions must be at least 3");
  if (n_max <= 0) throw ValidationError("n_max must be positive");
  std::sort(pool_sizes.begin(), pool_sizes.end());
  pool_sizes.erase(std::unique(pool_sizes.begin(), pool_sizes.end()),
                   pool_sizes.end());

  SamplingConfig cfg;
  cfg.max_frames = n_max;

  std::vector<BenchRow> rows;
  volatile std::size_t sink = 0;
  for (auto size : pool_sizes) {
    auto pool = make_bench_pool(size, seed + static_cast<std::uint64_t>(size));
    ScoreSeries series;
    series.records.reserve(pool.entries.size());
    for (const auto& e : pool.entries) {
      series.records.push_back({e.frame_index, e.timestamp_s, e.score});
    }
    std::sort(series.records.begin(), series.records.end(),
              [](const FrameRecord& a, const FrameRecord& b) {
                return a.timestamp_s < b.timestamp_s;
              });

    std::vector<double> times;
    for (int r = 0; r < repetitions; ++r) {
      auto start = Clock::now();
      switch (strategy) {
        case Strategy::tass:
          sink = sink + tass_select(pool, cfg).selected.size();
          break;
        case Strategy::uniform:
          sink = sink + uniform_select(static_cast<double>(size), n_max).size();
          break;
        case Strategy::topk:
          sink = sink + topk_select(series, n_max).size();
          break;
      }
      times.push_back(static_cast<double>(elapsed_ns(start)));
    }
    rows.push_back({size, static_cast<std::int64_t>(median(times))});
  }
  return rows;
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "alpha") return SweepAxis::alpha;
  if (name == "delta0") return SweepAxis::delta0;
  throw ValidationError("unknown sweep axis '" + std::string(name) + "'");
}

std::string_view sweep_axis_name(SweepAxis axis) {
  return axis == SweepAxis::alpha ? "alpha" : "delta0";
}

std::vector<SweepRow> sweep(const SyntheticSeries& data, double duration_s,
                            SweepAxis axis, const std::vector<double>& values,
                            const SamplingConfig& fixed_cfg,
                            double tolerance_s) {
  if (values.empty()) throw EmptyInputError("sweep needs at least one value");
  std::vector<SweepRow> rows;
  for (double v : values) {
    SamplingConfig cfg = fixed_cfg;
    if (axis == SweepAxis::alpha) {
      if (v != std::floor(v)) {
        throw ValidationError("alpha values must be integers");
      }
      cfg.alpha = static_cast<std::int64_t>(v);
    } else {
      cfg.delta0_s = v;
    }
    validate(cfg);
    rows.push_back(
        {v, evaluate(Strategy::tass, data, duration_s, cfg, tolerance_s)});
  }
  return rows;
}

std::string format_seed_table(const std::vector<SeedResult>& rows) {
  std::string out = "#schema_version\t1\n#kind\teval\n";
  out += "seed\tstrategy\trecall\tmean_interval_s\tspan_coverage\twall_time_ns\n";
  for (const auto& r : rows) {
    out += std::to_string(r.seed) + '\t' + std::string(strategy_name(r.strategy)) +
           '\t' + report_cells(r.report) + '\n';
  }
  return out;
}

std::string format_sweep_table(SweepAxis axis,
                               const std::vector<SweepRow>& rows) {
  std::string out = "#schema_version\t1\n#kind\tsweep\n";
  out += "#axis\t" + std::string(sweep_axis_name(axis)) + "\n";
  out += "value\trecall\tmean_interval_s\tspan_coverage\twall_time_ns\t"
         "alpha\tmax_frames\tdelta0_s\tdecay_lambda\n";
  for (const auto& r : rows) {
    const auto& c = r.report.config_echo;
    out += fmt(r.value) + '\t' + report_cells(r.report) + '\t' +
           std::to_string(c.alpha) + '\t' + std::to_string(c.max_frames) +
           '\t' + fmt(c.delta0_s) + '\t' + fmt(c.decay_lambda) + '\n';
  }
  return out;
}

std::string format_bench_table(Strategy strategy, std::int64_t n_max,
                               const std::vector<BenchRow>& rows) {
  std::string out = "#schema_version\t1\n#kind\tbench\n";
  out += "#strategy\t" + std::string(strategy_name(strategy)) + "\n";
  out += "#n_max\t" + std::to_string(n_max) + "\n";
  out += "pool_size\tmedian_ns\n";
  for (const auto& r : rows) {
    out += std::to_string(r.pool_size) + '\t' + std::to_string(r.median_ns) +
           '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double nearest_score(const ScoreSeries& series, double t) {
  const auto& recs = series.records;
  auto it = std::lower_bound(
      recs.begin(), recs.end(), t,
      [](const FrameRecord& r, double v) { return r.timestamp_s < v; });
  if (it == recs.end()) return recs.back().score;
  if (it == recs.begin()) return it->score;
  auto prev = std::prev(it);
  return (t - prev->timestamp_s <= it->timestamp_s - t) ? prev->score
                                                        : it->score;
}

double pick_score(const ScoreSeries& series, const ReportRow& row) {
  return row.score ? *row.score : nearest_score(series, row.timestamp_s);
}

void require_plot_input(const ScoreSeries& series) {
  if (series.records.empty()) throw EmptyInputError("cannot plot an empty series");
}

}  // namespace

std::string format_curve_table(const ScoreSeries& series) {
  std::string out = "#schema_version\t1\n#kind\tcurve\n";
  out += "timestamp_s\tscore\n";
  for (const auto& r : series.records) {
    out += fmt(r.timestamp_s) + '\t' + fmt(r.score) + '\n';
  }
  return out;
}

std::string format_picks_table(const ScoreSeries& series,
                               const SelectionReport& selection) {
  require_plot_input(series);
  std::string out = "#schema_version\t1\n#kind\tpicks\n";
  out += "order\tframe_index\ttimestamp_s\tscore\n";
  for (const auto& row : selection.rows) {
    out += std::to_string(row.order) + '\t' +
           (row.frame_index ? std::to_string(*row.frame_index) : "-") + '\t' +
           fmt(row.timestamp_s) + '\t' + fmt(pick_score(series, row)) + '\n';
  }
  return out;
}

std::string render_plot_svg(const ScoreSeries& series,
                            const SelectionReport& selection) {
  require_plot_input(series);
  constexpr double width = 960, height = 360, margin = 48;
  const double plot_w = width - 2 * margin;
  const double plot_h = height - 2 * margin;

  double t_min = series.records.front().timestamp_s;
  double t_max = series.records.back().timestamp_s;
  double s_min = series.records.front().score;
  double s_max = s_min;
  for (const auto& r : series.records) {
    s_min = std::min(s_min, r.score);
    s_max = std::max(s_max, r.score);
  }
  for (const auto& row : selection.rows) {
    t_min = std::min(t_min, row.timestamp_s);
    t_max = std::max(t_max, row.timestamp_s);
  }
  if (t_max == t_min) t_max = t_min + 1.0;
  if (s_max == s_min) {
    s_max += 0.5;
    s_min -= 0.5;
  }
  auto x_of = [&](double t) {
    return margin + (t - t_min) / (t_max - t_min) * plot_w;
  };
  auto y_of = [&](double s) {
    return margin + (s_max - s) / (s_max - s_min) * plot_h;
  };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<!-- schema_version 1 -->\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"960\" "
         "height=\"360\" viewBox=\"0 0 960 360\">\n";
  svg += "<rect width=\"960\" height=\"360\" fill=\"white\"/>\n";
  svg += "<g id=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
  svg += "<line x1=\"48\" y1=\"312\" x2=\"912\" y2=\"312\"/>\n";
  svg += "<line x1=\"48\" y1=\"48\" x2=\"48\" y2=\"312\"/>\n";
  svg += "</g>\n";
  svg += "<text x=\"480\" y=\"344\" text-anchor=\"middle\" "
         "font-size=\"12\">time (s) [" + fmt(t_min) + ", " + fmt(t_max) +
         "]</text>\n";
  svg += "<text x=\"16\" y=\"180\" font-size=\"12\" "
         "transform=\"rotate(-90 16 180)\" text-anchor=\"middle\">"
         "similarity [" + fmt(s_min) + ", " + fmt(s_max) + "]</text>\n";

  svg += "<polyline id=\"curve\" fill=\"none\" stroke=\"steelblue\" "
         "stroke-width=\"1\" points=\"";
  for (std::size_t i = 0; i < series.records.size(); ++i) {
    const auto& r = series.records[i];
    if (i > 0) svg += ' ';
    svg += fmt(x_of(r.timestamp_s)) + "," + fmt(y_of(r.score));
  }
  svg += "\"/>\n";

  svg += "<g id=\"picks\" fill=\"red\" font-size=\"10\">\n";
  for (const auto& row : selection.rows) {
    double x = x_of(row.timestamp_s);
    double y = y_of(pick_score(series, row));
    svg += "<circle cx=\"" + fmt(x) + "\" cy=\"" + fmt(y) +
           "\" r=\"3\" data-t=\"" + fmt(row.timestamp_s) + "\" data-order=\"" +
           std::to_string(row.order) + "\"/>\n";
    svg += "<text x=\"" + fmt(x + 4) + "\" y=\"" + fmt(y - 4) +
           "\" class=\"order\">" + std::to_string(row.order) + "</text>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

PlotBundle emit_plot_data(const ScoreSeries& series,
                          const SelectionReport& selection,
                          const std::filesystem::path& out_dir) {
  // Render everything before touching the filesystem.
  auto curve = format_curve_table(series);
  auto picks = format_picks_table(series, selection);
  auto svg = render_plot_svg(series, selection);

  PlotBundle bundle{out_dir / "curve.tsv", out_dir / "picks.tsv",
                    out_dir / "plot.svg"};
  text_io::write_file_atomic(bundle.curve, curve);
  text_io::write_file_atomic(bundle.picks, picks);
  text_io::write_file_atomic(bundle.svg, svg);
  return bundle;
}

}  // namespace keyframe
