#pragma once

// Desk-scale evaluation: planted-event synthetic series, recall and coverage
// metrics, timing benchmarks, hyperparameter sweeps and plot output.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "keyframe/sampler.hpp"
#include "keyframe/score_model.hpp"

namespace keyframe {

struct SyntheticEventSpec {
  double duration_s = 3600.0;
  std::int64_t num_events = 8;
  double event_width_s = 10.0;
  double event_amplitude = 0.3;
  double base_score = 0.2;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

void validate(const SyntheticEventSpec& spec);

/// Reads a JSON object with the SyntheticEventSpec field names. Missing keys
/// keep their defaults; unknown keys are rejected.
SyntheticEventSpec parse_event_spec(std::string_view json,
                                    const std::string& source = "<memory>");
SyntheticEventSpec load_event_spec(const std::filesystem::path& path);

struct SyntheticSeries {
  ScoreSeries series;
  std::vector<double> event_centers;  // ascending
};

/// Raised-cosine kernel: 1 at 0, 0 outside [-1, 1].
double raised_cosine_bump(double x);

/// 1 FPS series over [0, duration) with num_events bumps at integer centres
/// whose supports do not overlap. Reproducible from spec.seed.
SyntheticSeries synth_series(const SyntheticEventSpec& spec);

double event_recall(std::span<const double> selected,
                    std::span<const double> event_centers, double tolerance_s);

struct Coverage {
  double mean_interval_s = 0.0;
  double span_coverage = 0.0;
};

Coverage coverage_metrics(std::span<const double> selected, double duration_s);

enum class Strategy { tass, uniform, topk };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

struct StrategyRun {
  std::vector<double> timestamps;  // ascending
  std::int64_t wall_time_ns = 0;
};

/// Runs one strategy with cfg.max_frames as its budget. Uniform sampling
/// spreads over [0, duration_s).
StrategyRun run_strategy(Strategy strategy, const ScoreSeries& series,
                         const SamplingConfig& cfg, double duration_s);

struct EvalReport {
  double recall = 0.0;
  double mean_min_interval_s = 0.0;
  double span_coverage = 0.0;
  std::int64_t wall_time_ns = 0;
  SamplingConfig config_echo;
};

/// Fewer than two picks report zero interval and coverage.
EvalReport evaluate(Strategy strategy, const SyntheticSeries& data,
                    double duration_s, const SamplingConfig& cfg,
                    double tolerance_s);

struct SeedResult {
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::tass;
  EvalReport report;
};

/// Evaluates every strategy on `seeds` consecutive seeds starting at
/// spec.seed. Runs on up to `threads` workers; output order is
/// (seed, strategy) regardless of scheduling.
std::vector<SeedResult> evaluate_seeds(const SyntheticEventSpec& spec,
                                       const std::vector<Strategy>& strategies,
                                       std::int64_t seeds,
                                       const SamplingConfig& cfg,
                                       double tolerance_s, unsigned threads);

double median(std::vector<double> values);

struct BenchRow {
  std::int64_t pool_size = 0;
  std::int64_t median_ns = 0;
};

/// Median wall time per pool size over seeded synthetic pools. Rows come
/// back in ascending pool-size order.
std::vector<BenchRow> bench_sampler(Strategy strategy,
                                    std::vector<std::int64_t> pool_sizes,
                                    std::int64_t n_max, int repetitions,
                                    std::uint64_t seed = 7);

/// Score-ordered pool of `size` entries with distinct timestamps, as the
/// benchmark uses.
CandidatePool make_bench_pool(std::int64_t size, std::uint64_t seed);

enum class SweepAxis { alpha, delta0 };

SweepAxis parse_sweep_axis(std::string_view name);
std::string_view sweep_axis_name(SweepAxis axis);

struct SweepRow {
  double value = 0.0;
  EvalReport report;
};

std::vector<SweepRow> sweep(const SyntheticSeries& data, double duration_s,
                            SweepAxis axis, const std::vector<double>& values,
                            const SamplingConfig& fixed_cfg,
                            double tolerance_s);

std::string format_seed_table(const std::vector<SeedResult>& rows);
std::string format_sweep_table(SweepAxis axis,
                               const std::vector<SweepRow>& rows);
std::string format_bench_table(Strategy strategy, std::int64_t n_max,
                               const std::vector<BenchRow>& rows);

// ---------------------------------------------------------------------------
// Plot output.

std::string format_curve_table(const ScoreSeries& series);
/// Picks in selection order. Picks without a score take the score of the
/// nearest series record.
std::string format_picks_table(const ScoreSeries& series,
                               const SelectionReport& selection);
std::string render_plot_svg(const ScoreSeries& series,
                            const SelectionReport& selection);

struct PlotBundle {
  std::filesystem::path curve;
  std::filesystem::path picks;
  std::filesystem::path svg;
};

PlotBundle emit_plot_data(const ScoreSeries& series,
                          const SelectionReport& selection,
                          const std::filesystem::path& out_dir);

}  // namespace keyframe
