#pragma once

// Candidate filtering and temporal-aware greedy frame selection, plus the
// uniform and top-k baselines.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "keyframe/score_model.hpp"

namespace keyframe {

enum class TieBreak { earlier_timestamp_first };

struct SamplingConfig {
  /// Candidate cap multiplier: the pool holds at most alpha * max_frames.
  std::int64_t alpha = 4;
  /// Frame budget N_max.
  std::int64_t max_frames = 256;
  /// Initial minimum separation between picks, in seconds.
  double delta0_s = 20.0;
  /// Multiplier applied to the separation after every pass.
  double decay_lambda = 0.5;
  /// Once the separation drops below this, one last pass runs with the
  /// separation test disabled.
  double delta_floor_s = 1e-6;
  TieBreak tie_break = TieBreak::earlier_timestamp_first;

  friend bool operator==(const SamplingConfig&,
                         const SamplingConfig&) = default;
};

/// Throws ValidationError if any field is out of range.
void validate(const SamplingConfig& cfg);

struct PoolEntry {
  double timestamp_s = 0.0;
  double score = 0.0;
  std::int64_t frame_index = 0;

  friend bool operator==(const PoolEntry&, const PoolEntry&) = default;
};

/// Score-descending candidates; equal scores are ordered by ascending time.
struct CandidatePool {
  std::vector<PoolEntry> entries;
  double s_mean = 0.0;
  std::int64_t cap = 0;
  bool fallback_used = false;
};

/// Throws ValidationError unless entries follow the pool order, timestamps
/// are finite and distinct, and the size respects `cap`.
void validate(const CandidatePool& pool);

struct SelectionResult {
  /// Picks sorted by ascending timestamp.
  std::vector<PoolEntry> selected;
  /// frame_index of each pick in the order it was taken.
  std::vector<std::int64_t> selection_order;
  /// Separation in force when each pick was taken (0 on the floor pass).
  std::vector<double> delta_at_selection;
  std::int64_t passes_run = 0;
  /// True when the pool ran out before max_frames picks were made.
  bool exhausted = false;

  friend bool operator==(const SelectionResult&,
                         const SelectionResult&) = default;
};

double mean_threshold(const ScoreSeries& series);

CandidatePool candidate_pool(const ScoreSeries& series,
                             const SamplingConfig& cfg);

SelectionResult tass_select(const CandidatePool& pool,
                            const SamplingConfig& cfg);

/// Centres of n equal-width bins over [0, duration_s).
std::vector<double> uniform_select(double duration_s, std::int64_t n);

/// Timestamps of the n best records by (score desc, timestamp asc), returned
/// in ascending time order.
std::vector<double> topk_select(const ScoreSeries& series, std::int64_t n);

/// The full ordering used by both the pool and top-k: score descending,
/// then timestamp ascending.
inline bool score_priority_less(double score_a, double time_a, double score_b,
                                double time_b) {
  if (score_a != score_b) return score_a > score_b;
  return time_a < time_b;
}

// ---------------------------------------------------------------------------
// Selection report file.

/// One row of a selection report. Fields that a strategy does not produce
/// (e.g. scores for uniform sampling) are left empty.
struct ReportRow {
  std::int64_t order = 0;  // 1-based pick order
  std::optional<std::int64_t> frame_index;
  double timestamp_s = 0.0;
  std::optional<double> score;
  std::optional<double> delta_at_selection;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct SelectionReport {
  std::string strategy;  // "tass", "uniform" or "topk"
  std::optional<SamplingConfig> config;
  std::optional<std::int64_t> requested;  // n for the baselines
  std::optional<double> s_mean;
  std::optional<std::int64_t> pool_size;
  std::optional<bool> fallback_used;
  std::optional<std::int64_t> passes_run;
  std::optional<bool> exhausted;
  /// Rows in pick order.
  std::vector<ReportRow> rows;

  friend bool operator==(const SelectionReport&,
                         const SelectionReport&) = default;
};

SelectionReport make_tass_report(const CandidatePool& pool,
                                 const SelectionResult& result,
                                 const SamplingConfig& cfg);
SelectionReport make_uniform_report(const std::vector<double>& timestamps);
SelectionReport make_topk_report(const ScoreSeries& series, std::int64_t n);

std::string format_selection_report(const SelectionReport& report);
SelectionReport parse_selection_report(std::string_view text,
                                       const std::string& source = "<memory>");
void save_selection_report(const SelectionReport& report,
                           const std::filesystem::path& path);
SelectionReport load_selection_report(const std::filesystem::path& path);

}  // namespace keyframe
