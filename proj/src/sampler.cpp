#include "keyframe/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "keyframe/errors.hpp"
#include "keyframe/text_io.hpp"

namespace keyframe {

namespace {

void require_non_empty(const ScoreSeries& series) {
  if (series.records.empty()) throw EmptyInputError("score series is empty");
}

bool priority_less(const FrameRecord& a, const FrameRecord& b) {
  return score_priority_less(a.score, a.timestamp_s, b.score, b.timestamp_s);
}

std::vector<FrameRecord> ranked_records(const ScoreSeries& series,
                                        std::size_t n) {
  std::vector<FrameRecord> ranked = series.records;
  n = std::min(n, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<long>(n),
                    ranked.end(), priority_less);
  ranked.resize(n);
  return ranked;
}

// True when `t` is at least `delta` away from every timestamp in `sorted`.
// The nearest neighbours on either side bound the distance to all others.
bool far_enough(const std::vector<double>& sorted, double t, double delta) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
  if (it != sorted.end() && std::abs(t - *it) < delta) return false;
  if (it != sorted.begin() && std::abs(t - *std::prev(it)) < delta) {
    return false;
  }
  return true;
}

const char* tie_break_name(TieBreak tb) {
  switch (tb) {
    case TieBreak::earlier_timestamp_first: return "earlier_timestamp_first";
  }
  return "?";
}

}  // namespace

void validate(const SamplingConfig& cfg) {
  if (cfg.alpha <= 0) throw ValidationError("alpha must be positive");
  if (cfg.max_frames <= 0) throw ValidationError("max_frames must be positive");
  if (!std::isfinite(cfg.delta0_s) || cfg.delta0_s <= 0.0) {
    throw ValidationError("delta0_s must be positive");
  }
  if (!(cfg.decay_lambda > 0.0 && cfg.decay_lambda < 1.0)) {
    throw ValidationError("decay_lambda must lie in (0, 1)");
  }
  if (!std::isfinite(cfg.delta_floor_s) || cfg.delta_floor_s <= 0.0) {
    throw ValidationError("delta_floor_s must be positive");
  }
  if (!(cfg.delta_floor_s < cfg.delta0_s)) {
    throw ValidationError("delta_floor_s must be below delta0_s");
  }
}

void validate(const CandidatePool& pool) {
  if (pool.cap <= 0) throw ValidationError("pool cap must be positive");
  if (pool.entries.size() > static_cast<std::size_t>(pool.cap)) {
    throw ValidationError("pool holds more entries than its cap");
  }
  std::vector<double> times;
  times.reserve(pool.entries.size());
  for (std::size_t i = 0; i < pool.entries.size(); ++i) {
    const auto& e = pool.entries[i];
    if (!std::isfinite(e.timestamp_s) || !std::isfinite(e.score)) {
      throw ValidationError("pool entry " + std::to_string(i) +
                            " is not finite");
    }
    if (i > 0) {
      const auto& prev = pool.entries[i - 1];
      if (!score_priority_less(prev.score, prev.timestamp_s, e.score,
                               e.timestamp_s)) {
        throw ValidationError("pool entry " + std::to_string(i) +
                              " is out of priority order");
      }
    }
    times.push_back(e.timestamp_s);
  }
  std::sort(times.begin(), times.end());
  if (std::adjacent_find(times.begin(), times.end()) != times.end()) {
    throw ValidationError("pool contains duplicate timestamps");
  }
}

double mean_threshold(const ScoreSeries& series) {
  require_non_empty(series);
  double sum = 0.0;
  double lo = series.records.front().score;
  double hi = lo;
  for (const auto& r : series.records) {
    sum += r.score;
    lo = std::min(lo, r.score);
    hi = std::max(hi, r.score);
  }
  // The exact mean lies in [lo, hi]; rounding may not.
  return std::clamp(sum / static_cast<double>(series.records.size()), lo, hi);
}

CandidatePool candidate_pool(const ScoreSeries& series,
                             const SamplingConfig& cfg) {
  require_non_empty(series);
  validate(cfg);

  CandidatePool pool;
  pool.s_mean = mean_threshold(series);
  pool.cap = cfg.alpha * cfg.max_frames;

  std::vector<FrameRecord> above;
  for (const auto& r : series.records) {
    if (r.score > pool.s_mean) above.push_back(r);
  }
  if (above.empty()) {
    above = series.records;
    pool.fallback_used = true;
  }

  auto keep = std::min(above.size(), static_cast<std::size_t>(pool.cap));
  std::partial_sort(above.begin(), above.begin() + static_cast<long>(keep),
                    above.end(), priority_less);
  pool.entries.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    pool.entries.push_back(
        {above[i].timestamp_s, above[i].score, above[i].frame_index});
  }
  return pool;
}

SelectionResult tass_select(const CandidatePool& pool,
                            const SamplingConfig& cfg) {
  validate(cfg);
  validate(pool);

  const auto quota = static_cast<std::size_t>(cfg.max_frames);
  const auto& entries = pool.entries;

  SelectionResult result;
  std::vector<bool> taken(entries.size(), false);
  std::size_t remaining = entries.size();
  std::vector<double> picked_times;  // kept sorted
  std::vector<std::size_t> picked;   // pool indices in pick order

  double delta = cfg.delta0_s;
  while (picked.size() < quota && remaining > 0) {
    const bool floor_pass = delta < cfg.delta_floor_s;
    const double effective = floor_pass ? 0.0 : delta;
    ++result.passes_run;

    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (taken[i]) continue;
      double t = entries[i].timestamp_s;
      if (!picked_times.empty() && !far_enough(picked_times, t, effective)) {
        continue;
      }
      taken[i] = true;
      --remaining;
      picked.push_back(i);
      picked_times.insert(
          std::upper_bound(picked_times.begin(), picked_times.end(), t), t);
      result.selection_order.push_back(entries[i].frame_index);
      result.delta_at_selection.push_back(effective);
      if (picked.size() >= quota) break;
    }

    if (floor_pass) break;
    delta *= cfg.decay_lambda;
  }

  result.exhausted = picked.size() < quota;
  result.selected.reserve(picked.size());
  for (auto i : picked) result.selected.push_back(entries[i]);
  std::sort(result.selected.begin(), result.selected.end(),
            [](const PoolEntry& a, const PoolEntry& b) {
              return a.timestamp_s < b.timestamp_s;
            });
  return result;
}

std::vector<double> uniform_select(double duration_s, std::int64_t n) {
  if (!std::isfinite(duration_s) || duration_s <= 0.0) {
    throw ValidationError("duration must be positive");
  }
  if (n <= 0) throw ValidationError("n must be positive");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  const double bin = duration_s / static_cast<double>(n);
  for (std::int64_t i = 0; i < n; ++i) {
    out.push_back((static_cast<double>(i) + 0.5) * bin);
  }
  return out;
}

std::vector<double> topk_select(const ScoreSeries& series, std::int64_t n) {
  require_non_empty(series);
  if (n <= 0) throw ValidationError("n must be positive");
  std::vector<double> out;
  for (const auto& r : ranked_records(series, static_cast<std::size_t>(n))) {
    out.push_back(r.timestamp_s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------

SelectionReport make_tass_report(const CandidatePool& pool,
                                 const SelectionResult& result,
                                 const SamplingConfig& cfg) {
  SelectionReport report;
  report.strategy = "tass";
  report.config = cfg;
  report.s_mean = pool.s_mean;
  report.pool_size = static_cast<std::int64_t>(pool.entries.size());
  report.fallback_used = pool.fallback_used;
  report.passes_run = result.passes_run;
  report.exhausted = result.exhausted;

  std::map<std::int64_t, const PoolEntry*> by_index;
  for (const auto& e : result.selected) by_index[e.frame_index] = &e;
  for (std::size_t i = 0; i < result.selection_order.size(); ++i) {
    const PoolEntry* e = by_index.at(result.selection_order[i]);
    report.rows.push_back({static_cast<std::int64_t>(i + 1), e->frame_index,
                           e->timestamp_s, e->score,
                           result.delta_at_selection[i]});
  }
  return report;
}

SelectionReport make_uniform_report(const std::vector<double>& timestamps) {
  SelectionReport report;
  report.strategy = "uniform";
  report.requested = static_cast<std::int64_t>(timestamps.size());
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    report.rows.push_back({static_cast<std::int64_t>(i + 1), std::nullopt,
                           timestamps[i], std::nullopt, std::nullopt});
  }
  return report;
}

SelectionReport make_topk_report(const ScoreSeries& series, std::int64_t n) {
  require_non_empty(series);
  if (n <= 0) throw ValidationError("n must be positive");
  SelectionReport report;
  report.strategy = "topk";
  report.requested = n;
  auto ranked = ranked_records(series, static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    report.rows.push_back({static_cast<std::int64_t>(i + 1),
                           ranked[i].frame_index, ranked[i].timestamp_s,
                           ranked[i].score, std::nullopt});
  }
  return report;
}

namespace {

constexpr const char* kMissing = "-";

const std::vector<std::string> kReportColumns = {
    "order", "frame_index", "timestamp_s", "score", "delta_at_selection"};

template <typename T, typename F>
std::string optional_cell(const std::optional<T>& v, F&& fmt) {
  return v ? fmt(*v) : std::string(kMissing);
}

}  // namespace

std::string format_selection_report(const SelectionReport& report) {
  using text_io::format_real;
  auto fmt_int = [](std::int64_t v) { return std::to_string(v); };
  auto fmt_bool = [](bool v) { return std::string(v ? "true" : "false"); };

  std::string out;
  out += "#schema_version\t1\n";
  out += "#kind\tselection\n";
  out += "#strategy\t" + text_io::escape(report.strategy) + "\n";
  if (report.config) {
    const auto& c = *report.config;
    out += "#alpha\t" + fmt_int(c.alpha) + "\n";
    out += "#max_frames\t" + fmt_int(c.max_frames) + "\n";
    out += "#delta0_s\t" + format_real(c.delta0_s) + "\n";
    out += "#decay_lambda\t" + format_real(c.decay_lambda) + "\n";
    out += "#delta_floor_s\t" + format_real(c.delta_floor_s) + "\n";
    out += std::string("#tie_break\t") + tie_break_name(c.tie_break) + "\n";
  }
  if (report.requested) out += "#requested\t" + fmt_int(*report.requested) + "\n";
  if (report.s_mean) out += "#s_mean\t" + format_real(*report.s_mean) + "\n";
  if (report.pool_size) {
    out += "#pool_size\t" + fmt_int(*report.pool_size) + "\n";
  }
  if (report.fallback_used) {
    out += "#fallback_used\t" + fmt_bool(*report.fallback_used) + "\n";
  }
  if (report.passes_run) {
    out += "#passes_run\t" + fmt_int(*report.passes_run) + "\n";
  }
  if (report.exhausted) {
    out += "#exhausted\t" + fmt_bool(*report.exhausted) + "\n";
  }
  out += "order\tframe_index\ttimestamp_s\tscore\tdelta_at_selection\n";
  for (const auto& row : report.rows) {
    out += fmt_int(row.order) + '\t' + optional_cell(row.frame_index, fmt_int) +
           '\t' + format_real(row.timestamp_s) + '\t' +
           optional_cell(row.score, format_real) + '\t' +
           optional_cell(row.delta_at_selection, format_real) + '\n';
  }
  return out;
}

SelectionReport parse_selection_report(std::string_view text,
                                       const std::string& source) {
  auto table = text_io::parse_table(text, source);
  static const std::set<std::string> allowed = {
      "schema_version", "kind",          "strategy",     "alpha",
      "max_frames",     "delta0_s",      "decay_lambda", "delta_floor_s",
      "tie_break",      "requested",     "s_mean",       "pool_size",
      "fallback_used",  "passes_run",    "exhausted"};
  for (const auto& f : table.header) {
    if (!allowed.contains(f.key)) {
      throw ParseError(source, f.line, f.key, "unknown header field");
    }
  }

  auto field = [&](const std::string& key) { return table.find(key); };
  auto require = [&](const std::string& key) -> const text_io::Table::Field& {
    const auto* f = field(key);
    if (f == nullptr) throw ParseError(source, 1, key, "missing header field");
    return *f;
  };
  auto as_int = [&](const text_io::Table::Field& f) {
    return text_io::parse_int(f.value, source, f.line, f.key);
  };
  auto as_real = [&](const text_io::Table::Field& f) {
    return text_io::parse_real(f.value, source, f.line, f.key);
  };
  auto as_bool = [&](const text_io::Table::Field& f) {
    if (f.value == "true") return true;
    if (f.value == "false") return false;
    throw ParseError(source, f.line, f.key, "expected true or false");
  };

  if (as_int(require("schema_version")) != 1) {
    throw ParseError(source, require("schema_version").line, "schema_version",
                     "unsupported schema version");
  }
  if (require("kind").value != "selection") {
    throw ParseError(source, require("kind").line, "kind",
                     "expected 'selection'");
  }

  SelectionReport report;
  report.strategy = require("strategy").value;
  if (field("alpha") != nullptr) {
    SamplingConfig c;
    c.alpha = as_int(require("alpha"));
    c.max_frames = as_int(require("max_frames"));
    c.delta0_s = as_real(require("delta0_s"));
    c.decay_lambda = as_real(require("decay_lambda"));
    c.delta_floor_s = as_real(require("delta_floor_s"));
    const auto& tb = require("tie_break");
    if (tb.value != tie_break_name(TieBreak::earlier_timestamp_first)) {
      throw ParseError(source, tb.line, "tie_break", "unknown tie-break policy");
    }
    report.config = c;
  }
  if (const auto* f = field("requested")) report.requested = as_int(*f);
  if (const auto* f = field("s_mean")) report.s_mean = as_real(*f);
  if (const auto* f = field("pool_size")) report.pool_size = as_int(*f);
  if (const auto* f = field("fallback_used")) report.fallback_used = as_bool(*f);
  if (const auto* f = field("passes_run")) report.passes_run = as_int(*f);
  if (const auto* f = field("exhausted")) report.exhausted = as_bool(*f);

  if (table.columns != kReportColumns) {
    throw ParseError(source, table.columns_line, "columns",
                     "unexpected column header row");
  }
  for (const auto& row : table.rows) {
    if (row.cells.size() != kReportColumns.size()) {
      throw ParseError(source, row.line, "row", "expected 5 fields");
    }
    ReportRow r;
    r.order = text_io::parse_int(row.cells[0], source, row.line, "order");
    if (row.cells[1] != kMissing) {
      r.frame_index =
          text_io::parse_int(row.cells[1], source, row.line, "frame_index");
    }
    r.timestamp_s =
        text_io::parse_real(row.cells[2], source, row.line, "timestamp_s");
    if (row.cells[3] != kMissing) {
      r.score = text_io::parse_real(row.cells[3], source, row.line, "score");
    }
    if (row.cells[4] != kMissing) {
      r.delta_at_selection = text_io::parse_real(row.cells[4], source,
                                                 row.line, "delta_at_selection");
    }
    report.rows.push_back(r);
  }
  return report;
}

void save_selection_report(const SelectionReport& report,
                           const std::filesystem::path& path) {
  text_io::write_file_atomic(path, format_selection_report(report));
}

SelectionReport load_selection_report(const std::filesystem::path& path) {
  return parse_selection_report(text_io::read_file(path), path.string());
}

}  // namespace keyframe
