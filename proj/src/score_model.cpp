#include "keyframe/score_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "keyframe/errors.hpp"
#include "keyframe/text_io.hpp"

namespace keyframe {

namespace {

constexpr int kSchemaVersion = 1;

const std::vector<std::string> kScoreColumns = {"frame_index", "timestamp_s",
                                                "score"};
const std::vector<std::string> kEmbeddingColumns = {"frame_index",
                                                    "timestamp_s", "dim",
                                                    "values"};

void check_record(const FrameRecord& r, std::size_t i) {
  auto where = "record " + std::to_string(i);
  if (r.frame_index < 0) {
    throw ValidationError(where + ": frame_index must be non-negative");
  }
  if (!std::isfinite(r.timestamp_s) || r.timestamp_s < 0.0) {
    throw ValidationError(where + ": timestamp_s must be finite and >= 0");
  }
  if (!std::isfinite(r.score) || r.score < -1.0 || r.score > 1.0) {
    throw ValidationError(where + ": score " + text_io::format_real(r.score) +
                          " outside [-1, 1]");
  }
}

void write_meta(std::string& out, const std::string& kind,
                const SeriesMeta& meta) {
  out += "#schema_version\t" + std::to_string(kSchemaVersion) + "\n";
  out += "#kind\t" + kind + "\n";
  out += "#video_id\t" + text_io::escape(meta.video_id) + "\n";
  out += "#query_id\t" + text_io::escape(meta.query_id) + "\n";
  out += "#extraction_fps\t" + text_io::format_real(meta.extraction_fps) +
         "\n";
  if (meta.caption_text) {
    out += "#caption_text\t" + text_io::escape(*meta.caption_text) + "\n";
  }
}

// Reads the shared metadata block and rejects any header key outside
// `allowed`.
SeriesMeta read_meta(const text_io::Table& table, const std::string& kind,
                     const std::set<std::string>& allowed,
                     const std::string& source) {
  for (const auto& f : table.header) {
    if (!allowed.contains(f.key)) {
      throw ParseError(source, f.line, f.key, "unknown header field");
    }
  }
  auto require = [&](const std::string& key) -> const text_io::Table::Field& {
    const auto* f = table.find(key);
    if (f == nullptr) throw ParseError(source, 1, key, "missing header field");
    return *f;
  };

  const auto& version = require("schema_version");
  if (text_io::parse_int(version.value, source, version.line,
                         "schema_version") != kSchemaVersion) {
    throw ParseError(source, version.line, "schema_version",
                     "unsupported schema version " + version.value);
  }
  const auto& kind_field = require("kind");
  if (kind_field.value != kind) {
    throw ParseError(source, kind_field.line, "kind",
                     "expected '" + kind + "', got '" + kind_field.value + "'");
  }

  SeriesMeta meta;
  meta.video_id = require("video_id").value;
  meta.query_id = require("query_id").value;
  const auto& fps = require("extraction_fps");
  meta.extraction_fps =
      text_io::parse_real(fps.value, source, fps.line, "extraction_fps");
  if (const auto* caption = table.find("caption_text")) {
    meta.caption_text = caption->value;
  }
  return meta;
}

void check_columns(const text_io::Table& table,
                   const std::vector<std::string>& expected,
                   const std::string& source) {
  if (table.columns != expected) {
    throw ParseError(source, table.columns_line, "columns",
                     "unexpected column header row");
  }
}

std::vector<double> parse_values(std::span<const std::string_view> cells,
                                 const std::string& source, std::size_t line,
                                 const std::string& field) {
  std::vector<double> values;
  values.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    values.push_back(text_io::parse_real(cells[i], source, line,
                                         field + "[" + std::to_string(i) + "]"));
  }
  return values;
}

}  // namespace

EmbeddingVector::EmbeddingVector(std::vector<double> values)
    : values_(std::move(values)) {
  if (values_.empty()) throw ValidationError("embedding has no values");
  for (double v : values_) {
    if (!std::isfinite(v)) throw ValidationError("embedding value not finite");
  }
}

void validate(const ScoreSeries& series) {
  if (!std::isfinite(series.extraction_fps) || series.extraction_fps <= 0.0) {
    throw ValidationError("extraction_fps must be positive");
  }
  for (std::size_t i = 0; i < series.records.size(); ++i) {
    check_record(series.records[i], i);
    if (i == 0) continue;
    const auto& prev = series.records[i - 1];
    const auto& cur = series.records[i];
    if (!(cur.timestamp_s > prev.timestamp_s)) {
      throw ValidationError("record " + std::to_string(i) +
                            ": timestamps must be strictly increasing");
    }
    if (cur.frame_index <= prev.frame_index) {
      throw ValidationError("record " + std::to_string(i) +
                            ": frame_index must be strictly increasing");
    }
  }
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("dimension mismatch: " + std::to_string(a.dim()) +
                         " vs " + std::to_string(b.dim()));
  }
  auto av = a.values();
  auto bv = b.values();
  double dot = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    dot += av[i] * bv[i];
    norm_a += av[i] * av[i];
    norm_b += bv[i] * bv[i];
  }
  if (norm_a == 0.0 || norm_b == 0.0) {
    throw DegenerateVectorError("zero-norm vector in cosine similarity");
  }
  double cos = dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
  return std::clamp(cos, -1.0, 1.0);
}

ScoreSeries build_score_series(std::span<const FrameEmbedding> frames,
                               const EmbeddingVector& caption_embedding,
                               const SeriesMeta& meta) {
  if (frames.empty()) throw EmptyInputError("no frames to score");

  ScoreSeries series;
  series.video_id = meta.video_id;
  series.query_id = meta.query_id;
  series.extraction_fps = meta.extraction_fps;
  series.caption_text = meta.caption_text;
  series.records.reserve(frames.size());
  for (const auto& frame : frames) {
    series.records.push_back(
        {frame.frame_index, frame.timestamp_s,
         cosine_similarity(frame.embedding, caption_embedding)});
  }
  validate(series);
  return series;
}

std::string format_score_series(const ScoreSeries& series) {
  std::string out;
  write_meta(out, "scores",
             {series.video_id, series.query_id, series.extraction_fps,
              series.caption_text});
  out += "frame_index\ttimestamp_s\tscore\n";
  for (const auto& r : series.records) {
    out += std::to_string(r.frame_index);
    out += '\t';
    out += text_io::format_real(r.timestamp_s);
    out += '\t';
    out += text_io::format_real(r.score);
    out += '\n';
  }
  return out;
}

ScoreSeries parse_score_series(std::string_view text,
                               const std::string& source) {
  auto table = text_io::parse_table(text, source);
  auto meta = read_meta(table, "scores",
                        {"schema_version", "kind", "video_id", "query_id",
                         "extraction_fps", "caption_text"},
                        source);
  check_columns(table, kScoreColumns, source);

  ScoreSeries series;
  series.video_id = std::move(meta.video_id);
  series.query_id = std::move(meta.query_id);
  series.extraction_fps = meta.extraction_fps;
  series.caption_text = std::move(meta.caption_text);
  for (const auto& row : table.rows) {
    if (row.cells.size() != kScoreColumns.size()) {
      throw ParseError(source, row.line, "row",
                       "expected 3 fields, got " +
                           std::to_string(row.cells.size()));
    }
    FrameRecord r;
    r.frame_index =
        text_io::parse_int(row.cells[0], source, row.line, "frame_index");
    r.timestamp_s =
        text_io::parse_real(row.cells[1], source, row.line, "timestamp_s");
    r.score = text_io::parse_real(row.cells[2], source, row.line, "score");
    series.records.push_back(r);
  }
  validate(series);
  return series;
}

void save_score_series(const ScoreSeries& series,
                       const std::filesystem::path& path) {
  validate(series);
  text_io::write_file_atomic(path, format_score_series(series));
}

ScoreSeries load_score_series(const std::filesystem::path& path) {
  return parse_score_series(text_io::read_file(path), path.string());
}

std::string format_embedding_set(const EmbeddingSet& set) {
  std::string out;
  write_meta(out, "embeddings", set.meta);
  if (set.caption_embedding) {
    out += "#caption_embedding";
    for (double v : set.caption_embedding->values()) {
      out += '\t';
      out += text_io::format_real(v);
    }
    out += '\n';
  }
  out += "frame_index\ttimestamp_s\tdim\tvalues\n";
  for (const auto& f : set.frames) {
    out += std::to_string(f.frame_index);
    out += '\t';
    out += text_io::format_real(f.timestamp_s);
    out += '\t';
    out += std::to_string(f.embedding.dim());
    for (double v : f.embedding.values()) {
      out += '\t';
      out += text_io::format_real(v);
    }
    out += '\n';
  }
  return out;
}

EmbeddingSet parse_embedding_set(std::string_view text,
                                 const std::string& source) {
  auto table = text_io::parse_table(text, source);
  EmbeddingSet set;
  set.meta = read_meta(table, "embeddings",
                       {"schema_version", "kind", "video_id", "query_id",
                        "extraction_fps", "caption_text", "caption_embedding"},
                       source);
  if (const auto* f = table.find("caption_embedding")) {
    auto cells = text_io::split_tabs(f->value);
    try {
      set.caption_embedding.emplace(
          parse_values(cells, source, f->line, "caption_embedding"));
    } catch (const ValidationError& e) {
      throw ParseError(source, f->line, "caption_embedding", e.what());
    }
  }
  check_columns(table, kEmbeddingColumns, source);

  for (const auto& row : table.rows) {
    if (row.cells.size() < 4) {
      throw ParseError(source, row.line, "row",
                       "expected frame_index, timestamp_s, dim and values");
    }
    auto frame_index =
        text_io::parse_int(row.cells[0], source, row.line, "frame_index");
    auto timestamp =
        text_io::parse_real(row.cells[1], source, row.line, "timestamp_s");
    auto dim = text_io::parse_int(row.cells[2], source, row.line, "dim");
    if (dim <= 0 || static_cast<std::size_t>(dim) != row.cells.size() - 3) {
      throw ParseError(source, row.line, "dim",
                       "declared dim " + std::to_string(dim) + " but " +
                           std::to_string(row.cells.size() - 3) +
                           " values present");
    }
    std::vector<std::string_view> cells(row.cells.begin() + 3,
                                        row.cells.end());
    auto values = parse_values(cells, source, row.line, "values");
    try {
      set.frames.push_back({frame_index, timestamp,
                            EmbeddingVector(std::move(values))});
    } catch (const ValidationError& e) {
      throw ParseError(source, row.line, "values", e.what());
    }
  }
  return set;
}

void save_embedding_set(const EmbeddingSet& set,
                        const std::filesystem::path& path) {
  text_io::write_file_atomic(path, format_embedding_set(set));
}

EmbeddingSet load_embedding_set(const std::filesystem::path& path) {
  return parse_embedding_set(text_io::read_file(path), path.string());
}

}  // namespace keyframe
