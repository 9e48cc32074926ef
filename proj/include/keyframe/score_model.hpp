#pragma once

// Frame-level similarity scores and the embeddings they are derived from.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace keyframe {

/// A dense embedding. Construction rejects empty or non-finite input.
class EmbeddingVector {
 public:
  explicit EmbeddingVector(std::vector<double> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const EmbeddingVector&,
                         const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
};

struct FrameRecord {
  std::int64_t frame_index = 0;
  double timestamp_s = 0.0;
  double score = 0.0;

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

struct ScoreSeries {
  std::string video_id;
  std::string query_id;
  double extraction_fps = 1.0;
  std::vector<FrameRecord> records;
  std::optional<std::string> caption_text;

  friend bool operator==(const ScoreSeries&, const ScoreSeries&) = default;
};

/// Throws ValidationError unless the series satisfies its invariants:
/// positive fps, finite timestamps >= 0, scores in [-1, 1], and strictly
/// increasing timestamps and frame indices. An empty series is valid here;
/// samplers reject it separately.
void validate(const ScoreSeries& series);

/// <a,b> / (|a| |b|), accumulated left to right and clamped to [-1, 1].
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

struct FrameEmbedding {
  std::int64_t frame_index = 0;
  double timestamp_s = 0.0;
  EmbeddingVector embedding;
};

struct SeriesMeta {
  std::string video_id;
  std::string query_id;
  double extraction_fps = 1.0;
  std::optional<std::string> caption_text;
};

ScoreSeries build_score_series(std::span<const FrameEmbedding> frames,
                               const EmbeddingVector& caption_embedding,
                               const SeriesMeta& meta);

// Score file: schema_version 1, columns frame_index/timestamp_s/score.
std::string format_score_series(const ScoreSeries& series);
ScoreSeries parse_score_series(std::string_view text,
                               const std::string& source = "<memory>");
void save_score_series(const ScoreSeries& series,
                       const std::filesystem::path& path);
ScoreSeries load_score_series(const std::filesystem::path& path);

/// Contents of an embeddings file: per-frame vectors plus the optional
/// caption embedding they are scored against.
struct EmbeddingSet {
  SeriesMeta meta;
  std::optional<EmbeddingVector> caption_embedding;
  std::vector<FrameEmbedding> frames;
};

std::string format_embedding_set(const EmbeddingSet& set);
EmbeddingSet parse_embedding_set(std::string_view text,
                                 const std::string& source = "<memory>");
void save_embedding_set(const EmbeddingSet& set,
                        const std::filesystem::path& path);
EmbeddingSet load_embedding_set(const std::filesystem::path& path);

}  // namespace keyframe
