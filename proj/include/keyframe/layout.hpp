#pragma once

// Interleaved vision/timestamp token layout and its 3-D rotary position
// indices.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace keyframe {

enum class TimestampStyle {
  /// "MM:SS" below one hour, "H:MM:SS" from one hour on.
  mm_ss,
  /// "83s".
  seconds_suffix,
  /// Always "H:MM:SS".
  hh_mm_ss,
};

std::string_view style_name(TimestampStyle style);
/// Accepts "mm_ss", "seconds" / "seconds_suffix" and "hh_mm_ss".
TimestampStyle parse_style(std::string_view name);

/// Renders floor(seconds). Throws InvalidTimeError for negative or
/// non-finite input.
std::string format_timestamp(double seconds, TimestampStyle style);

/// Inverse of format_timestamp for any style: returns whole seconds.
/// Throws InvalidTimeError on malformed text.
std::int64_t parse_timestamp(std::string_view text);

struct TimestampToken {
  double seconds = 0.0;
  TimestampStyle style = TimestampStyle::mm_ss;
  std::string text;

  friend bool operator==(const TimestampToken&,
                         const TimestampToken&) = default;
};

enum class ElementKind { vision_block, time_text, prompt_text };

std::string_view kind_name(ElementKind kind);

struct LayoutElement {
  ElementKind kind = ElementKind::prompt_text;
  std::int64_t token_count = 1;
  std::optional<std::int64_t> frame_group;  // 0-based
  std::optional<TimestampToken> timestamp;

  friend bool operator==(const LayoutElement&, const LayoutElement&) = default;
};

struct PositionTriple {
  std::int64_t t = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;

  friend bool operator==(const PositionTriple&,
                         const PositionTriple&) = default;
};

struct TokenLayout {
  std::vector<LayoutElement> elements;
  std::vector<PositionTriple> positions;  // one per token
  std::int64_t grid_h = 1;
  std::int64_t grid_w = 1;
  std::int64_t merge_factor = 2;
};

struct LayoutFrame {
  std::int64_t frame_index = 0;
  double timestamp_s = 0.0;
};

/// Number of text tokens a rendered timestamp occupies.
using TokenCounter = std::function<std::int64_t(std::string_view)>;

struct LayoutOptions {
  std::int64_t grid_h = 1;
  std::int64_t grid_w = 1;
  std::int64_t merge_factor = 2;
  TimestampStyle style = TimestampStyle::mm_ss;
  std::int64_t prompt_token_count = 0;
  /// Defaults to one token per timestamp.
  TokenCounter timestamp_tokens;
};

/// Groups frames `merge_factor` at a time and emits
/// [vision, time, vision, time, ..., prompt]. Each time element carries the
/// timestamp of the first frame in its group.
TokenLayout build_layout(const std::vector<LayoutFrame>& frames,
                         const LayoutOptions& options);

/// Sequential temporal indexing: a vision block occupies one temporal step
/// with the first block's spatial grid; every text token takes the next step
/// on all three axes.
std::vector<PositionTriple> assign_positions(const TokenLayout& layout);

/// Absolute-time comparator: block k sits at t = round(timestamp_k * scale)
/// and no time tokens are inserted.
std::vector<PositionTriple> qwen_absolute_positions(
    const std::vector<double>& timestamps, std::int64_t grid_h,
    std::int64_t grid_w, double tokens_per_second_scale);

/// Per-token dump: sequence_index, kind, frame_group, text or patch
/// coordinate, t, h, w.
std::string format_layout_dump(const TokenLayout& layout);

std::string format_positions_dump(const std::vector<PositionTriple>& positions,
                                  std::int64_t tokens_per_block);

}  // namespace keyframe
