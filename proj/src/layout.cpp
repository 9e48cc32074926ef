#include "keyframe/layout.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "keyframe/errors.hpp"
#include "keyframe/text_io.hpp"

namespace keyframe {

namespace {

constexpr std::int64_t kHour = 3600;

std::string clock_hms(std::int64_t total) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%lld:%02lld:%02lld",
                static_cast<long long>(total / kHour),
                static_cast<long long>((total % kHour) / 60),
                static_cast<long long>(total % 60));
  return buf;
}

std::string clock_ms(std::int64_t total) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%02lld:%02lld",
                static_cast<long long>(total / 60),
                static_cast<long long>(total % 60));
  return buf;
}

std::int64_t parse_digits(std::string_view text, std::string_view whole) {
  std::int64_t value = 0;
  auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() ||
      text.front() == '-' || text.front() == '+') {
    throw InvalidTimeError("malformed timestamp '" + std::string(whole) + "'");
  }
  return value;
}

void check_grid(std::int64_t grid_h, std::int64_t grid_w) {
  if (grid_h <= 0 || grid_w <= 0) {
    throw ValidationError("grid dimensions must be positive");
  }
}

}  // namespace

std::string_view style_name(TimestampStyle style) {
  switch (style) {
    case TimestampStyle::mm_ss: return "mm_ss";
    case TimestampStyle::seconds_suffix: return "seconds";
    case TimestampStyle::hh_mm_ss: return "hh_mm_ss";
  }
  return "?";
}

TimestampStyle parse_style(std::string_view name) {
  if (name == "mm_ss") return TimestampStyle::mm_ss;
  if (name == "seconds" || name == "seconds_suffix") {
    return TimestampStyle::seconds_suffix;
  }
  if (name == "hh_mm_ss") return TimestampStyle::hh_mm_ss;
  throw ValidationError("unknown timestamp style '" + std::string(name) + "'");
}

std::string format_timestamp(double seconds, TimestampStyle style) {
  if (!std::isfinite(seconds) || seconds < 0.0) {
    throw InvalidTimeError("timestamp must be finite and non-negative");
  }
  auto total = static_cast<std::int64_t>(std::floor(seconds));
  switch (style) {
    case TimestampStyle::mm_ss:
      return total < kHour ? clock_ms(total) : clock_hms(total);
    case TimestampStyle::seconds_suffix:
      return std::to_string(total) + "s";
    case TimestampStyle::hh_mm_ss:
      return clock_hms(total);
  }
  throw InvalidTimeError("unknown timestamp style");
}

std::int64_t parse_timestamp(std::string_view text) {
  if (text.size() > 1 && text.back() == 's') {
    return parse_digits(text.substr(0, text.size() - 1), text);
  }
  auto first = text.find(':');
  if (first == std::string_view::npos) {
    throw InvalidTimeError("malformed timestamp '" + std::string(text) + "'");
  }
  auto second = text.find(':', first + 1);
  auto two_digit = [&](std::string_view part) {
    if (part.size() != 2) {
      throw InvalidTimeError("malformed timestamp '" + std::string(text) + "'");
    }
    auto v = parse_digits(part, text);
    if (v >= 60) {
      throw InvalidTimeError("field out of range in '" + std::string(text) +
                             "'");
    }
    return v;
  };
  if (second == std::string_view::npos) {
    auto minutes_part = text.substr(0, first);
    if (minutes_part.size() < 2) {
      throw InvalidTimeError("malformed timestamp '" + std::string(text) + "'");
    }
    return parse_digits(minutes_part, text) * 60 +
           two_digit(text.substr(first + 1));
  }
  auto hours = parse_digits(text.substr(0, first), text);
  auto minutes = two_digit(text.substr(first + 1, second - first - 1));
  auto secs = two_digit(text.substr(second + 1));
  return hours * kHour + minutes * 60 + secs;
}

std::string_view kind_name(ElementKind kind) {
  switch (kind) {
    case ElementKind::vision_block: return "vision_block";
    case ElementKind::time_text: return "time_text";
    case ElementKind::prompt_text: return "prompt_text";
  }
  return "?";
}

TokenLayout build_layout(const std::vector<LayoutFrame>& frames,
                         const LayoutOptions& options) {
  if (frames.empty()) throw EmptyInputError("layout needs at least one frame");
  check_grid(options.grid_h, options.grid_w);
  if (options.merge_factor <= 0) {
    throw ValidationError("merge factor must be positive");
  }
  if (options.prompt_token_count < 0) {
    throw ValidationError("prompt token count must be non-negative");
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (!std::isfinite(frames[i].timestamp_s) || frames[i].timestamp_s < 0.0) {
      throw ValidationError("frame " + std::to_string(i) +
                            " has an invalid timestamp");
    }
    if (i > 0 && !(frames[i].timestamp_s > frames[i - 1].timestamp_s)) {
      throw ValidationError("frames must be sorted by strictly increasing "
                            "timestamp");
    }
  }

  TokenLayout layout;
  layout.grid_h = options.grid_h;
  layout.grid_w = options.grid_w;
  layout.merge_factor = options.merge_factor;

  const auto g = static_cast<std::size_t>(options.merge_factor);
  std::int64_t group = 0;
  for (std::size_t first = 0; first < frames.size(); first += g, ++group) {
    layout.elements.push_back({ElementKind::vision_block,
                               options.grid_h * options.grid_w, group,
                               std::nullopt});
    TimestampToken stamp{frames[first].timestamp_s, options.style,
                         format_timestamp(frames[first].timestamp_s,
                                          options.style)};
    std::int64_t count =
        options.timestamp_tokens ? options.timestamp_tokens(stamp.text) : 1;
    if (count <= 0) {
      throw ValidationError("timestamp token count must be positive");
    }
    layout.elements.push_back(
        {ElementKind::time_text, count, group, std::move(stamp)});
  }
  if (options.prompt_token_count > 0) {
    layout.elements.push_back({ElementKind::prompt_text,
                               options.prompt_token_count, std::nullopt,
                               std::nullopt});
  }
  layout.positions = assign_positions(layout);
  return layout;
}

std::vector<PositionTriple> assign_positions(const TokenLayout& layout) {
  check_grid(layout.grid_h, layout.grid_w);
  std::vector<PositionTriple> positions;
  std::int64_t counter = 0;
  for (const auto& element : layout.elements) {
    if (element.kind == ElementKind::vision_block) {
      if (element.token_count != layout.grid_h * layout.grid_w) {
        throw ValidationError("vision block token count does not match grid");
      }
      for (std::int64_t h = 0; h < layout.grid_h; ++h) {
        for (std::int64_t w = 0; w < layout.grid_w; ++w) {
          positions.push_back({counter, h, w});
        }
      }
      ++counter;
      continue;
    }
    for (std::int64_t k = 0; k < element.token_count; ++k) {
      positions.push_back({counter, counter, counter});
      ++counter;
    }
  }
  return positions;
}

std::vector<PositionTriple> qwen_absolute_positions(
    const std::vector<double>& timestamps, std::int64_t grid_h,
    std::int64_t grid_w, double tokens_per_second_scale) {
  check_grid(grid_h, grid_w);
  if (!std::isfinite(tokens_per_second_scale) ||
      tokens_per_second_scale <= 0.0) {
    throw ValidationError("tokens-per-second scale must be positive");
  }
  std::vector<PositionTriple> positions;
  positions.reserve(timestamps.size() *
                    static_cast<std::size_t>(grid_h * grid_w));
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    if (i > 0 && timestamps[i] < timestamps[i - 1]) {
      throw ValidationError("frames must be sorted by timestamp");
    }
    auto t = static_cast<std::int64_t>(
        std::llround(timestamps[i] * tokens_per_second_scale));
    for (std::int64_t h = 0; h < grid_h; ++h) {
      for (std::int64_t w = 0; w < grid_w; ++w) {
        positions.push_back({t, h, w});
      }
    }
  }
  return positions;
}

std::string format_layout_dump(const TokenLayout& layout) {
  std::int64_t max_t = 0;
  for (const auto& p : layout.positions) max_t = std::max(max_t, p.t);

  std::string out;
  out += "#schema_version\t1\n";
  out += "#kind\tlayout\n";
  out += "#grid_h\t" + std::to_string(layout.grid_h) + "\n";
  out += "#grid_w\t" + std::to_string(layout.grid_w) + "\n";
  out += "#merge_factor\t" + std::to_string(layout.merge_factor) + "\n";
  out += "#tokens\t" + std::to_string(layout.positions.size()) + "\n";
  out += "#max_t\t" + std::to_string(max_t) + "\n";
  out += "sequence_index\tkind\tframe_group\tcontent\tt\th\tw\n";

  std::size_t seq = 0;
  for (const auto& element : layout.elements) {
    std::string group =
        element.frame_group ? std::to_string(*element.frame_group) : "-";
    for (std::int64_t k = 0; k < element.token_count; ++k, ++seq) {
      const auto& p = layout.positions.at(seq);
      std::string content;
      switch (element.kind) {
        case ElementKind::vision_block:
          content = std::to_string(k / layout.grid_w) + "," +
                    std::to_string(k % layout.grid_w);
          break;
        case ElementKind::time_text:
          content = text_io::escape(element.timestamp->text);
          if (k > 0) content += "+" + std::to_string(k);
          break;
        case ElementKind::prompt_text:
          content = "prompt[" + std::to_string(k) + "]";
          break;
      }
      out += std::to_string(seq) + '\t' + std::string(kind_name(element.kind)) +
             '\t' + group + '\t' + content + '\t' + std::to_string(p.t) + '\t' +
             std::to_string(p.h) + '\t' + std::to_string(p.w) + '\n';
    }
  }
  return out;
}

std::string format_positions_dump(const std::vector<PositionTriple>& positions,
                                  std::int64_t tokens_per_block) {
  if (tokens_per_block <= 0) {
    throw ValidationError("tokens per block must be positive");
  }
  std::int64_t max_t = 0;
  for (const auto& p : positions) max_t = std::max(max_t, p.t);

  std::string out;
  out += "#schema_version\t1\n";
  out += "#kind\tabsolute_positions\n";
  out += "#tokens\t" + std::to_string(positions.size()) + "\n";
  out += "#max_t\t" + std::to_string(max_t) + "\n";
  out += "sequence_index\tblock\tt\th\tw\n";
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto& p = positions[i];
    out += std::to_string(i) + '\t' +
           std::to_string(static_cast<std::int64_t>(i) / tokens_per_block) +
           '\t' + std::to_string(p.t) + '\t' + std::to_string(p.h) + '\t' +
           std::to_string(p.w) + '\n';
  }
  return out;
}

}  // namespace keyframe
