#pragma once

// Question-to-caption rewriting through a pluggable text-generation client.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace keyframe {

struct Question {
  std::string text;
  std::vector<std::string> options;
};

/// Captions longer than this many words are kept but flagged.
inline constexpr std::size_t kCaptionWordLimit = 30;

struct Caption {
  std::string text;
  std::size_t word_count = 0;
  std::string source_question;
  std::string generator_id;
  std::optional<std::string> warning;
};

class TextGenClient {
 public:
  virtual ~TextGenClient() = default;
  virtual std::string generator_id() const = 0;
  /// Returns the completion for a single-turn prompt. Throws
  /// GenerationError on failure.
  virtual std::string complete(const std::string& prompt) = 0;
};

/// Replays completions from a fixture table keyed by question text. The
/// question is recovered from the rendered prompt, so the lookup is a pure
/// function of the prompt.
class MockTextGenClient : public TextGenClient {
 public:
  explicit MockTextGenClient(std::map<std::string, std::string> table);
  static MockTextGenClient from_file(const std::filesystem::path& path);

  std::string generator_id() const override { return "mock"; }
  std::string complete(const std::string& prompt) override;

 private:
  std::map<std::string, std::string> table_;
};

struct HttpClientConfig {
  /// Full URL of a chat-completions endpoint, e.g.
  /// "http://localhost:8000/v1/chat/completions".
  std::string endpoint_url;
  std::string model;
  /// Environment variable holding the bearer token. Empty disables auth.
  std::string token_env = "CAPTION_API_TOKEN";
  double timeout_s = 60.0;
  /// Extra attempts after a failed request (0 or 1).
  int retries = 1;
};

/// Minimal chat-completion client: one user message in, the first choice's
/// message content out.
class HttpTextGenClient : public TextGenClient {
 public:
  explicit HttpTextGenClient(HttpClientConfig config);

  std::string generator_id() const override;
  std::string complete(const std::string& prompt) override;

  /// Request body sent for `prompt`.
  std::string request_body(const std::string& prompt) const;

 private:
  HttpClientConfig config_;
  std::string base_;  // scheme://host[:port]
  std::string path_;
};

/// The versioned prompt template with its "{question}" placeholder.
std::string_view caption_prompt_template();
int caption_prompt_version();

std::string render_prompt(const Question& q);

std::size_t count_words(std::string_view text);

/// Asks `client` for a caption. The completion is trimmed; an empty result
/// raises GenerationError.
Caption enrich(const Question& q, TextGenClient& client);

}  // namespace keyframe
