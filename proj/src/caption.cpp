#include "keyframe/caption.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "keyframe/errors.hpp"
#include "keyframe/text_io.hpp"
#include "prompt_template.hpp"

namespace keyframe {

namespace {

constexpr std::string_view kPlaceholder = "{question}";
constexpr std::string_view kQuestionMarker = "Here is the question: ";

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

void check_question(const Question& q) {
  if (trim(q.text).empty()) throw ValidationError("question text is empty");
}

}  // namespace

std::string_view caption_prompt_template() {
  return detail::kCaptionPromptTemplate;
}

int caption_prompt_version() { return detail::kCaptionPromptVersion; }

std::string render_prompt(const Question& q) {
  check_question(q);
  std::string question = q.text;
  if (!q.options.empty()) {
    question += "\nOptions:";
    for (std::size_t i = 0; i < q.options.size(); ++i) {
      question += ' ';
      if (i < 26) {
        question += static_cast<char>('A' + i);
      } else {
        question += std::to_string(i + 1);
      }
      question += ") ";
      question += q.options[i];
    }
  }

  std::string prompt(caption_prompt_template());
  auto pos = prompt.find(kPlaceholder);
  prompt.replace(pos, kPlaceholder.size(), question);
  return prompt;
}

std::size_t count_words(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' ||
                 c == '\f' || c == '\v';
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

Caption enrich(const Question& q, TextGenClient& client) {
  auto prompt = render_prompt(q);
  std::string completion = client.complete(prompt);
  auto text = trim(completion);
  if (text.empty()) {
    throw GenerationError(client.generator_id() +
                          " returned an empty completion for question: " +
                          q.text);
  }

  Caption caption;
  caption.text = std::string(text);
  caption.word_count = count_words(caption.text);
  caption.source_question = q.text;
  caption.generator_id = client.generator_id();
  if (caption.word_count > kCaptionWordLimit) {
    caption.warning = "caption has " + std::to_string(caption.word_count) +
                      " words, above the " +
                      std::to_string(kCaptionWordLimit) + "-word target";
  }
  return caption;
}

// ---------------------------------------------------------------------------

MockTextGenClient::MockTextGenClient(std::map<std::string, std::string> table)
    : table_(std::move(table)) {}

MockTextGenClient MockTextGenClient::from_file(
    const std::filesystem::path& path) {
  const auto source = path.string();
  auto table = text_io::parse_table(text_io::read_file(path), source);
  for (const auto& f : table.header) {
    if (f.key == "schema_version") {
      if (f.value != "1") {
        throw ParseError(source, f.line, f.key, "unsupported schema version");
      }
    } else if (f.key == "kind") {
      if (f.value != "caption_fixtures") {
        throw ParseError(source, f.line, f.key, "expected 'caption_fixtures'");
      }
    } else {
      throw ParseError(source, f.line, f.key, "unknown header field");
    }
  }
  if (table.columns != std::vector<std::string>{"question", "completion"}) {
    throw ParseError(source, table.columns_line, "columns",
                     "expected question and completion columns");
  }
  std::map<std::string, std::string> entries;
  for (const auto& row : table.rows) {
    if (row.cells.size() != 2) {
      throw ParseError(source, row.line, "row", "expected 2 fields");
    }
    entries[text_io::unescape(row.cells[0])] = text_io::unescape(row.cells[1]);
  }
  return MockTextGenClient(std::move(entries));
}

std::string MockTextGenClient::complete(const std::string& prompt) {
  auto pos = prompt.find(kQuestionMarker);
  if (pos == std::string::npos) {
    throw GenerationError("mock client: prompt has no question line");
  }
  pos += kQuestionMarker.size();
  auto end = prompt.find('\n', pos);
  std::string question = prompt.substr(pos, end == std::string::npos
                                                ? std::string::npos
                                                : end - pos);
  auto it = table_.find(question);
  if (it == table_.end()) {
    throw GenerationError("mock client: no fixture entry for question: " +
                          question);
  }
  return it->second;
}

// ---------------------------------------------------------------------------

HttpTextGenClient::HttpTextGenClient(HttpClientConfig config)
    : config_(std::move(config)) {
  auto scheme_end = config_.endpoint_url.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("endpoint URL needs a scheme: " +
                          config_.endpoint_url);
  }
  auto path_start = config_.endpoint_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    base_ = config_.endpoint_url;
    path_ = "/";
  } else {
    base_ = config_.endpoint_url.substr(0, path_start);
    path_ = config_.endpoint_url.substr(path_start);
  }
  if (config_.model.empty()) throw ValidationError("model name is empty");
  if (config_.retries < 0 || config_.retries > 1) {
    throw ValidationError("retries must be 0 or 1");
  }
  if (!(config_.timeout_s > 0.0)) {
    throw ValidationError("timeout must be positive");
  }
}

std::string HttpTextGenClient::generator_id() const {
  return "http:" + config_.model;
}

std::string HttpTextGenClient::request_body(const std::string& prompt) const {
  nlohmann::json body = {
      {"model", config_.model},
      {"messages", nlohmann::json::array(
                       {{{"role", "user"}, {"content", prompt}}})},
  };
  return body.dump();
}

std::string HttpTextGenClient::complete(const std::string& prompt) {
  httplib::Headers headers;
  if (!config_.token_env.empty()) {
    const char* token = std::getenv(config_.token_env.c_str());
    if (token == nullptr || *token == '\0') {
      throw GenerationError("auth token variable " + config_.token_env +
                            " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  httplib::Client client(base_);
  auto timeout = std::chrono::duration<double>(config_.timeout_s);
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(timeout);
  client.set_connection_timeout(ms);
  client.set_read_timeout(ms);
  client.set_write_timeout(ms);

  const auto body = request_body(prompt);
  std::string diagnostic;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      diagnostic = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      diagnostic = "HTTP " + std::to_string(res->status) + ": " +
                   res->body.substr(0, 200);
      continue;
    }
    try {
      auto json = nlohmann::json::parse(res->body);
      return json.at("choices").at(0).at("message").at("content")
          .get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw GenerationError(generator_id() +
                            ": malformed response: " + e.what());
    }
  }
  throw GenerationError(generator_id() + ": " + diagnostic);
}

}  // namespace keyframe
