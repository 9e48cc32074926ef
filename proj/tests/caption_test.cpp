#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include "keyframe/caption.hpp"
#include "keyframe/errors.hpp"
#include "keyframe/text_io.hpp"
#include "sha256.hpp"

namespace keyframe {
namespace {

namespace fs = std::filesystem;

const fs::path kFixtures = KF_FIXTURE_DIR;
const fs::path kAssets = KF_ASSET_DIR;

constexpr const char* kTemplateSha256 =
    "002829a2b65b01fec117952a432a6db18466c7b4b3184c73ba325f3407c1c576";

std::vector<std::string> template_lines() {
  std::vector<std::string> lines;
  std::istringstream in{std::string(caption_prompt_template())};
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

TEST(Prompt, TemplateMatchesAssetAndChecksum) {
  auto asset = text_io::read_file(kAssets / "caption_prompt_v1.txt");
  EXPECT_EQ(std::string(caption_prompt_template()), asset);
  EXPECT_EQ(testing::sha256_hex(asset), kTemplateSha256);
  EXPECT_EQ(caption_prompt_version(), 1);
}

TEST(Prompt, RendersQuestion) {
  auto p = render_prompt({"What color is the car?", {}});
  EXPECT_NE(p.find("Here is the question: What color is the car?\n"), std::string::npos);
  EXPECT_EQ(p.find("{question}"), std::string::npos);
  EXPECT_EQ(p.find("Options:"), std::string::npos);
  EXPECT_EQ(p, render_prompt({"What color is the car?", {}}));
}

TEST(Prompt, RendersOptionsAfterQuestion) {
  auto p = render_prompt({"Which animal appears first?", {"a red fox", "a grey heron"}});
  auto q = p.find("Which animal appears first?");
  auto a = p.find("A) a red fox");
  auto b = p.find("B) a grey heron");
  ASSERT_NE(q, std::string::npos);
  ASSERT_NE(a, std::string::npos);
  ASSERT_NE(b, std::string::npos);
  EXPECT_LT(q, a);
  EXPECT_LT(a, b);
}

TEST(Prompt, KeepsEveryTemplateLineVerbatim) {
  auto p = render_prompt({"Where is the dog?", {"park", "beach"}});
  std::size_t numbered = 0;
  for (const auto& line : template_lines()) {
    if (line.find("{question}") != std::string::npos) continue;
    EXPECT_NE(p.find(line), std::string::npos) << line;
    if (line.size() > 2 && line[0] >= '1' && line[0] <= '5' && line[1] == '.') ++numbered;
  }
  EXPECT_EQ(numbered, 5u);
  EXPECT_NE(p.find("Core requirements:"), std::string::npos);
  EXPECT_NE(p.find("Output Key Image Caption:"), std::string::npos);
}

TEST(Prompt, RejectsEmptyQuestion) {
  EXPECT_THROW(render_prompt({"   ", {}}), ValidationError);
}

TEST(CountWords, SplitsOnWhitespace) {
  EXPECT_EQ(count_words(""), 0u);
  EXPECT_EQ(count_words("  one\ttwo\nthree  "), 3u);
  EXPECT_EQ(count_words("A car parked on a street"), 6u);
}

TEST(Enrich, MockPassthrough) {
  auto client = MockTextGenClient::from_file(kFixtures / "captions.tsv");
  auto c = enrich({"What color is the car?", {}}, client);
  EXPECT_EQ(c.text, "A car parked on a street");
  EXPECT_EQ(c.word_count, 6u);
  EXPECT_EQ(c.source_question, "What color is the car?");
  EXPECT_EQ(c.generator_id, "mock");
  EXPECT_FALSE(c.warning.has_value());

  auto again = enrich({"What color is the car?", {}}, client);
  EXPECT_EQ(again.text, c.text);
}

TEST(Enrich, EmptyCompletionFails) {
  auto client = MockTextGenClient::from_file(kFixtures / "captions.tsv");
  EXPECT_THROW(enrich({"What is the chef holding?", {}}, client), GenerationError);
  MockTextGenClient empty(std::map<std::string, std::string>{{"Q?", ""}});
  EXPECT_THROW(enrich({"Q?", {}}, empty), GenerationError);
}

TEST(Enrich, LongCaptionIsKeptWithWarning) {
  auto client = MockTextGenClient::from_file(kFixtures / "captions.tsv");
  auto c = enrich({"How long is the speech?", {}}, client);
  std::istringstream words(c.text);
  std::size_t independent = 0;
  for (std::string w; words >> w;) ++independent;
  EXPECT_EQ(independent, 35u);
  EXPECT_EQ(c.word_count, 35u);
  ASSERT_TRUE(c.warning.has_value());
  EXPECT_NE(c.warning->find("35"), std::string::npos);
  EXPECT_TRUE(c.text.ends_with("under yellow lights"));
}

TEST(Enrich, MissingFixtureNamesTheQuestion) {
  auto client = MockTextGenClient::from_file(kFixtures / "captions.tsv");
  try {
    enrich({"Is it raining?", {}}, client);
    FAIL() << "expected GenerationError";
  } catch (const GenerationError& e) {
    EXPECT_NE(std::string(e.what()).find("Is it raining?"), std::string::npos);
  }
}

TEST(Enrich, OptionsDoNotAffectMockLookup) {
  auto client = MockTextGenClient::from_file(kFixtures / "captions.tsv");
  auto c = enrich({"What color is the car?", {"red", "blue"}}, client);
  EXPECT_EQ(c.word_count, 6u);
}

class ChatServer : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      ++calls_;
      last_body_ = req.body;
      last_auth_ = req.get_header_value("Authorization");
      if (fail_first_ && calls_ == 1) {
        res.status = 503;
        res.set_content("busy", "text/plain");
        return;
      }
      if (always_fail_) {
        res.status = 500;
        res.set_content("boom", "text/plain");
        return;
      }
      nlohmann::json reply = {
          {"choices", {{{"message", {{"role", "assistant"}, {"content", " A red car. "}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void TearDown() override {
    server_.stop();
    thread_.join();
    unsetenv("KF_TEST_TOKEN");
  }

  HttpClientConfig config(int retries = 1) {
    HttpClientConfig cfg;
    cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    cfg.model = "test-model";
    cfg.token_env = "KF_TEST_TOKEN";
    cfg.timeout_s = 5;
    cfg.retries = retries;
    return cfg;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  std::string last_body_;
  std::string last_auth_;
  bool fail_first_ = false;
  bool always_fail_ = false;
};

TEST_F(ChatServer, SendsSingleUserMessageWithBearerToken) {
  setenv("KF_TEST_TOKEN", "secret", 1);
  HttpTextGenClient client(config());
  auto c = enrich({"What color is the car?", {}}, client);
  EXPECT_EQ(c.text, "A red car.");
  EXPECT_EQ(c.generator_id, "http:test-model");
  EXPECT_EQ(last_auth_, "Bearer secret");
  auto body = nlohmann::json::parse(last_body_);
  EXPECT_EQ(body["model"], "test-model");
  ASSERT_EQ(body["messages"].size(), 1u);
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], render_prompt({"What color is the car?", {}}));
  EXPECT_EQ(last_body_, client.request_body(render_prompt({"What color is the car?", {}})));
}

TEST_F(ChatServer, RetriesOnceAfterFailure) {
  setenv("KF_TEST_TOKEN", "secret", 1);
  fail_first_ = true;
  HttpTextGenClient client(config(1));
  EXPECT_EQ(client.complete("Here is the question: x"), " A red car. ");
  EXPECT_EQ(calls_, 2);
}

TEST_F(ChatServer, ReportsHttpFailureDiagnostic) {
  setenv("KF_TEST_TOKEN", "secret", 1);
  always_fail_ = true;
  HttpTextGenClient client(config(0));
  try {
    client.complete("prompt");
    FAIL() << "expected GenerationError";
  } catch (const GenerationError& e) {
    EXPECT_NE(std::string(e.what()).find("HTTP 500"), std::string::npos);
  }
  EXPECT_EQ(calls_, 1);
}

TEST_F(ChatServer, MissingTokenFailsBeforeSending) {
  unsetenv("KF_TEST_TOKEN");
  HttpTextGenClient client(config());
  EXPECT_THROW(client.complete("prompt"), GenerationError);
  EXPECT_EQ(calls_, 0);
}

TEST(HttpClient, RejectsBadConfig) {
  EXPECT_THROW(HttpTextGenClient({"localhost:80/x", "m"}), ValidationError);
  EXPECT_THROW(HttpTextGenClient({"http://localhost/x", ""}), ValidationError);
  HttpClientConfig cfg{"http://localhost/x", "m"};
  cfg.retries = 2;
  EXPECT_THROW(HttpTextGenClient{cfg}, ValidationError);
}

TEST(HttpClient, UnreachableEndpointIsGenerationError) {
  HttpClientConfig cfg{"http://127.0.0.1:1/v1/chat/completions", "m"};
  cfg.token_env = "";
  cfg.timeout_s = 1;
  cfg.retries = 0;
  HttpTextGenClient client(cfg);
  EXPECT_THROW(client.complete("prompt"), GenerationError);
}

}  // namespace
}  // namespace keyframe
