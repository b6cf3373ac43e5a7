#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <deque>
#include <mutex>
#include <set>
#include <thread>

#include "rsica/dataset.hpp"
#include "rsica/instructgen.hpp"
#include "rsica/llmclient.hpp"
#include "temp_dir.hpp"

namespace {

using namespace rsica;
using rsica::testing::TempDir;

std::string ok_body(const std::string& content) {
  return Json{{"choices", Json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}})}}
      .dump();
}

// Local chat endpoint replying with a scripted sequence of (status, body).
class ScriptedServer {
 public:
  explicit ScriptedServer(std::deque<std::pair<int, std::string>> script)
      : script_(std::move(script)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      ++hits_;
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = req.body;
      auto [status, body] = script_.empty() ? std::pair{200, ok_body("done")} : script_.front();
      if (!script_.empty()) script_.pop_front();
      res.status = status;
      res.set_content(body, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~ScriptedServer() {
    server_.stop();
    thread_.join();
  }

  RemoteBackend backend(int retries) const {
    RemoteBackend b;
    b.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    b.api_key = "test-key";
    b.max_retries = retries;
    b.initial_backoff = std::chrono::milliseconds(1);
    b.timeout = std::chrono::seconds(5);
    return b;
  }
  int hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
  }
  std::string last_auth() const {
    std::lock_guard lock(mutex_);
    return last_auth_;
  }
  std::string last_body() const {
    std::lock_guard lock(mutex_);
    return last_body_;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mutex_;
  std::deque<std::pair<int, std::string>> script_;
  int hits_ = 0;
  std::string last_auth_;
  std::string last_body_;
};

ChatRequest simple_request(std::string text = "hello") {
  ChatRequest r;
  r.system = "sys";
  r.messages = {{"user", std::move(text)}};
  r.model_name = "m";
  return r;
}

TEST(WireFormat, SystemFirstThenMessages) {
  ChatRequest r = simple_request();
  r.messages.push_back({"assistant", "a"});
  r.temperature = 0.5;
  r.max_tokens = 7;
  const Json j = to_wire_json(r);
  EXPECT_EQ(j.dump(),
            R"({"model":"m","messages":[{"role":"system","content":"sys"},)"
            R"({"role":"user","content":"hello"},{"role":"assistant","content":"a"}],)"
            R"("temperature":0.5,"max_tokens":7})");
}

TEST(WireFormat, Validation) {
  ChatRequest r;
  EXPECT_THROW(validate(r), InvalidArgument);
  r = simple_request();
  r.temperature = -0.1;
  EXPECT_THROW(validate(r), InvalidArgument);
  EXPECT_THROW(chat_complete(r, MockBackend{}), InvalidArgument);
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(QaParser, ExtractsBlocksInOrder) {
  const std::string text =
      "Here you go.\nQuestion: What changed?\nAnswer: A road was built.\n\n"
      "**Question:** How many buildings appeared?\n**Answer:** 3 buildings.\n"
      "Question: dangling question without reply\n"
      "Question: Where is the road?\nAnswer: On the left.";
  const auto pairs = parse_qa_pairs(text);
  ASSERT_EQ(pairs.size(), 3u);
  EXPECT_EQ(pairs[0].question, "What changed?");
  EXPECT_EQ(pairs[0].answer, "A road was built.");
  EXPECT_EQ(pairs[0].kind, QaKind::General);
  EXPECT_EQ(pairs[1].question, "How many buildings appeared?");
  EXPECT_EQ(pairs[1].answer, "3 buildings.");
  EXPECT_EQ(pairs[1].kind, QaKind::FineGrained);
  EXPECT_EQ(pairs[2].answer, "On the left.");
  for (const auto& p : pairs) {
    EXPECT_NE(text.find(p.question), std::string::npos);
    EXPECT_NE(text.find(p.answer), std::string::npos);
  }
  EXPECT_TRUE(parse_qa_pairs("no structure at all").empty());
  EXPECT_TRUE(parse_qa_pairs("").empty());
}

TEST(QaParser, Classification) {
  EXPECT_EQ(classify_question("What is the number of new roads?"), QaKind::FineGrained);
  EXPECT_EQ(classify_question("Where is the location of the houses?"), QaKind::FineGrained);
  EXPECT_EQ(classify_question("Are there 2 roads?"), QaKind::FineGrained);
  EXPECT_EQ(classify_question("HOW MANY houses?"), QaKind::FineGrained);
  EXPECT_EQ(classify_question("What happened to the field?"), QaKind::General);
}

TEST(MockBackend, DeterministicAndSeedSensitive) {
  const std::vector<std::string> captions = {"a road appears", "b", "c", "d", "e"};
  const auto bundle =
      make_openended_prompt(captions, CategoryCounts({{"road", 1}, {"building", 10}}), {});
  const ChatRequest request = to_chat_request(bundle, LlmSettings{});
  const std::string a = chat_complete(request, MockBackend{5});
  EXPECT_EQ(a, chat_complete(request, MockBackend{5}));
  EXPECT_FALSE(parse_qa_pairs(a).empty());

  std::set<std::string> distinct;
  for (std::uint64_t seed = 0; seed < 16; ++seed) {
    distinct.insert(chat_complete(request, MockBackend{seed}));
  }
  EXPECT_GT(distinct.size(), 1u);
}

TEST(ChatRequestBuilder, SeedsBecomeTurns) {
  const std::vector<std::string> captions(5, "c");
  const auto bundle = make_openended_prompt(captions, CategoryCounts({{"road", 0}}), {});
  LlmSettings settings;
  settings.model = "x";
  settings.max_tokens = 9;
  const ChatRequest r = to_chat_request(bundle, settings);
  ASSERT_EQ(r.messages.size(), bundle.seeds.size() * 2 + 1);
  EXPECT_EQ(r.messages.front().role, "user");
  EXPECT_EQ(r.messages[1].role, "assistant");
  EXPECT_EQ(r.messages.back().content, bundle.payload);
  EXPECT_EQ(r.system, bundle.system);
  EXPECT_EQ(r.model_name, "x");
  EXPECT_EQ(r.max_tokens, 9);
}

TEST(ResponseCacheTest, KeysAndStorage) {
  TempDir dir;
  ResponseCache cache(dir / "c");
  const auto k1 = ResponseCache::key_for("mock:1", simple_request("a"));
  EXPECT_EQ(k1.size(), 64u);
  EXPECT_EQ(k1, ResponseCache::key_for("mock:1", simple_request("a")));
  EXPECT_NE(k1, ResponseCache::key_for("mock:2", simple_request("a")));
  EXPECT_NE(k1, ResponseCache::key_for("mock:1", simple_request("b")));
  EXPECT_FALSE(cache.get(k1).has_value());
  cache.put(k1, "value\nwith lines");
  EXPECT_EQ(cache.get(k1).value(), "value\nwith lines");
}

TEST(BackendIdentity, OmitsCredentials) {
  RemoteBackend remote;
  remote.endpoint = "https://example.invalid/v1";
  remote.api_key = "secret";
  EXPECT_EQ(backend_identity(remote), "remote:https://example.invalid/v1");
  EXPECT_EQ(backend_identity(MockBackend{3}), "mock:3");
}

TEST(RemoteBackendTest, SuccessSendsBearerAndBody) {
  ScriptedServer server({{200, ok_body("Question: q?\nAnswer: a.")}});
  const std::string text = chat_complete(simple_request(), server.backend(2));
  EXPECT_EQ(text, "Question: q?\nAnswer: a.");
  EXPECT_EQ(server.hits(), 1);
  EXPECT_EQ(server.last_auth(), "Bearer test-key");
  EXPECT_EQ(Json::parse(server.last_body()), to_wire_json(simple_request()));
}

TEST(RemoteBackendTest, ServerErrorsExhaustRetries) {
  ScriptedServer server({{500, "{}"}, {500, "{}"}, {500, "{}"}});
  try {
    chat_complete(simple_request(), server.backend(2));
    FAIL() << "expected LlmError";
  } catch (const LlmError& e) {
    EXPECT_NE(std::string(e.what()).find("after 2 retries"), std::string::npos) << e.what();
  }
  EXPECT_EQ(server.hits(), 3);
}

TEST(RemoteBackendTest, RateLimitThenSuccess) {
  ScriptedServer server({{429, "{}"}, {200, ok_body("fine")}});
  EXPECT_EQ(chat_complete(simple_request(), server.backend(2)), "fine");
  EXPECT_EQ(server.hits(), 2);
}

TEST(RemoteBackendTest, ClientErrorFailsFast) {
  ScriptedServer server({{400, "{}"}, {200, ok_body("never")}});
  EXPECT_THROW(chat_complete(simple_request(), server.backend(3)), LlmError);
  EXPECT_EQ(server.hits(), 1);
}

TEST(RemoteBackendTest, MalformedBodyFailsFast) {
  ScriptedServer server({{200, "not json"}, {200, ok_body("never")}});
  EXPECT_THROW(chat_complete(simple_request(), server.backend(3)), LlmError);
  EXPECT_EQ(server.hits(), 1);
  ScriptedServer empty({{200, R"({"choices": []})"}});
  EXPECT_THROW(chat_complete(simple_request(), empty.backend(0)), LlmError);
}

TEST(RemoteBackendTest, TransportErrorsRetry) {
  RemoteBackend dead;
  {
    ScriptedServer server({});
    dead = server.backend(1);
  }
  try {
    chat_complete(simple_request(), dead);
    FAIL() << "expected LlmError";
  } catch (const LlmError& e) {
    EXPECT_NE(std::string(e.what()).find("transport error"), std::string::npos) << e.what();
  }
}

TEST(RemoteBackendTest, RequiresEndpointAndKey) {
  RemoteBackend b;
  EXPECT_THROW(chat_complete(simple_request(), b), InvalidArgument);
  b.endpoint = "http://127.0.0.1:1/x";
  EXPECT_THROW(chat_complete(simple_request(), b), InvalidArgument);
  b.api_key = "k";
  b.endpoint = "no-scheme";
  EXPECT_THROW(chat_complete(simple_request(), b), InvalidArgument);
}

TEST(ChatClientTest, CacheAvoidsSecondCall) {
  TempDir dir;
  ScriptedServer server({{200, ok_body("first")}, {200, ok_body("second")}});
  ChatClient client(server.backend(0), dir / "cache");
  EXPECT_EQ(client.complete(simple_request()), "first");
  EXPECT_EQ(client.complete(simple_request()), "first");
  EXPECT_EQ(server.hits(), 1);
  EXPECT_EQ(client.cache_hits(), 1u);

  ChatClient fresh(server.backend(0), dir / "cache");
  EXPECT_EQ(fresh.complete(simple_request()), "first");
  EXPECT_EQ(server.hits(), 1);

  ChatClient uncached(server.backend(0), std::nullopt);
  EXPECT_EQ(uncached.complete(simple_request()), "second");
  EXPECT_EQ(server.hits(), 2);
}

TEST(ChatClientTest, ConcurrentIdenticalRequestsHitBackendOnce) {
  TempDir dir;
  ScriptedServer server({});
  ChatClient client(server.backend(0), dir / "cache", 2);
  std::vector<std::thread> workers;
  std::atomic<int> matches{0};
  for (int i = 0; i < 8; ++i) {
    workers.emplace_back([&] {
      if (client.complete(simple_request("same")) == "done") ++matches;
    });
  }
  for (auto& w : workers) w.join();
  EXPECT_EQ(matches.load(), 8);
  EXPECT_EQ(server.hits(), 1);
  EXPECT_EQ(client.cache_hits(), 7u);
}

}  // namespace
