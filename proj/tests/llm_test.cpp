#include "cas/llm.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace cas::llm {
namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("cas_llm_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

ChatRequest sample_request() {
  ChatRequest req;
  req.model_id = "test-model";
  req.system_text = "You are concise.";
  req.user_text = "Say hi.";
  req.temperature = 0.0;
  req.max_tokens = 64;
  return req;
}

TEST(Fingerprint, DeterministicAndSensitive) {
  auto req = sample_request();
  EXPECT_EQ(fingerprint(req), fingerprint(req));

  auto other = req;
  other.user_text = "Say bye.";
  EXPECT_NE(fingerprint(req), fingerprint(other));

  auto model = req;
  model.model_id = "test-model-2";
  EXPECT_NE(fingerprint(req), fingerprint(model));

  auto temp = req;
  temp.temperature = 0.5;
  EXPECT_NE(fingerprint(req), fingerprint(temp));
}

TEST(Fingerprint, InsensitiveToMaxTokens) {
  auto req = sample_request();
  auto other = req;
  other.max_tokens = 4096;
  EXPECT_EQ(fingerprint(req), fingerprint(other));
}

TEST(Fingerprint, FrozenValue) {
  // Pinned so an accidental change to the canonical serialization (which
  // would orphan every recorded fixture) shows up immediately.
  ChatRequest req;
  req.model_id = "m";
  req.system_text = "s";
  req.user_text = "u";
  req.temperature = 0.0;
  // sha256 of {"model":"m","system":"s","user":"u","temperature":0.0},
  // cross-checked with an independent implementation
  EXPECT_EQ(fingerprint(req),
            "1f0cdd23f914a20a3752eb6a41bd1eac7aeee3e26e07ea45570b56cabbd9443c");
}

TEST(FixtureStore, WriteThenRead) {
  TempDir tmp;
  FixtureStore store(tmp.path);
  store.write("abc123", "hello\nworld");
  EXPECT_EQ(store.read("abc123"), "hello\nworld");
  EXPECT_TRUE(store.contains("abc123"));
  EXPECT_FALSE(store.contains("zzz"));
  // no temp files left behind
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(tmp.path)) {
    ++files;
    EXPECT_EQ(e.path().extension(), ".txt");
  }
  EXPECT_EQ(files, 1u);
}

TEST(ReplayBackend, ServesRecordedText) {
  TempDir tmp;
  auto req = sample_request();
  FixtureStore store(tmp.path);
  store.write(fingerprint(req), "recorded reply");

  ReplayBackend replay(tmp.path);
  auto resp = replay.complete(req);
  EXPECT_EQ(resp.text, "recorded reply");
}

TEST(ReplayBackend, MissNamesFingerprint) {
  TempDir tmp;
  ReplayBackend replay(tmp.path);
  auto req = sample_request();
  try {
    replay.complete(req);
    FAIL() << "expected FixtureMiss";
  } catch (const FixtureMiss& e) {
    EXPECT_EQ(e.fingerprint(), fingerprint(req));
    EXPECT_NE(std::string(e.what()).find(fingerprint(req)), std::string::npos);
  }
}

class CountingBackend : public ChatBackend {
public:
  ChatResponse complete(const ChatRequest& req) override {
    ++calls;
    return ChatResponse{"live answer for " + req.user_text, id(), {}};
  }
  std::string id() const override { return "counting"; }
  std::atomic<int> calls{0};
};

TEST(RecordBackend, SecondIdenticalCallServedFromFixture) {
  TempDir tmp;
  auto live = std::make_shared<CountingBackend>();
  RecordBackend rec(live, tmp.path);
  auto req = sample_request();

  auto first = rec.complete(req);
  EXPECT_EQ(live->calls, 1);
  EXPECT_EQ(first.text, "live answer for Say hi.");
  EXPECT_TRUE(FixtureStore(tmp.path).contains(fingerprint(req)));

  auto second = rec.complete(req);
  EXPECT_EQ(live->calls, 1);  // zero additional outbound requests
  EXPECT_EQ(second.text, first.text);

  // a different request does go out
  auto other = req;
  other.user_text = "Another question.";
  rec.complete(other);
  EXPECT_EQ(live->calls, 2);
}

TEST(RecordBackend, ReplaySeesRecordedFixtures) {
  TempDir tmp;
  auto live = std::make_shared<CountingBackend>();
  RecordBackend rec(live, tmp.path);
  auto req = sample_request();
  rec.complete(req);

  ReplayBackend replay(tmp.path);
  EXPECT_EQ(replay.complete(req).text, "live answer for Say hi.");
}

TEST(HttpBackend, BuildBodyShape) {
  auto req = sample_request();
  auto body = nlohmann::json::parse(HttpBackend::build_body(req));
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["max_tokens"], 64);
  ASSERT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][0]["content"], "You are concise.");
  EXPECT_EQ(body["messages"][1]["role"], "user");
}

TEST(HttpBackend, ParseBodyExtractsContent) {
  const char* good = R"({"choices":[{"message":{"role":"assistant","content":"hi"}}]})";
  EXPECT_EQ(HttpBackend::parse_body(good), "hi");
  EXPECT_THROW(HttpBackend::parse_body("not json"), MalformedResponse);
  EXPECT_THROW(HttpBackend::parse_body(R"({"choices":[]})"), MalformedResponse);
  EXPECT_THROW(HttpBackend::parse_body(R"({"error":"nope"})"), MalformedResponse);
}

class LocalServer {
public:
  explicit LocalServer(httplib::Server::Handler handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }

private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

HttpOptions fast_options(const std::string& endpoint) {
  HttpOptions o;
  o.endpoint = endpoint;
  o.api_key = "test-key";
  o.max_attempts = 3;
  o.base_backoff = std::chrono::milliseconds(5);
  return o;
}

TEST(HttpBackend, RoundTripAgainstLocalServer) {
  std::atomic<int> hits{0};
  LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    EXPECT_EQ(req.get_header_value("Authorization"), "Bearer test-key");
    auto body = nlohmann::json::parse(req.body);
    EXPECT_EQ(body["model"], "test-model");
    res.set_content(
        R"({"choices":[{"message":{"role":"assistant","content":"pong"}}]})",
        "application/json");
  });

  HttpBackend backend(fast_options(server.endpoint()));
  auto resp = backend.complete(sample_request());
  EXPECT_EQ(resp.text, "pong");
  EXPECT_EQ(hits, 1);
}

TEST(HttpBackend, RetriesAfterRateLimitThenSucceeds) {
  std::atomic<int> hits{0};
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    if (++hits < 3) {
      res.status = 429;
      return;
    }
    res.set_content(R"({"choices":[{"message":{"content":"ok"}}]})", "application/json");
  });

  HttpBackend backend(fast_options(server.endpoint()));
  EXPECT_EQ(backend.complete(sample_request()).text, "ok");
  EXPECT_EQ(hits, 3);
}

TEST(HttpBackend, RateLimitedAfterMaxAttempts) {
  std::atomic<int> hits{0};
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 429;
  });

  HttpBackend backend(fast_options(server.endpoint()));
  EXPECT_THROW(backend.complete(sample_request()), RateLimited);
  EXPECT_EQ(hits, 3);  // bounded retries
}

TEST(HttpBackend, ServerErrorsExhaustIntoNetworkError) {
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
  });
  HttpBackend backend(fast_options(server.endpoint()));
  EXPECT_THROW(backend.complete(sample_request()), NetworkError);
}

TEST(HttpBackend, MalformedServerReply) {
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    res.set_content("here is some prose", "text/plain");
  });
  HttpBackend backend(fast_options(server.endpoint()));
  EXPECT_THROW(backend.complete(sample_request()), MalformedResponse);
}

TEST(HttpBackend, RejectsEmptyUserText) {
  HttpBackend backend(fast_options("http://127.0.0.1:1/v1/chat/completions"));
  ChatRequest req = sample_request();
  req.user_text = "";
  EXPECT_THROW(backend.complete(req), LlmError);
  req = sample_request();
  req.temperature = 1.5;
  EXPECT_THROW(backend.complete(req), LlmError);
}

TEST(ReplayBackend, ConcurrentReadsAreSafe) {
  TempDir tmp;
  FixtureStore store(tmp.path);
  std::vector<ChatRequest> reqs;
  for (int i = 0; i < 8; ++i) {
    auto r = sample_request();
    r.user_text = "q" + std::to_string(i);
    reqs.push_back(r);
    store.write(fingerprint(r), "a" + std::to_string(i));
  }
  ReplayBackend replay(tmp.path);
  std::vector<std::thread> threads;
  std::atomic<int> failures{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 50; ++i) {
        if (replay.complete(reqs[t]).text != "a" + std::to_string(t)) ++failures;
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(failures, 0);
}

}  // namespace
}  // namespace cas::llm
