#include "cas/llm.hpp"

#include <openssl/evp.h>

#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace cas::llm {

std::string fingerprint(const ChatRequest& req) {
  nlohmann::ordered_json canonical = {
      {"model", req.model_id},
      {"system", req.system_text},
      {"user", req.user_text},
      {"temperature", req.temperature},
  };
  const std::string payload = canonical.dump();

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(payload.data(), payload.size(), digest, &len, EVP_sha256(), nullptr))
    throw LlmError("SHA-256 digest failed");

  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// FixtureStore

FixtureStore::FixtureStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path FixtureStore::path_for(const std::string& fp) const {
  return dir_ / (fp + ".txt");
}

bool FixtureStore::contains(const std::string& fp) const {
  return std::filesystem::exists(path_for(fp));
}

std::optional<std::string> FixtureStore::read(const std::string& fp) const {
  std::ifstream in(path_for(fp), std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void FixtureStore::write(const std::string& fp, const std::string& text) const {
  std::filesystem::create_directories(dir_);
  // unique temp name per writer, then atomic rename into place
  static std::atomic<unsigned> counter{0};
  std::ostringstream tmp_name;
  tmp_name << "." << fp << "." << std::this_thread::get_id() << "."
           << counter.fetch_add(1) << ".tmp";
  const auto tmp = dir_ / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw LlmError("cannot write fixture temp file " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path_for(fp));
}

// ---------------------------------------------------------------------------
// Replay / Record

ReplayBackend::ReplayBackend(std::filesystem::path fixture_dir)
    : store_(std::move(fixture_dir)) {}

ChatResponse ReplayBackend::complete(const ChatRequest& req) {
  const std::string fp = fingerprint(req);
  auto text = store_.read(fp);
  if (!text) throw FixtureMiss(fp);
  return ChatResponse{std::move(*text), id(), std::chrono::milliseconds{0}};
}

RecordBackend::RecordBackend(std::shared_ptr<ChatBackend> live,
                             std::filesystem::path fixture_dir)
    : live_(std::move(live)), store_(std::move(fixture_dir)) {}

ChatResponse RecordBackend::complete(const ChatRequest& req) {
  const std::string fp = fingerprint(req);
  if (auto text = store_.read(fp))
    return ChatResponse{std::move(*text), id(), std::chrono::milliseconds{0}};
  ChatResponse resp = live_->complete(req);
  store_.write(fp, resp.text);
  return resp;
}

// ---------------------------------------------------------------------------
// HTTP backend

HttpOptions HttpOptions::from_env() {
  HttpOptions o;
  if (const char* e = std::getenv("CAS_ENDPOINT")) o.endpoint = e;
  if (const char* k = std::getenv("CAS_API_KEY")) o.api_key = k;
  return o;
}

namespace {

// Simple counting semaphore with a runtime permit count.
class InFlightLimit {
public:
  explicit InFlightLimit(int permits) : permits_(permits > 0 ? permits : 1) {}

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_use_ < permits_; });
    ++in_use_;
  }
  void release() {
    {
      std::lock_guard lock(mu_);
      --in_use_;
    }
    cv_.notify_one();
  }

private:
  std::mutex mu_;
  std::condition_variable cv_;
  int permits_;
  int in_use_ = 0;
};

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw NetworkError("endpoint URL must include a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

struct HttpBackend::Impl {
  HttpOptions options;
  ParsedUrl url;
  InFlightLimit limit;

  explicit Impl(HttpOptions o)
      : options(std::move(o)), url(split_url(options.endpoint)), limit(options.max_in_flight) {}
};

HttpBackend::HttpBackend(HttpOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::id() const { return "http:" + impl_->options.endpoint; }

std::string HttpBackend::build_body(const ChatRequest& req) {
  nlohmann::ordered_json body = {
      {"model", req.model_id},
      {"temperature", req.temperature},
      {"max_tokens", req.max_tokens},
      {"messages",
       nlohmann::ordered_json::array({
           {{"role", "system"}, {"content", req.system_text}},
           {{"role", "user"}, {"content", req.user_text}},
       })},
  };
  return body.dump();
}

std::string HttpBackend::parse_body(const std::string& json_text) {
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("response is not JSON: ") + e.what());
  }
  try {
    const auto& choices = parsed.at("choices");
    if (!choices.is_array() || choices.empty())
      throw MalformedResponse("response has no choices");
    return choices[0].at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw MalformedResponse(std::string("unexpected response shape: ") + e.what());
  }
}

ChatResponse HttpBackend::complete(const ChatRequest& req) {
  if (req.user_text.empty()) throw LlmError("request user_text must be non-empty");
  if (req.temperature < 0.0 || req.temperature > 1.0)
    throw LlmError("temperature must be in [0,1]");

  impl_->limit.acquire();
  struct Release {
    InFlightLimit& l;
    ~Release() { l.release(); }
  } release{impl_->limit};

  const std::string body = build_body(req);
  httplib::Headers headers;
  if (!impl_->options.api_key.empty())
    headers.emplace("Authorization", "Bearer " + impl_->options.api_key);

  const auto start = std::chrono::steady_clock::now();
  std::string last_error = "no attempt made";
  bool rate_limited = false;
  for (int attempt = 1; attempt <= impl_->options.max_attempts; ++attempt) {
    if (attempt > 1) {
      const auto delay = impl_->options.base_backoff * (1 << (attempt - 2));
      std::this_thread::sleep_for(delay);
    }
    httplib::Client client(impl_->url.base);
    client.set_connection_timeout(30);
    client.set_read_timeout(300);
    auto res = client.Post(impl_->url.path, headers, body, "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      rate_limited = false;
      continue;
    }
    if (res->status == 429) {
      last_error = "rate limited (429)";
      rate_limited = true;
      continue;
    }
    if (res->status >= 500) {
      last_error = "server error (" + std::to_string(res->status) + ")";
      rate_limited = false;
      continue;
    }
    if (res->status != 200)
      throw NetworkError("request failed with status " + std::to_string(res->status) + ": " +
                         res->body);
    ChatResponse out;
    out.text = parse_body(res->body);
    out.backend_id = id();
    out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    return out;
  }
  if (rate_limited)
    throw RateLimited("gave up after " + std::to_string(impl_->options.max_attempts) +
                      " attempts: " + last_error);
  throw NetworkError("gave up after " + std::to_string(impl_->options.max_attempts) +
                     " attempts: " + last_error);
}

}  // namespace cas::llm
