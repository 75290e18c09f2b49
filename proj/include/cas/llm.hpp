#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "cas/errors.hpp"

namespace cas::llm {

struct ChatRequest {
  std::string model_id;
  std::string system_text;
  std::string user_text;
  double temperature = 0.0;
  int max_tokens = 1024;
};

struct ChatResponse {
  std::string text;
  std::string backend_id;
  std::chrono::milliseconds latency{0};
};

/// Deterministic digest of (model_id, system_text, user_text, temperature),
/// stable across runs and platforms. Deliberately insensitive to
/// max_tokens. SHA-256 over a canonical JSON rendering, hex-encoded.
std::string fingerprint(const ChatRequest& req);

class LlmError : public Error {
public:
  explicit LlmError(const std::string& msg) : Error(msg) {}
};
class NetworkError : public LlmError {
public:
  explicit NetworkError(const std::string& msg) : LlmError(msg) {}
};
class RateLimited : public LlmError {
public:
  explicit RateLimited(const std::string& msg) : LlmError(msg) {}
};
class MalformedResponse : public LlmError {
public:
  explicit MalformedResponse(const std::string& msg) : LlmError(msg) {}
};
class FixtureMiss : public LlmError {
public:
  explicit FixtureMiss(const std::string& fp)
      : LlmError("no fixture recorded for fingerprint " + fp), fingerprint_(fp) {}
  const std::string& fingerprint() const { return fingerprint_; }

private:
  std::string fingerprint_;
};

/// Chat-completion backend handle. Implementations are shareable across
/// threads and complete() may be called concurrently.
class ChatBackend {
public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& req) = 0;
  virtual std::string id() const = 0;
};

/// Directory of one file per request fingerprint holding the raw response
/// text. Writes go through a temp file and an atomic rename.
class FixtureStore {
public:
  explicit FixtureStore(std::filesystem::path dir);

  std::optional<std::string> read(const std::string& fp) const;
  void write(const std::string& fp, const std::string& text) const;
  bool contains(const std::string& fp) const;
  std::filesystem::path path_for(const std::string& fp) const;
  const std::filesystem::path& dir() const { return dir_; }

private:
  std::filesystem::path dir_;
};

/// Serves recorded responses only; throws FixtureMiss (naming the
/// fingerprint) for anything unrecorded. Zero network use by construction.
class ReplayBackend : public ChatBackend {
public:
  explicit ReplayBackend(std::filesystem::path fixture_dir);

  ChatResponse complete(const ChatRequest& req) override;
  std::string id() const override { return "replay:" + store_.dir().string(); }
  const FixtureStore& store() const { return store_; }

private:
  FixtureStore store_;
};

/// Write-through cache in front of a live backend: a recorded fingerprint
/// is served from the store without touching the inner backend; a miss is
/// forwarded and the response persisted before returning.
class RecordBackend : public ChatBackend {
public:
  RecordBackend(std::shared_ptr<ChatBackend> live, std::filesystem::path fixture_dir);

  ChatResponse complete(const ChatRequest& req) override;
  std::string id() const override { return "record:" + live_->id(); }

private:
  std::shared_ptr<ChatBackend> live_;
  FixtureStore store_;
};

struct HttpOptions {
  std::string endpoint;  // full URL of a chat-completions route
  std::string api_key;
  int max_attempts = 3;
  std::chrono::milliseconds base_backoff{250};
  int max_in_flight = 4;

  /// Reads CAS_ENDPOINT and CAS_API_KEY; other fields keep their defaults.
  static HttpOptions from_env();
};

/// OpenAI-compatible chat-completions client. Transient failures (connect
/// errors, 429, 5xx) are retried with bounded exponential backoff up to
/// max_attempts; a configurable in-flight limit throttles concurrent use.
class HttpBackend : public ChatBackend {
public:
  explicit HttpBackend(HttpOptions options);
  ~HttpBackend() override;

  ChatResponse complete(const ChatRequest& req) override;
  std::string id() const override;

  /// Request body per the chat-completions schema (exposed for tests).
  static std::string build_body(const ChatRequest& req);
  /// Extracts choices[0].message.content; throws MalformedResponse.
  static std::string parse_body(const std::string& json_text);

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cas::llm
