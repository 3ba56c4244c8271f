#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "sode/protocol.hpp"
#include "sode/rng.hpp"

namespace sode {

// A remote chat-completion endpoint. The credential itself is read from the
// named environment variable at call time and never stored.
struct ModelEndpoint {
  std::string base_url;        // e.g. http://127.0.0.1:8000/v1
  std::string model_id;
  std::string credential_env;  // empty: no Authorization header

  friend bool operator==(const ModelEndpoint&, const ModelEndpoint&) = default;
};

void validate(const ModelEndpoint& e);

struct SamplingConfig {
  double temperature = 0.6;
  double top_p = 0.95;
  int top_k = 20;
  int max_tokens = 4096;
  int context_limit = 32768;

  friend bool operator==(const SamplingConfig&, const SamplingConfig&) = default;
};

void to_json(nlohmann::json& j, const SamplingConfig& s);
void from_json(const nlohmann::json& j, SamplingConfig& s);

struct GatewayOptions {
  int max_attempts = 5;  // per call, counting the first
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{20000};
  std::chrono::milliseconds connect_timeout{10000};
  std::chrono::milliseconds read_timeout{300000};
  std::uint64_t seed = 0;  // jitter and request ids
};

void to_json(nlohmann::json& j, const GatewayOptions& o);
void from_json(const nlohmann::json& j, GatewayOptions& o);

// Body of POST {base_url}/chat/completions.
nlohmann::json chat_request_body(const ModelEndpoint& endpoint, const PromptBundle& bundle,
                                 const SamplingConfig& sampling);

class GatewayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class TransportError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};
class RateLimited : public GatewayError {
 public:
  using GatewayError::GatewayError;
};
class ServerError : public GatewayError {
 public:
  ServerError(int status, const std::string& what) : GatewayError(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};
class CredentialMissing : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

// One network attempt.
struct CallTranscript {
  std::string request_id;
  int attempt = 1;
  std::string timestamp;  // UTC, ISO 8601
  std::string base_url;
  std::string model_id;
  std::string system_text;
  std::string user_text;
  SamplingConfig sampling;
  std::string outcome;  // ok | rate_limited | server_error | transport_error
  int http_status = 0;  // 0 when no response arrived
  std::string raw_response;
  double latency_ms = 0.0;
};

void to_json(nlohmann::json& j, const CallTranscript& t);

// Append-only, thread-safe transcript store with an optional JSONL sink.
class TranscriptLog {
 public:
  TranscriptLog() = default;
  explicit TranscriptLog(const std::filesystem::path& jsonl_path);

  void append(CallTranscript t);
  std::vector<CallTranscript> entries() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<CallTranscript> entries_;
  std::ofstream sink_;
};

struct ChatResult {
  std::string content;
  std::string request_id;
  int attempts = 1;
};

// Shared client for chat-completion endpoints. At most `limit` HTTP requests
// are in flight at once across every caller holding the handle.
class Gateway {
 public:
  static std::shared_ptr<Gateway> with_concurrency_budget(
      int limit, GatewayOptions options = {}, std::shared_ptr<TranscriptLog> log = nullptr);

  // Returns the first choice's message content verbatim. RateLimited
  // responses are retried with jittered exponential backoff.
  ChatResult complete(const ModelEndpoint& endpoint, const PromptBundle& bundle,
                      const SamplingConfig& sampling);

  std::string chat_complete(const ModelEndpoint& endpoint, const PromptBundle& bundle,
                            const SamplingConfig& sampling) {
    return complete(endpoint, bundle, sampling).content;
  }

  int limit() const { return limit_; }
  const GatewayOptions& options() const { return options_; }
  TranscriptLog& transcripts() { return *log_; }
  std::shared_ptr<TranscriptLog> transcript_log() const { return log_; }

  Gateway(int limit, GatewayOptions options, std::shared_ptr<TranscriptLog> log);

 private:
  class Slot;
  std::string next_request_id();
  std::chrono::milliseconds backoff_for(int failed_attempts);

  int limit_;
  GatewayOptions options_;
  std::shared_ptr<TranscriptLog> log_;

  std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  std::uint64_t next_id_ = 0;
  Rng jitter_;
};

}  // namespace sode
