#pragma once

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <vector>

namespace atomchain {

struct Message {
  std::string role;  // system | user | assistant
  std::string content;
  friend bool operator==(const Message&, const Message&) = default;
};

struct GenerationRequest {
  std::string model_id;
  std::vector<Message> messages;
  double temperature = 0.8;
  /// Nucleus mass. The reported "top-k with k=0.9" is read as top-p 0.9.
  double top_p = 0.9;
  std::optional<int> top_k;
  int max_tokens = 2048;
  std::optional<long long> seed;

  /// Throws LlmError(kInvalidRequest).
  void validate() const;
  friend bool operator==(const GenerationRequest&, const GenerationRequest&) = default;
};

enum class BackendKind { kLive, kReplay, kMock };
std::string_view to_string(BackendKind k);

struct GenerationResponse {
  std::string text;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  double latency_ms = 0;
  BackendKind backend = BackendKind::kMock;
  std::string cache_key;
};

class LlmError : public std::runtime_error {
 public:
  enum class Kind {
    kTimeout,
    kRateLimited,
    kMalformedResponse,
    kReplayMiss,
    kBudgetExceeded,
    kTransport,
    kInvalidRequest,
    kMockUnmatched,
    kIo,
  };

  LlmError(Kind kind, std::string message, std::string key = {}, double retry_after_s = 0)
      : std::runtime_error(std::move(message)), kind_(kind), key_(std::move(key)), retry_after_s_(retry_after_s) {}

  Kind kind() const { return kind_; }
  /// Cache key for kReplayMiss.
  const std::string& key() const { return key_; }
  double retry_after_s() const { return retry_after_s_; }
  bool retryable() const {
    return kind_ == Kind::kTimeout || kind_ == Kind::kRateLimited || kind_ == Kind::kTransport ||
           kind_ == Kind::kMalformedResponse;
  }

 private:
  Kind kind_;
  std::string key_;
  double retry_after_s_;
};

std::string_view to_string(LlmError::Kind k);

nlohmann::json to_json(const GenerationRequest& r);
GenerationRequest request_from_json(const nlohmann::json& j);

/// Sorted-key compact JSON of (model, messages, sampling params).
std::string canonical_request(const GenerationRequest& r);
/// Hex SHA-256 of canonical_request.
std::string cache_key(const GenerationRequest& r);
std::string sha256_hex(std::string_view data);

/// Whitespace-delimited word count; the token estimate for offline backends.
long approx_tokens(std::string_view text);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual GenerationResponse generate(const GenerationRequest& req) = 0;
};

struct LiveOptions {
  std::string base_url = "https://api.openai.com";  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string api_key_env = "ATOMCHAIN_API_KEY";
  std::chrono::seconds timeout{120};
};

/// Chat-completions over HTTP(S).
class LiveBackend : public Backend {
 public:
  explicit LiveBackend(LiveOptions options);
  GenerationResponse generate(const GenerationRequest& req) override;

 private:
  LiveOptions options_;
};

struct SessionEntry {
  std::string key;
  nlohmann::json request;
  std::string text;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  double latency_ms = 0;
};

nlohmann::json to_json(const SessionEntry& e);
SessionEntry session_entry_from_json(const nlohmann::json& j);

/// Reads a JSONL session store. A missing file yields an empty session.
std::vector<SessionEntry> load_session(const std::filesystem::path& path);

/// Serves recorded responses by cache key. When not strict, misses go to the
/// fallback backend.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(const std::vector<SessionEntry>& entries, bool strict = true,
                         std::shared_ptr<Backend> fallback = nullptr);
  GenerationResponse generate(const GenerationRequest& req) override;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, SessionEntry> entries_;
  bool strict_;
  std::shared_ptr<Backend> fallback_;
};

/// Scripted responses. A rule matches when every one of its substrings occurs
/// in the concatenated message contents; rules are tried in order. Each rule
/// walks through its responses and then repeats the last one.
class MockBackend : public Backend {
 public:
  struct Rule {
    std::vector<std::string> match;
    std::vector<std::string> responses;
  };

  MockBackend() = default;
  MockBackend(std::vector<Rule> rules, std::optional<std::string> fallback);

  void add_rule(std::vector<std::string> match, std::vector<std::string> responses);
  void set_default(std::string text) { default_ = std::move(text); }

  /// {"rules": [{"match": str | [str], "responses": [str] | "response": str}], "default": str}
  static std::shared_ptr<MockBackend> from_json(const nlohmann::json& script);
  static std::shared_ptr<MockBackend> from_file(const std::filesystem::path& path);

  GenerationResponse generate(const GenerationRequest& req) override;

 private:
  std::mutex mu_;
  std::vector<Rule> rules_;
  std::vector<std::size_t> cursor_;
  std::optional<std::string> default_;
};

/// Backend driven by a function; reports itself as MOCK.
class CallbackBackend : public Backend {
 public:
  using Fn = std::function<std::string(const GenerationRequest&)>;
  explicit CallbackBackend(Fn fn) : fn_(std::move(fn)) {}
  GenerationResponse generate(const GenerationRequest& req) override;

 private:
  Fn fn_;
};

/// Append-only JSONL sink, safe for concurrent writers.
class SessionRecorder {
 public:
  explicit SessionRecorder(const std::filesystem::path& path);
  void append(const GenerationRequest& req, const GenerationResponse& resp);
  std::size_t count() const;

 private:
  mutable std::mutex mu_;
  std::ofstream out_;
  std::size_t count_ = 0;
};

struct ClientOptions {
  int max_retries = 3;
  std::chrono::milliseconds base_backoff{500};
  /// Total prompt+completion tokens allowed; 0 disables the budget.
  long token_budget = 0;
  int max_in_flight = 4;
};

/// Shareable front end over one backend: bounded in-flight calls, retry with
/// exponential backoff, token budget, optional session recording.
class Client {
 public:
  explicit Client(std::shared_ptr<Backend> backend, ClientOptions options = {});

  GenerationResponse generate(const GenerationRequest& req);

  /// Appends every non-replay response to `path`.
  void record_session(const std::filesystem::path& path);
  long tokens_used() const { return tokens_used_.load(); }
  long calls() const { return calls_.load(); }
  const ClientOptions& options() const { return options_; }

 private:
  std::shared_ptr<Backend> backend_;
  ClientOptions options_;
  std::counting_semaphore<1024> in_flight_;
  std::atomic<long> tokens_used_{0};
  std::atomic<long> calls_{0};
  std::shared_ptr<SessionRecorder> recorder_;
};

}  // namespace atomchain
