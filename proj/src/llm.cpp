#include "atomchain/llm.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <thread>

namespace atomchain {

using nlohmann::json;

std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::kLive: return "LIVE";
    case BackendKind::kReplay: return "REPLAY";
    case BackendKind::kMock: return "MOCK";
  }
  return "?";
}

std::string_view to_string(LlmError::Kind k) {
  switch (k) {
    case LlmError::Kind::kTimeout: return "Timeout";
    case LlmError::Kind::kRateLimited: return "RateLimited";
    case LlmError::Kind::kMalformedResponse: return "MalformedResponse";
    case LlmError::Kind::kReplayMiss: return "ReplayMiss";
    case LlmError::Kind::kBudgetExceeded: return "BudgetExceeded";
    case LlmError::Kind::kTransport: return "Transport";
    case LlmError::Kind::kInvalidRequest: return "InvalidRequest";
    case LlmError::Kind::kMockUnmatched: return "MockUnmatched";
    case LlmError::Kind::kIo: return "Io";
  }
  return "?";
}

void GenerationRequest::validate() const {
  auto bad = [](const std::string& m) { return LlmError(LlmError::Kind::kInvalidRequest, m); };
  if (messages.empty()) throw bad("request has no messages");
  for (const auto& m : messages)
    if (m.role != "system" && m.role != "user" && m.role != "assistant") throw bad("bad role '" + m.role + "'");
  if (!(temperature >= 0 && temperature <= 2)) throw bad("temperature out of [0,2]");
  if (!(top_p > 0 && top_p <= 1)) throw bad("top_p out of (0,1]");
  if (top_k && *top_k < 0) throw bad("top_k negative");
  if (max_tokens <= 0) throw bad("max_tokens must be positive");
}

json to_json(const GenerationRequest& r) {
  json msgs = json::array();
  for (const auto& m : r.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  json j = {{"model", r.model_id}, {"messages", msgs}, {"temperature", r.temperature},
            {"top_p", r.top_p},    {"max_tokens", r.max_tokens}};
  if (r.top_k) j["top_k"] = *r.top_k;
  if (r.seed) j["seed"] = *r.seed;
  return j;
}

GenerationRequest request_from_json(const json& j) {
  GenerationRequest r;
  r.model_id = j.at("model").get<std::string>();
  for (const auto& m : j.at("messages")) r.messages.push_back({m.at("role"), m.at("content")});
  r.temperature = j.value("temperature", 0.8);
  r.top_p = j.value("top_p", 0.9);
  r.max_tokens = j.value("max_tokens", 2048);
  if (j.contains("top_k") && !j["top_k"].is_null()) r.top_k = j["top_k"].get<int>();
  if (j.contains("seed") && !j["seed"].is_null()) r.seed = j["seed"].get<long long>();
  return r;
}

std::string canonical_request(const GenerationRequest& r) { return to_json(r).dump(); }

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, data.data(), data.size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string cache_key(const GenerationRequest& r) { return sha256_hex(canonical_request(r)); }

long approx_tokens(std::string_view text) {
  long n = 0;
  bool in_word = false;
  for (char c : text) {
    bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

namespace {

long prompt_token_estimate(const GenerationRequest& r) {
  long n = 0;
  for (const auto& m : r.messages) n += approx_tokens(m.content);
  return n;
}

}  // namespace

// ---- session store ----

json to_json(const SessionEntry& e) {
  return {{"schema_version", 1},
          {"key", e.key},
          {"request", e.request},
          {"response",
           {{"text", e.text},
            {"prompt_tokens", e.prompt_tokens},
            {"completion_tokens", e.completion_tokens},
            {"latency_ms", e.latency_ms}}}};
}

SessionEntry session_entry_from_json(const json& j) {
  SessionEntry e;
  e.key = j.at("key").get<std::string>();
  e.request = j.value("request", json::object());
  const json& r = j.at("response");
  e.text = r.at("text").get<std::string>();
  e.prompt_tokens = r.value("prompt_tokens", 0L);
  e.completion_tokens = r.value("completion_tokens", 0L);
  e.latency_ms = r.value("latency_ms", 0.0);
  return e;
}

std::vector<SessionEntry> load_session(const std::filesystem::path& path) {
  std::vector<SessionEntry> out;
  if (!std::filesystem::exists(path)) return out;
  std::ifstream in(path);
  if (!in) throw LlmError(LlmError::Kind::kIo, "cannot read session " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(session_entry_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw LlmError(LlmError::Kind::kIo, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

SessionRecorder::SessionRecorder(const std::filesystem::path& path) : out_(path, std::ios::app) {
  if (!out_) throw LlmError(LlmError::Kind::kIo, "cannot open session sink " + path.string());
}

void SessionRecorder::append(const GenerationRequest& req, const GenerationResponse& resp) {
  SessionEntry e{resp.cache_key, to_json(req), resp.text, resp.prompt_tokens, resp.completion_tokens,
                 resp.latency_ms};
  std::string line = to_json(e).dump() + "\n";
  std::lock_guard lock(mu_);
  out_ << line;
  out_.flush();
  ++count_;
}

std::size_t SessionRecorder::count() const {
  std::lock_guard lock(mu_);
  return count_;
}

// ---- backends ----

ReplayBackend::ReplayBackend(const std::vector<SessionEntry>& entries, bool strict, std::shared_ptr<Backend> fallback)
    : strict_(strict), fallback_(std::move(fallback)) {
  for (const auto& e : entries) entries_.emplace(e.key, e);  // first recording wins
}

GenerationResponse ReplayBackend::generate(const GenerationRequest& req) {
  std::string key = cache_key(req);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    if (strict_ || !fallback_) throw LlmError(LlmError::Kind::kReplayMiss, "replay miss for key " + key, key);
    return fallback_->generate(req);
  }
  const SessionEntry& e = it->second;
  return {e.text, e.prompt_tokens, e.completion_tokens, e.latency_ms, BackendKind::kReplay, key};
}

MockBackend::MockBackend(std::vector<Rule> rules, std::optional<std::string> fallback)
    : rules_(std::move(rules)), cursor_(rules_.size(), 0), default_(std::move(fallback)) {}

void MockBackend::add_rule(std::vector<std::string> match, std::vector<std::string> responses) {
  std::lock_guard lock(mu_);
  rules_.push_back({std::move(match), std::move(responses)});
  cursor_.push_back(0);
}

std::shared_ptr<MockBackend> MockBackend::from_json(const json& script) {
  auto mock = std::make_shared<MockBackend>();
  for (const auto& r : script.value("rules", json::array())) {
    std::vector<std::string> match;
    const json& m = r.at("match");
    if (m.is_string()) match.push_back(m.get<std::string>());
    else match = m.get<std::vector<std::string>>();
    std::vector<std::string> responses;
    if (r.contains("responses")) responses = r["responses"].get<std::vector<std::string>>();
    else responses.push_back(r.at("response").get<std::string>());
    if (responses.empty()) throw LlmError(LlmError::Kind::kIo, "mock rule without responses");
    mock->add_rule(std::move(match), std::move(responses));
  }
  if (script.contains("default")) mock->set_default(script["default"].get<std::string>());
  return mock;
}

std::shared_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LlmError(LlmError::Kind::kIo, "cannot read mock script " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw LlmError(LlmError::Kind::kIo, path.string() + ": " + e.what());
  }
}

GenerationResponse MockBackend::generate(const GenerationRequest& req) {
  std::string haystack;
  for (const auto& m : req.messages) {
    haystack += m.content;
    haystack += '\n';
  }
  std::string text;
  {
    std::lock_guard lock(mu_);
    std::size_t i = 0;
    for (; i < rules_.size(); ++i) {
      const Rule& r = rules_[i];
      if (std::all_of(r.match.begin(), r.match.end(),
                      [&](const std::string& s) { return haystack.find(s) != std::string::npos; }))
        break;
    }
    if (i < rules_.size()) {
      std::size_t& c = cursor_[i];
      text = rules_[i].responses[std::min(c, rules_[i].responses.size() - 1)];
      ++c;
    } else if (default_) {
      text = *default_;
    } else {
      throw LlmError(LlmError::Kind::kMockUnmatched, "no mock rule matches the request");
    }
  }
  return {text, prompt_token_estimate(req), approx_tokens(text), 0.0, BackendKind::kMock, cache_key(req)};
}

GenerationResponse CallbackBackend::generate(const GenerationRequest& req) {
  std::string text = fn_(req);
  return {text, prompt_token_estimate(req), approx_tokens(text), 0.0, BackendKind::kMock, cache_key(req)};
}

// ---- client ----

Client::Client(std::shared_ptr<Backend> backend, ClientOptions options)
    : backend_(std::move(backend)), options_(options), in_flight_(std::clamp(options.max_in_flight, 1, 1024)) {
  if (!backend_) throw LlmError(LlmError::Kind::kInvalidRequest, "client needs a backend");
}

void Client::record_session(const std::filesystem::path& path) { recorder_ = std::make_shared<SessionRecorder>(path); }

GenerationResponse Client::generate(const GenerationRequest& req) {
  req.validate();
  for (int attempt = 0;; ++attempt) {
    if (options_.token_budget > 0 && tokens_used_.load() >= options_.token_budget)
      throw LlmError(LlmError::Kind::kBudgetExceeded,
                     "token budget of " + std::to_string(options_.token_budget) + " exhausted");
    try {
      in_flight_.acquire();
      GenerationResponse resp;
      try {
        resp = backend_->generate(req);
      } catch (...) {
        in_flight_.release();
        throw;
      }
      in_flight_.release();
      if (resp.cache_key.empty()) resp.cache_key = cache_key(req);
      tokens_used_ += resp.prompt_tokens + resp.completion_tokens;
      ++calls_;
      if (recorder_ && resp.backend != BackendKind::kReplay) recorder_->append(req, resp);
      return resp;
    } catch (const LlmError& e) {
      if (!e.retryable() || attempt >= options_.max_retries) throw;
      auto delay = options_.base_backoff * (1L << std::min(attempt, 16));
      if (e.kind() == LlmError::Kind::kRateLimited && e.retry_after_s() > 0)
        delay = std::max<std::chrono::milliseconds>(
            delay, std::chrono::milliseconds(static_cast<long>(std::ceil(e.retry_after_s() * 1000))));
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
    }
  }
}

}  // namespace atomchain
