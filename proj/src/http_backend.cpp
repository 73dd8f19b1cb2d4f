#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "atomchain/llm.hpp"

#include <chrono>
#include <cstdlib>

namespace atomchain {

using nlohmann::json;

LiveBackend::LiveBackend(LiveOptions options) : options_(std::move(options)) {}

GenerationResponse LiveBackend::generate(const GenerationRequest& req) {
  httplib::Client cli(options_.base_url);
  if (!cli.is_valid()) throw LlmError(LlmError::Kind::kTransport, "invalid endpoint " + options_.base_url);
  cli.set_connection_timeout(options_.timeout);
  cli.set_read_timeout(options_.timeout);
  cli.set_write_timeout(options_.timeout);

  httplib::Headers headers;
  if (const char* key = std::getenv(options_.api_key_env.c_str()); key && *key)
    headers.emplace("Authorization", std::string("Bearer ") + key);

  json body = {{"model", req.model_id}, {"temperature", req.temperature}, {"top_p", req.top_p},
               {"max_tokens", req.max_tokens}};
  body["messages"] = json::array();
  for (const auto& m : req.messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  if (req.top_k) body["top_k"] = *req.top_k;
  if (req.seed) body["seed"] = *req.seed;

  auto t0 = std::chrono::steady_clock::now();
  auto res = cli.Post(options_.path, headers, body.dump(), "application/json");
  double latency = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  if (!res) {
    auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout)
      throw LlmError(LlmError::Kind::kTimeout, "request timed out: " + httplib::to_string(err));
    throw LlmError(LlmError::Kind::kTransport, "transport error: " + httplib::to_string(err));
  }
  if (res->status == 429) {
    double after = 0;
    if (res->has_header("Retry-After")) {
      try {
        after = std::stod(res->get_header_value("Retry-After"));
      } catch (const std::exception&) {
      }
    }
    throw LlmError(LlmError::Kind::kRateLimited, "rate limited", {}, after);
  }
  if (res->status >= 500) throw LlmError(LlmError::Kind::kTransport, "server error " + std::to_string(res->status));
  if (res->status != 200)
    throw LlmError(LlmError::Kind::kInvalidRequest, "HTTP " + std::to_string(res->status) + ": " + res->body);

  GenerationResponse out;
  try {
    json j = json::parse(res->body);
    out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    long prompt = 0, completion = 0;
    for (const auto& m : req.messages) prompt += approx_tokens(m.content);
    completion = approx_tokens(out.text);
    if (j.contains("usage") && j["usage"].is_object()) {
      prompt = j["usage"].value("prompt_tokens", prompt);
      completion = j["usage"].value("completion_tokens", completion);
    }
    out.prompt_tokens = prompt;
    out.completion_tokens = completion;
  } catch (const json::exception& e) {
    throw LlmError(LlmError::Kind::kMalformedResponse, std::string("malformed response: ") + e.what());
  }
  out.latency_ms = latency;
  out.backend = BackendKind::kLive;
  out.cache_key = cache_key(req);
  return out;
}

}  // namespace atomchain
