#include "atomchain/llm.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <atomic>

using namespace atomchain;

namespace {

GenerationRequest request(const std::string& user) {
  GenerationRequest r;
  r.model_id = "m";
  r.messages = {{"system", "sys"}, {"user", user}};
  return r;
}

// Fails the first `failures` calls with the given error kind.
class FlakyBackend : public Backend {
 public:
  FlakyBackend(int failures, LlmError::Kind kind) : failures_(failures), kind_(kind) {}
  GenerationResponse generate(const GenerationRequest&) override {
    if (calls++ < failures_) throw LlmError(kind_, "flaky");
    return {"ok", 1, 1, 0, BackendKind::kMock, ""};
  }
  std::atomic<int> calls{0};

 private:
  int failures_;
  LlmError::Kind kind_;
};

}  // namespace

TEST(Llm, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Llm, CacheKeyDependsOnRequestContent) {
  auto a = request("hello"), b = request("hello");
  EXPECT_EQ(cache_key(a), cache_key(b));
  b.seed = 3;
  EXPECT_NE(cache_key(a), cache_key(b));
  b = request("hello!");
  EXPECT_NE(cache_key(a), cache_key(b));
  EXPECT_EQ(request_from_json(to_json(a)), a);
}

TEST(Llm, RequestValidation) {
  auto r = request("x");
  r.top_p = 0;
  EXPECT_THROW(r.validate(), LlmError);
  r = request("x");
  r.messages[0].role = "tool";
  EXPECT_THROW(r.validate(), LlmError);
  r.messages.clear();
  EXPECT_THROW(r.validate(), LlmError);
}

TEST(Llm, MockRulesWalkAndRepeat) {
  auto mock = MockBackend::from_json(nlohmann::json::parse(R"({
    "rules": [{"match": ["alpha", "beta"], "responses": ["one", "two"]},
              {"match": "alpha", "response": "solo"}],
    "default": "fallback"})"));
  EXPECT_EQ(mock->generate(request("alpha beta")).text, "one");
  EXPECT_EQ(mock->generate(request("beta alpha")).text, "two");
  EXPECT_EQ(mock->generate(request("alpha beta")).text, "two");
  EXPECT_EQ(mock->generate(request("alpha")).text, "solo");
  EXPECT_EQ(mock->generate(request("zzz")).text, "fallback");
  MockBackend strict;
  try {
    strict.generate(request("x"));
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), LlmError::Kind::kMockUnmatched);
  }
}

TEST(Llm, RecordThenReplay) {
  support::TempDir dir("llm");
  auto mock = std::make_shared<MockBackend>();
  mock->add_rule({"q"}, {"answer"});
  {
    Client c(mock);
    c.record_session(dir / "s.jsonl");
    EXPECT_EQ(c.generate(request("q1")).text, "answer");
    EXPECT_EQ(c.generate(request("q2")).text, "answer");
  }
  auto entries = load_session(dir / "s.jsonl");
  ASSERT_EQ(entries.size(), 2u);
  Client replay(std::make_shared<ReplayBackend>(entries));
  auto r = replay.generate(request("q2"));
  EXPECT_EQ(r.text, "answer");
  EXPECT_EQ(r.backend, BackendKind::kReplay);
  try {
    replay.generate(request("q3"));
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), LlmError::Kind::kReplayMiss);
    EXPECT_EQ(e.key(), cache_key(request("q3")));
  }
  Client lenient(std::make_shared<ReplayBackend>(entries, false, mock));
  EXPECT_EQ(lenient.generate(request("q3")).text, "answer");
  EXPECT_TRUE(load_session(dir / "missing.jsonl").empty());
}

TEST(Llm, RetriesTransientErrors) {
  ClientOptions opt;
  opt.base_backoff = std::chrono::milliseconds(0);
  opt.max_retries = 2;
  auto flaky = std::make_shared<FlakyBackend>(2, LlmError::Kind::kTimeout);
  Client c(flaky, opt);
  EXPECT_EQ(c.generate(request("x")).text, "ok");
  EXPECT_EQ(flaky->calls.load(), 3);

  auto hard = std::make_shared<FlakyBackend>(5, LlmError::Kind::kTimeout);
  Client c2(hard, opt);
  EXPECT_THROW(c2.generate(request("x")), LlmError);
  EXPECT_EQ(hard->calls.load(), 3);

  auto fatal = std::make_shared<FlakyBackend>(1, LlmError::Kind::kInvalidRequest);
  Client c3(fatal, opt);
  EXPECT_THROW(c3.generate(request("x")), LlmError);
  EXPECT_EQ(fatal->calls.load(), 1);
}

TEST(Llm, TokenBudgetStopsCalls) {
  ClientOptions opt;
  opt.token_budget = 3;
  auto mock = std::make_shared<MockBackend>();
  mock->set_default("a b c d");
  Client c(mock, opt);
  c.generate(request("x"));
  try {
    c.generate(request("x"));
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), LlmError::Kind::kBudgetExceeded);
  }
  EXPECT_EQ(c.calls(), 1);
}

TEST(Llm, ApproxTokens) {
  EXPECT_EQ(approx_tokens(""), 0);
  EXPECT_EQ(approx_tokens("  a  b\nc "), 3);
}
