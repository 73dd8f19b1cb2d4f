#include "atomchain/orchestrator.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <atomic>

using namespace atomchain;

namespace {

Claim scripted_claim(const std::string& id, const support::ChainScript& s, std::optional<Verdict> gold = std::nullopt,
                     const std::string& domain = "ml") {
  return Claim{id, "Scripted claim " + s.tag(), gold, domain, std::nullopt};
}

support::ChainScript script(int n, std::vector<char> flags, char final_flag) {
  return support::ChainScript{n, std::move(flags), final_flag};
}

}  // namespace

TEST(Orchestrator, FollowsScriptedFlags) {
  Client client(support::scripted_backend());
  Orchestrator orch(client, ChainConfig{});
  Table t = support::xlpe_table();
  for (auto s : {script(1, {'T'}, 'T'), script(3, {'T', 'F', 'T'}, 'T'), script(2, {'N', 'T'}, 'N'), script(2, {'T', 'T'}, 'F')}) {
    auto want = support::expected_outcome(s);
    auto rec = orch.verify(t, scripted_claim("c", s));
    EXPECT_EQ(rec.label, want.label) << s.tag();
    EXPECT_EQ(rec.trace.termination->kind, want.termination) << s.tag();
    EXPECT_EQ(static_cast<int>(rec.trace.steps.size()), want.steps) << s.tag();
    EXPECT_EQ(static_cast<int>(rec.trace.usage.size()), want.calls) << s.tag();
    EXPECT_TRUE(validate_trace(rec.trace).empty());
  }
}

TEST(Orchestrator, AppendixReplayRefutesEarly) {
  Client client(support::appendix_backend());
  ChainConfig cfg;
  cfg.seed = 1;
  Orchestrator orch(client, cfg);
  auto rec = orch.verify(support::perf_table(), Claim{"appendix", support::kAppendixClaim, Verdict::kRefute, "ml", {}}, "perf");
  EXPECT_EQ(rec.label, Verdict::kRefute);
  EXPECT_EQ(rec.trace.termination->kind, Termination::Kind::kEarlyRefute);
  EXPECT_EQ(rec.trace.steps.size(), 1u);
  EXPECT_EQ(rec.trace.usage.size(), 6u);
  EXPECT_EQ(rec.trace.row_counting, RowCounting::kDataRows);
}

TEST(Orchestrator, ParseFailureIsRegeneratedWithRepairMessage) {
  std::atomic<int> plan_calls{0};
  std::string second_request;
  auto backend = std::make_shared<CallbackBackend>([&](const GenerationRequest& req) {
    if (support::stage_of(req) == "plan" && plan_calls++ == 0) return std::string("no plan markers here");
    if (support::stage_of(req) == "plan") second_request = req.messages.back().content;
    return support::scripted_reply(req);
  });
  Client client(backend);
  Orchestrator orch(client, ChainConfig{});
  auto rec = orch.verify(support::xlpe_table(), scripted_claim("c", script(1, {'T'}, 'T')));
  EXPECT_EQ(rec.label, Verdict::kSupport);
  EXPECT_EQ(rec.attempts.at("plan"), 2);
  EXPECT_NE(second_request.find("could not be parsed"), std::string::npos);
  EXPECT_EQ(rec.trace.usage[1].attempt, 1);
  EXPECT_EQ(rec.trace.usage[2].attempt, 2);
}

TEST(Orchestrator, RetryBudgetExhaustedAborts) {
  auto backend = std::make_shared<CallbackBackend>([](const GenerationRequest& req) {
    if (support::stage_of(req) == "cell") return std::string("<grounding>never closed");
    return support::scripted_reply(req);
  });
  Client client(backend);
  ChainConfig cfg;
  cfg.parse_retries = 2;
  Orchestrator orch(client, cfg);
  auto rec = orch.verify(support::xlpe_table(), scripted_claim("c", script(2, {'T', 'T'}, 'T')));
  EXPECT_EQ(rec.label, Verdict::kNotEnoughInfo);
  EXPECT_EQ(rec.trace.termination->kind, Termination::Kind::kAborted);
  EXPECT_EQ(rec.attempts.at("cell"), 3);
  EXPECT_NE(rec.trace.termination->reason.find("cell"), std::string::npos);
}

TEST(Orchestrator, PlanCapAborts) {
  Client client(support::scripted_backend());
  ChainConfig cfg;
  cfg.max_plans = 2;
  Orchestrator orch(client, cfg);
  auto rec = orch.verify(support::xlpe_table(), scripted_claim("c", script(3, {'T', 'T', 'T'}, 'T')));
  EXPECT_EQ(rec.trace.termination->kind, Termination::Kind::kAborted);
  EXPECT_EQ(rec.trace.termination->reason.rfind("PlanTooLong", 0), 0u);
}

TEST(Orchestrator, MultipathMajority) {
  Client client(support::scripted_backend());
  Orchestrator orch(client, ChainConfig{});
  MultipathOptions opt;
  opt.k = 3;
  opt.short_paths = 1;
  auto r = orch.multipath_verify(support::xlpe_table(), scripted_claim("c", script(1, {'T'}, 'T')), opt);
  EXPECT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.records[2].style, "short");
  EXPECT_EQ(r.agreed_label, Verdict::kSupport);
  EXPECT_FALSE(r.needs_adjudication);
  EXPECT_EQ(majority_label({Verdict::kSupport, Verdict::kRefute, Verdict::kNotEnoughInfo}), std::nullopt);
  opt.k = 2;
  EXPECT_THROW(orch.multipath_verify(support::xlpe_table(), scripted_claim("c", script(1, {'T'}, 'T')), opt), ConfigError);
}

TEST(Orchestrator, RecordJsonRoundTrip) {
  Client client(support::scripted_backend());
  Orchestrator orch(client, ChainConfig{});
  auto rec = orch.verify(support::xlpe_table(), scripted_claim("c", script(2, {'T', 'F'}, 'T'), Verdict::kRefute), "xlpe");
  auto back = record_from_json(to_json(rec));
  EXPECT_EQ(back.trace, rec.trace);
  EXPECT_EQ(back.gold, rec.gold);
  EXPECT_EQ(back.attempts, rec.attempts);
  EXPECT_EQ(to_json(rec, false).count("timing"), 0u);
}

TEST(Orchestrator, BatchResumesWithoutDuplicates) {
  support::TempDir dir("batch");
  auto table = std::make_shared<const Table>(support::xlpe_table());
  std::vector<BatchItem> items;
  for (int i = 0; i < 6; ++i) {
    auto s = script(1, {i % 2 ? 'F' : 'T'}, 'T');
    items.push_back({scripted_claim("c" + std::to_string(i), s, Verdict::kSupport, i < 3 ? "ml" : "finance"), table, "t"});
  }
  Client client(support::scripted_backend());
  Orchestrator orch(client, ChainConfig{});
  BatchOptions opt;
  opt.output = dir / "records.jsonl";
  opt.concurrency = 3;
  opt.max_new_records = 4;
  auto first = orch.batch_verify(items, opt);
  EXPECT_EQ(first.newly_computed, 4);
  opt.max_new_records.reset();
  auto second = orch.batch_verify(items, opt);
  EXPECT_EQ(second.newly_computed, 2);
  EXPECT_EQ(second.skipped, 4);
  EXPECT_EQ(second.total_records, 6);
  auto recs = load_records(opt.output);
  ASSERT_EQ(recs.size(), 6u);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(recs[static_cast<std::size_t>(i)].claim_id, "c" + std::to_string(i));
  // Even-indexed claims support, odd ones refute early; gold is SUPPORT.
  EXPECT_EQ(second.per_domain.at("ml").correct, 2);
  EXPECT_EQ(second.per_domain.at("finance").correct, 1);
  EXPECT_EQ(second.overall.scored, 6);
}

TEST(Orchestrator, NeiPolicyChangesDenominator) {
  VerificationRecord a, b;
  a.claim_id = "a";
  a.domain = "ml";
  a.gold = Verdict::kSupport;
  a.label = Verdict::kSupport;
  b = a;
  b.claim_id = "b";
  b.label = Verdict::kNotEnoughInfo;
  auto wrong = summarize({a, b}, NeiPolicy::kCountAsWrong);
  auto excl = summarize({a, b}, NeiPolicy::kExclude);
  EXPECT_EQ(wrong.overall.scored, 2);
  EXPECT_EQ(excl.overall.scored, 1);
  EXPECT_EQ(excl.overall.nei, 1);
}

TEST(Orchestrator, ConfigValidation) {
  ChainConfig cfg;
  cfg.temperature = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = ChainConfig{};
  cfg.max_plans = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  Client client(support::scripted_backend());
  Orchestrator orch(client, ChainConfig{});
  EXPECT_THROW(orch.verify(support::xlpe_table(), Claim{"x", "  ", {}, "", {}}), ConfigError);
}
