#include "atomchain/chain.hpp"

#include <gtest/gtest.h>

using namespace atomchain;

namespace {

ChainTrace planned(int n) {
  ChainTrace t;
  t.interpretation = "i";
  std::vector<Subplan> plan;
  for (int i = 1; i <= n; ++i) plan.push_back({i, "p" + std::to_string(i)});
  t.plan = plan;
  return t;
}

StepRecord done_step(int i, StepFlag f) {
  StepRecord s;
  s.subplan = {i, "p" + std::to_string(i)};
  s.grounding = "g";
  s.extraction_text = "e";
  s.reasoning = "r";
  s.recap = "c";
  s.flag = f;
  return s;
}

bool has(const std::vector<Violation>& vs, Violation::Code c) {
  for (const auto& v : vs)
    if (v.code == c) return true;
  return false;
}

}  // namespace

TEST(Chain, StageProgression) {
  ChainTrace t;
  EXPECT_EQ(next_stage(t).kind, StageKind::kInterpretation);
  t.interpretation = "i";
  EXPECT_EQ(next_stage(t).kind, StageKind::kPlanning);
  t = planned(2);
  EXPECT_EQ(next_stage(t), (StageRequest{StageKind::kGrounding, 1}));
  StepRecord s;
  s.subplan = {1, "p1"};
  s.grounding = "g";
  t.steps.push_back(s);
  EXPECT_EQ(next_stage(t), (StageRequest{StageKind::kReasoning, 1}));
  t.steps.back().reasoning = "r";
  EXPECT_EQ(next_stage(t), (StageRequest{StageKind::kRecap, 1}));
  t.steps.back() = done_step(1, StepFlag::kTrue);
  EXPECT_EQ(next_stage(t), (StageRequest{StageKind::kGrounding, 2}));
  t.steps.push_back(done_step(2, StepFlag::kNotEnoughInfo));
  EXPECT_EQ(next_stage(t), (StageRequest{StageKind::kConclusion, 0, false}));
}

TEST(Chain, FalseFlagForcesRefuteConclusion) {
  ChainTrace t = planned(3);
  t.steps.push_back(done_step(1, StepFlag::kFalse));
  EXPECT_EQ(next_stage(t), (StageRequest{StageKind::kConclusion, 0, true}));
  t.steps.push_back(done_step(2, StepFlag::kTrue));
  auto v = validate_trace(t);
  EXPECT_TRUE(has(v, Violation::Code::kContinuedAfterRefute));
  EXPECT_THROW(next_stage(t), ChainError);
}

TEST(Chain, TerminationConsistency) {
  ChainTrace t = planned(1);
  t.steps.push_back(done_step(1, StepFlag::kFalse));
  t.conclusion = "c";
  t.label = Verdict::kSupport;
  t.termination = Termination{Termination::Kind::kEarlyRefute, ""};
  EXPECT_TRUE(has(validate_trace(t), Violation::Code::kEarlyRefuteInconsistent));
  t.label = Verdict::kRefute;
  EXPECT_TRUE(validate_trace(t).empty());
  EXPECT_EQ(next_stage(t).kind, StageKind::kDone);
}

TEST(Chain, InvalidShapes) {
  ChainTrace t;
  t.plan = std::vector<Subplan>{{1, "p"}};
  EXPECT_TRUE(has(validate_trace(t), Violation::Code::kStageOrder));
  t = planned(1);
  t.steps.push_back(done_step(1, StepFlag::kTrue));
  t.steps.push_back(done_step(2, StepFlag::kTrue));
  EXPECT_TRUE(has(validate_trace(t), Violation::Code::kStepsExceedPlan));
  t = planned(2);
  t.plan->at(1).index = 3;
  EXPECT_TRUE(has(validate_trace(t), Violation::Code::kPlanIndices));
}

TEST(Chain, EnumNamesRoundTrip) {
  for (auto v : {Verdict::kSupport, Verdict::kRefute, Verdict::kNotEnoughInfo})
    EXPECT_EQ(verdict_from_string(to_string(v)), v);
  for (auto f : {StepFlag::kTrue, StepFlag::kFalse, StepFlag::kNotEnoughInfo}) EXPECT_EQ(step_flag_from_string(to_string(f)), f);
  EXPECT_EQ(to_string(Termination::Kind::kEarlyRefute), "EARLY_REFUTE");
  EXPECT_FALSE(verdict_from_string("MAYBE"));
}

TEST(Chain, SkillHeuristic) {
  auto s = infer_skills("Comparing the row values, 2.8 is greater than 1.3 because of the trend.");
  EXPECT_TRUE(s.count(SkillTag::kNumericalAnalysis));
  EXPECT_TRUE(s.count(SkillTag::kStructureAnalysis));
  EXPECT_TRUE(s.count(SkillTag::kCausalAnalysis));
  EXPECT_TRUE(infer_skills("nothing here").empty());
}

TEST(Chain, TraceJsonRoundTrip) {
  ChainTrace t = planned(1);
  t.table_ref = "tab";
  t.claim_ref = "c1";
  t.row_counting = RowCounting::kDataRows;
  StepRecord s = done_step(1, StepFlag::kFalse);
  s.extraction.push_back({CellAddress{2, 3}, "x", Number{*Decimal::parse("1.30"), "%"}});
  s.grounded_addresses.push_back({2, 3});
  s.invoked_skills = {SkillTag::kNumericalAnalysis};
  t.steps.push_back(s);
  t.conclusion = "c";
  t.label = Verdict::kRefute;
  t.termination = Termination{Termination::Kind::kEarlyRefute, ""};
  CallUsage u;
  u.stage = StageKind::kRecap;
  u.step = 1;
  u.prompt_tokens = 10;
  u.completion_tokens = 3;
  u.cache_key = "k";
  t.usage.push_back(u);
  ChainTrace back = trace_from_json(to_json(t));
  EXPECT_EQ(back, t);
  EXPECT_EQ(back.total_prompt_tokens(), 10);
}
