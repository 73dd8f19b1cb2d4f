#include "atomchain/llm.hpp"
#include "atomchain/prompts.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace atomchain;

namespace {

PromptContext context_for(const PromptTemplate& t) {
  PromptContext ctx;
  for (const auto& in : t.inputs) ctx[in] = "VALUE-OF-" + in;
  return ctx;
}

}  // namespace

TEST(Prompts, DefaultBundleHasEveryStage) {
  const TemplateSet& set = default_templates();
  for (auto s : kChainStages) EXPECT_TRUE(set.contains(s)) << s;
  for (auto s : kFactoryStages) EXPECT_TRUE(set.contains(s)) << s;
  EXPECT_TRUE(set.contains("short"));
  EXPECT_THROW(set.at("nope"), PromptError);
}

TEST(Prompts, SerializeRoundTrip) {
  const TemplateSet& set = default_templates();
  EXPECT_EQ(parse_templates(serialize_templates(set)), set);
}

TEST(Prompts, RenderSubstitutesInputs) {
  const TemplateSet& set = default_templates();
  auto r = set.render("interpret", context_for(set.at("interpret")));
  EXPECT_NE(r.user.find("VALUE-OF-claim"), std::string::npos);
  EXPECT_NE(r.user.find("VALUE-OF-table"), std::string::npos);
  EXPECT_EQ(r.user.find("<claim>"), std::string::npos);
}

TEST(Prompts, ContextMustMatchInputs) {
  const TemplateSet& set = default_templates();
  PromptContext ctx = context_for(set.at("plan"));
  ctx.erase("interpretation");
  try {
    set.render("plan", ctx);
    FAIL();
  } catch (const PromptError& e) {
    EXPECT_EQ(e.kind(), PromptError::Kind::kMissingPlaceholder);
    EXPECT_EQ(e.name(), "interpretation");
  }
  EXPECT_THROW(set.render("ghost", {}), PromptError);
}

TEST(Prompts, UndeclaredPlaceholderRejected) {
  PromptTemplate t{"x", {"claim"}, {}, "sys", "uses <claim> and <table>"};
  try {
    TemplateSet({t}, {});
    FAIL();
  } catch (const PromptError& e) {
    EXPECT_EQ(e.kind(), PromptError::Kind::kUndeclaredPlaceholder);
    EXPECT_EQ(e.name(), "table");
  }
}

TEST(Prompts, MalformedBundleReportsLine) {
  try {
    parse_templates("=== STAGE a | inputs: claim | outputs:\nno system marker\n");
    FAIL();
  } catch (const PromptError& e) {
    EXPECT_EQ(e.kind(), PromptError::Kind::kParseError);
    EXPECT_GT(e.line(), 0);
  }
}

// The test backends dispatch on stage markers, so each rendered stage must
// resolve to itself.
TEST(Prompts, StageMarkersAreUnambiguous) {
  const TemplateSet& set = default_templates();
  std::set<std::string> stages(std::begin(kChainStages), std::end(kChainStages));
  stages.insert(std::begin(kFactoryStages), std::end(kFactoryStages));
  stages.insert("short");
  for (const auto& s : stages) {
    auto r = set.render(s, context_for(set.at(s)));
    GenerationRequest req;
    req.messages = {{"system", r.system}, {"user", r.user}};
    EXPECT_EQ(support::stage_of(req), s);
  }
  for (std::string judge : {"judge_step", "judge_redundancy", "judge_alignment"}) {
    auto r = set.render(judge, context_for(set.at(judge)));
    GenerationRequest req;
    req.messages = {{"system", r.system}, {"user", r.user}};
    EXPECT_EQ(support::stage_of(req), "judge");
  }
}

TEST(Prompts, FileRoundTrip) {
  support::TempDir dir("prompts");
  save_templates(default_templates(), dir / "t.txt");
  EXPECT_EQ(load_templates(dir / "t.txt"), default_templates());
}
