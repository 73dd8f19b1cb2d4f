#include "atomchain/parsers.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace atomchain;

TEST(Plans, ParsesAndRendersCanonically) {
  auto plans = parse_plans("intro [Plan 1 Start] first [Plan 1 End]\n[ plan  2 start ]second[Plan 2 End] tail");
  ASSERT_EQ(plans.size(), 2u);
  EXPECT_EQ(plans[0].text, "first");
  EXPECT_EQ(plans[1].index, 2);
  EXPECT_EQ(parse_plans(render_plans(plans)), plans);
}

TEST(Plans, ErrorsCarryIndices) {
  try {
    parse_plans("[Plan 1 Start]a[Plan 1 End][Plan 3 Start]b[Plan 3 End]");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::kNonContiguousIndices);
    EXPECT_EQ(e.indices(), (std::vector<int>{1, 3}));
  }
  try {
    parse_plans("[Plan 1 Start]a");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::kUnterminatedPlan);
    EXPECT_EQ(e.indices(), (std::vector<int>{1}));
  }
  try {
    parse_plans("just prose");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::kNoPlansFound);
  }
}

TEST(Tagged, NestingAndEscapedClose) {
  EXPECT_EQ(parse_tagged("x <g> a <g>b</g> c </g>", "g"), "a <g>b</g> c");
  EXPECT_EQ(parse_tagged("<grounding>\n cell \n<\\/grounding>", "grounding"), "cell");
  try {
    parse_tagged("none", "g");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::kMissingOpenTag);
  }
  try {
    parse_tagged("<g> open", "g");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::kMissingCloseTag);
  }
}

TEST(Flags, ValuesTypoAndLastWins) {
  std::vector<ParseWarning> w;
  auto f = parse_flag("<flag>Flase</flag>", &w);
  ASSERT_TRUE(f);
  EXPECT_EQ(f->value, StepFlag::kFalse);
  EXPECT_TRUE(f->typo);
  EXPECT_EQ(w, (std::vector<ParseWarning>{ParseWarning::kTypoFlase}));

  w.clear();
  f = parse_flag("<flag>True</flag> then <flag>not  enough information.</flag>", &w);
  EXPECT_EQ(f->value, StepFlag::kNotEnoughInfo);
  EXPECT_EQ(w, (std::vector<ParseWarning>{ParseWarning::kMultipleFlags}));

  std::string text = "pre <flag>TRUE<\\/flag> post";
  f = parse_flag(text);
  EXPECT_EQ(f->value, StepFlag::kTrue);
  EXPECT_EQ(text.substr(f->begin, f->end - f->begin), "<flag>TRUE<\\/flag>");
  EXPECT_FALSE(parse_flag("<flag>maybe</flag>"));
  EXPECT_FALSE(parse_flag("no flag"));
}

TEST(Bullets, ParseAndRoundTrip) {
  std::string text =
      "### Claim Aspects\nstuff\n### Claims Details\n- Trend: values rise\n  across rows\n* plain claim\n...\n### Other\n- no";
  auto b = parse_claim_bullets(text);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[0], (ClaimBullet{"Trend", "values rise across rows"}));
  EXPECT_EQ(b[1], (ClaimBullet{"", "plain claim"}));
  EXPECT_EQ(parse_claim_bullets(render_claim_bullets(b)), b);
  EXPECT_THROW(parse_claim_bullets("- x: y"), ParseError);
}

TEST(Sections, LastHeaderWins) {
  EXPECT_EQ(parse_section("### Claim\nold\n### Claim\r\nnew one\r\n### Notes\nx", "### Claim"), "new one");
  EXPECT_THROW(parse_section("nothing", "### Claim"), ParseError);
}

TEST(Grounding, OrdinalsAndCounting) {
  Table t = support::perf_table();
  auto o = parse_grounded_ordinals(
      "The cell at the intersection of the 9th row and the 5th column. Also the intersection of the 8th row and the "
      "5th column.");
  EXPECT_EQ(o, (std::vector<std::pair<int, int>>{{9, 5}, {8, 5}}));
  auto facts = extract_cell_facts("The test perp of \"CS-only-disc\" is 1.3.", t);
  ASSERT_EQ(facts.size(), 1u);
  ASSERT_TRUE(facts[0].address);
  EXPECT_EQ(*facts[0].address, (CellAddress{9, 5}));
  EXPECT_EQ(facts[0].value->amount.to_string(), "1.3");
  EXPECT_EQ(infer_row_counting({{8, 5}}, facts, t), RowCounting::kDataRows);
  EXPECT_EQ(infer_row_counting({{9, 5}}, facts, t), RowCounting::kAbsolute);
  EXPECT_FALSE(infer_row_counting({}, facts, t));
  EXPECT_EQ(to_addresses({{8, 5}, {40, 1}}, t, RowCounting::kDataRows), (std::vector<CellAddress>{{9, 5}}));
}

TEST(Facts, UnquotedLabelsAndHeaders) {
  Table t = support::xlpe_table();
  auto facts = extract_cell_facts("For 12.5 wt% VS the Total water (mg/g) is 13.0 mg/g.", t);
  ASSERT_EQ(facts.size(), 1u);
  ASSERT_TRUE(facts[0].address);
  EXPECT_EQ(*facts[0].address, (CellAddress{4, 4}));
  EXPECT_EQ(facts[0].value->amount.to_string(), "13.0");
}

// Random byte soup must never crash a parser; only ParseError may escape.
TEST(Parsers, SmallFuzzNeverCrashes) {
  std::mt19937_64 rng(7);
  const std::string alphabet = "[]<>/\\ PlanStartEnd123flagTrueFlase#:-*\n.";
  Table t = support::perf_table();
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    int len = static_cast<int>(rng() % 80);
    for (int k = 0; k < len; ++k) s += alphabet[rng() % alphabet.size()];
    try { parse_plans(s); } catch (const ParseError&) {}
    try { parse_tagged(s, "flag"); } catch (const ParseError&) {}
    try { parse_claim_bullets(s); } catch (const ParseError&) {}
    parse_flag(s);
    extract_cell_facts(s, t);
    parse_grounded_ordinals(s);
  }
  SUCCEED();
}
