#include "atomchain/oracle.hpp"
#include "naive_eval.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace atomchain;

namespace {

OracleError::Kind error_of(const std::string& src, const Table& t) {
  try {
    eval(parse_check(src), t);
  } catch (const OracleError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for " << src;
  return OracleError::Kind::kSyntaxError;
}

}  // namespace

TEST(Oracle, XlpeTotalsAgreeAtDisplayPrecision) {
  Table t = support::xlpe_table();
  auto v = eval(parse_check("(approx (add (cell \"12.5 wt% VS\" \"Freezable water (mg/g)\") (cell \"12.5 wt% VS\" "
                            "\"Non-frozen water (mg/g)\")) (cell \"12.5 wt% VS\" \"Total water (mg/g)\"))"),
                t);
  ASSERT_TRUE(v.is_bool());
  EXPECT_TRUE(v.truth());
  EXPECT_EQ(v.evidence.size(), 3u);
  EXPECT_EQ(v.evidence[0].address, (CellAddress{4, 2}));
}

TEST(Oracle, PerplexityComparison) {
  Table t = support::perf_table();
  EXPECT_TRUE(eval(parse_check("(> (cell \"Fine-Tuned-disc\" \"test perp\") (cell \"CS-only-disc\" \"test perp\"))"), t).truth());
  EXPECT_FALSE(eval(parse_check("(< (cell \"Fine-Tuned-disc\" \"test perp\") (cell \"CS-only-disc\" \"test perp\"))"), t).truth());
  auto d = eval(parse_check("(sub (cell 10 5) (cell 9 5))"), t);
  EXPECT_EQ(d.number().amount.to_string(), "1.5");
}

TEST(Oracle, AggregatesAndTrends) {
  Table t = support::xlpe_table();
  EXPECT_EQ(eval(parse_check("(sum (col 4 2 4))"), t).number().amount.to_string(), "17.1");
  EXPECT_EQ(eval(parse_check("(count (row 3 2 4))"), t).number().amount.to_string(), "3");
  EXPECT_TRUE(eval(parse_check("(increasing (col 4 3 4))"), t).truth());
  EXPECT_TRUE(eval(parse_check("(correlated (col 3 2 4) (col 4 2 4))"), t).truth());
  EXPECT_EQ(eval(parse_check("(pct_change (lit 4) (lit 5))"), t).number().unit, "%");
}

TEST(Oracle, TypedErrors) {
  Table t = support::xlpe_table();
  EXPECT_EQ(error_of("(cell 2 2)", t), OracleError::Kind::kNonNumericCell);
  EXPECT_EQ(error_of("(div (lit 1) (lit 0))", t), OracleError::Kind::kDivisionByZero);
  EXPECT_EQ(error_of("(cell 9 2)", t), OracleError::Kind::kRegionOutOfBounds);
  EXPECT_EQ(error_of("(cell \"nope\" 2)", t), OracleError::Kind::kLabelNotFound);
  EXPECT_EQ(error_of("(increasing (cells (cell 3 2)))", t), OracleError::Kind::kDegenerateSeries);
  EXPECT_EQ(error_of("(add (lit 1%) (lit 2 \"mg\"))", t), OracleError::Kind::kUnitMismatch);
  try {
    parse_check("(and (lit 1) (> (lit 1) (lit 2)))");
    FAIL();
  } catch (const OracleError& e) {
    EXPECT_EQ(e.kind(), OracleError::Kind::kTypeError);
    EXPECT_EQ(e.path(), "/0");
  }
  try {
    parse_check("(> (lit 1) (lit 2)");
    FAIL();
  } catch (const OracleError& e) {
    EXPECT_EQ(e.kind(), OracleError::Kind::kSyntaxError);
  }
}

TEST(Oracle, ExtractionChecks) {
  Table t = support::xlpe_table();
  std::vector<ExtractedFact> facts = {
      {CellAddress{4, 4}, "total", Number{*Decimal::parse("13"), ""}},
      {CellAddress{4, 4}, "total", Number{*Decimal::parse("12.9"), ""}},
      {CellAddress{2, 2}, "tag", Number{*Decimal::parse("1"), ""}},
      {std::nullopt, "loose", std::nullopt},
  };
  auto c = check_extraction(facts, t);
  EXPECT_EQ(c[0].status, ExtractionCheck::Status::kMatch);
  EXPECT_EQ(c[1].status, ExtractionCheck::Status::kMismatch);
  EXPECT_EQ(c[2].status, ExtractionCheck::Status::kUnverifiable);
  EXPECT_EQ(c[3].status, ExtractionCheck::Status::kUnverifiable);
}

TEST(Oracle, PrintParseRoundTripOnRandomTrees) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    auto g = naive::random_grid(rng);
    Expr e = naive::random_bool_expr(rng, g, 3);
    EXPECT_EQ(parse_check(print_check(e)), e) << print_check(e);
  }
}

TEST(Oracle, AgreesWithNaiveEvaluatorOnSmallSample) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    auto g = naive::random_grid(rng);
    Table t = naive::to_table(g);
    Expr e = naive::random_bool_expr(rng, g, 2);
    auto want = naive::evaluate(e, g);
    try {
      auto got = eval(e, t);
      ASSERT_EQ(want.kind, naive::Result::Kind::kBool) << print_check(e) << " naive: " << want.error;
      EXPECT_EQ(got.truth(), want.truth) << print_check(e);
    } catch (const OracleError& err) {
      ASSERT_EQ(want.kind, naive::Result::Kind::kError) << print_check(e) << " oracle: " << err.what();
      EXPECT_EQ(std::string(to_string(err.kind())), want.error) << print_check(e);
    }
  }
}
