#include "atomchain/table.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace atomchain;

TEST(Table, ParsesPipeTextAndSkipsRules) {
  std::vector<std::string> warnings;
  Table t = parse_table("| a | b |\n|---|---|\n| x | 1.5 |\nnot a row\n", &warnings);
  EXPECT_EQ(t.row_count(), 2);
  EXPECT_EQ(t.col_count(), 2);
  EXPECT_EQ(warnings.size(), 1u);  // the rule line is skipped silently
  ASSERT_TRUE(get_cell(t, {2, 2}).number());
  EXPECT_EQ(get_cell(t, {2, 2}).number()->amount.to_string(), "1.5");
}

TEST(Table, PadsRaggedRows) {
  std::vector<std::string> warnings;
  Table t = parse_table("| a | b | c |\n| x |\n", &warnings);
  EXPECT_EQ(t.col_count(), 3);
  EXPECT_TRUE(get_cell(t, {2, 3}).is_empty());
  EXPECT_FALSE(warnings.empty());
}

TEST(Table, EmptyInputIsAnError) {
  EXPECT_THROW(parse_table(""), TableError);
  EXPECT_THROW(parse_table("no pipes here"), TableError);
}

TEST(Table, RenderRoundTrips) {
  Table t("cap", {{"h1", "h|2"}, {"r", "[BOLD] 3"}});
  Table back = parse_table(render_table(t));
  back.set_caption("cap");
  EXPECT_EQ(back, t);
}

TEST(Table, NumericCellFormats) {
  EXPECT_EQ(parse_numeric("[BOLD] 13.0")->amount.to_string(), "13.0");
  EXPECT_EQ(parse_numeric("12%")->unit, "%");
  EXPECT_EQ(parse_numeric("1,234.5")->amount.value(), Rational(12345, 10));
  EXPECT_EQ(parse_numeric("(3.2)")->amount.value(), Rational(-32, 10));
  EXPECT_EQ(parse_numeric("$40")->amount.value(), Rational(40));
  EXPECT_EQ(parse_numeric("5 mg/g")->unit, "mg/g");
  EXPECT_FALSE(parse_numeric("CellTag"));
  EXPECT_FALSE(parse_numeric("n/a"));
}

TEST(Table, XlpeFixture) {
  Table t = support::xlpe_table();
  EXPECT_EQ(t.row_count(), 4);
  EXPECT_EQ(t.col_count(), 4);
  EXPECT_NE(t.caption().find("XLPE/silica"), std::string::npos);
  EXPECT_FALSE(get_cell(t, {2, 2}).number());  // CellTag
  EXPECT_TRUE(get_cell(t, {4, 4}).emphasized());
  EXPECT_EQ(get_cell(t, {4, 4}).number()->amount.to_string(), "13.0");
}

TEST(Table, LabelLookup) {
  Table t = support::perf_table();
  EXPECT_EQ(find_row_by_label(t, "CS-only-disc"), 9);
  EXPECT_EQ(find_row_by_label(t, "fine-tuned-disc"), 10);
  EXPECT_EQ(find_col_by_header(t, "test perp"), 5);
  EXPECT_THROW(find_row_by_label(t, "missing"), TableError);
  Table dup("", {{"h", "v"}, {"a", "1"}, {"a", "2"}});
  try {
    find_row_by_label(dup, "a");
    FAIL();
  } catch (const TableError& e) {
    EXPECT_EQ(e.kind(), TableError::Kind::kAmbiguous);
  }
}

TEST(Table, RowCountingConventions) {
  Table t = support::perf_table();
  EXPECT_EQ(t.absolute_row(8, RowCounting::kDataRows), 9);
  EXPECT_EQ(t.absolute_row(8, RowCounting::kAbsolute), 8);
}

TEST(Table, JsonRoundTrip) {
  Table t = support::xlpe_table();
  EXPECT_EQ(table_from_json(table_to_json(t)), t);
}
