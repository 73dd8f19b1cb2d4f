#pragma once

#include "atomchain/decimal.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace atomchain {

/// Marker prefix for emphasized cells in the pipe-delimited wire format.
inline constexpr std::string_view kBoldMarker = "[BOLD]";

struct Number {
  Decimal amount;
  std::string unit;  // "" when unitless, "%" for percentages

  friend bool operator==(const Number&, const Number&) = default;
};

struct EmptyValue {
  friend bool operator==(const EmptyValue&, const EmptyValue&) = default;
};

using CellValue = std::variant<EmptyValue, Number, std::string>;

class Cell {
 public:
  Cell() = default;
  /// Classifies a trimmed field. The bold marker, if any, is kept in raw_text.
  static Cell from_raw(std::string raw);

  const std::string& raw_text() const { return raw_; }
  /// Cell text with the bold marker removed.
  std::string_view text() const;
  bool emphasized() const { return emphasized_; }
  const CellValue& value() const { return value_; }

  bool is_empty() const { return std::holds_alternative<EmptyValue>(value_); }
  const Number* number() const { return std::get_if<Number>(&value_); }

  friend bool operator==(const Cell& a, const Cell& b) { return a.raw_ == b.raw_; }

 private:
  std::string raw_;
  CellValue value_;
  bool emphasized_ = false;
};

/// 1-indexed, absolute from the physical first line (header included).
struct CellAddress {
  int row = 1;
  int col = 1;
  friend bool operator==(const CellAddress&, const CellAddress&) = default;
  friend auto operator<=>(const CellAddress&, const CellAddress&) = default;
};

std::string to_string(const CellAddress& a);

/// How a row ordinal in model prose is counted.
enum class RowCounting {
  kAbsolute,  // the first physical line (header) is row 1
  kDataRows,  // the first row after the header rows is row 1
};

std::string_view to_string(RowCounting c);
std::optional<RowCounting> row_counting_from_string(std::string_view s);

class TableError : public std::runtime_error {
 public:
  enum class Kind { kEmptyInput, kNoDelimitedLines, kOutOfRange, kNotFound, kAmbiguous, kInvalidShape };

  TableError(Kind kind, std::string message, std::vector<std::string> candidates = {})
      : std::runtime_error(std::move(message)), kind_(kind), candidates_(std::move(candidates)) {}

  Kind kind() const { return kind_; }
  const std::vector<std::string>& candidates() const { return candidates_; }

 private:
  Kind kind_;
  std::vector<std::string> candidates_;
};

class Table {
 public:
  Table() = default;
  /// Builds a table from raw field text. Rows must be rectangular and non-empty.
  Table(std::string caption, const std::vector<std::vector<std::string>>& rows, int header_row_count = 1);

  const std::string& caption() const { return caption_; }
  void set_caption(std::string caption) { caption_ = std::move(caption); }
  int row_count() const { return static_cast<int>(rows_.size()); }
  int col_count() const { return rows_.empty() ? 0 : static_cast<int>(rows_.front().size()); }
  int header_row_count() const { return header_rows_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }

  bool contains(const CellAddress& a) const {
    return a.row >= 1 && a.col >= 1 && a.row <= row_count() && a.col <= col_count();
  }

  /// Converts a counted row ordinal to an absolute row index.
  int absolute_row(int counted, RowCounting counting) const;

  friend bool operator==(const Table& a, const Table& b) {
    return a.caption_ == b.caption_ && a.header_rows_ == b.header_rows_ && a.rows_ == b.rows_;
  }

 private:
  std::string caption_;
  std::vector<std::vector<Cell>> rows_;
  int header_rows_ = 1;
};

/// Parses pipe-delimited table text. Lines that do not start and end with '|'
/// and markdown rule lines ("|---|") are skipped; ragged rows are padded with
/// empty cells. Both cases are reported through `warnings`.
Table parse_table(std::string_view src, std::vector<std::string>* warnings = nullptr);

/// Renders one line per row, "| a | b |", joined with '\n'. '|' inside a cell
/// is written as "\|".
std::string render_table(const Table& t);

const Cell& get_cell(const Table& t, const CellAddress& a);

/// Numeric extraction. Handles the bold marker, thousands separators, "%",
/// parenthesized negatives, a leading "$", and a single trailing unit token.
std::optional<Number> parse_numeric(std::string_view raw);
inline std::optional<Number> parse_numeric(const Cell& c) {
  if (const Number* n = c.number()) return *n;
  return std::nullopt;
}

/// Looks up a row by its first-column label: exact match first, then a
/// case- and whitespace-insensitive match.
int find_row_by_label(const Table& t, std::string_view label);
/// Looks up a column by header text among the header rows (row 1 when the
/// table declares none).
int find_col_by_header(const Table& t, std::string_view header);

/// Lowercases and collapses internal whitespace runs.
std::string normalize_label(std::string_view s);
std::string trim(std::string_view s);

nlohmann::json table_to_json(const Table& t);
Table table_from_json(const nlohmann::json& j);

}  // namespace atomchain
