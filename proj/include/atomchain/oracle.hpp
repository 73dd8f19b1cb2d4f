#pragma once

#include "atomchain/chain.hpp"
#include "atomchain/table.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace atomchain {

/// Row or column reference: a 1-indexed position or a label/header text.
using Key = std::variant<int, std::string>;

struct Region {
  enum class Shape { kRow, kCol, kCells };
  Shape shape = Shape::kRow;
  Key line;         // the fixed row (kRow) or column (kCol)
  Key from, to;     // inclusive range along the other axis
  std::vector<std::pair<Key, Key>> cells;  // kCells: (row, col) pairs in order
  friend bool operator==(const Region&, const Region&) = default;
};

/// Check-expression AST. One flat node type; `kind` selects the used fields.
///
///   kCell       row, col
///   kLiteral    literal
///   kArith      op in {add, sub, mul, div, pct_change}; args
///   kAggregate  op in {sum, mean, min, max, count}; regions[0]
///   kTrend      op in {increasing, decreasing, nonmonotone}; regions[0]
///   kCompare    op in {<, <=, =, >=, >, approx}; args[0], args[1]
///   kBool       op in {and, or, not}; args
///   kCorrelated regions[0], regions[1]
///   kConvert    op in {frac, pct}; args[0]
struct Expr {
  enum class Kind { kCell, kLiteral, kArith, kAggregate, kTrend, kCompare, kBool, kCorrelated, kConvert };
  Kind kind = Kind::kLiteral;
  std::string op;
  Key row = 1, col = 1;
  Number literal;
  std::vector<Expr> args;
  std::vector<Region> regions;

  bool is_boolean() const {
    return kind == Kind::kTrend || kind == Kind::kCompare || kind == Kind::kBool || kind == Kind::kCorrelated;
  }
  friend bool operator==(const Expr&, const Expr&) = default;
};

Expr cell_expr(Key row, Key col);
Expr literal_expr(Number n);

class OracleError : public std::runtime_error {
 public:
  enum class Kind {
    kSyntaxError,
    kTypeError,
    kNonNumericCell,
    kDivisionByZero,
    kRegionOutOfBounds,
    kEmptyRegion,
    kDegenerateSeries,
    kUnitMismatch,
    kShapeMismatch,
    kLabelNotFound,
    kAmbiguous,
  };

  OracleError(Kind kind, std::string message, std::size_t position = 0, std::string path = {},
              std::optional<CellAddress> address = std::nullopt)
      : std::runtime_error(std::move(message)), kind_(kind), position_(position), path_(std::move(path)),
        address_(address) {}

  Kind kind() const { return kind_; }
  /// kSyntaxError: byte offset in the source.
  std::size_t position() const { return position_; }
  /// kTypeError: node path, e.g. "/0/1" (child indices from the root).
  const std::string& path() const { return path_; }
  /// kNonNumericCell: offending cell.
  const std::optional<CellAddress>& address() const { return address_; }

 private:
  Kind kind_;
  std::size_t position_;
  std::string path_;
  std::optional<CellAddress> address_;
};

std::string_view to_string(OracleError::Kind k);

/// Parses the s-expression surface syntax and type-checks the result.
Expr parse_check(std::string_view src);
/// Canonical text; parse_check(print_check(e)) == e for well-typed e.
std::string print_check(const Expr& e);
/// Throws OracleError(kTypeError) for ill-typed trees.
void type_check(const Expr& e);

struct Evidence {
  CellAddress address;
  Number value;
  friend bool operator==(const Evidence&, const Evidence&) = default;
};

struct OracleVerdict {
  std::variant<bool, Number> value;
  /// Cells consulted, in first-use order, without duplicates.
  std::vector<Evidence> evidence;
  std::string precision_note;

  bool is_bool() const { return std::holds_alternative<bool>(value); }
  bool truth() const { return std::get<bool>(value); }
  const Number& number() const { return std::get<Number>(value); }
};

/// Exact evaluation. Arguments are evaluated left to right without
/// short-circuiting, so the first error in that order is the one raised.
OracleVerdict eval(const Expr& e, const Table& t);

/// Resolves a row or column key against the table.
int resolve_row(const Key& k, const Table& t);
int resolve_col(const Key& k, const Table& t);

struct ExtractionCheck {
  enum class Status { kMatch, kMismatch, kUnverifiable };
  Status status = Status::kUnverifiable;
  std::optional<Number> actual;
};

std::string_view to_string(ExtractionCheck::Status s);

/// A fact with an address and a value matches when the cell's number, rounded
/// to the fact's printed precision, equals the fact's value.
std::vector<ExtractionCheck> check_extraction(const std::vector<ExtractedFact>& facts, const Table& t);

nlohmann::json to_json(const OracleVerdict& v);

}  // namespace atomchain
