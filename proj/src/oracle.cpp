#include "atomchain/oracle.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace atomchain {

std::string_view to_string(OracleError::Kind k) {
  switch (k) {
    case OracleError::Kind::kSyntaxError: return "SyntaxError";
    case OracleError::Kind::kTypeError: return "TypeError";
    case OracleError::Kind::kNonNumericCell: return "NonNumericCell";
    case OracleError::Kind::kDivisionByZero: return "DivisionByZero";
    case OracleError::Kind::kRegionOutOfBounds: return "RegionOutOfBounds";
    case OracleError::Kind::kEmptyRegion: return "EmptyRegion";
    case OracleError::Kind::kDegenerateSeries: return "DegenerateSeries";
    case OracleError::Kind::kUnitMismatch: return "UnitMismatch";
    case OracleError::Kind::kShapeMismatch: return "ShapeMismatch";
    case OracleError::Kind::kLabelNotFound: return "LabelNotFound";
    case OracleError::Kind::kAmbiguous: return "Ambiguous";
  }
  return "?";
}

std::string_view to_string(ExtractionCheck::Status s) {
  switch (s) {
    case ExtractionCheck::Status::kMatch: return "MATCH";
    case ExtractionCheck::Status::kMismatch: return "MISMATCH";
    case ExtractionCheck::Status::kUnverifiable: return "UNVERIFIABLE";
  }
  return "?";
}

Expr cell_expr(Key row, Key col) {
  Expr e;
  e.kind = Expr::Kind::kCell;
  e.row = std::move(row);
  e.col = std::move(col);
  return e;
}

Expr literal_expr(Number n) {
  Expr e;
  e.kind = Expr::Kind::kLiteral;
  e.literal = std::move(n);
  return e;
}

namespace {

const std::set<std::string, std::less<>> kArithOps = {"add", "sub", "mul", "div", "pct_change"};
const std::set<std::string, std::less<>> kAggOps = {"sum", "mean", "min", "max", "count"};
const std::set<std::string, std::less<>> kTrendOps = {"increasing", "decreasing", "nonmonotone"};
const std::set<std::string, std::less<>> kCompareOps = {"<", "<=", "=", ">=", ">", "approx"};
const std::set<std::string, std::less<>> kBoolOps = {"and", "or", "not"};
const std::set<std::string, std::less<>> kConvertOps = {"frac", "pct"};

// ---- reader ----

struct SExpr {
  enum class Type { kAtom, kString, kList };
  Type type = Type::kAtom;
  std::string text;
  std::vector<SExpr> items;
  std::size_t pos = 0;
};

class Reader {
 public:
  explicit Reader(std::string_view s) : s_(s) {}

  SExpr read_top() {
    skip();
    if (i_ >= s_.size()) throw syntax("empty expression");
    SExpr e = read();
    skip();
    if (i_ < s_.size()) throw syntax("trailing input");
    return e;
  }

 private:
  OracleError syntax(const std::string& m) const {
    return OracleError(OracleError::Kind::kSyntaxError, "syntax error at " + std::to_string(i_) + ": " + m, i_);
  }
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  SExpr read() {
    skip();
    if (i_ >= s_.size()) throw syntax("unexpected end of input");
    SExpr e;
    e.pos = i_;
    char c = s_[i_];
    if (c == '(') {
      ++i_;
      e.type = SExpr::Type::kList;
      while (true) {
        skip();
        if (i_ >= s_.size()) throw syntax("missing ')'");
        if (s_[i_] == ')') {
          ++i_;
          break;
        }
        e.items.push_back(read());
      }
      return e;
    }
    if (c == ')') throw syntax("unexpected ')'");
    if (c == '"') {
      ++i_;
      e.type = SExpr::Type::kString;
      while (true) {
        if (i_ >= s_.size()) throw syntax("unterminated string");
        char d = s_[i_++];
        if (d == '"') break;
        if (d == '\\') {
          if (i_ >= s_.size()) throw syntax("unterminated string");
          d = s_[i_++];
        }
        e.text += d;
      }
      return e;
    }
    while (i_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[i_])) && s_[i_] != '(' && s_[i_] != ')' &&
           s_[i_] != '"')
      e.text += s_[i_++];
    return e;
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

bool is_integer_atom(const std::string& a) {
  return !a.empty() && std::all_of(a.begin(), a.end(), [](char c) { return c >= '0' && c <= '9'; }) && a.size() < 10;
}

std::optional<Number> number_atom(const std::string& a) {
  std::string_view v = a;
  std::string unit;
  if (!v.empty() && v.back() == '%') {
    unit = "%";
    v.remove_suffix(1);
  }
  auto d = Decimal::parse(v);
  if (!d) return std::nullopt;
  return Number{*d, unit};
}

OracleError type_error(const std::string& path, const std::string& m) {
  return OracleError(OracleError::Kind::kTypeError, "type error at " + (path.empty() ? "/" : path) + ": " + m, 0,
                     path.empty() ? "/" : path);
}

std::string child(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

Key to_key(const SExpr& s, const std::string& path) {
  if (s.type == SExpr::Type::kString) return s.text;
  if (s.type == SExpr::Type::kAtom && is_integer_atom(s.text)) return std::stoi(s.text);
  throw type_error(path, "expected a position or a quoted label");
}

Region to_region(const SExpr& s, const std::string& path) {
  if (s.type != SExpr::Type::kList || s.items.empty() || s.items[0].type != SExpr::Type::kAtom)
    throw type_error(path, "expected a region (row/col/cells)");
  const std::string& head = s.items[0].text;
  Region r;
  if (head == "row" || head == "col") {
    if (s.items.size() != 4) throw type_error(path, "(" + head + " LINE FROM TO) takes three keys");
    r.shape = head == "row" ? Region::Shape::kRow : Region::Shape::kCol;
    r.line = to_key(s.items[1], child(path, 0));
    r.from = to_key(s.items[2], child(path, 1));
    r.to = to_key(s.items[3], child(path, 2));
    return r;
  }
  if (head == "cells") {
    r.shape = Region::Shape::kCells;
    for (std::size_t i = 1; i < s.items.size(); ++i) {
      const SExpr& c = s.items[i];
      std::string p = child(path, i - 1);
      if (c.type != SExpr::Type::kList || c.items.size() != 3 || c.items[0].type != SExpr::Type::kAtom ||
          c.items[0].text != "cell")
        throw type_error(p, "expected (cell ROW COL)");
      r.cells.emplace_back(to_key(c.items[1], child(p, 0)), to_key(c.items[2], child(p, 1)));
    }
    return r;
  }
  throw type_error(path, "expected a region (row/col/cells)");
}

Expr to_expr(const SExpr& s, const std::string& path) {
  if (s.type == SExpr::Type::kString) throw type_error(path, "a quoted string is not an expression");
  if (s.type == SExpr::Type::kAtom) {
    if (auto n = number_atom(s.text)) return literal_expr(*n);
    throw OracleError(OracleError::Kind::kSyntaxError,
                      "syntax error at " + std::to_string(s.pos) + ": unknown atom '" + s.text + "'", s.pos);
  }
  if (s.items.empty() || s.items[0].type != SExpr::Type::kAtom)
    throw OracleError(OracleError::Kind::kSyntaxError,
                      "syntax error at " + std::to_string(s.pos) + ": expected an operator", s.pos);
  const std::string& head = s.items[0].text;
  const std::size_t n = s.items.size() - 1;
  auto arg = [&](std::size_t i) -> const SExpr& { return s.items[i + 1]; };
  Expr e;
  e.op = head;

  if (head == "cell") {
    if (n != 2) throw type_error(path, "(cell ROW COL) takes two keys");
    return cell_expr(to_key(arg(0), child(path, 0)), to_key(arg(1), child(path, 1)));
  }
  if (head == "lit") {
    if (n < 1 || n > 2 || arg(0).type != SExpr::Type::kAtom) throw type_error(path, "(lit NUMBER [\"unit\"])");
    auto num = number_atom(arg(0).text);
    if (!num) throw type_error(child(path, 0), "expected a number");
    if (n == 2) {
      if (arg(1).type != SExpr::Type::kString) throw type_error(child(path, 1), "unit must be a quoted string");
      if (!num->unit.empty()) throw type_error(child(path, 0), "unit given twice");
      num->unit = arg(1).text;
    }
    return literal_expr(*num);
  }
  if (kAggOps.count(head) || kTrendOps.count(head)) {
    e.kind = kAggOps.count(head) ? Expr::Kind::kAggregate : Expr::Kind::kTrend;
    if (n != 1) throw type_error(path, "(" + head + " REGION) takes one region");
    e.regions.push_back(to_region(arg(0), child(path, 0)));
    return e;
  }
  if (head == "correlated") {
    e.kind = Expr::Kind::kCorrelated;
    if (n != 2) throw type_error(path, "(correlated REGION REGION) takes two regions");
    e.regions.push_back(to_region(arg(0), child(path, 0)));
    e.regions.push_back(to_region(arg(1), child(path, 1)));
    return e;
  }
  if (kArithOps.count(head)) e.kind = Expr::Kind::kArith;
  else if (kCompareOps.count(head)) e.kind = Expr::Kind::kCompare;
  else if (kBoolOps.count(head)) e.kind = Expr::Kind::kBool;
  else if (kConvertOps.count(head)) e.kind = Expr::Kind::kConvert;
  else
    throw OracleError(OracleError::Kind::kSyntaxError,
                      "syntax error at " + std::to_string(s.items[0].pos) + ": unknown operator '" + head + "'",
                      s.items[0].pos);
  for (std::size_t i = 0; i < n; ++i) e.args.push_back(to_expr(arg(i), child(path, i)));
  return e;
}

void check_node(const Expr& e, const std::string& path) {
  auto need_numeric = [&](std::size_t i) {
    if (e.args[i].is_boolean()) throw type_error(child(path, i), "expected a number, found a boolean");
  };
  auto need_bool = [&](std::size_t i) {
    if (!e.args[i].is_boolean()) throw type_error(child(path, i), "expected a boolean, found a number");
  };
  const std::size_t n = e.args.size();
  switch (e.kind) {
    case Expr::Kind::kCell:
    case Expr::Kind::kLiteral:
      return;
    case Expr::Kind::kArith:
      if (!kArithOps.count(e.op)) throw type_error(path, "unknown arithmetic op " + e.op);
      if ((e.op == "div" || e.op == "pct_change") ? n != 2 : n < 2)
        throw type_error(path, e.op + ": wrong number of operands");
      for (std::size_t i = 0; i < n; ++i) need_numeric(i);
      break;
    case Expr::Kind::kAggregate:
    case Expr::Kind::kTrend:
      if (!(e.kind == Expr::Kind::kAggregate ? kAggOps : kTrendOps).count(e.op))
        throw type_error(path, "unknown op " + e.op);
      if (e.regions.size() != 1 || n != 0) throw type_error(path, e.op + " takes exactly one region");
      return;
    case Expr::Kind::kCorrelated:
      if (e.regions.size() != 2 || n != 0) throw type_error(path, "correlated takes exactly two regions");
      return;
    case Expr::Kind::kCompare:
      if (!kCompareOps.count(e.op)) throw type_error(path, "unknown comparison " + e.op);
      if (n != 2) throw type_error(path, e.op + " takes two operands");
      need_numeric(0);
      need_numeric(1);
      break;
    case Expr::Kind::kBool:
      if (!kBoolOps.count(e.op)) throw type_error(path, "unknown boolean op " + e.op);
      if (e.op == "not" ? n != 1 : n < 2) throw type_error(path, e.op + ": wrong number of operands");
      for (std::size_t i = 0; i < n; ++i) need_bool(i);
      break;
    case Expr::Kind::kConvert:
      if (!kConvertOps.count(e.op)) throw type_error(path, "unknown conversion " + e.op);
      if (n != 1) throw type_error(path, e.op + " takes one operand");
      need_numeric(0);
      break;
  }
  for (std::size_t i = 0; i < n; ++i) check_node(e.args[i], child(path, i));
}

// ---- printer ----

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string print_key(const Key& k) {
  if (const int* i = std::get_if<int>(&k)) return std::to_string(*i);
  return quote(std::get<std::string>(k));
}

std::string print_region(const Region& r) {
  switch (r.shape) {
    case Region::Shape::kRow:
    case Region::Shape::kCol:
      return std::string(r.shape == Region::Shape::kRow ? "(row " : "(col ") + print_key(r.line) + " " +
             print_key(r.from) + " " + print_key(r.to) + ")";
    case Region::Shape::kCells: {
      std::string out = "(cells";
      for (const auto& [row, col] : r.cells) out += " (cell " + print_key(row) + " " + print_key(col) + ")";
      return out + ")";
    }
  }
  return "";
}

}  // namespace

void type_check(const Expr& e) { check_node(e, ""); }

Expr parse_check(std::string_view src) {
  SExpr s = Reader(src).read_top();
  Expr e = to_expr(s, "");
  type_check(e);
  return e;
}

std::string print_check(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::kCell:
      return "(cell " + print_key(e.row) + " " + print_key(e.col) + ")";
    case Expr::Kind::kLiteral:
      if (e.literal.unit.empty()) return e.literal.amount.to_string();
      if (e.literal.unit == "%") return e.literal.amount.to_string() + "%";
      return "(lit " + e.literal.amount.to_string() + " " + quote(e.literal.unit) + ")";
    case Expr::Kind::kAggregate:
    case Expr::Kind::kTrend:
      return "(" + e.op + " " + print_region(e.regions.at(0)) + ")";
    case Expr::Kind::kCorrelated:
      return "(correlated " + print_region(e.regions.at(0)) + " " + print_region(e.regions.at(1)) + ")";
    default: {
      std::string out = "(" + e.op;
      for (const auto& a : e.args) out += " " + print_check(a);
      return out + ")";
    }
  }
}

// ---- evaluation ----

int resolve_row(const Key& k, const Table& t) {
  if (const int* i = std::get_if<int>(&k)) {
    if (*i < 1 || *i > t.row_count())
      throw OracleError(OracleError::Kind::kRegionOutOfBounds, "row " + std::to_string(*i) + " is out of bounds");
    return *i;
  }
  try {
    return find_row_by_label(t, std::get<std::string>(k));
  } catch (const TableError& e) {
    throw OracleError(e.kind() == TableError::Kind::kAmbiguous ? OracleError::Kind::kAmbiguous
                                                               : OracleError::Kind::kLabelNotFound,
                      e.what());
  }
}

int resolve_col(const Key& k, const Table& t) {
  if (const int* i = std::get_if<int>(&k)) {
    if (*i < 1 || *i > t.col_count())
      throw OracleError(OracleError::Kind::kRegionOutOfBounds, "column " + std::to_string(*i) + " is out of bounds");
    return *i;
  }
  try {
    return find_col_by_header(t, std::get<std::string>(k));
  } catch (const TableError& e) {
    throw OracleError(e.kind() == TableError::Kind::kAmbiguous ? OracleError::Kind::kAmbiguous
                                                               : OracleError::Kind::kLabelNotFound,
                      e.what());
  }
}

namespace {

struct Num {
  Rational v;
  int scale;
  std::string unit;
};

using Val = std::variant<bool, Num>;

OracleError unit_mismatch(const std::string& a, const std::string& b) {
  return OracleError(OracleError::Kind::kUnitMismatch, "unit mismatch: '" + a + "' vs '" + b + "'");
}

// Common unit of the operands: empty units adopt the other side.
std::string unify(const std::vector<Num>& xs) {
  std::string u;
  for (const auto& x : xs) {
    if (x.unit.empty()) continue;
    if (u.empty()) u = x.unit;
    else if (u != x.unit) throw unit_mismatch(u, x.unit);
  }
  return u;
}

class Evaluator {
 public:
  explicit Evaluator(const Table& t) : t_(t) {}

  std::vector<Evidence> evidence;
  std::vector<std::string> notes;

  Val eval(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::kCell: {
        int r = resolve_row(e.row, t_);
        return read(r, resolve_col(e.col, t_));
      }
      case Expr::Kind::kLiteral:
        return Num{e.literal.amount.value(), e.literal.amount.scale(), e.literal.unit};
      case Expr::Kind::kArith:
        return arith(e);
      case Expr::Kind::kAggregate:
        return aggregate(e.op, region(e.regions[0]));
      case Expr::Kind::kTrend:
        return trend(e.op, region(e.regions[0]));
      case Expr::Kind::kCorrelated: {
        auto a = region(e.regions[0]);
        auto b = region(e.regions[1]);
        return correlated(a, b);
      }
      case Expr::Kind::kCompare:
        return compare(e);
      case Expr::Kind::kBool: {
        std::vector<bool> xs;
        for (const auto& a : e.args) xs.push_back(std::get<bool>(eval(a)));
        if (e.op == "not") return !xs[0];
        if (e.op == "and") return std::all_of(xs.begin(), xs.end(), [](bool b) { return b; });
        return std::any_of(xs.begin(), xs.end(), [](bool b) { return b; });
      }
      case Expr::Kind::kConvert: {
        Num x = std::get<Num>(eval(e.args[0]));
        if (e.op == "frac") {
          if (x.unit != "%") throw unit_mismatch("%", x.unit);
          return Num{x.v / 100, x.scale + 2, ""};
        }
        if (!x.unit.empty()) throw unit_mismatch("", x.unit);
        return Num{x.v * 100, std::max(x.scale - 2, 0), "%"};
      }
    }
    throw type_error("", "bad node");
  }

 private:
  Num read(int r, int c) {
    const Cell& cell = get_cell(t_, {r, c});
    const Number* n = cell.number();
    CellAddress a{r, c};
    if (!n)
      throw OracleError(OracleError::Kind::kNonNumericCell, "cell " + to_string(a) + " is not numeric", 0, {}, a);
    if (std::none_of(evidence.begin(), evidence.end(), [&](const Evidence& ev) { return ev.address == a; }))
      evidence.push_back({a, *n});
    return Num{n->amount.value(), n->amount.scale(), n->unit};
  }

  std::vector<Num> region(const Region& rg) {
    std::vector<std::pair<int, int>> cells;
    if (rg.shape == Region::Shape::kCells) {
      for (const auto& [rk, ck] : rg.cells) {
        int r = resolve_row(rk, t_);
        cells.emplace_back(r, resolve_col(ck, t_));
      }
    } else if (rg.shape == Region::Shape::kRow) {
      int r = resolve_row(rg.line, t_);
      int c1 = resolve_col(rg.from, t_), c2 = resolve_col(rg.to, t_);
      for (int c = c1; c <= c2; ++c) cells.emplace_back(r, c);
    } else {
      int c = resolve_col(rg.line, t_);
      int r1 = resolve_row(rg.from, t_), r2 = resolve_row(rg.to, t_);
      for (int r = r1; r <= r2; ++r) cells.emplace_back(r, c);
    }
    if (cells.empty()) throw OracleError(OracleError::Kind::kEmptyRegion, "region is empty");
    std::vector<Num> out;
    for (auto [r, c] : cells) out.push_back(read(r, c));
    return out;
  }

  Val arith(const Expr& e) {
    std::vector<Num> xs;
    for (const auto& a : e.args) xs.push_back(std::get<Num>(eval(a)));
    int max_scale = 0;
    for (const auto& x : xs) max_scale = std::max(max_scale, x.scale);
    if (e.op == "add" || e.op == "sub") {
      std::string u = unify(xs);
      Rational v = xs[0].v;
      for (std::size_t i = 1; i < xs.size(); ++i) {
        if (e.op == "add") v += xs[i].v;
        else v -= xs[i].v;
      }
      return Num{v, max_scale, u};
    }
    if (e.op == "mul") {
      std::string u;
      Rational v = 1;
      int scale = 0;
      for (const auto& x : xs) {
        if (!x.unit.empty()) {
          if (!u.empty()) throw unit_mismatch(u, x.unit);
          u = x.unit;
        }
        v *= x.v;
        scale += x.scale;
      }
      return Num{v, scale, u};
    }
    const Num& a = xs[0];
    const Num& b = xs[1];
    if (e.op == "div") {
      std::string u;
      if (!a.unit.empty() && !b.unit.empty()) {
        if (a.unit != b.unit) throw unit_mismatch(a.unit, b.unit);
      } else if (b.unit.empty()) {
        u = a.unit;
      }
      if (b.v == 0) throw OracleError(OracleError::Kind::kDivisionByZero, "division by zero");
      return Num{a.v / b.v, max_scale, u};
    }
    // pct_change
    unify(xs);
    if (a.v == 0) throw OracleError(OracleError::Kind::kDivisionByZero, "pct_change from zero");
    return Num{(b.v - a.v) / a.v * 100, max_scale, "%"};
  }

  Val aggregate(const std::string& op, const std::vector<Num>& xs) {
    if (op == "count") return Num{Rational(static_cast<long long>(xs.size())), 0, ""};
    std::string u = unify(xs);
    int scale = 0;
    for (const auto& x : xs) scale = std::max(scale, x.scale);
    Rational v = xs[0].v;
    if (op == "sum" || op == "mean") {
      for (std::size_t i = 1; i < xs.size(); ++i) v += xs[i].v;
      if (op == "mean") v /= static_cast<long long>(xs.size());
    } else {
      for (const auto& x : xs) v = op == "min" ? std::min(v, x.v) : std::max(v, x.v);
    }
    return Num{v, scale, u};
  }

  Val trend(const std::string& op, const std::vector<Num>& xs) {
    if (xs.size() < 2) throw OracleError(OracleError::Kind::kDegenerateSeries, "series needs at least two points");
    unify(xs);
    bool up = false, down = false, all_up = true, all_down = true;
    for (std::size_t i = 1; i < xs.size(); ++i) {
      up |= xs[i].v > xs[i - 1].v;
      down |= xs[i].v < xs[i - 1].v;
      all_up &= xs[i].v > xs[i - 1].v;
      all_down &= xs[i].v < xs[i - 1].v;
    }
    if (op == "increasing") return all_up;
    if (op == "decreasing") return all_down;
    return up && down;
  }

  Val correlated(const std::vector<Num>& a, const std::vector<Num>& b) {
    if (a.size() != b.size()) throw OracleError(OracleError::Kind::kShapeMismatch, "series lengths differ");
    if (a.size() < 2) throw OracleError(OracleError::Kind::kDegenerateSeries, "series needs at least two points");
    unify(a);
    unify(b);
    auto sign = [](const Rational& q) { return q > 0 ? 1 : (q < 0 ? -1 : 0); };
    int agree = 0, disagree = 0;
    for (std::size_t i = 1; i < a.size(); ++i) {
      int p = sign(a[i].v - a[i - 1].v) * sign(b[i].v - b[i - 1].v);
      if (p > 0) ++agree;
      if (p < 0) ++disagree;
    }
    return agree > disagree;
  }

  Val compare(const Expr& e) {
    Num a = std::get<Num>(eval(e.args[0]));
    Num b = std::get<Num>(eval(e.args[1]));
    unify({a, b});
    if (e.op == "approx") {
      notes.push_back("approx at " + std::to_string(b.scale) + " decimal place" + (b.scale == 1 ? "" : "s"));
      return round_half_away(a.v, b.scale) == round_half_away(b.v, b.scale);
    }
    if (e.op == "<") return a.v < b.v;
    if (e.op == "<=") return a.v <= b.v;
    if (e.op == "=") return a.v == b.v;
    if (e.op == ">=") return a.v >= b.v;
    return a.v > b.v;
  }

  const Table& t_;
};

}  // namespace

OracleVerdict eval(const Expr& e, const Table& t) {
  Evaluator ev(t);
  Val v = ev.eval(e);
  OracleVerdict out;
  if (const bool* b = std::get_if<bool>(&v)) {
    out.value = *b;
  } else {
    const Num& n = std::get<Num>(v);
    out.value = Number{Decimal(n.v, n.scale), n.unit};
    ev.notes.push_back("display scale " + std::to_string(n.scale));
  }
  out.evidence = std::move(ev.evidence);
  for (std::size_t i = 0; i < ev.notes.size(); ++i) out.precision_note += (i ? "; " : "") + ev.notes[i];
  return out;
}

std::vector<ExtractionCheck> check_extraction(const std::vector<ExtractedFact>& facts, const Table& t) {
  std::vector<ExtractionCheck> out;
  for (const auto& f : facts) {
    ExtractionCheck c;
    if (f.address && f.value && t.contains(*f.address)) {
      if (const Number* n = get_cell(t, *f.address).number()) {
        c.actual = *n;
        bool units_ok = n->unit.empty() || f.value->unit.empty() || n->unit == f.value->unit;
        int places = f.value->amount.scale();
        bool same = round_half_away(n->amount.value(), places) == f.value->amount.value();
        c.status = units_ok && same ? ExtractionCheck::Status::kMatch : ExtractionCheck::Status::kMismatch;
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

nlohmann::json to_json(const OracleVerdict& v) {
  nlohmann::json j;
  if (v.is_bool()) j["value"] = v.truth();
  else j["value"] = to_json(v.number());
  j["evidence"] = nlohmann::json::array();
  for (const auto& e : v.evidence)
    j["evidence"].push_back({{"row", e.address.row}, {"col", e.address.col}, {"value", to_json(e.value)}});
  j["precision_note"] = v.precision_note;
  return j;
}

}  // namespace atomchain
