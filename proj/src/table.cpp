#include "atomchain/table.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace atomchain {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

std::string_view strip_bold(std::string_view s) {
  if (s.substr(0, kBoldMarker.size()) == kBoldMarker) {
    s.remove_prefix(kBoldMarker.size());
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  }
  return s;
}

std::string_view trim_view(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Digits with optional comma grouping and an optional fraction. Returns the
// plain digit string ("1234.5") and advances `pos`, or nullopt.
std::optional<std::string> scan_number(std::string_view s, std::size_t& pos) {
  std::size_t i = pos;
  std::string out;
  auto digit = [&](std::size_t k) { return k < s.size() && std::isdigit(static_cast<unsigned char>(s[k])); };
  std::size_t lead = 0;
  while (digit(i)) out += s[i++], ++lead;
  if (lead == 0) return std::nullopt;
  if (i < s.size() && s[i] == ',' && lead <= 3) {
    std::size_t j = i;
    std::string grouped = out;
    bool ok = true;
    while (j < s.size() && s[j] == ',') {
      if (!(digit(j + 1) && digit(j + 2) && digit(j + 3)) || digit(j + 4)) {
        ok = false;
        break;
      }
      grouped.append(s.substr(j + 1, 3));
      j += 4;
    }
    if (ok) {
      out = grouped;
      i = j;
    }
  }
  if (i < s.size() && s[i] == '.' && digit(i + 1)) {
    out += s[i++];
    while (digit(i)) out += s[i++];
  }
  pos = i;
  return out;
}

bool valid_unit(std::string_view u) {
  if (u.empty()) return false;
  unsigned char first = static_cast<unsigned char>(u.front());
  if (!(std::isalpha(first) || first == '%' || first >= 0x80)) return false;
  for (char c : u)
    if (is_space(c) || c == '(' || c == ')' || c == '|' || c == ',') return false;
  return true;
}

}  // namespace

std::string trim(std::string_view s) { return std::string(trim_view(s)); }

std::string normalize_label(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : trim_view(s)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string to_string(const CellAddress& a) {
  return "(" + std::to_string(a.row) + "," + std::to_string(a.col) + ")";
}

std::string_view to_string(RowCounting c) { return c == RowCounting::kAbsolute ? "absolute" : "data_rows"; }

std::optional<RowCounting> row_counting_from_string(std::string_view s) {
  if (s == "absolute") return RowCounting::kAbsolute;
  if (s == "data_rows") return RowCounting::kDataRows;
  return std::nullopt;
}

std::optional<Number> parse_numeric(std::string_view raw) {
  std::string_view s = trim_view(strip_bold(trim_view(raw)));
  if (s.empty()) return std::nullopt;

  bool negative = false;
  if (s.size() >= 2 && s.front() == '(' && s.back() == ')') {
    negative = true;
    s = trim_view(s.substr(1, s.size() - 2));
  }
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    if (negative) return std::nullopt;
    negative = s.front() == '-';
    s.remove_prefix(1);
  } else if (s.substr(0, 3) == "\xE2\x88\x92") {  // U+2212 minus sign
    if (negative) return std::nullopt;
    negative = true;
    s.remove_prefix(3);
  }
  std::string unit;
  if (!s.empty() && s.front() == '$') {
    unit = "$";
    s.remove_prefix(1);
  }
  std::size_t pos = 0;
  auto digits = scan_number(s, pos);
  if (!digits) return std::nullopt;
  std::string_view rest = trim_view(s.substr(pos));
  if (!rest.empty()) {
    if (!unit.empty() || !valid_unit(rest)) return std::nullopt;
    unit = std::string(rest);
  }
  auto amount = Decimal::parse(*digits);
  if (!amount) return std::nullopt;
  if (negative) amount = Decimal(-amount->value(), amount->scale());
  return Number{*amount, unit};
}

Cell Cell::from_raw(std::string raw) {
  Cell c;
  c.raw_ = std::move(raw);
  std::string_view t = trim_view(c.raw_);
  c.emphasized_ = t.substr(0, kBoldMarker.size()) == kBoldMarker;
  std::string_view body = trim_view(strip_bold(t));
  if (body.empty()) {
    c.value_ = EmptyValue{};
  } else if (auto n = parse_numeric(body)) {
    c.value_ = *n;
  } else {
    c.value_ = std::string(body);
  }
  return c;
}

std::string_view Cell::text() const { return trim_view(strip_bold(trim_view(raw_))); }

Table::Table(std::string caption, const std::vector<std::vector<std::string>>& rows, int header_row_count)
    : caption_(std::move(caption)), header_rows_(header_row_count) {
  if (rows.empty() || rows.front().empty())
    throw TableError(TableError::Kind::kInvalidShape, "table needs at least one row and one column");
  if (header_row_count < 0) throw TableError(TableError::Kind::kInvalidShape, "negative header row count");
  const std::size_t cols = rows.front().size();
  rows_.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.size() != cols)
      throw TableError(TableError::Kind::kInvalidShape, "row has " + std::to_string(r.size()) +
                                                            " cells, expected " + std::to_string(cols));
    std::vector<Cell> cells;
    cells.reserve(cols);
    for (const auto& field : r) cells.push_back(Cell::from_raw(field));
    rows_.push_back(std::move(cells));
  }
}

int Table::absolute_row(int counted, RowCounting counting) const {
  return counting == RowCounting::kAbsolute ? counted : counted + header_rows_;
}

namespace {

bool is_rule_line(std::string_view line) {
  bool saw_dash = false;
  for (char c : line) {
    if (c == '-') saw_dash = true;
    else if (c != '|' && c != ':' && !is_space(c)) return false;
  }
  return saw_dash;
}

std::vector<std::string> split_fields(std::string_view line) {
  // line starts and ends with '|'
  std::vector<std::string> fields;
  std::string cur;
  for (std::size_t i = 1; i < line.size(); ++i) {
    char c = line[i];
    if (c == '\\' && i + 2 < line.size() && line[i + 1] == '|') {
      cur += '|';
      ++i;
    } else if (c == '|') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  return fields;
}

}  // namespace

Table parse_table(std::string_view src, std::vector<std::string>* warnings) {
  auto warn = [&](std::string w) {
    if (warnings) warnings->push_back(std::move(w));
  };
  if (trim_view(src).empty()) throw TableError(TableError::Kind::kEmptyInput, "empty table text");

  std::vector<std::vector<std::string>> rows;
  std::size_t start = 0;
  int line_no = 0;
  while (start <= src.size()) {
    std::size_t end = src.find('\n', start);
    if (end == std::string_view::npos) end = src.size();
    std::string_view line = trim_view(src.substr(start, end - start));
    ++line_no;
    start = end + 1;
    if (line.empty()) continue;
    if (line.size() < 2 || line.front() != '|' || line.back() != '|' ||
        (line.size() >= 2 && line[line.size() - 2] == '\\')) {
      warn("line " + std::to_string(line_no) + ": not pipe-delimited, skipped");
      continue;
    }
    if (is_rule_line(line)) continue;
    rows.push_back(split_fields(line));
  }
  if (rows.empty()) throw TableError(TableError::Kind::kNoDelimitedLines, "no pipe-delimited lines");

  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() < width) {
      warn("row " + std::to_string(i + 1) + ": ragged (" + std::to_string(rows[i].size()) + " of " +
           std::to_string(width) + " cells), padded");
      rows[i].resize(width);
    }
  }
  return Table("", rows, 1);
}

std::string render_table(const Table& t) {
  std::string out;
  for (std::size_t r = 0; r < t.rows().size(); ++r) {
    if (r) out += '\n';
    out += '|';
    for (const Cell& c : t.rows()[r]) {
      out += ' ';
      for (char ch : c.raw_text()) {
        if (ch == '|') out += '\\';
        out += ch;
      }
      out += " |";
    }
  }
  return out;
}

const Cell& get_cell(const Table& t, const CellAddress& a) {
  if (a.row < 1 || a.row > t.row_count())
    throw TableError(TableError::Kind::kOutOfRange, "row " + std::to_string(a.row) + " out of range 1.." +
                                                        std::to_string(t.row_count()),
                     {"row"});
  if (a.col < 1 || a.col > t.col_count())
    throw TableError(TableError::Kind::kOutOfRange, "col " + std::to_string(a.col) + " out of range 1.." +
                                                        std::to_string(t.col_count()),
                     {"col"});
  return t.rows()[static_cast<std::size_t>(a.row - 1)][static_cast<std::size_t>(a.col - 1)];
}

namespace {

template <class Candidates>
int resolve_unique(const std::string& what, std::string_view key, const Candidates& exact,
                   const Candidates& normalized) {
  const Candidates& hits = exact.empty() ? normalized : exact;
  if (hits.empty()) throw TableError(TableError::Kind::kNotFound, what + " '" + std::string(key) + "' not found");
  if (hits.size() > 1) {
    std::vector<std::string> names;
    for (int h : hits) names.push_back(std::to_string(h));
    throw TableError(TableError::Kind::kAmbiguous,
                     what + " '" + std::string(key) + "' is ambiguous (" + std::to_string(hits.size()) + " matches)",
                     names);
  }
  return *hits.begin();
}

}  // namespace

int find_row_by_label(const Table& t, std::string_view label) {
  std::string want = trim(strip_bold(trim_view(label)));
  std::string want_norm = normalize_label(want);
  std::set<int> exact, normalized;
  for (int r = 1; r <= t.row_count(); ++r) {
    std::string_view text = t.rows()[static_cast<std::size_t>(r - 1)].front().text();
    if (text == want) exact.insert(r);
    if (normalize_label(text) == want_norm) normalized.insert(r);
  }
  return resolve_unique("row label", label, exact, normalized);
}

int find_col_by_header(const Table& t, std::string_view header) {
  std::string want = trim(strip_bold(trim_view(header)));
  std::string want_norm = normalize_label(want);
  std::set<int> exact, normalized;
  int header_rows = std::min(std::max(t.header_row_count(), 1), t.row_count());
  for (int r = 1; r <= header_rows; ++r) {
    for (int c = 1; c <= t.col_count(); ++c) {
      std::string_view text = t.rows()[static_cast<std::size_t>(r - 1)][static_cast<std::size_t>(c - 1)].text();
      if (text == want) exact.insert(c);
      if (normalize_label(text) == want_norm) normalized.insert(c);
    }
  }
  return resolve_unique("column header", header, exact, normalized);
}

nlohmann::json table_to_json(const Table& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows()) {
    nlohmann::json row = nlohmann::json::array();
    for (const Cell& c : r) row.push_back(c.raw_text());
    rows.push_back(std::move(row));
  }
  nlohmann::json j{{"caption", t.caption()}, {"rows", std::move(rows)}};
  if (t.header_row_count() != 1) j["header_rows"] = t.header_row_count();
  return j;
}

Table table_from_json(const nlohmann::json& j) {
  const nlohmann::json& rows_json = j.is_array() ? j : j.at("rows");
  std::vector<std::vector<std::string>> rows;
  std::size_t width = 0;
  for (const auto& r : rows_json) {
    std::vector<std::string> row;
    for (const auto& c : r) row.push_back(c.is_string() ? c.get<std::string>() : c.dump());
    width = std::max(width, row.size());
    rows.push_back(std::move(row));
  }
  for (auto& r : rows) r.resize(width);
  std::string caption = j.is_object() ? j.value("caption", std::string()) : std::string();
  int header_rows = j.is_object() ? j.value("header_rows", 1) : 1;
  return Table(caption, rows, header_rows);
}

}  // namespace atomchain
