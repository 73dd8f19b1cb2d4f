#include "atomchain/parsers.hpp"

#include <algorithm>
#include <cctype>

namespace atomchain {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool iequals_at(std::string_view text, std::size_t pos, std::string_view word) {
  if (pos + word.size() > text.size()) return false;
  for (std::size_t k = 0; k < word.size(); ++k)
    if (std::tolower(static_cast<unsigned char>(text[pos + k])) != std::tolower(static_cast<unsigned char>(word[k])))
      return false;
  return true;
}

struct PlanMarker {
  int index = 0;
  bool start = false;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Matches "[ Plan <n> Start ]" / "[ Plan <n> End ]" at `i`.
std::optional<PlanMarker> match_marker(std::string_view t, std::size_t i) {
  if (t[i] != '[') return std::nullopt;
  std::size_t p = i + 1;
  auto skip_ws = [&] {
    std::size_t s = p;
    while (p < t.size() && is_space(t[p])) ++p;
    return p - s;
  };
  skip_ws();
  if (!iequals_at(t, p, "plan")) return std::nullopt;
  p += 4;
  if (skip_ws() == 0) return std::nullopt;
  std::size_t digits_begin = p;
  while (p < t.size() && is_digit(t[p]) && p - digits_begin < 9) ++p;
  if (p == digits_begin || (p < t.size() && is_digit(t[p]))) return std::nullopt;
  int index = std::stoi(std::string(t.substr(digits_begin, p - digits_begin)));
  if (skip_ws() == 0) return std::nullopt;
  PlanMarker m;
  if (iequals_at(t, p, "start")) {
    m.start = true;
    p += 5;
  } else if (iequals_at(t, p, "end")) {
    p += 3;
  } else {
    return std::nullopt;
  }
  skip_ws();
  if (p >= t.size() || t[p] != ']') return std::nullopt;
  m.index = index;
  m.begin = i;
  m.end = p + 1;
  return m;
}

std::string collapse_ws(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
    } else {
      if (pending) out += ' ';
      pending = false;
      out += c;
    }
  }
  return out;
}

// Quote characters used around labels in extraction prose.
constexpr std::string_view kOpenQuotes[] = {"'", "\"", "\xE2\x80\x98", "\xE2\x80\x9C"};
constexpr std::string_view kCloseQuotes[] = {"'", "\"", "\xE2\x80\x99", "\xE2\x80\x9D"};

std::size_t quote_at(std::string_view s, std::size_t i, const std::string_view (&quotes)[4]) {
  for (auto q : quotes)
    if (s.substr(i, q.size()) == q) return q.size();
  return 0;
}

struct Quoted {
  std::size_t begin;  // of the opening quote
  std::size_t end;    // past the closing quote
  std::string inner;
};

std::vector<Quoted> find_quoted(std::string_view s) {
  std::vector<Quoted> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t open = quote_at(s, i, kOpenQuotes);
    if (open == 0 || (i > 0 && is_alnum(s[i - 1]))) {
      ++i;
      continue;
    }
    bool closed = false;
    for (std::size_t j = i + open + 1; j < s.size(); ++j) {
      std::size_t close = quote_at(s, j, kCloseQuotes);
      if (close == 0) continue;
      std::size_t after = j + close;
      if (after < s.size() && is_alnum(s[after])) continue;
      out.push_back({i, after, std::string(s.substr(i + open, j - i - open))});
      i = after;
      closed = true;
      break;
    }
    if (!closed) ++i;
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    std::string t = trim(cur);
    if (!t.empty()) out.push_back(std::move(t));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\n') {
      flush();
      continue;
    }
    cur += c;
    if (c == '.' || c == '!' || c == '?') {
      bool at_end = i + 1 == text.size();
      if (at_end || is_space(text[i + 1])) flush();
    }
  }
  flush();
  return out;
}

// Position of `needle` in `hay` at word boundaries, or npos.
std::size_t find_word(std::string_view hay, std::string_view needle) {
  if (needle.empty()) return std::string_view::npos;
  std::size_t pos = hay.find(needle);
  while (pos != std::string_view::npos) {
    bool left = pos == 0 || !is_alnum(hay[pos - 1]);
    std::size_t after = pos + needle.size();
    bool right = after >= hay.size() || !is_alnum(hay[after]);
    if (left && right) return pos;
    pos = hay.find(needle, pos + 1);
  }
  return std::string_view::npos;
}

struct Match {
  int index = 0;
  std::size_t pos = std::string_view::npos;
  std::size_t len = 0;
};

// Longest word-bounded occurrence among candidates; ties between distinct
// indices are ambiguous and yield no match.
Match longest_occurrence(std::string_view sentence_lc, const std::vector<std::pair<int, std::string>>& candidates) {
  Match best;
  bool tie = false;
  for (const auto& [idx, text] : candidates) {
    std::size_t pos = find_word(sentence_lc, text);
    if (pos == std::string_view::npos) continue;
    if (text.size() > best.len) {
      best = {idx, pos, text.size()};
      tie = false;
    } else if (text.size() == best.len && idx != best.index) {
      tie = true;
    }
  }
  return tie ? Match{} : best;
}

std::optional<int> try_row(const Table& t, std::string_view label) {
  try {
    int r = find_row_by_label(t, label);
    if (r > t.header_row_count()) return r;
  } catch (const TableError&) {
  }
  return std::nullopt;
}

std::optional<int> try_col(const Table& t, std::string_view header) {
  try {
    return find_col_by_header(t, header);
  } catch (const TableError&) {
  }
  return std::nullopt;
}

// Last standalone number in `s` (ordinals like "8th" are skipped).
std::optional<Number> last_number(std::string_view s) {
  std::optional<Number> found;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(s[i]) || (i > 0 && (is_alnum(s[i - 1]) || s[i - 1] == '.'))) {
      ++i;
      continue;
    }
    std::size_t b = i;
    if (b > 0 && (s[b - 1] == '-' || s[b - 1] == '$') && (b == 1 || !is_alnum(s[b - 2]))) --b;
    std::size_t e = i;
    while (e < s.size() && (is_digit(s[e]) || ((s[e] == '.' || s[e] == ',') && e + 1 < s.size() && is_digit(s[e + 1]))))
      ++e;
    if (e < s.size() && s[e] == '%') ++e;
    i = e;
    if (e < s.size() && std::isalpha(static_cast<unsigned char>(s[e]))) continue;
    if (auto n = parse_numeric(s.substr(b, e - b))) found = n;
  }
  return found;
}

}  // namespace

std::string_view to_string(ParseError::Kind k) {
  switch (k) {
    case ParseError::Kind::kNoPlansFound: return "NoPlansFound";
    case ParseError::Kind::kNonContiguousIndices: return "NonContiguousIndices";
    case ParseError::Kind::kUnterminatedPlan: return "UnterminatedPlan";
    case ParseError::Kind::kMissingOpenTag: return "MissingOpenTag";
    case ParseError::Kind::kMissingCloseTag: return "MissingCloseTag";
    case ParseError::Kind::kHeaderNotFound: return "HeaderNotFound";
  }
  return "?";
}

std::string normalize_newlines(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r') {
      out += '\n';
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      out += text[i];
    }
  }
  return out;
}

std::vector<Subplan> parse_plans(std::string_view text) {
  std::vector<Subplan> plans;
  std::optional<PlanMarker> open;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '[') continue;
    auto m = match_marker(text, i);
    if (!m) continue;
    if (m->start) {
      if (open)
        throw ParseError(ParseError::Kind::kUnterminatedPlan, "plan " + std::to_string(open->index) + " is not terminated",
                         {open->index});
      open = m;
    } else if (open) {
      if (m->index != open->index)
        throw ParseError(ParseError::Kind::kUnterminatedPlan, "plan " + std::to_string(open->index) + " is not terminated",
                         {open->index});
      plans.push_back({open->index, trim(text.substr(open->end, m->begin - open->end))});
      open.reset();
    }
    i = m->end - 1;
  }
  if (open)
    throw ParseError(ParseError::Kind::kUnterminatedPlan, "plan " + std::to_string(open->index) + " is not terminated",
                     {open->index});
  if (plans.empty()) throw ParseError(ParseError::Kind::kNoPlansFound, "no [Plan i Start] blocks found");
  std::vector<int> found;
  for (const auto& p : plans) found.push_back(p.index);
  for (std::size_t k = 0; k < found.size(); ++k)
    if (found[k] != static_cast<int>(k) + 1)
      throw ParseError(ParseError::Kind::kNonContiguousIndices, "plan indices are not 1..N in order", found);
  return plans;
}

std::string render_plans(const std::vector<Subplan>& plans) {
  std::string out;
  for (std::size_t k = 0; k < plans.size(); ++k) {
    if (k) out += "\n\n";
    std::string i = std::to_string(plans[k].index);
    out += "[Plan " + i + " Start]" + plans[k].text + "[Plan " + i + " End]";
  }
  return out;
}

std::string parse_tagged(std::string_view text, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const std::string close_escaped = "<\\/" + std::string(tag) + ">";
  std::size_t start = text.find(open);
  if (start == std::string_view::npos)
    throw ParseError(ParseError::Kind::kMissingOpenTag, "missing <" + std::string(tag) + ">");
  int depth = 1;
  std::size_t p = start + open.size();
  while (p < text.size()) {
    if (text.compare(p, open.size(), open) == 0) {
      ++depth;
      p += open.size();
    } else if (text.compare(p, close.size(), close) == 0 || text.compare(p, close_escaped.size(), close_escaped) == 0) {
      std::size_t len = text.compare(p, close.size(), close) == 0 ? close.size() : close_escaped.size();
      if (--depth == 0) return trim(text.substr(start + open.size(), p - start - open.size()));
      p += len;
    } else {
      ++p;
    }
  }
  throw ParseError(ParseError::Kind::kMissingCloseTag, "missing </" + std::string(tag) + ">");
}

std::optional<ParsedFlag> parse_flag(std::string_view text, std::vector<ParseWarning>* warnings) {
  constexpr std::string_view kOpen = "<flag>";
  constexpr std::string_view kClose = "</flag>";
  constexpr std::string_view kCloseEscaped = "<\\/flag>";
  std::optional<ParsedFlag> last;
  int count = 0;
  std::size_t pos = text.find(kOpen);
  while (pos != std::string_view::npos) {
    std::size_t inner = pos + kOpen.size();
    std::size_t c1 = text.find(kClose, inner);
    std::size_t c2 = text.find(kCloseEscaped, inner);
    std::size_t close = std::min(c1, c2);
    std::size_t next_open = text.find(kOpen, inner);
    if (close == std::string_view::npos) break;
    if (next_open < close) {
      pos = next_open;
      continue;
    }
    std::size_t close_len = close == c1 ? kClose.size() : kCloseEscaped.size();
    std::string value = lower(collapse_ws(text.substr(inner, close - inner)));
    while (!value.empty() && value.back() == '.') value.pop_back();
    std::optional<ParsedFlag> f;
    if (value == "true") f = ParsedFlag{StepFlag::kTrue, pos, close + close_len, false};
    else if (value == "false") f = ParsedFlag{StepFlag::kFalse, pos, close + close_len, false};
    else if (value == "flase") f = ParsedFlag{StepFlag::kFalse, pos, close + close_len, true};
    else if (value == "not enough information" || value == "not enough info")
      f = ParsedFlag{StepFlag::kNotEnoughInfo, pos, close + close_len, false};
    if (f) {
      last = f;
      ++count;
    }
    pos = text.find(kOpen, close + close_len);
  }
  if (warnings) {
    if (count > 1) warnings->push_back(ParseWarning::kMultipleFlags);
    if (last && last->typo) warnings->push_back(ParseWarning::kTypoFlase);
  }
  return last;
}

namespace {

// Header line text with surrounding markdown emphasis removed.
std::string header_text(std::string_view line) {
  std::string t = trim(line);
  std::string out;
  for (char c : t)
    if (c != '*') out += c;
  return collapse_ws(out);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

// Index of the last line equal to `header` (after header_text), or npos.
std::size_t find_header(const std::vector<std::string_view>& lines, std::string_view header) {
  std::string want = lower(collapse_ws(header));
  std::size_t found = std::string_view::npos;
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (lower(header_text(lines[i])) == want) found = i;
  return found;
}

bool is_section_header(std::string_view line) { return trim(line).rfind("###", 0) == 0; }

}  // namespace

std::vector<ClaimBullet> parse_claim_bullets(std::string_view raw) {
  std::string text = normalize_newlines(raw);
  auto lines = split_lines(text);
  std::size_t h = find_header(lines, "### Claims Details");
  if (h == std::string_view::npos)
    throw ParseError(ParseError::Kind::kHeaderNotFound, "missing \"### Claims Details\" header");
  std::vector<ClaimBullet> out;
  for (std::size_t i = h + 1; i < lines.size(); ++i) {
    std::string line = trim(lines[i]);
    if (is_section_header(line)) break;
    if (line.empty()) continue;
    bool bullet = line[0] == '-' || line[0] == '*' || line.rfind("\xE2\x80\xA2", 0) == 0;
    if (!bullet) {
      if (!out.empty() && line != "...") out.back().claim += " " + line;
      continue;
    }
    std::string body = trim(std::string_view(line).substr(line[0] == '-' || line[0] == '*' ? 1 : 3));
    std::size_t colon = body.find(':');
    if (colon == std::string::npos) {
      out.push_back({"", body});
    } else {
      out.push_back({trim(std::string_view(body).substr(0, colon)), trim(std::string_view(body).substr(colon + 1))});
    }
  }
  return out;
}

std::string render_claim_bullets(const std::vector<ClaimBullet>& bullets) {
  std::string out = "### Claims Details\n";
  for (const auto& b : bullets) out += "- " + (b.aspect.empty() ? b.claim : b.aspect + ": " + b.claim) + "\n";
  return out;
}

std::string parse_section(std::string_view raw, std::string_view header) {
  std::string text = normalize_newlines(raw);
  auto lines = split_lines(text);
  std::size_t h = find_header(lines, header);
  if (h == std::string_view::npos)
    throw ParseError(ParseError::Kind::kHeaderNotFound, "missing \"" + std::string(header) + "\" header");
  std::string body;
  for (std::size_t i = h + 1; i < lines.size() && !is_section_header(lines[i]); ++i) {
    body += lines[i];
    body += '\n';
  }
  return trim(body);
}

std::vector<ExtractedFact> extract_cell_facts(std::string_view extraction, const Table& table) {
  std::vector<ExtractedFact> facts;
  if (table.row_count() == 0) return facts;

  std::vector<std::pair<int, std::string>> row_labels, col_headers;
  for (int r = table.header_row_count() + 1; r <= table.row_count(); ++r) {
    std::string l = normalize_label(get_cell(table, {r, 1}).text());
    if (!l.empty()) row_labels.emplace_back(r, std::move(l));
  }
  int header_rows = std::max(1, table.header_row_count());
  for (int r = 1; r <= std::min(header_rows, table.row_count()); ++r)
    for (int c = 2; c <= table.col_count(); ++c) {
      std::string h = normalize_label(get_cell(table, {r, c}).text());
      if (!h.empty()) col_headers.emplace_back(c, std::move(h));
    }

  for (const std::string& sentence : split_sentences(normalize_newlines(extraction))) {
    std::optional<int> row, col;
    std::string masked = sentence;
    auto mask = [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e && k < masked.size(); ++k) masked[k] = ' ';
    };
    for (const Quoted& q : find_quoted(sentence)) {
      if (!row) {
        if (auto r = try_row(table, q.inner)) {
          row = r;
          mask(q.begin, q.end);
          continue;
        }
      }
      if (!col) {
        if (auto c = try_col(table, q.inner)) {
          col = c;
          mask(q.begin, q.end);
        }
      }
    }
    // normalize_label only lowercases and collapses spaces; compare against a
    // lowercased copy so positions line up when the prose is single-spaced.
    std::string lc = lower(masked);
    if (!row) {
      Match m = longest_occurrence(lc, row_labels);
      if (m.len) {
        row = m.index;
        mask(m.pos, m.pos + m.len);
        lc = lower(masked);
      }
    }
    if (!col) {
      Match m = longest_occurrence(lc, col_headers);
      if (m.len) {
        col = m.index;
        mask(m.pos, m.pos + m.len);
      }
    }
    ExtractedFact fact;
    fact.description = sentence;
    if (row && col) fact.address = CellAddress{*row, *col};
    fact.value = last_number(masked);
    facts.push_back(std::move(fact));
  }
  return facts;
}

std::vector<std::pair<int, int>> parse_grounded_ordinals(std::string_view grounding) {
  std::vector<std::pair<int, int>> out;
  std::string lc = lower(collapse_ws(grounding));
  constexpr std::string_view kLead = "intersection of the ";
  auto ordinal = [&](std::size_t& p) -> std::optional<int> {
    std::size_t b = p;
    while (p < lc.size() && is_digit(lc[p]) && p - b < 6) ++p;
    if (p == b) return std::nullopt;
    int n = std::stoi(lc.substr(b, p - b));
    for (std::string_view suf : {"st", "nd", "rd", "th"})
      if (lc.compare(p, suf.size(), suf) == 0) {
        p += suf.size();
        break;
      }
    return n;
  };
  std::size_t pos = lc.find(kLead);
  while (pos != std::string::npos) {
    std::size_t p = pos + kLead.size();
    auto r = ordinal(p);
    constexpr std::string_view kMid = " row and the ";
    if (r && lc.compare(p, kMid.size(), kMid) == 0) {
      p += kMid.size();
      auto c = ordinal(p);
      if (c && lc.compare(p, 7, " column") == 0) out.emplace_back(*r, *c);
    }
    pos = lc.find(kLead, pos + 1);
  }
  return out;
}

std::vector<CellAddress> to_addresses(const std::vector<std::pair<int, int>>& ordinals, const Table& table,
                                      RowCounting counting) {
  std::vector<CellAddress> out;
  for (auto [r, c] : ordinals) {
    CellAddress a{table.absolute_row(r, counting), c};
    if (table.contains(a)) out.push_back(a);
  }
  return out;
}

std::optional<RowCounting> infer_row_counting(const std::vector<std::pair<int, int>>& ordinals,
                                              const std::vector<ExtractedFact>& facts, const Table& table) {
  int absolute = 0, data_rows = 0;
  for (auto [r, c] : ordinals)
    for (const auto& f : facts) {
      if (!f.address || f.address->col != c) continue;
      if (table.absolute_row(r, RowCounting::kAbsolute) == f.address->row) ++absolute;
      if (table.absolute_row(r, RowCounting::kDataRows) == f.address->row) ++data_rows;
    }
  if (absolute > data_rows) return RowCounting::kAbsolute;
  if (data_rows > absolute) return RowCounting::kDataRows;
  return std::nullopt;
}

}  // namespace atomchain
