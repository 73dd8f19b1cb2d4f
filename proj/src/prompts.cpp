#include "atomchain/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace atomchain {

namespace {

constexpr std::string_view kExampleOpen = "{EXAMPLE['";
constexpr std::string_view kExampleClose = "']}";

bool name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '&'; }

bool in_vocabulary(std::string_view name) {
  return std::find(std::begin(kPlaceholderVocabulary), std::end(kPlaceholderVocabulary), name) !=
         std::end(kPlaceholderVocabulary);
}

bool contains(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

/// Replaces {EXAMPLE['key']} references with exemplar text.
std::string splice_exemplars(std::string_view body, const ExemplarSet& exemplars, const std::string& stage) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    std::size_t open = body.find(kExampleOpen, pos);
    if (open == std::string_view::npos) break;
    std::size_t key_begin = open + kExampleOpen.size();
    std::size_t close = body.find(kExampleClose, key_begin);
    if (close == std::string_view::npos)
      throw PromptError(PromptError::Kind::kParseError, stage, "stage " + stage + ": unterminated exemplar reference");
    std::string key(body.substr(key_begin, close - key_begin));
    auto it = exemplars.find(key);
    if (it == exemplars.end())
      throw PromptError(PromptError::Kind::kParseError, key, "stage " + stage + ": unknown exemplar '" + key + "'");
    out.append(body.substr(pos, open - pos));
    out.append(it->second);
    pos = close + kExampleClose.size();
  }
  out.append(body.substr(pos));
  return out;
}

/// Calls `on_token(begin, end, name)` for each <name> occurrence whose name
/// satisfies `is_placeholder`.
template <class Pred, class Fn>
void scan_placeholders(std::string_view body, Pred is_placeholder, Fn on_token) {
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] != '<') continue;
    std::size_t j = i + 1;
    while (j < body.size() && name_char(body[j])) ++j;
    if (j == i + 1 || j >= body.size() || body[j] != '>') continue;
    std::string_view name = body.substr(i + 1, j - i - 1);
    if (is_placeholder(name)) {
      on_token(i, j + 1, name);
      i = j;
    }
  }
}

void check_declared(const PromptTemplate& t, std::string_view body) {
  auto declared = [&](std::string_view n) { return contains(t.inputs, n) || contains(t.outputs, n); };
  scan_placeholders(
      body, [&](std::string_view n) { return in_vocabulary(n) || declared(n); },
      [&](std::size_t, std::size_t, std::string_view name) {
        if (!declared(name))
          throw PromptError(PromptError::Kind::kUndeclaredPlaceholder, std::string(name),
                            "stage " + t.stage + ": placeholder <" + std::string(name) + "> is not declared");
      });
}

void check_name(const std::string& stage, const std::string& name) {
  if (name.empty() || !std::all_of(name.begin(), name.end(), name_char))
    throw PromptError(PromptError::Kind::kParseError, name, "stage " + stage + ": bad placeholder name '" + name + "'");
}

}  // namespace

TemplateSet::TemplateSet(std::vector<PromptTemplate> templates, ExemplarSet exemplars)
    : templates_(std::move(templates)), exemplars_(std::move(exemplars)) {
  std::set<std::string> seen;
  for (const auto& t : templates_) {
    if (!seen.insert(t.stage).second)
      throw PromptError(PromptError::Kind::kParseError, t.stage, "duplicate stage '" + t.stage + "'");
    for (const auto& n : t.inputs) check_name(t.stage, n);
    for (const auto& n : t.outputs) {
      check_name(t.stage, n);
      if (atomchain::contains(t.inputs, n))
        throw PromptError(PromptError::Kind::kParseError, n, "stage " + t.stage + ": '" + n + "' is input and output");
    }
    std::string sys = splice_exemplars(t.system_body, exemplars_, t.stage);
    std::string user = splice_exemplars(t.user_body, exemplars_, t.stage);
    check_declared(t, sys);
    check_declared(t, user);
    spliced_.emplace_back(std::move(sys), std::move(user));
  }
}

bool TemplateSet::contains(std::string_view stage) const {
  return std::any_of(templates_.begin(), templates_.end(), [&](const PromptTemplate& t) { return t.stage == stage; });
}

const PromptTemplate& TemplateSet::at(std::string_view stage) const {
  for (const auto& t : templates_)
    if (t.stage == stage) return t;
  throw PromptError(PromptError::Kind::kUnknownStage, std::string(stage), "unknown stage '" + std::string(stage) + "'");
}

RenderedPrompt TemplateSet::render(std::string_view stage, const PromptContext& context) const {
  std::size_t idx = 0;
  while (idx < templates_.size() && templates_[idx].stage != stage) ++idx;
  if (idx == templates_.size())
    throw PromptError(PromptError::Kind::kUnknownStage, std::string(stage), "unknown stage '" + std::string(stage) + "'");
  const PromptTemplate& t = templates_[idx];

  for (const auto& name : t.inputs)
    if (!context.count(name))
      throw PromptError(PromptError::Kind::kMissingPlaceholder, name,
                        "stage " + t.stage + ": missing placeholder <" + name + ">");
  for (const auto& [name, value] : context)
    if (!atomchain::contains(t.inputs, name))
      throw PromptError(PromptError::Kind::kUndeclaredPlaceholder, name,
                        "stage " + t.stage + ": context supplies undeclared <" + name + ">");

  auto substitute = [&](std::string_view body) {
    std::string out;
    std::size_t pos = 0;
    scan_placeholders(
        body, [&](std::string_view n) { return atomchain::contains(t.inputs, n) || atomchain::contains(t.outputs, n); },
        [&](std::size_t b, std::size_t e, std::string_view name) {
          out.append(body.substr(pos, b - pos));
          auto it = context.find(std::string(name));
          if (it != context.end()) out.append(it->second);
          pos = e;
        });
    out.append(body.substr(pos));
    return out;
  };
  return {substitute(spliced_[idx].first), substitute(spliced_[idx].second)};
}

// ---- bundle format --------------------------------------------------------

namespace {

constexpr std::string_view kMarker = "=== ";

bool needs_escape(std::string_view line) {
  return line.substr(0, kMarker.size()) == kMarker || line == "SYSTEM:" || line == "USER:" ||
         (!line.empty() && line.front() == '\\');
}

void append_body(std::string& out, std::string_view body) {
  std::size_t start = 0;
  while (true) {
    std::size_t end = body.find('\n', start);
    std::string_view line = body.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    if (needs_escape(line)) out += '\\';
    out.append(line);
    out += '\n';
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    std::string t;
    for (char c : cur)
      if (!std::isspace(static_cast<unsigned char>(c))) t += c;
    if (!t.empty()) out.push_back(t);
    cur.clear();
  };
  for (char c : s) {
    if (c == ',') flush();
    else cur += c;
  }
  flush();
  return out;
}

std::string strip(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

std::string serialize_templates(const TemplateSet& set) {
  std::string out;
  for (const auto& t : set.templates()) {
    out += "=== STAGE " + t.stage + " | inputs: ";
    for (std::size_t i = 0; i < t.inputs.size(); ++i) out += (i ? ", " : "") + t.inputs[i];
    out += " | outputs: ";
    for (std::size_t i = 0; i < t.outputs.size(); ++i) out += (i ? ", " : "") + t.outputs[i];
    out += "\nSYSTEM:\n";
    append_body(out, t.system_body);
    out += "USER:\n";
    append_body(out, t.user_body);
  }
  for (const auto& [key, text] : set.exemplars()) {
    out += "=== EXEMPLAR " + key + "\n";
    append_body(out, text);
  }
  return out;
}

TemplateSet parse_templates(std::string_view text) {
  std::vector<std::string> lines;
  {
    std::size_t start = 0;
    while (start < text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(start, end - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.emplace_back(line);
      start = end + 1;
    }
  }
  auto fail = [](int line, const std::string& msg) {
    throw PromptError(PromptError::Kind::kParseError, "", "line " + std::to_string(line) + ": " + msg, line);
  };

  std::vector<PromptTemplate> templates;
  std::vector<int> template_lines;
  ExemplarSet exemplars;

  // Which block body lines currently go to.
  enum class Target { kNone, kSystem, kUser, kExemplar };
  Target target = Target::kNone;
  bool seen_section = false;
  std::vector<std::string> body;
  std::string exemplar_key;

  auto flush = [&] {
    std::string joined;
    for (std::size_t i = 0; i < body.size(); ++i) joined += (i ? "\n" : "") + body[i];
    switch (target) {
      case Target::kSystem: templates.back().system_body = joined; break;
      case Target::kUser: templates.back().user_body = joined; break;
      case Target::kExemplar: exemplars[exemplar_key] = joined; break;
      case Target::kNone: break;
    }
    body.clear();
  };

  PromptTemplate* pending = nullptr;  // stage awaiting SYSTEM:/USER:
  int pending_state = 0;              // 0 header read, 1 SYSTEM seen, 2 USER seen
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    const int line_no = static_cast<int>(i + 1);
    if (line.rfind(kMarker, 0) == 0) {
      flush();
      if (pending && pending_state < 2) fail(line_no, "stage '" + pending->stage + "' is missing its USER: block");
      seen_section = true;
      std::string_view rest = std::string_view(line).substr(kMarker.size());
      if (rest.rfind("STAGE ", 0) == 0) {
        std::string_view spec = rest.substr(6);
        std::vector<std::string> parts;
        std::size_t s = 0;
        while (true) {
          std::size_t bar = spec.find('|', s);
          parts.push_back(strip(spec.substr(s, bar == std::string_view::npos ? std::string_view::npos : bar - s)));
          if (bar == std::string_view::npos) break;
          s = bar + 1;
        }
        PromptTemplate t;
        t.stage = parts.front();
        if (t.stage.empty()) fail(line_no, "stage header without an id");
        for (std::size_t p = 1; p < parts.size(); ++p) {
          if (parts[p].rfind("inputs:", 0) == 0) t.inputs = split_list(std::string_view(parts[p]).substr(7));
          else if (parts[p].rfind("outputs:", 0) == 0) t.outputs = split_list(std::string_view(parts[p]).substr(8));
          else fail(line_no, "unknown stage attribute '" + parts[p] + "'");
        }
        templates.push_back(std::move(t));
        template_lines.push_back(line_no);
        pending = &templates.back();
        pending_state = 0;
        target = Target::kNone;
      } else if (rest.rfind("EXEMPLAR ", 0) == 0) {
        exemplar_key = strip(rest.substr(9));
        if (exemplar_key.empty()) fail(line_no, "exemplar header without a key");
        if (exemplars.count(exemplar_key)) fail(line_no, "duplicate exemplar '" + exemplar_key + "'");
        pending = nullptr;
        target = Target::kExemplar;
      } else {
        fail(line_no, "unknown section '" + line + "'");
      }
      continue;
    }
    if (pending && line == "SYSTEM:" && pending_state == 0) {
      pending_state = 1;
      target = Target::kSystem;
      continue;
    }
    if (pending && line == "USER:" && pending_state == 1) {
      flush();
      pending_state = 2;
      target = Target::kUser;
      continue;
    }
    if (!seen_section) continue;  // preamble
    if (pending && pending_state == 0) fail(line_no, "expected SYSTEM: after stage header");
    std::string_view content = line;
    if (!content.empty() && content.front() == '\\') content.remove_prefix(1);
    body.emplace_back(content);
  }
  flush();
  if (pending && pending_state < 2) fail(static_cast<int>(lines.size()), "stage '" + pending->stage + "' is incomplete");

  try {
    return TemplateSet(std::move(templates), std::move(exemplars));
  } catch (const PromptError& e) {
    // Point at the header line of the offending stage.
    int line = 0;
    std::string msg = e.what();
    std::size_t colon = msg.find(':');
    if (msg.rfind("stage ", 0) == 0 && colon != std::string::npos) {
      std::string stage = msg.substr(6, colon - 6);
      for (std::size_t k = 0; k < template_lines.size(); ++k)
        if (lines[static_cast<std::size_t>(template_lines[k] - 1)].rfind("=== STAGE " + stage, 0) == 0) {
          line = template_lines[k];
          break;
        }
    }
    throw PromptError(PromptError::Kind::kParseError, e.name(), "line " + std::to_string(line) + ": " + msg, line);
  }
}

TemplateSet load_templates(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PromptError(PromptError::Kind::kParseError, path.string(), "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_templates(ss.str());
}

void save_templates(const TemplateSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serialize_templates(set);
}

const TemplateSet& default_templates() {
  static const TemplateSet set = parse_templates(default_template_text());
  return set;
}

}  // namespace atomchain
