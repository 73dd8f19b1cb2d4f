#include "atomchain/claim_factory.hpp"

#include "atomchain/oracle.hpp"
#include "atomchain/parsers.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <mutex>

namespace atomchain {

using nlohmann::json;

std::string_view to_string(NegativeMethod m) {
  return m == NegativeMethod::kSemanticFlip ? "SEMANTIC_FLIP" : "DATA_MANIPULATION";
}

std::string_view to_string(Validation v) {
  switch (v) {
    case Validation::kOracle: return "ORACLE";
    case Validation::kMultipath: return "MULTIPATH";
    case Validation::kHuman: return "HUMAN";
    case Validation::kUnvalidated: return "UNVALIDATED";
  }
  return "?";
}

std::optional<NegativeMethod> negative_method_from_string(std::string_view s) {
  if (s == "SEMANTIC_FLIP" || s == "flip") return NegativeMethod::kSemanticFlip;
  if (s == "DATA_MANIPULATION" || s == "manipulate") return NegativeMethod::kDataManipulation;
  return std::nullopt;
}

std::optional<Validation> validation_from_string(std::string_view s) {
  for (auto v : {Validation::kOracle, Validation::kMultipath, Validation::kHuman, Validation::kUnvalidated})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

json to_json(const Claim& c) {
  json j = {{"id", c.id}, {"text", c.text}, {"domain", c.domain_tag}};
  j["gold"] = c.gold_label ? json(std::string(to_string(*c.gold_label))) : json();
  j["check"] = c.check ? json(*c.check) : json();
  return j;
}

Claim claim_from_json(const json& j) {
  Claim c;
  c.id = j.at("id").get<std::string>();
  c.text = j.at("text").get<std::string>();
  c.domain_tag = j.value("domain", std::string());
  if (j.contains("gold") && !j["gold"].is_null()) {
    c.gold_label = verdict_from_string(j["gold"].get<std::string>());
    if (!c.gold_label) throw std::invalid_argument("bad gold label for claim " + c.id);
  }
  if (j.contains("check") && !j["check"].is_null()) c.check = j["check"].get<std::string>();
  return c;
}

json to_json(const ClaimPair& p) {
  return {{"schema_version", 1},
          {"table_ref", p.table_ref},
          {"positive", to_json(p.positive)},
          {"negative", to_json(p.negative)},
          {"negative_method", std::string(to_string(p.negative_method))},
          {"validation", std::string(to_string(p.validation))}};
}

ClaimPair claim_pair_from_json(const json& j) {
  ClaimPair p;
  p.table_ref = j.value("table_ref", std::string());
  p.positive = claim_from_json(j.at("positive"));
  p.negative = claim_from_json(j.at("negative"));
  auto m = negative_method_from_string(j.at("negative_method").get<std::string>());
  auto v = validation_from_string(j.at("validation").get<std::string>());
  if (!m || !v) throw std::invalid_argument("bad claim pair enums");
  p.negative_method = *m;
  p.validation = *v;
  return p;
}

// ---- text utilities ----

std::vector<std::string> banned_words_in(std::string_view text) {
  std::vector<std::string> found;
  std::string word;
  auto flush = [&] {
    if (word.empty()) return;
    for (auto b : kBannedWords)
      if (word == b) found.push_back(word);
    word.clear();
  };
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else flush();
  }
  flush();
  return found;
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::size_t token_edit_distance(std::string_view a, std::string_view b) {
  auto x = word_tokens(a), y = word_tokens(b);
  std::vector<std::size_t> prev(y.size() + 1), cur(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[y.size()];
}

bool within_flip_guard(std::string_view original, std::string_view edited, double max_fraction) {
  std::size_t d = token_edit_distance(original, edited);
  return d > 0 && static_cast<double>(d) <= max_fraction * static_cast<double>(word_tokens(original).size());
}

std::vector<NumberToken> number_tokens(std::string_view s) {
  auto digit = [&](std::size_t i) { return i < s.size() && s[i] >= '0' && s[i] <= '9'; };
  std::vector<NumberToken> out;
  std::size_t i = 0;
  while (i < s.size()) {
    bool start = digit(i) && (i == 0 || !(std::isalnum(static_cast<unsigned char>(s[i - 1])) || s[i - 1] == '.' ||
                                          s[i - 1] == ','));
    if (!start) {
      ++i;
      continue;
    }
    std::size_t e = i;
    while (digit(e)) ++e;
    std::string plain(s.substr(i, e - i));
    if (e - i <= 3) {
      while (e + 3 < s.size() + 0 && s[e] == ',' && digit(e + 1) && digit(e + 2) && digit(e + 3) && !digit(e + 4)) {
        plain += s.substr(e + 1, 3);
        e += 4;
      }
    }
    if (e < s.size() && s[e] == '.' && digit(e + 1)) {
      std::size_t f = e + 1;
      while (digit(f)) ++f;
      plain += s.substr(e, f - e);
      e = f;
    }
    bool glued = e < s.size() && std::isalpha(static_cast<unsigned char>(s[e]));
    if (!glued) {
      if (auto d = Decimal::parse(plain)) out.push_back({i, e, *d});
    }
    i = e;
  }
  return out;
}

namespace {

// Exponent e with 10^e <= |v| < 10^(e+1); v != 0.
int decimal_exponent(const Rational& v) {
  Rational a = v < 0 ? Rational(-v) : v;
  int e = 0;
  while (a >= pow10(e + 1)) ++e;
  while (a < pow10(e)) --e;
  return e;
}

// Candidate replacements, nearest first, decreasing before increasing.
std::vector<Decimal> alternatives(const Decimal& d) {
  const int s = d.scale();
  int k = d.is_zero() ? -s : std::max(decimal_exponent(d.value()) - 1, -s);
  Rational step = 2 * pow10(k);
  std::vector<Decimal> out;
  for (int m = 1; m <= 5; ++m) {
    Rational down = d.value() - m * step, up = d.value() + m * step;
    if (!(d.value() > 0 && down <= 0)) out.emplace_back(down, s);
    out.emplace_back(up, s);
  }
  return out;
}

void collect_literals(const Expr& e, std::vector<Decimal>& out) {
  if (e.kind == Expr::Kind::kLiteral) out.push_back(e.literal.amount);
  for (const auto& a : e.args) collect_literals(a, out);
}

Expr replace_literal(Expr e, const Decimal& from, const Decimal& to) {
  if (e.kind == Expr::Kind::kLiteral && e.literal.amount == from) e.literal.amount = to;
  for (auto& a : e.args) a = replace_literal(std::move(a), from, to);
  return e;
}

std::string splice(std::string_view text, const NumberToken& t, const Decimal& value) {
  return std::string(text.substr(0, t.begin)) + value.to_string() + std::string(text.substr(t.end));
}

std::optional<bool> check_holds(const std::string& check, const Table& table) {
  try {
    OracleVerdict v = eval(parse_check(check), table);
    if (!v.is_bool()) return std::nullopt;
    return v.truth();
  } catch (const OracleError&) {
    return std::nullopt;
  }
}

}  // namespace

// ---- factory ----

ClaimFactory::ClaimFactory(Client& client, FactoryConfig config, const TemplateSet& templates,
                           const Orchestrator* validator)
    : client_(client), config_(std::move(config)), templates_(templates), validator_(validator) {
  config_.sampling.validate();
  if (config_.generation_attempts < 1) throw ConfigError("generation_attempts must be at least 1");
  if (!(config_.flip_max_fraction > 0 && config_.flip_max_fraction <= 1))
    throw ConfigError("flip_max_fraction must be in (0,1]");
  if (config_.multipath_k < 1 || config_.multipath_k % 2 == 0) throw ConfigError("multipath_k must be odd");
}

template <class Accept>
std::string ClaimFactory::call(std::string_view stage, const PromptContext& ctx, Accept&& accept) const {
  RenderedPrompt prompt = templates_.render(stage, ctx);
  const ChainConfig& s = config_.sampling;
  GenerationRequest req;
  req.model_id = s.model_id;
  req.temperature = s.temperature;
  req.top_p = s.top_p;
  req.top_k = s.top_k;
  req.max_tokens = s.max_tokens;
  req.seed = s.seed;
  req.messages = {{"system", prompt.system}, {"user", prompt.user}};
  std::string reason;
  for (int attempt = 1; attempt <= config_.generation_attempts; ++attempt) {
    GenerationResponse resp = client_.generate(req);
    bool last = attempt == config_.generation_attempts;
    try {
      std::optional<std::string> rejected = accept(resp.text, last);
      if (!rejected) return resp.text;
      reason = *rejected;
    } catch (const ParseError& e) {
      if (last) throw;
      reason = e.what();
    }
    req.messages.push_back({"assistant", resp.text});
    req.messages.push_back({"user", "Your previous response was rejected (" + reason +
                                        "). Please answer again, following the guidelines and format exactly."});
  }
  throw FactoryError(FactoryError::Kind::kGenerationBudgetExceeded,
                     std::string(stage) + ": no acceptable response after " +
                         std::to_string(config_.generation_attempts) + " attempts (" + reason + ")");
}

std::vector<Claim> ClaimFactory::generate_positive(const Table& table, const std::string& table_ref,
                                                   const std::string& domain) const {
  PromptContext ctx{{"caption", table.caption()}, {"table", render_table(table)}};
  std::vector<ClaimBullet> kept;
  call("positive", ctx, [&](const std::string& text, bool last) -> std::optional<std::string> {
    auto bullets = parse_claim_bullets(text);
    std::vector<ClaimBullet> clean;
    std::vector<std::string> hits;
    for (auto& b : bullets) {
      auto words = banned_words_in(b.claim);
      if (words.empty() && !trim(b.claim).empty()) clean.push_back(std::move(b));
      hits.insert(hits.end(), words.begin(), words.end());
    }
    if (clean.empty()) return std::string("no usable claims");
    if (!hits.empty() && !last) return "vague words used: " + hits.front();
    kept = std::move(clean);
    return std::nullopt;
  });
  std::vector<Claim> out;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    Claim c;
    c.id = table_ref + "-pos-" + std::to_string(i + 1);
    c.text = kept[i].claim;
    c.gold_label = Verdict::kSupport;
    c.domain_tag = domain;
    out.push_back(std::move(c));
  }
  return out;
}

Claim ClaimFactory::flip_claim(const Claim& claim, const Table& table) const {
  if (claim.gold_label != Verdict::kSupport)
    throw FactoryError(FactoryError::Kind::kNotSupported, "flip_claim needs a SUPPORT claim");
  if (trim(claim.text).empty()) throw FactoryError(FactoryError::Kind::kEmptyClaim, "claim text is empty");
  PromptContext ctx{{"caption", table.caption()}, {"table", render_table(table)}, {"claim", claim.text}};
  std::string edited;
  call("flip", ctx, [&](const std::string& text, bool) -> std::optional<std::string> {
    std::string c = parse_section(text, "### Claim");
    if (!within_flip_guard(claim.text, c, config_.flip_max_fraction))
      return "edit distance " + std::to_string(token_edit_distance(claim.text, c)) + " outside the guard";
    edited = c;
    return std::nullopt;
  });
  Claim out = claim;
  out.id = claim.id + "-flip";
  out.text = edited;
  out.gold_label = Verdict::kRefute;
  out.check.reset();
  return out;
}

Claim ClaimFactory::manipulate_data(const Claim& claim, const Table& table) const {
  if (trim(claim.text).empty()) throw FactoryError(FactoryError::Kind::kEmptyClaim, "claim text is empty");
  auto tokens = number_tokens(claim.text);
  if (tokens.empty())
    throw FactoryError(FactoryError::Kind::kNoQuantitativeElement, "claim " + claim.id + " quotes no number");

  Claim out = claim;
  out.id = claim.id + "-manip";
  out.gold_label = Verdict::kRefute;

  if (claim.check) {
    Expr e = parse_check(*claim.check);
    if (check_holds(*claim.check, table) != true)
      throw FactoryError(FactoryError::Kind::kCouldNotFalsify, "attached check does not hold on the table");
    std::vector<Decimal> lits;
    collect_literals(e, lits);
    for (const auto& t : tokens) {
      if (std::find(lits.begin(), lits.end(), t.value) == lits.end()) continue;
      for (const auto& alt : alternatives(t.value)) {
        std::string check = print_check(replace_literal(e, t.value, alt));
        if (check_holds(check, table) == false) {
          out.text = splice(claim.text, t, alt);
          out.check = check;
          return out;
        }
      }
    }
    throw FactoryError(FactoryError::Kind::kCouldNotFalsify, "no single-number change falsifies the check");
  }

  out.check.reset();
  if (validator_) {
    for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
      auto alts = alternatives(it->value);
      for (std::size_t a = 0; a < std::min<std::size_t>(2, alts.size()); ++a) {
        out.text = splice(claim.text, *it, alts[a]);
        MultipathOptions mp;
        mp.k = config_.multipath_k;
        if (validator_->multipath_verify(table, out, mp).agreed_label == Verdict::kRefute) return out;
      }
    }
    throw FactoryError(FactoryError::Kind::kCouldNotFalsify, "multipath never refuted an altered claim");
  }
  // Unvalidated: the last quoted number is usually the claimed result.
  out.text = splice(claim.text, tokens.back(), alternatives(tokens.back().value).front());
  return out;
}

Claim ClaimFactory::rewrite_oos(const Claim& claim, const Table& table) const {
  if (trim(claim.text).empty()) throw FactoryError(FactoryError::Kind::kEmptyClaim, "claim text is empty");
  PromptContext ctx{{"caption", table.caption()}, {"table", render_table(table)}, {"claim", claim.text}};
  std::string rewritten;
  call("oos", ctx, [&](const std::string& text, bool) -> std::optional<std::string> {
    std::string c = parse_section(text, "### Claim");
    if (c.empty()) return std::string("empty rewrite");
    if (validator_ && claim.gold_label) {
      Claim probe = claim;
      probe.text = c;
      MultipathOptions mp;
      mp.k = config_.multipath_k;
      if (validator_->multipath_verify(table, probe, mp).agreed_label != claim.gold_label)
        return std::string("rewrite no longer verifies as ") + std::string(to_string(*claim.gold_label));
    }
    rewritten = c;
    return std::nullopt;
  });
  Claim out = claim;
  out.text = rewritten;
  out.check.reset();
  return out;
}

void ClaimFactory::enqueue(const ClaimPair& pair, const std::string& reason) const {
  if (!config_.adjudication_queue) return;
  static std::mutex mu;
  json entry = {{"kind", "claim_pair"},
                {"table_ref", pair.table_ref},
                {"positive_id", pair.positive.id},
                {"negative_id", pair.negative.id},
                {"reason", reason},
                {"pair", to_json(pair)}};
  std::lock_guard lock(mu);
  std::ofstream out(*config_.adjudication_queue, std::ios::app);
  if (!out) throw std::runtime_error("cannot open adjudication queue " + config_.adjudication_queue->string());
  out << entry.dump() << '\n';
}

ClaimPair ClaimFactory::validate_pair(ClaimPair pair, const Table& table) const {
  if (pair.validation == Validation::kHuman) return pair;
  pair.validation = Validation::kUnvalidated;
  std::string reason;
  if (pair.positive.check && pair.negative.check) {
    auto pos = check_holds(*pair.positive.check, table);
    auto neg = check_holds(*pair.negative.check, table);
    if (pos == true && neg == false) {
      pair.validation = Validation::kOracle;
      return pair;
    }
    reason = "oracle: positive check " + std::string(pos ? (*pos ? "holds" : "fails") : "errors") +
             ", negative check " + std::string(neg ? (*neg ? "holds" : "fails") : "errors");
  } else if (validator_) {
    MultipathOptions mp;
    mp.k = config_.multipath_k;
    auto pos = validator_->multipath_verify(table, pair.positive, mp, pair.table_ref);
    auto neg = validator_->multipath_verify(table, pair.negative, mp, pair.table_ref);
    if (pos.agreed_label == Verdict::kSupport && neg.agreed_label == Verdict::kRefute) {
      pair.validation = Validation::kMultipath;
      return pair;
    }
    auto name = [](const std::optional<Verdict>& v) { return v ? std::string(to_string(*v)) : std::string("none"); };
    reason = "multipath: positive " + name(pos.agreed_label) + ", negative " + name(neg.agreed_label);
  } else {
    reason = "no validator available";
  }
  enqueue(pair, reason);
  return pair;
}

std::vector<ClaimPair> ClaimFactory::build_pairs(const Table& table, const std::string& table_ref,
                                                 const std::string& domain, NegativeMethod method) const {
  std::vector<ClaimPair> out;
  for (const Claim& pos : generate_positive(table, table_ref, domain)) {
    ClaimPair p;
    p.table_ref = table_ref;
    p.positive = pos;
    p.negative_method = method;
    try {
      p.negative = method == NegativeMethod::kSemanticFlip ? flip_claim(pos, table) : manipulate_data(pos, table);
    } catch (const FactoryError&) {
      continue;
    }
    out.push_back(validate_pair(std::move(p), table));
  }
  return out;
}

std::size_t apply_human_verdicts(std::vector<ClaimPair>& pairs, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::map<std::string, bool> verdicts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line);
    verdicts[j.at("negative_id").get<std::string>()] = j.at("accept").get<bool>();
  }
  std::size_t applied = 0;
  for (auto& p : pairs) {
    auto it = verdicts.find(p.negative.id);
    if (it == verdicts.end()) continue;
    p.validation = it->second ? Validation::kHuman : Validation::kUnvalidated;
    ++applied;
  }
  return applied;
}

}  // namespace atomchain
