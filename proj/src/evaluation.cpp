#include "atomchain/evaluation.hpp"

#include "atomchain/parsers.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace atomchain {

using nlohmann::json;

std::string format_rate(const Rational& r, int places) { return Decimal(r, places).to_string(); }

std::string_view to_string(StepVerdict v) { return v == StepVerdict::kCorrect ? "CORRECT" : "INCORRECT"; }

std::string to_string(const JudgeId& j) {
  switch (j.kind) {
    case JudgeId::Kind::kModel: return "MODEL:" + j.id;
    case JudgeId::Kind::kHuman: return "HUMAN:" + j.id;
    case JudgeId::Kind::kOracle: return "ORACLE";
  }
  return "?";
}

std::optional<JudgeId> judge_id_from_string(std::string_view s) {
  if (s == "ORACLE") return JudgeId{JudgeId::Kind::kOracle, ""};
  auto colon = s.find(':');
  if (colon == std::string_view::npos || colon + 1 == s.size()) return std::nullopt;
  std::string_view kind = s.substr(0, colon), id = s.substr(colon + 1);
  if (kind == "MODEL") return JudgeId{JudgeId::Kind::kModel, std::string(id)};
  if (kind == "HUMAN") return JudgeId{JudgeId::Kind::kHuman, std::string(id)};
  return std::nullopt;
}

Rational step_accuracy(int executed_steps, const JudgmentSet& judgments) {
  if (executed_steps <= 0) throw EvaluationError(EvaluationError::Kind::kNoSteps, "trace has no executed steps");
  for (const auto& [step, j] : judgments.by_step())
    if (step < 1 || step > executed_steps)
      throw EvaluationError(EvaluationError::Kind::kStepOutOfRange,
                            "judgment for step " + std::to_string(step) + " of " + std::to_string(executed_steps));
  long correct = 0;
  for (int i = 1; i <= executed_steps; ++i) {
    auto it = judgments.by_step().find(i);
    if (it == judgments.by_step().end())
      throw EvaluationError(EvaluationError::Kind::kMissingJudgment, "no judgment for step " + std::to_string(i));
    if (it->second.verdict == StepVerdict::kCorrect) ++correct;
  }
  return Rational(correct, executed_steps);
}

Rational step_accuracy(const ChainTrace& trace, const JudgmentSet& judgments) {
  return step_accuracy(static_cast<int>(trace.steps.size()), judgments);
}

std::map<std::string, JudgmentSet> load_judgments(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw EvaluationError(EvaluationError::Kind::kBadInput, "cannot read " + path.string());
  std::map<std::string, JudgmentSet> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      StepJudgment s;
      s.step = j.at("step").get<int>();
      std::string v = j.at("verdict").get<std::string>();
      if (v == "CORRECT") s.verdict = StepVerdict::kCorrect;
      else if (v == "INCORRECT") s.verdict = StepVerdict::kIncorrect;
      else throw std::invalid_argument("bad verdict " + v);
      auto judge = judge_id_from_string(j.value("judge", std::string("ORACLE")));
      if (!judge) throw std::invalid_argument("bad judge");
      s.judge = *judge;
      out[j.at("trace_id").get<std::string>()].add(s);
    } catch (const std::exception& e) {
      throw EvaluationError(EvaluationError::Kind::kBadInput,
                            path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

JudgmentSet oracle_step_judgments(const ChainTrace& trace, const Table& table) {
  JudgmentSet out;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& facts = trace.steps[i].extraction;
    if (facts.empty()) continue;
    auto checks = check_extraction(facts, table);
    bool verifiable = std::all_of(checks.begin(), checks.end(),
                                  [](const ExtractionCheck& c) { return c.status != ExtractionCheck::Status::kUnverifiable; });
    if (!verifiable) continue;
    bool all_match = std::all_of(checks.begin(), checks.end(),
                                 [](const ExtractionCheck& c) { return c.status == ExtractionCheck::Status::kMatch; });
    out.add({static_cast<int>(i + 1), all_match ? StepVerdict::kCorrect : StepVerdict::kIncorrect,
             {JudgeId::Kind::kOracle, ""}});
  }
  return out;
}

// ---- context elements ----

namespace {

std::vector<std::string> sentences(std::string_view text) {
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
    bool end = c == '.' || c == '!' || c == '?';
    if (end && (i + 1 == text.size() || text[i + 1] == ' ' || text[i + 1] == '\n')) flush();
  }
  flush();
  return out;
}

const StepRecord& step_at(const ChainTrace& trace, int step) {
  if (step < 1 || step > static_cast<int>(trace.steps.size()))
    throw EvaluationError(EvaluationError::Kind::kStepOutOfRange,
                          "step " + std::to_string(step) + " of " + std::to_string(trace.steps.size()));
  return trace.steps[static_cast<std::size_t>(step - 1)];
}

std::string step_output(const StepRecord& s) {
  std::string out = s.reasoning.value_or("");
  if (s.recap) out += "\n" + *s.recap;
  return out;
}

}  // namespace

std::vector<ContextElement> context_elements(const ChainTrace& trace, int step, const Table* table) {
  const StepRecord& s = step_at(trace, step);
  std::vector<ContextElement> out;
  for (const auto& f : s.extraction) {
    ContextElement e{ContextElement::Kind::kFact, f.description, {}};
    if (f.address) e.addresses.push_back(*f.address);
    out.push_back(std::move(e));
  }
  if (!trim(s.subplan.text).empty()) out.push_back({ContextElement::Kind::kPlan, trim(s.subplan.text), {}});
  if (s.grounding) {
    for (auto& sentence : sentences(*s.grounding)) {
      ContextElement e{ContextElement::Kind::kGrounding, sentence, {}};
      if (table) e.addresses = to_addresses(parse_grounded_ordinals(sentence), *table, trace.row_counting);
      out.push_back(std::move(e));
    }
  }
  return out;
}

// ---- scripted and oracle judges ----

Rational ScriptedRedundancyJudge::redundant(const ChainTrace&, int step, const std::vector<ContextElement>&,
                                            std::size_t removed) const {
  auto it = redundant_.find(step);
  return it != redundant_.end() && it->second.count(removed) ? Rational(1) : Rational(0);
}

Rational ScriptedAlignmentJudge::aligned(const ChainTrace&, int step) const {
  return misaligned_.count(step) ? Rational(0) : Rational(1);
}

OracleRedundancyJudge::OracleRedundancyJudge(const Expr& check, const Table& table)
    : evidence_(eval(check, table).evidence) {}

Rational OracleRedundancyJudge::redundant(const ChainTrace&, int, const std::vector<ContextElement>& elements,
                                          std::size_t removed) const {
  const auto& addrs = elements.at(removed).addresses;
  if (addrs.empty()) return 0;
  for (const auto& a : addrs)
    for (const auto& e : evidence_)
      if (e.address == a) return 0;
  return 1;
}

// ---- model judge ----

LlmJudge::LlmJudge(Client& client, LlmJudgeOptions options, JudgeInput input, const TemplateSet& templates)
    : client_(client), options_(std::move(options)), input_(std::move(input)), templates_(templates) {
  options_.sampling.validate();
  if (options_.runs < 1) throw ConfigError("judge runs must be at least 1");
  if (!input_.table) throw ConfigError("judge needs the table");
}

PromptContext LlmJudge::base_context() const {
  return {{"caption", input_.table->caption()}, {"table", render_table(*input_.table)}, {"claim", input_.claim}};
}

int LlmJudge::vote(std::string_view stage, const PromptContext& ctx, std::string_view yes, std::string_view no) const {
  RenderedPrompt prompt = templates_.render(stage, ctx);
  const ChainConfig& s = options_.sampling;
  int votes = 0;
  for (int run = 0; run < options_.runs; ++run) {
    GenerationRequest req;
    req.model_id = s.model_id;
    req.temperature = s.temperature;
    req.top_p = s.top_p;
    req.top_k = s.top_k;
    req.max_tokens = s.max_tokens;
    req.seed = s.seed.value_or(0) + run;
    req.messages = {{"system", prompt.system}, {"user", prompt.user}};
    std::optional<bool> answer;
    std::string error;
    for (int attempt = 0; attempt <= s.parse_retries && !answer; ++attempt) {
      std::string text = client_.generate(req).text;
      try {
        std::string v = parse_tagged(text, "judgment");
        std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::toupper(c); });
        if (v == yes) answer = true;
        else if (v == no) answer = false;
        else error = "unexpected judgment '" + v + "'";
      } catch (const ParseError& e) {
        error = e.what();
      }
      if (!answer) {
        req.messages.push_back({"assistant", text});
        req.messages.push_back({"user", "Your previous response could not be parsed (" + error +
                                            "). Please answer again, following the required output format exactly."});
      }
    }
    if (!answer) throw EvaluationError(EvaluationError::Kind::kJudgeOutput, std::string(stage) + ": " + error);
    if (*answer) ++votes;
  }
  return votes;
}

Rational LlmJudge::redundant(const ChainTrace& trace, int step, const std::vector<ContextElement>& elements,
                             std::size_t removed) const {
  const StepRecord& s = step_at(trace, step);
  std::string listing;
  for (std::size_t i = 0; i < elements.size(); ++i) listing += std::to_string(i + 1) + ". " + elements[i].text + "\n";
  PromptContext ctx = base_context();
  ctx["subplan"] = s.subplan.text;
  ctx["reasoning"] = step_output(s);
  ctx["context"] = trim(listing);
  ctx["removed"] = elements.at(removed).text;
  return Rational(vote("judge_redundancy", ctx, "UNCHANGED", "CHANGED"), options_.runs);
}

Rational LlmJudge::aligned(const ChainTrace& trace, int step) const {
  PromptContext ctx = base_context();
  ctx["previous"] = step_output(step_at(trace, step - 1));
  ctx["reasoning"] = step_output(step_at(trace, step));
  return Rational(vote("judge_alignment", ctx, "ALIGNED", "MISALIGNED"), options_.runs);
}

StepJudgment LlmJudge::judge(const ChainTrace& trace, int step) const {
  const StepRecord& s = step_at(trace, step);
  PromptContext ctx = base_context();
  ctx["subplan"] = s.subplan.text;
  ctx["grounding&extraction"] = "<grounding>\n" + s.grounding.value_or("") + "\n</grounding>\n\n<extraction>\n" +
                                s.extraction_text.value_or("") + "\n</extraction>";
  ctx["reasoning"] = s.reasoning.value_or("");
  int yes = vote("judge_step", ctx, "CORRECT", "INCORRECT");
  return {step, 2 * yes > options_.runs ? StepVerdict::kCorrect : StepVerdict::kIncorrect,
          {JudgeId::Kind::kModel, options_.sampling.model_id}};
}

// ---- redundancy and alignment ----

Rational RedundancyResult::rate() const { return total ? redundant / static_cast<long>(total) : Rational(0); }

RedundancyResult redundancy_probe(const ChainTrace& trace, int step, const RedundancyJudge& judge, const Table* table) {
  auto elements = context_elements(trace, step, table);
  RedundancyResult r;
  r.total = elements.size();
  for (std::size_t i = 0; i < elements.size(); ++i) r.redundant += judge.redundant(trace, step, elements, i);
  return r;
}

RedundancyResult redundancy_rate(const ChainTrace& trace, const RedundancyJudge& judge, const Table* table) {
  RedundancyResult total;
  for (int i = 1; i <= static_cast<int>(trace.steps.size()); ++i) {
    auto r = redundancy_probe(trace, i, judge, table);
    total.redundant += r.redundant;
    total.total += r.total;
  }
  return total;
}

Rational alignment_check(const ChainTrace& trace, const AlignmentJudge& judge) {
  int n = static_cast<int>(trace.steps.size());
  if (n < 2) return 1;
  Rational aligned = 0;
  for (int i = 2; i <= n; ++i) aligned += judge.aligned(trace, i);
  return aligned / (n - 1);
}

// ---- human scores ----

namespace {

std::vector<std::string> csv_fields(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace

HumanScoreReport ingest_human_scores(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  int lineno = 0;
  std::map<std::string, std::size_t> col;
  const char* names[] = {"trace_id", "annotator_id", "granularity", "interpretability"};
  // trace -> annotator -> (granularity, interpretability)
  std::map<std::string, std::map<std::string, std::pair<Rational, Rational>>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto f = csv_fields(line);
    if (col.empty()) {
      for (std::size_t i = 0; i < f.size(); ++i) col[f[i]] = i;
      for (auto n : names)
        if (!col.count(n))
          throw EvaluationError(EvaluationError::Kind::kBadInput, std::string("human scores: missing column ") + n);
      continue;
    }
    auto field = [&](const char* n) -> const std::string& {
      std::size_t i = col.at(n);
      if (i >= f.size())
        throw EvaluationError(EvaluationError::Kind::kBadInput, "line " + std::to_string(lineno) + ": too few fields");
      return f[i];
    };
    auto score = [&](const char* n) {
      auto d = Decimal::parse(field(n));
      if (!d) throw EvaluationError(EvaluationError::Kind::kBadInput, "line " + std::to_string(lineno) + ": bad " + n);
      if (d->value() < 0 || d->value() > 10)
        throw EvaluationError(EvaluationError::Kind::kOutOfRange,
                              "line " + std::to_string(lineno) + ": " + n + " " + field(n) + " outside [0,10]");
      return d->value();
    };
    rows[field("trace_id")][field("annotator_id")] = {score("granularity"), score("interpretability")};
  }
  HumanScoreReport report;
  for (const auto& [trace, annotators] : rows) {
    HumanScore s;
    for (const auto& [a, g_i] : annotators) {
      s.granularity += g_i.first;
      s.interpretability += g_i.second;
    }
    s.annotators = static_cast<int>(annotators.size());
    s.granularity /= s.annotators;
    s.interpretability /= s.annotators;
    if (s.annotators < kExpectedAnnotators)
      report.warnings.push_back("MissingAnnotator: trace " + trace + " has " + std::to_string(s.annotators) +
                                " annotator(s), expected " + std::to_string(kExpectedAnnotators));
    report.per_trace[trace] = s;
  }
  return report;
}

HumanScoreReport ingest_human_scores_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EvaluationError(EvaluationError::Kind::kBadInput, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ingest_human_scores(ss.str());
}

// ---- label accuracy ----

std::optional<Rational> AccuracyRow::accuracy() const {
  return scored ? std::optional<Rational>(Rational(correct, scored)) : std::nullopt;
}

AccuracyTable label_accuracy(const std::vector<VerificationRecord>& records, NeiPolicy policy) {
  AccuracyTable t;
  t.policy = policy;
  auto add = [&](AccuracyRow& row, const VerificationRecord& r) {
    bool nei = r.label == Verdict::kNotEnoughInfo;
    if (nei) ++row.nei;
    if (nei && policy == NeiPolicy::kExclude) return;
    ++row.scored;
    if (r.label == *r.gold) ++row.correct;
  };
  for (const auto& r : records) {
    if (!r.gold) throw EvaluationError(EvaluationError::Kind::kMissingGold, "no gold label for " + r.claim_id);
    add(t.per_domain[r.domain.empty() ? "other" : r.domain], r);
    add(t.overall, r);
  }
  return t;
}

namespace {

std::vector<std::string> domain_order(const AccuracyTable& t) {
  std::vector<std::string> out;
  for (auto d : {"ml", "material", "medical", "finance", "other"})
    if (t.per_domain.count(d)) out.emplace_back(d);
  for (const auto& [d, row] : t.per_domain)
    if (std::find(out.begin(), out.end(), d) == out.end()) out.push_back(d);
  return out;
}

std::string cell(const AccuracyRow& r) {
  auto a = r.accuracy();
  return a ? format_rate(*a) : "-";
}

}  // namespace

std::string render_text_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  auto measure = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
  };
  measure(header);
  for (const auto& r : rows) measure(r);
  auto line = [&](const std::vector<std::string>& r) {
    std::string out;
    for (std::size_t i = 0; i < width.size(); ++i) {
      std::string v = i < r.size() ? r[i] : "";
      if (i) out += "  ";
      out += i == 0 ? v + std::string(width[i] - v.size(), ' ') : std::string(width[i] - v.size(), ' ') + v;
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };
  std::string out = line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out += std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') + "\n";
  for (const auto& r : rows) out += line(r);
  return out;
}

std::string render_accuracy_table(const AccuracyTable& t, const std::string& run_name) {
  std::vector<std::string> header{"run"}, acc{run_name}, n{"n"};
  for (const auto& d : domain_order(t)) {
    header.push_back(d);
    acc.push_back(cell(t.per_domain.at(d)));
    n.push_back(std::to_string(t.per_domain.at(d).correct) + "/" + std::to_string(t.per_domain.at(d).scored));
  }
  header.push_back("overall");
  acc.push_back(cell(t.overall));
  n.push_back(std::to_string(t.overall.correct) + "/" + std::to_string(t.overall.scored));
  return render_text_table(header, {acc, n});
}

json to_json(const AccuracyTable& t) {
  auto row = [](const AccuracyRow& r) {
    auto a = r.accuracy();
    return json{{"correct", r.correct}, {"scored", r.scored}, {"nei", r.nei},
                {"accuracy", a ? json(format_rate(*a)) : json()}};
  };
  json per = json::object();
  for (const auto& [d, r] : t.per_domain) per[d] = row(r);
  return {{"nei_policy", std::string(to_string(t.policy))}, {"per_domain", per}, {"overall", row(t.overall)}};
}

// ---- error taxonomy ----

std::string_view to_string(ErrorTag t) {
  switch (t) {
    case ErrorTag::kSnowball: return "SNOWBALL";
    case ErrorTag::kContextualConflict: return "CONTEXTUAL_CONFLICT";
    case ErrorTag::kCoarseGrained: return "COARSE_GRAINED";
  }
  return "?";
}

std::optional<ErrorTag> error_tag_from_string(std::string_view s) {
  for (auto t : {ErrorTag::kSnowball, ErrorTag::kContextualConflict, ErrorTag::kCoarseGrained})
    if (to_string(t) == s) return t;
  return std::nullopt;
}

std::vector<ErrorAnnotation> annotate_errors(const std::set<std::string>& trace_ids,
                                             std::vector<ErrorAnnotation> annotations) {
  for (const auto& a : annotations)
    if (!trace_ids.count(a.trace_id))
      throw EvaluationError(EvaluationError::Kind::kUnknownTrace, "unknown trace " + a.trace_id);
  return annotations;
}

std::map<std::string, std::map<ErrorTag, long>> error_histogram(const std::vector<ErrorAnnotation>& annotations) {
  std::map<std::string, std::map<ErrorTag, long>> out;
  for (const auto& a : annotations) {
    auto& h = out[a.group];
    if (h.empty())
      for (auto t : {ErrorTag::kSnowball, ErrorTag::kContextualConflict, ErrorTag::kCoarseGrained}) h[t] = 0;
    ++h[a.tag];
  }
  return out;
}

json to_json(const TraceMetrics& m) {
  auto opt = [](const std::optional<Rational>& r) { return r ? json(format_rate(*r)) : json(); };
  return {{"accuracy", format_rate(m.accuracy)},
          {"redundancy_rate", format_rate(m.redundancy_rate)},
          {"alignment_rate", format_rate(m.alignment_rate)},
          {"granularity", opt(m.granularity)},
          {"interpretability", opt(m.interpretability)}};
}

}  // namespace atomchain
