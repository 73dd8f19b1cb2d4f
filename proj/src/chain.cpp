#include "atomchain/chain.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace atomchain {

namespace {

template <class E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<E, std::string_view>, N>& names, std::string_view s) {
  for (const auto& [e, name] : names)
    if (name == s) return e;
  return std::nullopt;
}

template <class E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& names, E e) {
  for (const auto& [k, name] : names)
    if (k == e) return name;
  return "?";
}

constexpr std::array<std::pair<Verdict, std::string_view>, 3> kVerdicts{{
    {Verdict::kSupport, "SUPPORT"},
    {Verdict::kRefute, "REFUTE"},
    {Verdict::kNotEnoughInfo, "NOT_ENOUGH_INFO"},
}};
constexpr std::array<std::pair<StepFlag, std::string_view>, 3> kFlags{{
    {StepFlag::kTrue, "TRUE"},
    {StepFlag::kFalse, "FALSE"},
    {StepFlag::kNotEnoughInfo, "NOT_ENOUGH_INFO"},
}};
constexpr std::array<std::pair<SkillTag, std::string_view>, 4> kSkills{{
    {SkillTag::kConceptualUnderstanding, "CONCEPTUAL_UNDERSTANDING"},
    {SkillTag::kStructureAnalysis, "STRUCTURE_ANALYSIS"},
    {SkillTag::kNumericalAnalysis, "NUMERICAL_ANALYSIS"},
    {SkillTag::kCausalAnalysis, "CAUSAL_ANALYSIS"},
}};
constexpr std::array<std::pair<StageKind, std::string_view>, 7> kStages{{
    {StageKind::kInterpretation, "interpretation"},
    {StageKind::kPlanning, "planning"},
    {StageKind::kGrounding, "grounding"},
    {StageKind::kReasoning, "reasoning"},
    {StageKind::kRecap, "recap"},
    {StageKind::kConclusion, "conclusion"},
    {StageKind::kDone, "done"},
}};
constexpr std::array<std::pair<Termination::Kind, std::string_view>, 3> kTerminations{{
    {Termination::Kind::kCompleted, "COMPLETED"},
    {Termination::Kind::kEarlyRefute, "EARLY_REFUTE"},
    {Termination::Kind::kAborted, "ABORTED"},
}};
constexpr std::array<std::pair<Violation::Code, std::string_view>, 13> kViolations{{
    {Violation::Code::kStageOrder, "stage order"},
    {Violation::Code::kEmptyInterpretation, "empty interpretation"},
    {Violation::Code::kPlanIndices, "plan indices"},
    {Violation::Code::kStepsExceedPlan, "steps exceed plan"},
    {Violation::Code::kSubplanMismatch, "subplan mismatch"},
    {Violation::Code::kFillOrder, "fill order"},
    {Violation::Code::kContinuedAfterRefute, "continued after refute"},
    {Violation::Code::kPrematureConclusion, "premature conclusion"},
    {Violation::Code::kEarlyRefuteInconsistent, "early refute inconsistent"},
    {Violation::Code::kCompletedInconsistent, "completed inconsistent"},
    {Violation::Code::kAbortedInconsistent, "aborted inconsistent"},
    {Violation::Code::kLabelWithoutTermination, "label without termination"},
    {Violation::Code::kInvalidFact, "invalid fact"},
}};

bool blank(const std::string& s) { return trim(s).empty(); }

}  // namespace

std::string_view to_string(Verdict v) { return name_of(kVerdicts, v); }
std::string_view to_string(StepFlag f) { return name_of(kFlags, f); }
std::string_view to_string(SkillTag s) { return name_of(kSkills, s); }
std::string_view to_string(StageKind s) { return name_of(kStages, s); }
std::string_view to_string(Violation::Code c) { return name_of(kViolations, c); }
std::string_view to_string(Termination::Kind k) { return name_of(kTerminations, k); }
std::optional<Verdict> verdict_from_string(std::string_view s) { return lookup(kVerdicts, s); }
std::optional<StepFlag> step_flag_from_string(std::string_view s) { return lookup(kFlags, s); }
std::optional<SkillTag> skill_from_string(std::string_view s) { return lookup(kSkills, s); }

ChainError::ChainError(std::vector<Violation> violations)
    : std::runtime_error("invalid trace: " +
                         (violations.empty() ? std::string("?") : violations.front().message)),
      violations_(std::move(violations)) {}

long ChainTrace::total_prompt_tokens() const {
  long n = 0;
  for (const auto& u : usage) n += u.prompt_tokens;
  return n;
}

long ChainTrace::total_completion_tokens() const {
  long n = 0;
  for (const auto& u : usage) n += u.completion_tokens;
  return n;
}

std::vector<Violation> validate_trace(const ChainTrace& t) {
  std::vector<Violation> out;
  auto add = [&](Violation::Code c, std::string msg) { out.push_back({c, std::move(msg)}); };

  if (t.plan && !t.interpretation) add(Violation::Code::kStageOrder, "plan present without interpretation");
  if (!t.steps.empty() && !t.plan) add(Violation::Code::kStageOrder, "steps present without plan");
  if (t.conclusion && !t.plan) add(Violation::Code::kStageOrder, "conclusion present without plan");
  if (t.interpretation && blank(*t.interpretation))
    add(Violation::Code::kEmptyInterpretation, "interpretation is empty");

  const std::size_t n_plan = t.plan ? t.plan->size() : 0;
  if (t.plan) {
    if (t.plan->empty()) add(Violation::Code::kPlanIndices, "plan has no subplans");
    for (std::size_t k = 0; k < n_plan; ++k)
      if ((*t.plan)[k].index != static_cast<int>(k + 1)) {
        add(Violation::Code::kPlanIndices, "subplan " + std::to_string(k + 1) + " has index " +
                                               std::to_string((*t.plan)[k].index));
        break;
      }
  }
  if (t.plan && t.steps.size() > n_plan)
    add(Violation::Code::kStepsExceedPlan,
        std::to_string(t.steps.size()) + " steps for " + std::to_string(n_plan) + " subplans");
  for (std::size_t k = 0; k < t.steps.size() && k < n_plan; ++k)
    if (!(t.steps[k].subplan == (*t.plan)[k]))
      add(Violation::Code::kSubplanMismatch, "step " + std::to_string(k + 1) + " does not match subplan");

  for (std::size_t k = 0; k < t.steps.size(); ++k) {
    const StepRecord& s = t.steps[k];
    const std::string where = "step " + std::to_string(k + 1);
    if (s.reasoning && !s.grounding) add(Violation::Code::kFillOrder, where + ": reasoning before grounding");
    if (s.recap && !s.reasoning) add(Violation::Code::kFillOrder, where + ": recap before reasoning");
    if (s.flag && !s.recap) add(Violation::Code::kFillOrder, where + ": flag without recap");
    if (!s.extraction.empty() && !s.grounding) add(Violation::Code::kFillOrder, where + ": extraction before grounding");
    if (k + 1 < t.steps.size() && !s.recap)
      add(Violation::Code::kFillOrder, where + ": incomplete step followed by a later step");
    if (k + 1 < t.steps.size() && s.flag == StepFlag::kFalse)
      add(Violation::Code::kContinuedAfterRefute, where + ": chain continued after FALSE flag");
    for (const auto& f : s.extraction)
      if (!f.address && !f.value && blank(f.description))
        add(Violation::Code::kInvalidFact, where + ": extracted fact carries nothing");
  }

  const StepRecord* last = t.steps.empty() ? nullptr : &t.steps.back();
  const bool last_false = last && last->flag == StepFlag::kFalse;
  if (t.conclusion) {
    const bool loop_done = last && last->recap && (last_false || t.steps.size() == n_plan);
    if (!loop_done) add(Violation::Code::kPrematureConclusion, "conclusion before the step loop finished");
  }
  if (t.label && !t.termination) add(Violation::Code::kLabelWithoutTermination, "label set on an unterminated trace");

  if (t.termination) {
    switch (t.termination->kind) {
      case Termination::Kind::kEarlyRefute:
        if (!last_false || t.label != Verdict::kRefute)
          add(Violation::Code::kEarlyRefuteInconsistent, "EARLY_REFUTE needs a final FALSE flag and label REFUTE");
        break;
      case Termination::Kind::kCompleted:
        if (!t.plan || t.steps.size() != n_plan || !t.conclusion || blank(*t.conclusion) || !t.label || last_false)
          add(Violation::Code::kCompletedInconsistent,
              "COMPLETED needs every subplan executed, a conclusion, and a label");
        break;
      case Termination::Kind::kAborted:
        if (t.label != Verdict::kNotEnoughInfo)
          add(Violation::Code::kAbortedInconsistent, "ABORTED traces carry label NOT_ENOUGH_INFO");
        break;
    }
  }
  return out;
}

StageRequest next_stage(const ChainTrace& t) {
  if (auto v = validate_trace(t); !v.empty()) throw ChainError(std::move(v));
  if (t.termination || t.conclusion) return {StageKind::kDone};
  if (!t.interpretation) return {StageKind::kInterpretation};
  if (!t.plan) return {StageKind::kPlanning};
  if (t.steps.empty()) return {StageKind::kGrounding, 1};

  const int k = static_cast<int>(t.steps.size());
  const StepRecord& last = t.steps.back();
  if (!last.grounding) return {StageKind::kGrounding, k};
  if (!last.reasoning) return {StageKind::kReasoning, k};
  if (!last.recap) return {StageKind::kRecap, k};
  if (last.flag == StepFlag::kFalse) return {StageKind::kConclusion, 0, true};
  if (k < static_cast<int>(t.plan->size())) return {StageKind::kGrounding, k + 1};
  return {StageKind::kConclusion};
}

std::set<SkillTag> infer_skills(std::string_view reasoning) {
  std::string lower;
  lower.reserve(reasoning.size());
  for (char c : reasoning) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  auto any = [&](std::initializer_list<std::string_view> words) {
    return std::any_of(words.begin(), words.end(), [&](std::string_view w) { return lower.find(w) != std::string::npos; });
  };
  std::set<SkillTag> out;
  if (any({"refers to", "indicates", "means", "defined as", "in general", "interpret", "denotes"}))
    out.insert(SkillTag::kConceptualUnderstanding);
  if (any({"row", "column", "header", "cell"})) out.insert(SkillTag::kStructureAnalysis);
  if (any({"compar", "greater", "less than", "lower than", "higher than", "sum", "average", "mean", "differen",
           "calculat", "percent", "%", "ratio", "increase", "decrease", "total"}))
    out.insert(SkillTag::kNumericalAnalysis);
  if (any({"because", "cause", "due to", "leads to", "result in", "correlat", "effect", "trend"}))
    out.insert(SkillTag::kCausalAnalysis);
  return out;
}

// ---- JSON -----------------------------------------------------------------

nlohmann::json to_json(const Number& n) { return {{"amount", n.amount.to_string()}, {"unit", n.unit}}; }

Number number_from_json(const nlohmann::json& j) {
  auto d = Decimal::parse(j.at("amount").get<std::string>());
  if (!d) throw std::invalid_argument("bad decimal amount: " + j.at("amount").dump());
  return Number{*d, j.value("unit", std::string())};
}

nlohmann::json to_json(const ExtractedFact& f) {
  nlohmann::json j{{"description", f.description}};
  j["address"] = f.address ? nlohmann::json{{"row", f.address->row}, {"col", f.address->col}} : nlohmann::json();
  j["value"] = f.value ? to_json(*f.value) : nlohmann::json();
  return j;
}

ExtractedFact fact_from_json(const nlohmann::json& j) {
  ExtractedFact f;
  f.description = j.value("description", std::string());
  if (j.contains("address") && !j["address"].is_null())
    f.address = CellAddress{j["address"].at("row").get<int>(), j["address"].at("col").get<int>()};
  if (j.contains("value") && !j["value"].is_null()) f.value = number_from_json(j["value"]);
  return f;
}

namespace {

template <class T>
nlohmann::json opt(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json();
}

std::optional<std::string> opt_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<std::string>();
}

template <class E>
E parse_enum(std::optional<E> e, const std::string& what, const nlohmann::json& j) {
  if (!e) throw std::invalid_argument("unknown " + what + ": " + j.dump());
  return *e;
}

}  // namespace

nlohmann::json to_json(const ChainTrace& t) {
  nlohmann::json j;
  j["table_ref"] = t.table_ref;
  j["claim_ref"] = t.claim_ref;
  j["model_id"] = t.model_id;
  j["row_counting"] = std::string(to_string(t.row_counting));
  j["interpretation"] = opt(t.interpretation);
  if (t.plan) {
    nlohmann::json plan = nlohmann::json::array();
    for (const auto& p : *t.plan) plan.push_back({{"index", p.index}, {"text", p.text}});
    j["plan"] = std::move(plan);
  } else {
    j["plan"] = nullptr;
  }
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : t.steps) {
    nlohmann::json js;
    js["subplan"] = {{"index", s.subplan.index}, {"text", s.subplan.text}};
    js["grounding"] = opt(s.grounding);
    js["extraction_text"] = opt(s.extraction_text);
    nlohmann::json facts = nlohmann::json::array();
    for (const auto& f : s.extraction) facts.push_back(to_json(f));
    js["extraction"] = std::move(facts);
    nlohmann::json grounded = nlohmann::json::array();
    for (const auto& a : s.grounded_addresses) grounded.push_back({{"row", a.row}, {"col", a.col}});
    js["grounded_addresses"] = std::move(grounded);
    js["reasoning"] = opt(s.reasoning);
    nlohmann::json skills = nlohmann::json::array();
    for (auto sk : s.invoked_skills) skills.push_back(std::string(to_string(sk)));
    js["invoked_skills"] = std::move(skills);
    js["recap"] = opt(s.recap);
    js["flag"] = s.flag ? nlohmann::json(std::string(to_string(*s.flag))) : nlohmann::json();
    steps.push_back(std::move(js));
  }
  j["steps"] = std::move(steps);
  j["conclusion"] = opt(t.conclusion);
  j["label"] = t.label ? nlohmann::json(std::string(to_string(*t.label))) : nlohmann::json();
  if (t.termination) {
    j["termination"] = {{"kind", std::string(name_of(kTerminations, t.termination->kind))},
                        {"reason", t.termination->reason}};
  } else {
    j["termination"] = nullptr;
  }
  nlohmann::json usage = nlohmann::json::array();
  for (const auto& u : t.usage)
    usage.push_back({{"stage", std::string(to_string(u.stage))},
                     {"step", u.step},
                     {"attempt", u.attempt},
                     {"prompt_tokens", u.prompt_tokens},
                     {"completion_tokens", u.completion_tokens},
                     {"latency_ms", u.latency_ms},
                     {"cache_key", u.cache_key}});
  j["usage"] = std::move(usage);
  return j;
}

ChainTrace trace_from_json(const nlohmann::json& j) {
  ChainTrace t;
  t.table_ref = j.value("table_ref", std::string());
  t.claim_ref = j.value("claim_ref", std::string());
  t.model_id = j.value("model_id", std::string());
  t.row_counting = row_counting_from_string(j.value("row_counting", std::string("absolute")))
                       .value_or(RowCounting::kAbsolute);
  t.interpretation = opt_string(j, "interpretation");
  if (j.contains("plan") && !j["plan"].is_null()) {
    std::vector<Subplan> plan;
    for (const auto& p : j["plan"]) plan.push_back({p.at("index").get<int>(), p.at("text").get<std::string>()});
    t.plan = std::move(plan);
  }
  for (const auto& js : j.value("steps", nlohmann::json::array())) {
    StepRecord s;
    s.subplan = {js.at("subplan").at("index").get<int>(), js.at("subplan").at("text").get<std::string>()};
    s.grounding = opt_string(js, "grounding");
    s.extraction_text = opt_string(js, "extraction_text");
    for (const auto& f : js.value("extraction", nlohmann::json::array())) s.extraction.push_back(fact_from_json(f));
    for (const auto& a : js.value("grounded_addresses", nlohmann::json::array()))
      s.grounded_addresses.push_back({a.at("row").get<int>(), a.at("col").get<int>()});
    s.reasoning = opt_string(js, "reasoning");
    for (const auto& sk : js.value("invoked_skills", nlohmann::json::array()))
      s.invoked_skills.insert(parse_enum(skill_from_string(sk.get<std::string>()), "skill", sk));
    s.recap = opt_string(js, "recap");
    if (js.contains("flag") && !js["flag"].is_null())
      s.flag = parse_enum(step_flag_from_string(js["flag"].get<std::string>()), "flag", js["flag"]);
    t.steps.push_back(std::move(s));
  }
  t.conclusion = opt_string(j, "conclusion");
  if (j.contains("label") && !j["label"].is_null())
    t.label = parse_enum(verdict_from_string(j["label"].get<std::string>()), "label", j["label"]);
  if (j.contains("termination") && !j["termination"].is_null()) {
    const auto& jt = j["termination"];
    t.termination = Termination{
        parse_enum(lookup(kTerminations, jt.at("kind").get<std::string>()), "termination", jt),
        jt.value("reason", std::string())};
  }
  for (const auto& u : j.value("usage", nlohmann::json::array())) {
    CallUsage cu;
    cu.stage = parse_enum(lookup(kStages, u.at("stage").get<std::string>()), "stage", u);
    cu.step = u.value("step", 0);
    cu.attempt = u.value("attempt", 1);
    cu.prompt_tokens = u.value("prompt_tokens", 0L);
    cu.completion_tokens = u.value("completion_tokens", 0L);
    cu.latency_ms = u.value("latency_ms", 0.0);
    cu.cache_key = u.value("cache_key", std::string());
    t.usage.push_back(std::move(cu));
  }
  return t;
}

}  // namespace atomchain
