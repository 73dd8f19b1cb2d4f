#pragma once

#include "atomchain/chain.hpp"
#include "atomchain/decimal.hpp"
#include "atomchain/llm.hpp"
#include "atomchain/oracle.hpp"
#include "atomchain/orchestrator.hpp"
#include "atomchain/prompts.hpp"
#include "atomchain/table.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace atomchain {

class EvaluationError : public std::runtime_error {
 public:
  enum class Kind { kMissingJudgment, kStepOutOfRange, kNoSteps, kOutOfRange, kMissingGold, kUnknownTrace, kJudgeOutput, kBadInput };
  EvaluationError(Kind kind, std::string message) : std::runtime_error(std::move(message)), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Exact rate printed with `places` digits (half away from zero).
std::string format_rate(const Rational& r, int places = 4);

// ---- step accuracy ----

enum class StepVerdict { kCorrect, kIncorrect };
std::string_view to_string(StepVerdict v);

struct JudgeId {
  enum class Kind { kModel, kHuman, kOracle };
  Kind kind = Kind::kOracle;
  /// Model id or annotator id; empty for the oracle.
  std::string id;
  friend bool operator==(const JudgeId&, const JudgeId&) = default;
};

/// "MODEL:gpt", "HUMAN:a1", "ORACLE".
std::string to_string(const JudgeId& j);
std::optional<JudgeId> judge_id_from_string(std::string_view s);

struct StepJudgment {
  int step = 1;  // 1-based
  StepVerdict verdict = StepVerdict::kCorrect;
  JudgeId judge;
  friend bool operator==(const StepJudgment&, const StepJudgment&) = default;
};

/// Judgments for one trace keyed by step; adding a judgment for a step that
/// already has one replaces it.
class JudgmentSet {
 public:
  void add(const StepJudgment& j) { by_step_[j.step] = j; }
  void remove(int step) { by_step_.erase(step); }
  const std::map<int, StepJudgment>& by_step() const { return by_step_; }
  std::size_t size() const { return by_step_.size(); }

 private:
  std::map<int, StepJudgment> by_step_;
};

/// (1/N) * number of CORRECT steps, N = executed steps.
Rational step_accuracy(int executed_steps, const JudgmentSet& judgments);
Rational step_accuracy(const ChainTrace& trace, const JudgmentSet& judgments);

/// Judgment file lines: {"trace_id", "step", "verdict", "judge"}.
std::map<std::string, JudgmentSet> load_judgments(const std::filesystem::path& path);

/// Oracle judgments for steps whose extracted facts are all verifiable:
/// CORRECT when every fact matches its cell.
JudgmentSet oracle_step_judgments(const ChainTrace& trace, const Table& table);

// ---- judges ----

/// What a judge sees besides the trace.
struct JudgeInput {
  const Table* table = nullptr;
  std::string claim;
};

struct ContextElement {
  enum class Kind { kFact, kPlan, kGrounding };
  Kind kind = Kind::kFact;
  std::string text;
  /// Cells the element refers to (a fact's address, ordinals in a sentence).
  std::vector<CellAddress> addresses;
  friend bool operator==(const ContextElement&, const ContextElement&) = default;
};

/// The step's local context units: extracted facts, then the subplan
/// sentence, then grounding sentences. `table` resolves grounding ordinals.
std::vector<ContextElement> context_elements(const ChainTrace& trace, int step, const Table* table = nullptr);

class RedundancyJudge {
 public:
  virtual ~RedundancyJudge() = default;
  /// Share of votes saying the step's outcome is unchanged without element
  /// `removed`, in [0,1].
  virtual Rational redundant(const ChainTrace& trace, int step, const std::vector<ContextElement>& elements,
                             std::size_t removed) const = 0;
};

class AlignmentJudge {
 public:
  virtual ~AlignmentJudge() = default;
  /// Share of votes saying step `step` is aligned with step `step - 1`.
  virtual Rational aligned(const ChainTrace& trace, int step) const = 0;
};

class StepJudge {
 public:
  virtual ~StepJudge() = default;
  virtual StepJudgment judge(const ChainTrace& trace, int step) const = 0;
};

/// Scripted judges for tests: redundant elements / misaligned steps / wrong
/// steps are listed per step.
class ScriptedRedundancyJudge : public RedundancyJudge {
 public:
  explicit ScriptedRedundancyJudge(std::map<int, std::set<std::size_t>> redundant) : redundant_(std::move(redundant)) {}
  Rational redundant(const ChainTrace&, int step, const std::vector<ContextElement>&, std::size_t removed) const override;

 private:
  std::map<int, std::set<std::size_t>> redundant_;
};

class ScriptedAlignmentJudge : public AlignmentJudge {
 public:
  explicit ScriptedAlignmentJudge(std::set<int> misaligned) : misaligned_(std::move(misaligned)) {}
  Rational aligned(const ChainTrace&, int step) const override;

 private:
  std::set<int> misaligned_;
};

/// Exact semantics on machine-checkable steps: an element is redundant when
/// it names cells and none of them is in the check's evidence set.
class OracleRedundancyJudge : public RedundancyJudge {
 public:
  OracleRedundancyJudge(const Expr& check, const Table& table);
  Rational redundant(const ChainTrace&, int, const std::vector<ContextElement>& elements,
                     std::size_t removed) const override;
  const std::vector<Evidence>& evidence() const { return evidence_; }

 private:
  std::vector<Evidence> evidence_;
};

struct LlmJudgeOptions {
  ChainConfig sampling;
  /// Independent runs per question; votes are averaged.
  int runs = 3;
};

/// Model judges over the judge_* prompts. Run r uses seed base + r.
class LlmJudge : public RedundancyJudge, public AlignmentJudge, public StepJudge {
 public:
  LlmJudge(Client& client, LlmJudgeOptions options, JudgeInput input,
           const TemplateSet& templates = default_templates());
  Rational redundant(const ChainTrace& trace, int step, const std::vector<ContextElement>& elements,
                     std::size_t removed) const override;
  Rational aligned(const ChainTrace& trace, int step) const override;
  /// Majority over runs; ties count as INCORRECT.
  StepJudgment judge(const ChainTrace& trace, int step) const override;

 private:
  /// Votes for `yes` among runs.
  int vote(std::string_view stage, const PromptContext& ctx, std::string_view yes, std::string_view no) const;
  PromptContext base_context() const;

  Client& client_;
  LlmJudgeOptions options_;
  JudgeInput input_;
  const TemplateSet& templates_;
};

// ---- redundancy and alignment ----

struct RedundancyResult {
  Rational redundant = 0;  // summed votes
  std::size_t total = 0;   // elements probed
  /// redundant / total; 0 when there are no elements.
  Rational rate() const;
};

RedundancyResult redundancy_probe(const ChainTrace& trace, int step, const RedundancyJudge& judge,
                                  const Table* table = nullptr);
/// Pooled over all executed steps: summed votes / total elements.
RedundancyResult redundancy_rate(const ChainTrace& trace, const RedundancyJudge& judge, const Table* table = nullptr);

/// Aligned adjacent pairs / pairs; 1 when the trace has fewer than two steps.
Rational alignment_check(const ChainTrace& trace, const AlignmentJudge& judge);

// ---- human scores ----

struct HumanScore {
  Rational granularity = 0;
  Rational interpretability = 0;
  int annotators = 0;
};

struct HumanScoreReport {
  std::map<std::string, HumanScore> per_trace;
  std::vector<std::string> warnings;
};

inline constexpr int kExpectedAnnotators = 3;

/// CSV with header trace_id,annotator_id,granularity,interpretability.
/// Scores must lie in [0,10]; a repeated (trace, annotator) row replaces the
/// earlier one. Traces with fewer than three annotators get a warning.
HumanScoreReport ingest_human_scores(std::string_view csv);
HumanScoreReport ingest_human_scores_file(const std::filesystem::path& path);

// ---- label accuracy ----

struct AccuracyRow {
  long correct = 0;
  long scored = 0;
  long nei = 0;
  std::optional<Rational> accuracy() const;
};

struct AccuracyTable {
  NeiPolicy policy = NeiPolicy::kCountAsWrong;
  std::map<std::string, AccuracyRow> per_domain;
  AccuracyRow overall;
  bool empty() const { return per_domain.empty(); }
};

/// Throws MissingGold for a record without a gold label.
AccuracyTable label_accuracy(const std::vector<VerificationRecord>& records, NeiPolicy policy);

/// Domains as columns in the canonical order (ml, material, medical,
/// finance, other, then any others), followed by "overall".
std::string render_accuracy_table(const AccuracyTable& t, const std::string& run_name = "run");
nlohmann::json to_json(const AccuracyTable& t);

// ---- error taxonomy ----

enum class ErrorTag { kSnowball, kContextualConflict, kCoarseGrained };
std::string_view to_string(ErrorTag t);
std::optional<ErrorTag> error_tag_from_string(std::string_view s);

struct ErrorAnnotation {
  std::string trace_id;
  ErrorTag tag = ErrorTag::kSnowball;
  /// Method or model the trace came from.
  std::string group;
  friend bool operator==(const ErrorAnnotation&, const ErrorAnnotation&) = default;
};

/// Checks every annotation against the known trace ids (UnknownTrace) and
/// returns them unchanged.
std::vector<ErrorAnnotation> annotate_errors(const std::set<std::string>& trace_ids,
                                             std::vector<ErrorAnnotation> annotations);

/// Counts per group and tag; every tag appears, zeros included.
std::map<std::string, std::map<ErrorTag, long>> error_histogram(const std::vector<ErrorAnnotation>& annotations);

// ---- reports ----

struct TraceMetrics {
  Rational accuracy = 0;
  Rational redundancy_rate = 0;
  Rational alignment_rate = 1;
  std::optional<Rational> granularity;
  std::optional<Rational> interpretability;
};

nlohmann::json to_json(const TraceMetrics& m);

/// Aligned text table; columns are padded to the widest cell.
std::string render_text_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

}  // namespace atomchain
