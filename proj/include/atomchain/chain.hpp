#pragma once

#include "atomchain/table.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace atomchain {

enum class Verdict { kSupport, kRefute, kNotEnoughInfo };

/// Per-step verdict carried by the recap flag.
enum class StepFlag { kTrue, kFalse, kNotEnoughInfo };

enum class SkillTag { kConceptualUnderstanding, kStructureAnalysis, kNumericalAnalysis, kCausalAnalysis };

std::string_view to_string(Verdict v);
std::string_view to_string(StepFlag f);
std::string_view to_string(SkillTag s);
std::optional<Verdict> verdict_from_string(std::string_view s);
std::optional<StepFlag> step_flag_from_string(std::string_view s);
std::optional<SkillTag> skill_from_string(std::string_view s);

struct Claim {
  std::string id;
  std::string text;
  std::optional<Verdict> gold_label;
  std::string domain_tag;
  /// Optional machine-checkable form in the oracle DSL.
  std::optional<std::string> check;

  friend bool operator==(const Claim&, const Claim&) = default;
};

struct Subplan {
  int index = 1;
  std::string text;
  friend bool operator==(const Subplan&, const Subplan&) = default;
};

struct ExtractedFact {
  std::optional<CellAddress> address;
  std::string description;
  std::optional<Number> value;
  friend bool operator==(const ExtractedFact&, const ExtractedFact&) = default;
};

/// One [grounding -> reasoning -> recap] unit. Fields fill in that order.
struct StepRecord {
  Subplan subplan;
  std::optional<std::string> grounding;
  std::optional<std::string> extraction_text;
  std::vector<ExtractedFact> extraction;
  /// Positions named in the grounding prose, converted to absolute addresses.
  std::vector<CellAddress> grounded_addresses;
  std::optional<std::string> reasoning;
  std::set<SkillTag> invoked_skills;
  std::optional<std::string> recap;
  std::optional<StepFlag> flag;

  bool complete() const { return recap.has_value(); }
  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct Termination {
  enum class Kind { kCompleted, kEarlyRefute, kAborted };
  Kind kind = Kind::kCompleted;
  std::string reason;  // only for kAborted
  friend bool operator==(const Termination&, const Termination&) = default;
};

enum class StageKind { kInterpretation, kPlanning, kGrounding, kReasoning, kRecap, kConclusion, kDone };
std::string_view to_string(StageKind s);
std::string_view to_string(Termination::Kind k);

/// Token and latency counters for one model call.
struct CallUsage {
  StageKind stage = StageKind::kInterpretation;
  int step = 0;     // 1-based step for loop stages, 0 otherwise
  int attempt = 1;  // 1 + number of parse retries before this call
  long prompt_tokens = 0;
  long completion_tokens = 0;
  double latency_ms = 0;
  std::string cache_key;
  friend bool operator==(const CallUsage&, const CallUsage&) = default;
};

struct ChainTrace {
  std::string table_ref;
  std::string claim_ref;
  std::string model_id;
  RowCounting row_counting = RowCounting::kAbsolute;
  std::optional<std::string> interpretation;
  std::optional<std::vector<Subplan>> plan;
  std::vector<StepRecord> steps;
  std::optional<std::string> conclusion;
  std::optional<Verdict> label;
  std::optional<Termination> termination;
  std::vector<CallUsage> usage;

  long total_prompt_tokens() const;
  long total_completion_tokens() const;
  friend bool operator==(const ChainTrace&, const ChainTrace&) = default;
};

struct StageRequest {
  StageKind kind = StageKind::kInterpretation;
  int step = 0;
  /// Set for the conclusion stage after a step flag of FALSE.
  bool forced_refute = false;
  friend bool operator==(const StageRequest&, const StageRequest&) = default;
};

struct Violation {
  enum class Code {
    kStageOrder,
    kEmptyInterpretation,
    kPlanIndices,
    kStepsExceedPlan,
    kSubplanMismatch,
    kFillOrder,
    kContinuedAfterRefute,
    kPrematureConclusion,
    kEarlyRefuteInconsistent,
    kCompletedInconsistent,
    kAbortedInconsistent,
    kLabelWithoutTermination,
    kInvalidFact,
  };
  Code code;
  std::string message;
};

std::string_view to_string(Violation::Code c);

class ChainError : public std::runtime_error {
 public:
  explicit ChainError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Every violated invariant, in check order. Empty means valid.
std::vector<Violation> validate_trace(const ChainTrace& trace);

/// Next stage to execute. Throws ChainError for invalid traces.
StageRequest next_stage(const ChainTrace& trace);

/// Keyword heuristic mapping reasoning prose to the skills it exercises.
std::set<SkillTag> infer_skills(std::string_view reasoning);

nlohmann::json to_json(const ChainTrace& t);
ChainTrace trace_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExtractedFact& f);
ExtractedFact fact_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Number& n);
Number number_from_json(const nlohmann::json& j);

}  // namespace atomchain
