#pragma once

#include "atomchain/chain.hpp"
#include "atomchain/llm.hpp"
#include "atomchain/prompts.hpp"
#include "atomchain/table.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace atomchain {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChainConfig {
  std::string model_id = "mock";
  double temperature = 0.8;
  double top_p = 0.9;
  std::optional<int> top_k;
  int max_tokens = 2048;
  std::optional<long long> seed;
  int max_plans = 8;
  /// Regenerations allowed per stage after an unparsable output.
  int parse_retries = 3;
  /// Feed earlier steps' reasoning and recaps to the recap stage as well.
  bool include_prior_recaps = false;
  /// Convention for row ordinals in grounding prose; inferred when unset.
  std::optional<RowCounting> row_counting;

  void validate() const;
};

/// Template id of a chain stage ("interpret", "plan", ...).
std::string_view stage_template_id(StageKind s);

struct VerificationRecord {
  std::string claim_id;
  std::string domain;
  std::optional<Verdict> gold;
  Verdict label = Verdict::kNotEnoughInfo;
  /// "chain" for the six-stage chain, "short" for the single-call path.
  std::string style = "chain";
  ChainTrace trace;
  /// Model calls per stage id, retries included.
  std::map<std::string, int> attempts;
  double wall_ms = 0;
};

inline constexpr int kRecordSchemaVersion = 1;

nlohmann::json to_json(const VerificationRecord& r, bool include_timing = true);
VerificationRecord record_from_json(const nlohmann::json& j);

struct MultipathResult {
  std::vector<VerificationRecord> records;
  std::optional<Verdict> agreed_label;
  bool needs_adjudication = false;
};

struct MultipathOptions {
  int k = 3;
  /// How many of the k paths use the single-call short-thought prompt.
  int short_paths = 0;
  /// JSONL queue receiving {claim_id, labels, traces} for unresolved votes.
  std::optional<std::filesystem::path> adjudication_queue;
};

/// Strict-majority vote; empty when no label has more than half the votes.
std::optional<Verdict> majority_label(const std::vector<Verdict>& labels);

enum class NeiPolicy { kCountAsWrong, kExclude };
std::string_view to_string(NeiPolicy p);
std::optional<NeiPolicy> nei_policy_from_string(std::string_view s);

struct BatchItem {
  Claim claim;
  std::shared_ptr<const Table> table;
  std::string table_ref;
};

struct BatchOptions {
  std::filesystem::path output;
  int concurrency = 4;
  NeiPolicy nei_policy = NeiPolicy::kCountAsWrong;
  /// Stop after persisting this many new records (simulated interruption).
  std::optional<std::size_t> max_new_records;
};

struct DomainTally {
  long records = 0;
  long with_gold = 0;
  long correct = 0;
  long nei = 0;
  /// Denominator after applying the NEI policy.
  long scored = 0;
  std::optional<double> accuracy() const {
    return scored ? std::optional<double>(static_cast<double>(correct) / scored) : std::nullopt;
  }
  friend bool operator==(const DomainTally&, const DomainTally&) = default;
};

struct RunSummary {
  long total_records = 0;
  long newly_computed = 0;
  long skipped = 0;
  NeiPolicy nei_policy = NeiPolicy::kCountAsWrong;
  std::map<std::string, DomainTally> per_domain;
  DomainTally overall;
};

nlohmann::json to_json(const RunSummary& s);

/// Tallies records (one per claim id) under a NEI policy.
RunSummary summarize(const std::vector<VerificationRecord>& records, NeiPolicy policy);

/// Reads a JSONL record store; missing file yields nothing.
std::vector<VerificationRecord> load_records(const std::filesystem::path& path);

class Orchestrator {
 public:
  Orchestrator(Client& client, ChainConfig config, const TemplateSet& templates = default_templates());

  /// Runs the six-stage chain. Backend errors propagate; unparsable outputs
  /// are regenerated up to the retry budget and then abort the chain.
  VerificationRecord verify(const Table& table, const Claim& claim, const std::string& table_ref = "",
                            std::optional<long long> seed_override = std::nullopt) const;

  /// Single-call short-thought verdict.
  VerificationRecord verify_short(const Table& table, const Claim& claim, const std::string& table_ref = "",
                                  std::optional<long long> seed_override = std::nullopt) const;

  /// k paths with seeds base+i; the last `short_paths` of them are short-thought.
  MultipathResult multipath_verify(const Table& table, const Claim& claim, const MultipathOptions& options,
                                   const std::string& table_ref = "") const;

  /// Resumable batch: already-persisted claim ids are skipped, new records are
  /// appended in dataset order. The summary covers the whole store.
  RunSummary batch_verify(const std::vector<BatchItem>& items, const BatchOptions& options) const;

  const ChainConfig& config() const { return config_; }
  const TemplateSet& templates() const { return templates_; }

 private:
  Client& client_;
  ChainConfig config_;
  const TemplateSet& templates_;
};

}  // namespace atomchain
