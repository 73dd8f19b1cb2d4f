#pragma once

#include "atomchain/chain.hpp"
#include "atomchain/claim_factory.hpp"
#include "atomchain/llm.hpp"
#include "atomchain/orchestrator.hpp"
#include "atomchain/table.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace atomchain {

class WorkbenchError : public std::runtime_error {
 public:
  enum class Kind { kSchema, kDuplicateId, kIo, kConfig, kSplit };
  WorkbenchError(Kind kind, std::string message) : std::runtime_error(std::move(message)), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr int kDatasetSchemaVersion = 1;
inline constexpr std::string_view kDomains[] = {"ml", "material", "medical", "finance", "other"};
bool is_known_domain(std::string_view d);

enum class Provenance { kGenerated, kImported, kHuman };
std::string_view to_string(Provenance p);
std::optional<Provenance> provenance_from_string(std::string_view s);

struct DatasetEntry {
  std::string id;
  std::string domain = "other";
  std::string caption;
  std::vector<std::vector<std::string>> rows;
  int header_rows = 1;
  std::string claim;
  /// Gold labels are binary: SUPPORT or REFUTE.
  Verdict label = Verdict::kSupport;
  Provenance provenance = Provenance::kImported;
  std::optional<std::string> check;

  Table table() const;
  Claim to_claim() const;
  friend bool operator==(const DatasetEntry&, const DatasetEntry&) = default;
};

nlohmann::json to_json(const DatasetEntry& e);
/// Validates domain, label and shape; throws WorkbenchError(kSchema).
DatasetEntry dataset_entry_from_json(const nlohmann::json& j);

/// Hook for foreign formats: maps one parsed JSON line to an entry.
using DatasetAdapter = std::function<DatasetEntry(const nlohmann::json&)>;

/// Reads a dataset JSONL file, preserving order. Ids must be unique.
std::vector<DatasetEntry> load_dataset(const std::filesystem::path& path, const DatasetAdapter& adapter = {});
void save_dataset(const std::vector<DatasetEntry>& entries, const std::filesystem::path& path);

/// Dataset lines for claim pairs (positive first), provenance by validation.
std::vector<DatasetEntry> entries_from_pairs(const std::vector<ClaimPair>& pairs, const Table& table,
                                            const std::string& domain);

/// Batch items sharing one Table per distinct (caption, rows).
std::vector<BatchItem> batch_items(const std::vector<DatasetEntry>& entries);

struct DatasetSplit {
  std::vector<DatasetEntry> train, val, test;
};

/// Seeded shuffle, then the first `train` entries, the next `val`, and the
/// rest as test. Throws kSplit when train + val exceeds the dataset.
DatasetSplit split_dataset(const std::vector<DatasetEntry>& entries, std::size_t train, std::size_t val,
                           unsigned long long seed);

struct RunConfig {
  std::string backend = "mock";  // live | replay | mock
  std::string base_url = "https://api.openai.com";
  std::string endpoint = "/v1/chat/completions";
  std::string model_id = "mock";
  double temperature = 0.8;
  double top_p = 0.9;
  std::optional<int> top_k;
  int max_tokens = 2048;
  int max_plans = 8;
  int retries = 3;
  int concurrency = 4;
  long token_budget = 0;
  std::optional<std::filesystem::path> templates;
  std::optional<std::filesystem::path> session;
  std::optional<std::filesystem::path> record;
  std::optional<std::filesystem::path> mock_script;
  std::size_t train_size = 350;
  std::size_t val_size = 50;
  std::optional<long long> seed;
  NeiPolicy nei_policy = NeiPolicy::kCountAsWrong;

  /// Sets one key ("temperature", "max_plans", ...); throws kConfig.
  void set(const std::string& key, const std::string& value);
  void validate() const;
  ChainConfig chain() const;
  ClientOptions client() const;
};

/// Keys accepted by RunConfig::set, also read from ATOMCHAIN_<KEY> variables.
const std::vector<std::string>& run_config_keys();

/// Layers a key=value file, the environment, then CLI overrides (later wins).
/// `getenv` defaults to the process environment.
RunConfig load_run_config(const std::optional<std::filesystem::path>& file,
                          const std::map<std::string, std::string>& overrides,
                          const std::function<std::optional<std::string>(const std::string&)>& getenv = {});

/// Table file: JSON ({"caption", "rows"}) when the name ends in .json,
/// otherwise pipe-delimited text whose leading non-table lines form the caption.
Table load_table_file(const std::filesystem::path& path);

/// Backend named by the config; replay reads `session`, mock reads `mock_script`.
std::shared_ptr<Backend> make_backend(const RunConfig& config);
/// Templates from `config.templates`, else the built-in bundle.
const TemplateSet& load_config_templates(const RunConfig& config);

}  // namespace atomchain
