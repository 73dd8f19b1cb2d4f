#pragma once

#include "atomchain/chain.hpp"
#include "atomchain/llm.hpp"
#include "atomchain/orchestrator.hpp"
#include "atomchain/prompts.hpp"
#include "atomchain/table.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace atomchain {

enum class NegativeMethod { kSemanticFlip, kDataManipulation };
enum class Validation { kOracle, kMultipath, kHuman, kUnvalidated };

std::string_view to_string(NegativeMethod m);
std::string_view to_string(Validation v);
std::optional<NegativeMethod> negative_method_from_string(std::string_view s);
std::optional<Validation> validation_from_string(std::string_view s);

struct ClaimPair {
  std::string table_ref;
  Claim positive;  // gold SUPPORT
  Claim negative;  // gold REFUTE
  NegativeMethod negative_method = NegativeMethod::kSemanticFlip;
  Validation validation = Validation::kUnvalidated;
  friend bool operator==(const ClaimPair&, const ClaimPair&) = default;
};

nlohmann::json to_json(const Claim& c);
Claim claim_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ClaimPair& p);
ClaimPair claim_pair_from_json(const nlohmann::json& j);

class FactoryError : public std::runtime_error {
 public:
  enum class Kind { kGenerationBudgetExceeded, kNoQuantitativeElement, kCouldNotFalsify, kEmptyClaim, kNotSupported };
  FactoryError(Kind kind, std::string message) : std::runtime_error(std::move(message)), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Vague words the positive-claim prompt tells the model to delete, plus the
/// prompt's own misspelling of "similarly".
inline constexpr std::string_view kBannedWords[] = {"significantly", "substantially", "consistently",
                                                    "poorly",        "similarly",     "smilarly"};

/// Banned words found in `text` (whole words, case-insensitive), in order.
std::vector<std::string> banned_words_in(std::string_view text);

/// Whitespace tokens.
std::vector<std::string> word_tokens(std::string_view text);
/// Levenshtein distance over word tokens.
std::size_t token_edit_distance(std::string_view a, std::string_view b);
/// 0 < distance <= max_fraction * |tokens(original)|.
bool within_flip_guard(std::string_view original, std::string_view edited, double max_fraction);

struct NumberToken {
  std::size_t begin = 0;
  std::size_t end = 0;
  Decimal value;
};

/// Standalone decimal numbers in claim prose (ordinals such as "3rd" and
/// numbers glued to letters are skipped).
std::vector<NumberToken> number_tokens(std::string_view text);

struct FactoryConfig {
  ChainConfig sampling;
  /// Model calls per generation operation.
  int generation_attempts = 3;
  double flip_max_fraction = 0.25;
  /// Paths used when a claim is validated by multipath.
  int multipath_k = 3;
  std::optional<std::filesystem::path> adjudication_queue;
};

class ClaimFactory {
 public:
  /// `validator`, when given, is used for multipath checks.
  ClaimFactory(Client& client, FactoryConfig config, const TemplateSet& templates = default_templates(),
               const Orchestrator* validator = nullptr);

  std::vector<Claim> generate_positive(const Table& table, const std::string& table_ref,
                                       const std::string& domain) const;
  Claim flip_claim(const Claim& claim, const Table& table) const;
  /// Deterministic: alters one quoted number so the claim is falsified.
  Claim manipulate_data(const Claim& claim, const Table& table) const;
  Claim rewrite_oos(const Claim& claim, const Table& table) const;

  /// Oracle when both claims carry checks, else multipath when a validator is
  /// configured. Failures are left UNVALIDATED and queued for adjudication.
  ClaimPair validate_pair(ClaimPair pair, const Table& table) const;

  /// Positives, one negative each, validation. A positive whose negative
  /// cannot be produced is dropped, so counts stay balanced.
  std::vector<ClaimPair> build_pairs(const Table& table, const std::string& table_ref, const std::string& domain,
                                     NegativeMethod method) const;

 private:
  template <class Accept>
  std::string call(std::string_view stage, const PromptContext& ctx, Accept&& accept) const;
  void enqueue(const ClaimPair& pair, const std::string& reason) const;

  Client& client_;
  FactoryConfig config_;
  const TemplateSet& templates_;
  const Orchestrator* validator_;
};

/// Applies human verdicts from JSONL lines {"negative_id": ..., "accept": bool}.
/// Accepted pairs become HUMAN-validated; returns how many were applied.
std::size_t apply_human_verdicts(std::vector<ClaimPair>& pairs, const std::filesystem::path& path);

}  // namespace atomchain
