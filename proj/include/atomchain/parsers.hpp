#pragma once

#include "atomchain/chain.hpp"
#include "atomchain/table.hpp"

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace atomchain {

class ParseError : public std::runtime_error {
 public:
  enum class Kind {
    kNoPlansFound,
    kNonContiguousIndices,
    kUnterminatedPlan,
    kMissingOpenTag,
    kMissingCloseTag,
    kHeaderNotFound,
  };

  ParseError(Kind kind, std::string message, std::vector<int> indices = {})
      : std::runtime_error(std::move(message)), kind_(kind), indices_(std::move(indices)) {}

  Kind kind() const { return kind_; }
  /// kNonContiguousIndices: the indices found, in order.
  /// kUnterminatedPlan: the single unterminated index.
  const std::vector<int>& indices() const { return indices_; }

 private:
  Kind kind_;
  std::vector<int> indices_;
};

std::string_view to_string(ParseError::Kind k);

enum class ParseWarning { kMultipleFlags, kTypoFlase };

/// Extracts "[Plan i Start] ... [Plan i End]" blocks. Whitespace inside the
/// brackets is tolerated; indices must run 1..N in order.
std::vector<Subplan> parse_plans(std::string_view text);
/// Canonical form: blocks joined by a blank line.
std::string render_plans(const std::vector<Subplan>& plans);

/// Inner text of the first well-nested <tag>...</tag> region, trimmed.
/// "<\/tag>" is accepted as a closing tag (the printed cell prompt uses it).
std::string parse_tagged(std::string_view text, std::string_view tag);

struct ParsedFlag {
  StepFlag value = StepFlag::kTrue;
  /// Byte range of the whole "<flag>...</flag>" element in the source.
  std::size_t begin = 0;
  std::size_t end = 0;
  bool typo = false;  // spelled "Flase"
};

/// Last recognized flag, if any. Flag values are case-insensitive.
std::optional<ParsedFlag> parse_flag(std::string_view text, std::vector<ParseWarning>* warnings = nullptr);

struct ClaimBullet {
  std::string aspect;
  std::string claim;
  friend bool operator==(const ClaimBullet&, const ClaimBullet&) = default;
};

/// Bullets under "### Claims Details", split at the first colon.
std::vector<ClaimBullet> parse_claim_bullets(std::string_view text);
std::string render_claim_bullets(const std::vector<ClaimBullet>& bullets);

/// "### Claim" (or a given header) section body, trimmed. Used for the flip,
/// manipulate, and OOS responses.
std::string parse_section(std::string_view text, std::string_view header);

/// Best-effort lifting of extraction prose into facts. Each sentence names a
/// row label and column header (quoted or verbatim) and ends in a value.
std::vector<ExtractedFact> extract_cell_facts(std::string_view extraction, const Table& table);

/// (row ordinal, column ordinal) pairs from "intersection of the Nth row and
/// the Mth column" phrases, as counted by the model.
std::vector<std::pair<int, int>> parse_grounded_ordinals(std::string_view grounding);

/// Converts ordinals to absolute addresses; out-of-range positions are dropped.
std::vector<CellAddress> to_addresses(const std::vector<std::pair<int, int>>& ordinals, const Table& table,
                                      RowCounting counting);

/// Picks the counting convention under which the grounded ordinals agree best
/// with the label-resolved fact addresses. Empty when there is no evidence or
/// both conventions agree equally.
std::optional<RowCounting> infer_row_counting(const std::vector<std::pair<int, int>>& ordinals,
                                              const std::vector<ExtractedFact>& facts, const Table& table);

/// CRLF and lone CR to LF.
std::string normalize_newlines(std::string_view text);

}  // namespace atomchain
