#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace atomchain {

/// Stage ids of the verification chain, in execution order.
inline constexpr std::string_view kChainStages[] = {"interpret", "plan", "cell", "reason", "recap", "conclusion"};
/// Stage ids used by the claim factory.
inline constexpr std::string_view kFactoryStages[] = {"positive", "flip", "manipulate", "oos"};

/// Placeholder names that always denote substitution slots in templates.
inline constexpr std::string_view kPlaceholderVocabulary[] = {
    "caption", "table",     "claim", "interpretation",          "plan",
    "subplan", "plan_idx",  "grounding&extraction", "reasoning", "allReasonTransition"};

class PromptError : public std::runtime_error {
 public:
  enum class Kind { kMissingPlaceholder, kUndeclaredPlaceholder, kUnknownStage, kParseError };

  PromptError(Kind kind, std::string name, std::string message, int line = 0)
      : std::runtime_error(std::move(message)), kind_(kind), name_(std::move(name)), line_(line) {}

  Kind kind() const { return kind_; }
  /// Placeholder or stage name involved, when applicable.
  const std::string& name() const { return name_; }
  int line() const { return line_; }

 private:
  Kind kind_;
  std::string name_;
  int line_;
};

/// A stage prompt. Bodies may reference exemplars as {EXAMPLE['key']} and
/// placeholders as <name>. Inputs are substituted everywhere; outputs mark
/// where the model's answer goes and render empty in the user body.
struct PromptTemplate {
  std::string stage;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string system_body;
  std::string user_body;

  friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;
};

/// Few-shot exemplar texts keyed by the name templates reference.
using ExemplarSet = std::map<std::string, std::string>;

struct RenderedPrompt {
  std::string system;
  std::string user;
};

using PromptContext = std::map<std::string, std::string>;

class TemplateSet {
 public:
  TemplateSet() = default;
  /// Validates every template against the exemplars; throws PromptError.
  TemplateSet(std::vector<PromptTemplate> templates, ExemplarSet exemplars);

  const PromptTemplate& at(std::string_view stage) const;
  bool contains(std::string_view stage) const;
  const std::vector<PromptTemplate>& templates() const { return templates_; }
  const ExemplarSet& exemplars() const { return exemplars_; }

  /// Renders a stage. The context must supply exactly the declared inputs.
  RenderedPrompt render(std::string_view stage, const PromptContext& context) const;

  friend bool operator==(const TemplateSet& a, const TemplateSet& b) {
    return a.templates_ == b.templates_ && a.exemplars_ == b.exemplars_;
  }

 private:
  std::vector<PromptTemplate> templates_;
  ExemplarSet exemplars_;
  // exemplar-spliced bodies, parallel to templates_
  std::vector<std::pair<std::string, std::string>> spliced_;
};

/// Parses the bundle text format:
///
///   === STAGE <id> | inputs: a, b | outputs: c
///   SYSTEM:
///   ...
///   USER:
///   ...
///   === EXEMPLAR <key>
///   ...
///
/// Body lines that would read as markers are escaped with a leading '\'.
TemplateSet parse_templates(std::string_view text);
std::string serialize_templates(const TemplateSet& set);

TemplateSet load_templates(const std::filesystem::path& path);
void save_templates(const TemplateSet& set, const std::filesystem::path& path);

/// The built-in bundle: the six chain stages, four claim-factory prompts, the
/// single-call short-thought prompt, and the judge prompts.
const TemplateSet& default_templates();
std::string_view default_template_text();

}  // namespace atomchain
