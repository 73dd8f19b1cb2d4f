#include "support.hpp"

#include "atomchain/workbench.hpp"

#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#ifndef ATOMCHAIN_FIXTURE_DIR
#error "ATOMCHAIN_FIXTURE_DIR must be defined"
#endif

namespace support {

using namespace atomchain;

std::filesystem::path fixture_path(const std::string& name) { return std::filesystem::path(ATOMCHAIN_FIXTURE_DIR) / name; }

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Table perf_table() { return load_table_file(fixture_path("perf_table.txt")); }
Table xlpe_table() { return load_table_file(fixture_path("xlpe_table.txt")); }

std::shared_ptr<MockBackend> appendix_backend() { return MockBackend::from_file(fixture_path("appendix_mock.json")); }

TempDir::TempDir(const std::string& tag) {
  std::random_device rd;
  auto base = std::filesystem::temp_directory_path();
  for (int i = 0; i < 100; ++i) {
    auto candidate = base / ("atomchain-" + tag + "-" + std::to_string(rd()));
    if (std::filesystem::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create temp dir");
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

// ---- scripted chain ----

std::string ChainScript::tag() const {
  std::string f;
  for (char c : flags) {
    if (!f.empty()) f += ',';
    f += c;
  }
  return "SCRIPT[n=" + std::to_string(plans) + ";flags=" + f + ";final=" + final_flag + "]";
}

std::optional<ChainScript> find_script(const std::string& text) {
  auto at = text.find("SCRIPT[n=");
  if (at == std::string::npos) return std::nullopt;
  auto end = text.find(']', at);
  std::string body = text.substr(at + 7, end - at - 7);  // n=..;flags=..;final=.
  ChainScript s;
  std::istringstream parts(body);
  std::string part;
  while (std::getline(parts, part, ';')) {
    auto eq = part.find('=');
    std::string k = part.substr(0, eq), v = part.substr(eq + 1);
    if (k == "n") s.plans = std::stoi(v);
    else if (k == "final") s.final_flag = v.at(0);
    else if (k == "flags")
      for (char c : v)
        if (c != ',') s.flags.push_back(c);
  }
  return s;
}

std::string stage_of(const GenerationRequest& req) {
  const std::string& sys = req.messages.at(0).content;
  const std::string& user = req.messages.at(1).content;
  const std::string all = sys + "\n" + user;
  // Most specific markers first; later prompts quote earlier outputs.
  static const std::vector<std::pair<std::string, std::string>> markers = {
      {"### Your Judgment", "judge"},
      {"### Claim Aspects", "positive"},
      {"minimally edit a claim", "flip"},
      {"alter a key quantitative element", "manipulate"},
      {"rewrite a claim so that it can be verified", "oos"},
      {"### Your Answer", "short"},
      {"### Your Conclusion", "conclusion"},
      {"### Your transition", "recap"},
      {"### Your Reasoning", "reason"},
      {"### Your Grounding and Extraction", "cell"},
      {"### Your Plan", "plan"},
      {"### Your Interpretation of Claim", "interpret"},
  };
  for (const auto& [m, name] : markers)
    if (all.find(m) != std::string::npos) return name;
  return "unknown";
}

namespace {

std::string flag_text(char f) {
  switch (f) {
    case 'T': return "<flag>True</flag>";
    case 'F': return "<flag>False</flag>";
    default: return "<flag>Not enough information</flag>";
  }
}

// Step number written by the reasoning reply ("RSTEP 3.").
int marked_step(const std::string& text, const std::string& marker) {
  auto at = text.find(marker);
  if (at == std::string::npos) throw std::runtime_error("scripted backend: no " + marker + " marker");
  return std::stoi(text.substr(at + marker.size()));
}

}  // namespace

std::string scripted_reply(const GenerationRequest& req) {
  const std::string& user = req.messages.at(1).content;
  auto script = find_script(user);
  if (!script) throw std::runtime_error("scripted backend: prompt carries no script");
  std::string stage = stage_of(req);
  if (stage == "interpret") return "The claim asks for a scripted check of the table.";
  if (stage == "plan") {
    std::string out;
    for (int i = 1; i <= script->plans; ++i) {
      if (i > 1) out += "\n\n";
      out += "[Plan " + std::to_string(i) + " Start]Check item " + std::to_string(i) + " against the table. [Plan " +
             std::to_string(i) + " End]";
    }
    return out;
  }
  if (stage == "cell")
    return "<grounding>\nThe cell at the intersection of the 2nd row and the 2nd column holds the value.\n</grounding>\n\n"
           "<extraction>\nThe value is 1.\n</extraction>";
  if (stage == "reason") return "Reasoning for RSTEP " + std::to_string(marked_step(user, "Check item ")) + ". The value is compared.";
  if (stage == "recap") {
    int k = marked_step(user, "RSTEP ");
    char f = k <= static_cast<int>(script->flags.size()) ? script->flags[static_cast<std::size_t>(k - 1)] : 'T';
    return "Step " + std::to_string(k) + " is summarized. " + flag_text(f);
  }
  if (stage == "conclusion") return "<conclusion>\nThe scripted chain concludes.\n</conclusion>\n" + flag_text(script->final_flag);
  if (stage == "short") return "Scripted short answer. " + flag_text(script->final_flag);
  throw std::runtime_error("scripted backend: unexpected stage " + stage);
}

std::shared_ptr<Backend> scripted_backend() { return std::make_shared<CallbackBackend>(scripted_reply); }

// Hand-written transition table. A state is the stage about to run; the
// input is the recap flag of the current step.
//
//   state        input  next
//   interpret    -      plan
//   plan         -      cell(1)
//   cell(k)      -      reason(k)
//   reason(k)    -      recap(k)
//   recap(k)     F      conclusion, forced REFUTE
//   recap(k)     T|N    cell(k+1) if k < n, else conclusion
//   conclusion   flag   done; label from flag (T SUPPORT, F REFUTE, N NEI)
Expectation expected_outcome(const ChainScript& s) {
  enum class St { kInterpret, kPlan, kCell, kReason, kRecap, kConclusion, kDone };
  St st = St::kInterpret;
  int k = 0, calls = 0;
  bool forced = false;
  Expectation e{Verdict::kNotEnoughInfo, Termination::Kind::kCompleted, 0, 0};
  while (st != St::kDone) {
    ++calls;
    switch (st) {
      case St::kInterpret: st = St::kPlan; break;
      case St::kPlan: k = 1; st = St::kCell; break;
      case St::kCell: st = St::kReason; break;
      case St::kReason: st = St::kRecap; break;
      case St::kRecap: {
        char f = s.flags.at(static_cast<std::size_t>(k - 1));
        if (f == 'F') {
          forced = true;
          st = St::kConclusion;
        } else if (k < s.plans) {
          ++k;
          st = St::kCell;
        } else {
          st = St::kConclusion;
        }
        break;
      }
      case St::kConclusion:
        if (forced) {
          e.label = Verdict::kRefute;
          e.termination = Termination::Kind::kEarlyRefute;
        } else {
          e.label = s.final_flag == 'T' ? Verdict::kSupport : s.final_flag == 'F' ? Verdict::kRefute : Verdict::kNotEnoughInfo;
          e.termination = Termination::Kind::kCompleted;
        }
        st = St::kDone;
        break;
      case St::kDone: break;
    }
  }
  e.steps = k;
  e.calls = calls;
  return e;
}

}  // namespace support
