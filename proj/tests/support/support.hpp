#pragma once

#include "atomchain/chain.hpp"
#include "atomchain/llm.hpp"
#include "atomchain/table.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace support {

std::filesystem::path fixture_path(const std::string& name);
std::string read_file(const std::filesystem::path& p);

atomchain::Table perf_table();
atomchain::Table xlpe_table();

/// Claim verified in the appendix transcript.
inline constexpr const char* kAppendixClaim =
    "FINE-TUNED-DISCRIMINATIVE modeling outperforms CS-ONLY-DISCRIMINATIVE model on test perplexity, test "
    "accuracy, and test word-error-rate.";

/// Mock backend replaying the appendix stage texts.
std::shared_ptr<atomchain::MockBackend> appendix_backend();

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// ---- scripted chain ----
//
// A claim carrying "SCRIPT[n=3;flags=T,F,N;final=T]" drives the chain
// deterministically: n subplans, one recap flag per executed step (T, F or
// N), and the conclusion flag. The responder is stateless, so it is safe for
// concurrent batches.

struct ChainScript {
  int plans = 1;
  std::vector<char> flags;  // 'T', 'F', 'N'
  char final_flag = 'T';
  std::string tag() const;
};

std::optional<ChainScript> find_script(const std::string& text);

/// Reply for one chain request under the script embedded in the prompt.
std::string scripted_reply(const atomchain::GenerationRequest& req);
std::shared_ptr<atomchain::Backend> scripted_backend();

/// Label and termination the chain must reach, derived independently from
/// a hand-written transition table.
struct Expectation {
  atomchain::Verdict label;
  atomchain::Termination::Kind termination;
  int steps;
  int calls;
};
Expectation expected_outcome(const ChainScript& s);

/// Stage a request belongs to, found from its prompt markers.
std::string stage_of(const atomchain::GenerationRequest& req);

}  // namespace support
