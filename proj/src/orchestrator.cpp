#include "atomchain/orchestrator.hpp"

#include "atomchain/parsers.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <fstream>
#include <iterator>
#include <mutex>
#include <set>
#include <thread>

namespace atomchain {

using nlohmann::json;

void ChainConfig::validate() const {
  if (model_id.empty()) throw ConfigError("model_id is empty");
  if (!(temperature >= 0 && temperature <= 2)) throw ConfigError("temperature out of [0,2]");
  if (!(top_p > 0 && top_p <= 1)) throw ConfigError("top_p out of (0,1]");
  if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
  if (max_plans < 1) throw ConfigError("max_plans must be at least 1");
  if (parse_retries < 0) throw ConfigError("parse_retries must be non-negative");
}

std::string_view stage_template_id(StageKind s) {
  switch (s) {
    case StageKind::kInterpretation: return "interpret";
    case StageKind::kPlanning: return "plan";
    case StageKind::kGrounding: return "cell";
    case StageKind::kReasoning: return "reason";
    case StageKind::kRecap: return "recap";
    case StageKind::kConclusion: return "conclusion";
    case StageKind::kDone: return "done";
  }
  return "?";
}

std::string_view to_string(NeiPolicy p) { return p == NeiPolicy::kExclude ? "exclude" : "count_as_wrong"; }

std::optional<NeiPolicy> nei_policy_from_string(std::string_view s) {
  if (s == "count_as_wrong") return NeiPolicy::kCountAsWrong;
  if (s == "exclude") return NeiPolicy::kExclude;
  return std::nullopt;
}

std::optional<Verdict> majority_label(const std::vector<Verdict>& labels) {
  std::map<Verdict, std::size_t> votes;
  for (Verdict v : labels) ++votes[v];
  for (auto [v, n] : votes)
    if (2 * n > labels.size()) return v;
  return std::nullopt;
}

// ---- record JSON ----

json to_json(const VerificationRecord& r, bool include_timing) {
  json j;
  j["schema_version"] = kRecordSchemaVersion;
  j["claim_id"] = r.claim_id;
  j["domain"] = r.domain;
  j["gold"] = r.gold ? json(std::string(to_string(*r.gold))) : json();
  j["label"] = std::string(to_string(r.label));
  j["style"] = r.style;
  j["trace"] = to_json(r.trace);
  j["attempts"] = r.attempts;
  if (include_timing) j["timing"] = {{"wall_ms", r.wall_ms}};
  return j;
}

VerificationRecord record_from_json(const json& j) {
  VerificationRecord r;
  r.claim_id = j.at("claim_id").get<std::string>();
  r.domain = j.value("domain", std::string());
  if (j.contains("gold") && !j["gold"].is_null()) {
    auto g = verdict_from_string(j["gold"].get<std::string>());
    if (!g) throw std::invalid_argument("bad gold label in record " + r.claim_id);
    r.gold = g;
  }
  auto l = verdict_from_string(j.at("label").get<std::string>());
  if (!l) throw std::invalid_argument("bad label in record " + r.claim_id);
  r.label = *l;
  r.style = j.value("style", std::string("chain"));
  r.trace = trace_from_json(j.at("trace"));
  if (j.contains("attempts")) r.attempts = j["attempts"].get<std::map<std::string, int>>();
  if (j.contains("timing")) r.wall_ms = j["timing"].value("wall_ms", 0.0);
  return r;
}

namespace {

// A process killed mid-write can leave an unterminated last line. A tail that
// parses is completed with its newline; anything else is cut off, matching
// what load_records accepted.
void repair_tail(const std::filesystem::path& path) {
  std::string data;
  {
    std::ifstream in(path, std::ios::binary);
    data.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  if (data.empty() || data.back() == '\n') return;
  auto nl = data.rfind('\n');
  std::size_t keep = nl == std::string::npos ? 0 : nl + 1;
  bool whole = true;
  try {
    record_from_json(json::parse(data.substr(keep)));
  } catch (const std::exception&) {
    whole = false;
  }
  if (whole) std::ofstream(path, std::ios::app | std::ios::binary) << '\n';
  else std::filesystem::resize_file(path, keep);
}

}  // namespace

std::vector<VerificationRecord> load_records(const std::filesystem::path& path) {
  std::vector<VerificationRecord> out;
  if (!std::filesystem::exists(path)) return out;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  int lineno = 0;
  while (pos < data.size()) {
    ++lineno;
    std::size_t nl = data.find('\n', pos);
    bool terminated = nl != std::string::npos;
    std::string line = data.substr(pos, terminated ? nl - pos : std::string::npos);
    pos = terminated ? nl + 1 : data.size();
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      if (!terminated) break;  // torn final write
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// ---- summary ----

namespace {

json tally_json(const DomainTally& t) {
  auto acc = t.accuracy();
  return {{"records", t.records}, {"with_gold", t.with_gold}, {"correct", t.correct},
          {"nei", t.nei},         {"scored", t.scored},       {"accuracy", acc ? json(*acc) : json()}};
}

void add_to(DomainTally& t, const VerificationRecord& r, NeiPolicy policy) {
  ++t.records;
  if (r.label == Verdict::kNotEnoughInfo) ++t.nei;
  if (!r.gold) return;
  ++t.with_gold;
  if (r.label == *r.gold) ++t.correct;
  if (policy == NeiPolicy::kCountAsWrong || r.label != Verdict::kNotEnoughInfo) ++t.scored;
}

}  // namespace

RunSummary summarize(const std::vector<VerificationRecord>& records, NeiPolicy policy) {
  RunSummary s;
  s.nei_policy = policy;
  s.total_records = static_cast<long>(records.size());
  for (const auto& r : records) {
    add_to(s.per_domain[r.domain], r, policy);
    add_to(s.overall, r, policy);
  }
  return s;
}

json to_json(const RunSummary& s) {
  json per = json::object();
  for (const auto& [d, t] : s.per_domain) per[d] = tally_json(t);
  return {{"schema_version", kRecordSchemaVersion},
          {"total_records", s.total_records},
          {"newly_computed", s.newly_computed},
          {"skipped", s.skipped},
          {"nei_policy", std::string(to_string(s.nei_policy))},
          {"per_domain", per},
          {"overall", tally_json(s.overall)}};
}

// ---- chain execution ----

namespace {

/// An output that does not follow the stage's format.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string nonempty(std::string_view text, const char* what) {
  std::string t = trim(text);
  if (t.empty()) throw FormatError(std::string("empty ") + what);
  return t;
}

std::string grounding_block(const StepRecord& s) {
  return "<grounding>\n" + s.grounding.value_or("") + "\n</grounding>\n\n<extraction>\n" +
         s.extraction_text.value_or("") + "\n</extraction>";
}

std::string reason_transition(const std::vector<StepRecord>& steps) {
  std::string out;
  for (const auto& s : steps) {
    if (!out.empty()) out += "\n\n";
    out += s.reasoning.value_or("");
    if (s.recap) out += "\n" + *s.recap;
  }
  return out;
}

std::optional<Verdict> flag_verdict(StepFlag f) {
  switch (f) {
    case StepFlag::kTrue: return Verdict::kSupport;
    case StepFlag::kFalse: return Verdict::kRefute;
    case StepFlag::kNotEnoughInfo: return Verdict::kNotEnoughInfo;
  }
  return std::nullopt;
}

class ChainRun {
 public:
  ChainRun(Client& client, const ChainConfig& cfg, const TemplateSet& templates, std::optional<long long> seed)
      : client_(client), cfg_(cfg), templates_(templates), seed_(seed) {}

  std::map<std::string, int> attempts;

  /// Calls the stage until `parse` accepts an output. Returns false when the
  /// retry budget is exhausted; `error` then holds the last format error.
  template <class Parse>
  bool run(ChainTrace& trace, StageKind kind, int step, std::string_view stage_id, const PromptContext& ctx,
           Parse&& parse, std::string& error) {
    RenderedPrompt prompt = templates_.render(stage_id, ctx);
    GenerationRequest req;
    req.model_id = cfg_.model_id;
    req.temperature = cfg_.temperature;
    req.top_p = cfg_.top_p;
    req.top_k = cfg_.top_k;
    req.max_tokens = cfg_.max_tokens;
    req.seed = seed_;
    req.messages = {{"system", prompt.system}, {"user", prompt.user}};
    for (int attempt = 1; attempt <= 1 + cfg_.parse_retries; ++attempt) {
      GenerationResponse resp = client_.generate(req);
      ++attempts[std::string(stage_id)];
      trace.usage.push_back(
          {kind, step, attempt, resp.prompt_tokens, resp.completion_tokens, resp.latency_ms, resp.cache_key});
      try {
        parse(resp.text);
        return true;
      } catch (const FormatError& e) {
        error = e.what();
      } catch (const ParseError& e) {
        error = e.what();
      }
      // Regenerate with the rejected output and a format reminder appended,
      // so each retry is a distinct, replayable request.
      req.messages.push_back({"assistant", resp.text});
      req.messages.push_back({"user", "Your previous response could not be parsed (" + error +
                                          "). Please answer again, following the required output format exactly."});
    }
    return false;
  }

 private:
  Client& client_;
  const ChainConfig& cfg_;
  const TemplateSet& templates_;
  std::optional<long long> seed_;
};

void abort_trace(ChainTrace& trace, std::string reason) {
  trace.termination = Termination{Termination::Kind::kAborted, std::move(reason)};
  trace.label = Verdict::kNotEnoughInfo;
}

}  // namespace

Orchestrator::Orchestrator(Client& client, ChainConfig config, const TemplateSet& templates)
    : client_(client), config_(std::move(config)), templates_(templates) {
  config_.validate();
  for (auto id : kChainStages)
    if (!templates_.contains(id)) throw ConfigError("template set lacks stage '" + std::string(id) + "'");
}

VerificationRecord Orchestrator::verify(const Table& table, const Claim& claim, const std::string& table_ref,
                                        std::optional<long long> seed_override) const {
  if (trim(claim.text).empty()) throw ConfigError("claim " + claim.id + " has empty text");
  auto t0 = std::chrono::steady_clock::now();
  ChainRun run(client_, config_, templates_, seed_override ? seed_override : config_.seed);

  ChainTrace trace;
  trace.table_ref = table_ref;
  trace.claim_ref = claim.id;
  trace.model_id = config_.model_id;
  trace.row_counting = config_.row_counting.value_or(RowCounting::kAbsolute);

  const PromptContext base{{"caption", table.caption()}, {"table", render_table(table)}, {"claim", claim.text}};
  std::vector<std::vector<std::pair<int, int>>> ordinals;  // per step

  auto resolve_addresses = [&] {
    if (!config_.row_counting) {
      std::vector<std::pair<int, int>> all_ord;
      std::vector<ExtractedFact> all_facts;
      for (std::size_t k = 0; k < trace.steps.size(); ++k) {
        all_ord.insert(all_ord.end(), ordinals[k].begin(), ordinals[k].end());
        all_facts.insert(all_facts.end(), trace.steps[k].extraction.begin(), trace.steps[k].extraction.end());
      }
      trace.row_counting = infer_row_counting(all_ord, all_facts, table).value_or(RowCounting::kAbsolute);
    }
    for (std::size_t k = 0; k < trace.steps.size(); ++k)
      trace.steps[k].grounded_addresses = to_addresses(ordinals[k], table, trace.row_counting);
  };

  std::string error;
  while (true) {
    StageRequest stage = next_stage(trace);
    if (stage.kind == StageKind::kDone) break;
    const std::string_view id = stage_template_id(stage.kind);
    PromptContext ctx = base;
    bool ok = false;

    switch (stage.kind) {
      case StageKind::kInterpretation:
        ok = run.run(trace, stage.kind, 0, id, ctx,
                     [&](const std::string& out) { trace.interpretation = nonempty(out, "interpretation"); }, error);
        break;

      case StageKind::kPlanning: {
        ctx["interpretation"] = *trace.interpretation;
        std::vector<Subplan> plans;
        ok = run.run(trace, stage.kind, 0, id, ctx, [&](const std::string& out) { plans = parse_plans(out); }, error);
        if (ok) {
          trace.plan = plans;
          if (static_cast<int>(plans.size()) > config_.max_plans) {
            abort_trace(trace, "PlanTooLong: " + std::to_string(plans.size()) + " subplans exceed the cap of " +
                                   std::to_string(config_.max_plans));
            continue;
          }
        }
        break;
      }

      case StageKind::kGrounding: {
        if (static_cast<int>(trace.steps.size()) < stage.step) {
          StepRecord fresh;
          fresh.subplan = (*trace.plan)[stage.step - 1];
          trace.steps.push_back(std::move(fresh));
          ordinals.emplace_back();
        }
        StepRecord& s = trace.steps[stage.step - 1];
        ctx["subplan"] = s.subplan.text;
        ctx["plan_idx"] = std::to_string(stage.step);
        ok = run.run(trace, stage.kind, stage.step, id, ctx,
                     [&](const std::string& out) {
                       std::string g = parse_tagged(out, "grounding");
                       std::string e = parse_tagged(out, "extraction");
                       s.grounding = g;
                       s.extraction_text = e;
                       s.extraction = extract_cell_facts(e, table);
                       ordinals[stage.step - 1] = parse_grounded_ordinals(g);
                     },
                     error);
        if (ok) resolve_addresses();
        break;
      }

      case StageKind::kReasoning: {
        StepRecord& s = trace.steps[stage.step - 1];
        ctx["subplan"] = s.subplan.text;
        ctx["plan_idx"] = std::to_string(stage.step);
        ctx["grounding&extraction"] = grounding_block(s);
        ok = run.run(trace, stage.kind, stage.step, id, ctx,
                     [&](const std::string& out) {
                       std::string r = nonempty(out, "reasoning");
                       s.reasoning = r;
                       s.invoked_skills = infer_skills(r);
                     },
                     error);
        break;
      }

      case StageKind::kRecap: {
        StepRecord& s = trace.steps[stage.step - 1];
        ctx["plan"] = render_plans(*trace.plan);
        ctx["subplan"] = s.subplan.text;
        ctx["plan_idx"] = std::to_string(stage.step);
        std::string reasoning = *s.reasoning;
        if (config_.include_prior_recaps && stage.step > 1) {
          std::vector<StepRecord> prior(trace.steps.begin(), trace.steps.begin() + (stage.step - 1));
          reasoning = "Previous steps:\n" + reason_transition(prior) + "\n\nCurrent step:\n" + reasoning;
        }
        ctx["reasoning"] = reasoning;
        ok = run.run(trace, stage.kind, stage.step, id, ctx,
                     [&](const std::string& out) {
                       std::string r = nonempty(out, "recap");
                       auto f = parse_flag(r);
                       s.recap = r;
                       s.flag = f ? std::optional<StepFlag>(f->value) : std::nullopt;
                     },
                     error);
        break;
      }

      case StageKind::kConclusion: {
        ctx["plan"] = render_plans(*trace.plan);
        ctx["allReasonTransition"] = reason_transition(trace.steps);
        const bool forced = stage.forced_refute;
        ok = run.run(trace, stage.kind, 0, id, ctx,
                     [&](const std::string& out) {
                       std::string text;
                       try {
                         text = parse_tagged(out, "conclusion");
                       } catch (const ParseError&) {
                         text = trim(out);
                       }
                       if (forced) {
                         // The step flag decides; the prose is kept as written.
                         trace.conclusion = text;
                         trace.label = Verdict::kRefute;
                         trace.termination = Termination{Termination::Kind::kEarlyRefute, ""};
                         return;
                       }
                       auto f = parse_flag(out);
                       if (!f) throw FormatError("conclusion has no flag");
                       if (text.empty()) throw FormatError("empty conclusion");
                       trace.conclusion = text;
                       trace.label = flag_verdict(f->value);
                       trace.termination = Termination{Termination::Kind::kCompleted, ""};
                     },
                     error);
        break;
      }

      case StageKind::kDone:
        break;
    }
    if (!ok) abort_trace(trace, std::string(id) + ": " + error);
  }

  VerificationRecord rec;
  rec.claim_id = claim.id;
  rec.domain = claim.domain_tag;
  rec.gold = claim.gold_label;
  rec.label = trace.label.value_or(Verdict::kNotEnoughInfo);
  rec.trace = std::move(trace);
  rec.attempts = std::move(run.attempts);
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

VerificationRecord Orchestrator::verify_short(const Table& table, const Claim& claim, const std::string& table_ref,
                                              std::optional<long long> seed_override) const {
  if (!templates_.contains("short")) throw ConfigError("template set lacks stage 'short'");
  auto t0 = std::chrono::steady_clock::now();
  ChainRun run(client_, config_, templates_, seed_override ? seed_override : config_.seed);
  ChainTrace trace;
  trace.table_ref = table_ref;
  trace.claim_ref = claim.id;
  trace.model_id = config_.model_id;
  const PromptContext ctx{{"caption", table.caption()}, {"table", render_table(table)}, {"claim", claim.text}};
  std::string error;
  bool ok = run.run(trace, StageKind::kConclusion, 0, "short", ctx,
                    [&](const std::string& out) {
                      auto f = parse_flag(out);
                      if (!f) throw FormatError("short answer has no flag");
                      trace.conclusion = nonempty(out, "answer");
                      trace.label = flag_verdict(f->value);
                      trace.termination = Termination{Termination::Kind::kCompleted, ""};
                    },
                    error);
  if (!ok) abort_trace(trace, "short: " + error);
  VerificationRecord rec;
  rec.claim_id = claim.id;
  rec.domain = claim.domain_tag;
  rec.gold = claim.gold_label;
  rec.label = trace.label.value_or(Verdict::kNotEnoughInfo);
  rec.style = "short";
  rec.trace = std::move(trace);
  rec.attempts = std::move(run.attempts);
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

MultipathResult Orchestrator::multipath_verify(const Table& table, const Claim& claim, const MultipathOptions& options,
                                               const std::string& table_ref) const {
  if (options.k < 1 || options.k % 2 == 0) throw ConfigError("multipath k must be a positive odd number");
  if (options.short_paths < 0 || options.short_paths > options.k) throw ConfigError("short_paths out of range");
  MultipathResult result;
  const long long base = config_.seed.value_or(0);
  std::vector<Verdict> labels;
  for (int i = 0; i < options.k; ++i) {
    bool short_path = i >= options.k - options.short_paths;
    auto rec = short_path ? verify_short(table, claim, table_ref, base + i) : verify(table, claim, table_ref, base + i);
    labels.push_back(rec.label);
    result.records.push_back(std::move(rec));
  }
  result.agreed_label = majority_label(labels);
  result.needs_adjudication = !result.agreed_label;
  if (result.needs_adjudication && options.adjudication_queue) {
    json entry;
    entry["claim_id"] = claim.id;
    entry["labels"] = json::array();
    entry["traces"] = json::array();
    for (std::size_t i = 0; i < result.records.size(); ++i) {
      entry["labels"].push_back(std::string(to_string(result.records[i].label)));
      entry["traces"].push_back(claim.id + "#" + std::to_string(i));
    }
    static std::mutex queue_mu;
    std::lock_guard lock(queue_mu);
    std::ofstream out(*options.adjudication_queue, std::ios::app);
    if (!out) throw std::runtime_error("cannot open adjudication queue " + options.adjudication_queue->string());
    out << entry.dump() << '\n';
  }
  return result;
}

RunSummary Orchestrator::batch_verify(const std::vector<BatchItem>& items, const BatchOptions& options) const {
  if (options.concurrency < 1) throw ConfigError("concurrency must be at least 1");
  std::vector<VerificationRecord> all = load_records(options.output);
  std::set<std::string> done;
  for (const auto& r : all) done.insert(r.claim_id);

  std::vector<const BatchItem*> pending;
  std::set<std::string> queued;
  long skipped = 0;
  for (const auto& item : items) {
    if (done.count(item.claim.id) || !queued.insert(item.claim.id).second) {
      ++skipped;
      continue;
    }
    pending.push_back(&item);
  }
  std::size_t limit = pending.size();
  if (options.max_new_records) limit = std::min(limit, *options.max_new_records);

  std::ofstream out;
  if (limit > 0) {
    if (std::filesystem::exists(options.output)) repair_tail(options.output);
    out.open(options.output, std::ios::app);
    if (!out) throw std::runtime_error("cannot open " + options.output.string());
  }

  std::mutex mu;
  std::vector<std::optional<VerificationRecord>> results(limit);
  std::size_t next = 0, committed = 0;
  std::exception_ptr failure;

  // Records are committed strictly in dataset order so the store's bytes do
  // not depend on thread scheduling.
  auto commit_ready = [&] {
    while (committed < limit && results[committed]) {
      out << to_json(*results[committed]).dump() << '\n';
      out.flush();
      all.push_back(std::move(*results[committed]));
      results[committed].reset();
      ++committed;
    }
  };

  auto worker = [&] {
    while (true) {
      std::size_t idx;
      {
        std::lock_guard lock(mu);
        if (failure || next >= limit) return;
        idx = next++;
      }
      try {
        const BatchItem& item = *pending[idx];
        auto rec = verify(*item.table, item.claim, item.table_ref);
        std::lock_guard lock(mu);
        results[idx] = std::move(rec);
        commit_ready();
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  int n_threads = static_cast<int>(std::min<std::size_t>(options.concurrency, limit));
  std::vector<std::thread> threads;
  for (int i = 0; i < n_threads; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);

  RunSummary s = summarize(all, options.nei_policy);
  s.newly_computed = static_cast<long>(committed);
  s.skipped = skipped;
  return s;
}

}  // namespace atomchain
