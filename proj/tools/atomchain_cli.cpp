// atomchain: command-line workbench for table claim verification.

#include "atomchain/claim_factory.hpp"
#include "atomchain/evaluation.hpp"
#include "atomchain/oracle.hpp"
#include "atomchain/orchestrator.hpp"
#include "atomchain/prompts.hpp"
#include "atomchain/workbench.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace atomchain;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNei = 2;

struct Common {
  std::optional<std::string> config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key=value run configuration file");
    app->add_option("--set", sets, "override a config key (key=value), repeatable");
    auto opt = [&](const char* flag, const char* key, const char* help) {
      app->add_option_function<std::string>(flag, [this, key](const std::string& v) { overrides[key] = v; }, help);
    };
    opt("--backend", "backend", "live | replay | mock");
    opt("--session", "session", "session store replayed by --backend replay");
    opt("--record", "record", "append every model call to this session store");
    opt("--mock-script", "mock_script", "JSON script for --backend mock");
    opt("--seed", "seed", "sampling seed");
    opt("--model", "model_id", "model id sent to the backend");
    opt("--templates", "templates", "prompt template bundle");
    opt("--concurrency", "concurrency", "parallel claims / in-flight calls");
  }

  RunConfig load() const {
    auto all = overrides;
    for (const auto& s : sets) {
      auto eq = s.find('=');
      if (eq == std::string::npos) throw WorkbenchError(WorkbenchError::Kind::kConfig, "--set expects key=value");
      all[s.substr(0, eq)] = s.substr(eq + 1);
    }
    RunConfig c = load_run_config(config_file ? std::optional<std::filesystem::path>(*config_file) : std::nullopt, all);
    c.validate();
    return c;
  }
};

struct Session {
  RunConfig config;
  std::unique_ptr<Client> client;

  explicit Session(const Common& common) : config(common.load()) {
    client = std::make_unique<Client>(make_backend(config), config.client());
    if (config.record) client->record_session(*config.record);
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WorkbenchError(WorkbenchError::Kind::kIo, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string table_ref_of(const std::string& path) { return std::filesystem::path(path).stem().string(); }

void append_line(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw WorkbenchError(WorkbenchError::Kind::kIo, "cannot write " + path);
  out << j.dump() << '\n';
}

// ---- verify ----

struct VerifyArgs {
  std::string table, claim, claim_id = "claim", trace_out = "atomchain-trace.jsonl";
  std::optional<std::string> gold, check;
  bool json_out = false, no_timing = false, short_style = false;
  int paths = 1;
};

int run_verify(const Common& common, const VerifyArgs& a) {
  Session s(common);
  Table table = load_table_file(a.table);
  Claim claim;
  claim.id = a.claim_id;
  claim.text = a.claim;
  claim.check = a.check;
  if (a.gold) {
    claim.gold_label = verdict_from_string(*a.gold);
    if (!claim.gold_label) throw WorkbenchError(WorkbenchError::Kind::kConfig, "bad --gold " + *a.gold);
  }
  Orchestrator orch(*s.client, s.config.chain(), load_config_templates(s.config));
  std::string ref = table_ref_of(a.table);

  std::vector<VerificationRecord> records;
  Verdict label;
  if (a.paths > 1) {
    MultipathOptions mp;
    mp.k = a.paths;
    auto result = orch.multipath_verify(table, claim, mp, ref);
    records = result.records;
    label = result.agreed_label.value_or(Verdict::kNotEnoughInfo);
  } else {
    records.push_back(a.short_style ? orch.verify_short(table, claim, ref) : orch.verify(table, claim, ref));
    label = records.front().label;
  }
  for (const auto& r : records)
    if (!a.trace_out.empty()) append_line(a.trace_out, to_json(r, !a.no_timing));

  if (a.json_out) {
    json out = records.size() == 1 ? to_json(records.front(), !a.no_timing) : json::array();
    if (records.size() > 1)
      for (const auto& r : records) out.push_back(to_json(r, !a.no_timing));
    std::cout << out.dump(2) << '\n';
  } else {
    const auto& t = records.front().trace;
    std::cout << "label: " << to_string(label) << '\n';
    if (records.size() == 1) {
      std::cout << "termination: " << (t.termination ? to_string(t.termination->kind) : "NONE") << '\n';
      if (t.termination && !t.termination->reason.empty()) std::cout << "reason: " << t.termination->reason << '\n';
      std::cout << "steps: " << t.steps.size() << '\n';
      std::cout << "calls: " << t.usage.size() << '\n';
    } else {
      std::cout << "paths:";
      for (const auto& r : records) std::cout << ' ' << to_string(r.label);
      std::cout << '\n';
    }
    std::cout << "trace: " << (a.trace_out.empty() ? "-" : a.trace_out) << '\n';
  }
  return label == Verdict::kNotEnoughInfo ? kExitNei : kExitOk;
}

// ---- batch ----

struct BatchArgs {
  std::string dataset, out = "records.jsonl";
  std::optional<std::size_t> max_new;
  std::optional<std::string> summary_out;
  std::string nei_policy;
  bool json_out = false;
};

int run_batch(const Common& common, const BatchArgs& a) {
  Session s(common);
  auto entries = load_dataset(a.dataset);
  Orchestrator orch(*s.client, s.config.chain(), load_config_templates(s.config));
  BatchOptions opts;
  opts.output = a.out;
  opts.concurrency = s.config.concurrency;
  opts.nei_policy = s.config.nei_policy;
  if (!a.nei_policy.empty()) {
    auto p = nei_policy_from_string(a.nei_policy);
    if (!p) throw WorkbenchError(WorkbenchError::Kind::kConfig, "bad --nei-policy " + a.nei_policy);
    opts.nei_policy = *p;
  }
  opts.max_new_records = a.max_new;
  RunSummary summary = orch.batch_verify(batch_items(entries), opts);
  json sj = to_json(summary);
  if (a.summary_out) {
    std::ofstream o(*a.summary_out, std::ios::binary | std::ios::trunc);
    o << sj.dump(2) << '\n';
  }
  if (a.json_out) {
    std::cout << sj.dump(2) << '\n';
    return kExitOk;
  }
  std::cout << "records: " << summary.total_records << " (new " << summary.newly_computed << ", skipped "
            << summary.skipped << ")\n";
  auto records = load_records(a.out);
  std::vector<VerificationRecord> gold;
  for (auto& r : records)
    if (r.gold) gold.push_back(std::move(r));
  std::cout << render_accuracy_table(label_accuracy(gold, opts.nei_policy), std::filesystem::path(a.out).stem().string());
  return kExitOk;
}

// ---- claimgen ----

struct ClaimgenArgs {
  std::string table, domain = "other", negatives = "flip", out;
  std::optional<std::string> ref, dataset_out, queue;
  int validate_k = 0;
};

int run_claimgen(const Common& common, const ClaimgenArgs& a) {
  Session s(common);
  Table table = load_table_file(a.table);
  auto method = negative_method_from_string(a.negatives);
  if (!method) throw WorkbenchError(WorkbenchError::Kind::kConfig, "--negatives expects flip or manipulate");
  if (!is_known_domain(a.domain)) throw WorkbenchError(WorkbenchError::Kind::kConfig, "unknown domain " + a.domain);
  const TemplateSet& templates = load_config_templates(s.config);
  FactoryConfig fc;
  fc.sampling = s.config.chain();
  fc.generation_attempts = s.config.retries;
  if (a.queue) fc.adjudication_queue = *a.queue;
  std::unique_ptr<Orchestrator> validator;
  if (a.validate_k > 0) {
    validator = std::make_unique<Orchestrator>(*s.client, s.config.chain(), templates);
    fc.multipath_k = a.validate_k;
  }
  ClaimFactory factory(*s.client, fc, templates, validator.get());
  std::string ref = a.ref.value_or(table_ref_of(a.table));
  auto pairs = factory.build_pairs(table, ref, a.domain, *method);

  std::ostringstream lines;
  for (const auto& p : pairs) lines << to_json(p).dump() << '\n';
  if (a.out.empty()) {
    std::cout << lines.str();
  } else {
    std::ofstream o(a.out, std::ios::binary | std::ios::trunc);
    o << lines.str();
    std::cerr << pairs.size() << " pair(s) written to " << a.out << '\n';
  }
  if (a.dataset_out) save_dataset(entries_from_pairs(pairs, table, a.domain), *a.dataset_out);
  return kExitOk;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string traces;
  std::optional<std::string> judgments, human_scores, dataset;
  bool llm_judge = false, json_out = false;
  int runs = 3;
};

std::vector<std::pair<std::string, ChainTrace>> load_traces(const std::string& path) {
  std::vector<std::pair<std::string, ChainTrace>> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json j = json::parse(line);
    if (j.contains("trace")) {
      auto r = record_from_json(j);
      out.emplace_back(r.claim_id, r.trace);
    } else {
      ChainTrace t = trace_from_json(j);
      out.emplace_back(t.claim_ref, t);
    }
  }
  return out;
}

int run_evaluate(const Common& common, const EvaluateArgs& a) {
  auto traces = load_traces(a.traces);
  std::map<std::string, JudgmentSet> judgments;
  if (a.judgments) judgments = load_judgments(*a.judgments);
  HumanScoreReport human;
  if (a.human_scores) human = ingest_human_scores_file(*a.human_scores);
  for (const auto& w : human.warnings) std::cerr << "warning: " << w << '\n';

  std::map<std::string, DatasetEntry> by_id;
  if (a.dataset)
    for (auto& e : load_dataset(*a.dataset)) by_id[e.id] = std::move(e);
  std::unique_ptr<Session> session;
  if (a.llm_judge) {
    if (!a.dataset) throw WorkbenchError(WorkbenchError::Kind::kConfig, "--llm-judge needs --dataset for tables");
    session = std::make_unique<Session>(common);
  }

  json out = json::array();
  std::vector<std::vector<std::string>> rows;
  for (const auto& [id, trace] : traces) {
    json m = {{"trace_id", id}, {"steps", trace.steps.size()}};
    std::vector<std::string> row{id, std::to_string(trace.steps.size())};
    auto it = judgments.find(id);
    if (it != judgments.end() && !trace.steps.empty()) {
      m["accuracy"] = format_rate(step_accuracy(trace, it->second));
    } else if (session && !trace.steps.empty()) {
      const auto& e = by_id.at(id);
      Table table = e.table();
      LlmJudge judge(*session->client, {session->config.chain(), a.runs}, {&table, e.claim},
                     load_config_templates(session->config));
      JudgmentSet js;
      for (int i = 1; i <= static_cast<int>(trace.steps.size()); ++i) js.add(judge.judge(trace, i));
      m["accuracy"] = format_rate(step_accuracy(trace, js));
    }
    if (session && by_id.count(id)) {
      const auto& e = by_id.at(id);
      Table table = e.table();
      LlmJudge judge(*session->client, {session->config.chain(), a.runs}, {&table, e.claim},
                     load_config_templates(session->config));
      m["redundancy_rate"] = format_rate(redundancy_rate(trace, judge, &table).rate());
      m["alignment_rate"] = format_rate(alignment_check(trace, judge));
    }
    if (auto h = human.per_trace.find(id); h != human.per_trace.end()) {
      m["granularity"] = format_rate(h->second.granularity, 2);
      m["interpretability"] = format_rate(h->second.interpretability, 2);
    }
    for (auto key : {"accuracy", "redundancy_rate", "alignment_rate", "granularity", "interpretability"})
      row.push_back(m.contains(key) ? m[key].get<std::string>() : "-");
    rows.push_back(row);
    out.push_back(m);
  }
  if (a.json_out) std::cout << out.dump(2) << '\n';
  else
    std::cout << render_text_table(
        {"trace", "steps", "accuracy", "redundancy", "alignment", "granularity", "interpretability"}, rows);
  return kExitOk;
}

// ---- report ----

struct ReportArgs {
  std::string run;
  std::optional<std::string> errors;
  std::string nei_policy = "count_as_wrong";
  bool json_out = false;
};

int run_report(const ReportArgs& a) {
  auto policy = nei_policy_from_string(a.nei_policy);
  if (!policy) throw WorkbenchError(WorkbenchError::Kind::kConfig, "bad --nei-policy " + a.nei_policy);
  if (!std::filesystem::exists(a.run)) throw WorkbenchError(WorkbenchError::Kind::kIo, "no such run " + a.run);
  auto records = load_records(a.run);
  AccuracyTable acc = label_accuracy(records, *policy);
  json out = {{"records", records.size()}, {"accuracy", to_json(acc)}};

  std::map<std::string, std::map<ErrorTag, long>> hist;
  if (a.errors) {
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.claim_id);
    std::vector<ErrorAnnotation> anns;
    std::istringstream in(read_file(*a.errors));
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      json j = json::parse(line);
      auto tag = error_tag_from_string(j.at("tag").get<std::string>());
      if (!tag) throw WorkbenchError(WorkbenchError::Kind::kSchema, "bad error tag in " + line);
      anns.push_back({j.at("trace_id").get<std::string>(), *tag, j.value("group", std::string("run"))});
    }
    hist = error_histogram(annotate_errors(ids, std::move(anns)));
    json h = json::object();
    for (const auto& [g, counts] : hist)
      for (const auto& [t, n] : counts) h[g][std::string(to_string(t))] = n;
    out["errors"] = h;
  }
  if (a.json_out) {
    std::cout << out.dump(2) << '\n';
    return kExitOk;
  }
  std::cout << render_accuracy_table(acc, std::filesystem::path(a.run).stem().string());
  if (!hist.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [g, counts] : hist) {
      std::vector<std::string> row{g};
      for (const auto& [t, n] : counts) row.push_back(std::to_string(n));
      rows.push_back(row);
    }
    std::cout << '\n' << render_text_table({"group", "SNOWBALL", "CONTEXTUAL_CONFLICT", "COARSE_GRAINED"}, rows);
  }
  return kExitOk;
}

// ---- oracle-check ----

struct OracleArgs {
  std::string table, check;
  bool batch = false, json_out = false;
};

std::string verdict_text(const OracleVerdict& v) {
  if (v.is_bool()) return v.truth() ? "TRUE" : "FALSE";
  const Number& n = v.number();
  return n.amount.to_string() + (n.unit.empty() ? "" : " " + n.unit);
}

void print_verdict(const OracleVerdict& v, bool json_out, const std::string& label) {
  if (json_out) {
    json j = to_json(v);
    if (!label.empty()) j["check"] = label;
    std::cout << j.dump() << '\n';
    return;
  }
  if (!label.empty()) std::cout << label << '\n';
  std::cout << verdict_text(v) << '\n';
  for (const auto& e : v.evidence)
    std::cout << "  " << to_string(e.address) << " = " << e.value.amount.to_string()
              << (e.value.unit.empty() ? "" : " " + e.value.unit) << '\n';
  if (!v.precision_note.empty()) std::cout << "  (" << v.precision_note << ")\n";
}

int run_oracle(const OracleArgs& a) {
  Table table = load_table_file(a.table);
  std::string src = std::filesystem::exists(a.check) ? read_file(a.check) : a.check;
  std::vector<std::string> checks;
  if (a.batch) {
    std::istringstream in(src);
    std::string line;
    while (std::getline(in, line))
      if (!trim(line).empty() && trim(line)[0] != '#') checks.push_back(trim(line));
  } else {
    checks.push_back(src);
  }
  int rc = kExitOk;
  for (const auto& c : checks) {
    try {
      print_verdict(eval(parse_check(c), table), a.json_out, a.batch ? trim(c) : "");
    } catch (const OracleError& e) {
      std::string detail = std::string(to_string(e.kind())) + ": " + e.what();
      if (e.kind() == OracleError::Kind::kTypeError) detail += " at node " + e.path();
      if (e.kind() == OracleError::Kind::kSyntaxError) detail += " at offset " + std::to_string(e.position());
      if (!a.batch) {
        std::cerr << "error: " << detail << '\n';
        return kExitError;
      }
      if (a.json_out) std::cout << json{{"check", trim(c)}, {"error", detail}}.dump() << '\n';
      else std::cout << trim(c) << "\nERROR " << detail << '\n';
      rc = kExitError;
    }
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"atomchain: skill-chain verification of claims against tables"};
  app.require_subcommand(1);

  Common common;
  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "run the skill chain on one claim");
  verify->add_option("table", va.table, "table file")->required();
  verify->add_option("claim", va.claim, "claim text")->required();
  verify->add_option("--claim-id", va.claim_id, "claim id stored in the trace");
  verify->add_option("--gold", va.gold, "gold label stored in the record");
  verify->add_option("--check", va.check, "attached oracle check");
  verify->add_option("--trace-out", va.trace_out, "append the record here (empty disables)");
  verify->add_option("--paths", va.paths, "multipath vote over k paths")->check(CLI::PositiveNumber);
  verify->add_flag("--short", va.short_style, "single-call short-thought path");
  verify->add_flag("--json", va.json_out, "print the record document");
  verify->add_flag("--no-timing", va.no_timing, "omit wall-clock timing from output");
  common.attach(verify);

  BatchArgs ba;
  Common batch_common;
  auto* batch = app.add_subcommand("batch", "resumable batch verification over a dataset");
  batch->add_option("dataset", ba.dataset, "dataset JSONL")->required();
  batch->add_option("--out", ba.out, "record store (JSONL, appended)");
  batch->add_option("--max-new", ba.max_new, "stop after this many new records");
  batch->add_option("--summary-out", ba.summary_out, "write the summary JSON here");
  batch->add_option("--nei-policy", ba.nei_policy, "count_as_wrong | exclude");
  batch->add_flag("--json", ba.json_out, "print the summary JSON");
  batch_common.attach(batch);

  ClaimgenArgs ca;
  Common claim_common;
  auto* claimgen = app.add_subcommand("claimgen", "generate validated claim pairs for a table");
  claimgen->add_option("table", ca.table, "table file")->required();
  claimgen->add_option("--negatives", ca.negatives, "flip | manipulate");
  claimgen->add_option("--domain", ca.domain, "dataset domain");
  claimgen->add_option("--ref", ca.ref, "table reference (default: file stem)");
  claimgen->add_option("--out", ca.out, "pairs JSONL (default: stdout)");
  claimgen->add_option("--dataset-out", ca.dataset_out, "also write dataset JSONL");
  claimgen->add_option("--queue", ca.queue, "adjudication queue JSONL");
  claimgen->add_option("--validate-paths", ca.validate_k, "multipath validation with k paths");
  claim_common.attach(claimgen);

  EvaluateArgs ea;
  Common eval_common;
  auto* evaluate = app.add_subcommand("evaluate", "chain-quality metrics for stored traces");
  evaluate->add_option("traces", ea.traces, "record or trace JSONL")->required();
  evaluate->add_option("--judgments", ea.judgments, "step judgments JSONL");
  evaluate->add_option("--human-scores", ea.human_scores, "annotator CSV");
  evaluate->add_option("--dataset", ea.dataset, "dataset supplying tables for model judges");
  evaluate->add_option("--runs", ea.runs, "judge runs averaged per question")->check(CLI::PositiveNumber);
  evaluate->add_flag("--llm-judge", ea.llm_judge, "score with the model judge prompts");
  evaluate->add_flag("--json", ea.json_out, "JSON output");
  eval_common.attach(evaluate);

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "per-domain accuracy for a run");
  report->add_option("run", ra.run, "record store JSONL")->required();
  report->add_option("--errors", ra.errors, "error annotations JSONL {trace_id, tag, group}");
  report->add_option("--nei-policy", ra.nei_policy, "count_as_wrong | exclude");
  report->add_flag("--json", ra.json_out, "JSON output");

  OracleArgs oa;
  auto* oracle = app.add_subcommand("oracle-check", "evaluate a check expression against a table");
  oracle->add_option("table", oa.table, "table file")->required();
  oracle->add_option("check", oa.check, "check file (or expression text)")->required();
  oracle->add_flag("--batch", oa.batch, "one check per line");
  oracle->add_flag("--json", oa.json_out, "JSON output");

  std::string dump_out;
  auto* templates = app.add_subcommand("templates", "prompt template bundle");
  auto* dump = templates->add_subcommand("dump", "print the built-in bundle");
  dump->add_option("--out", dump_out, "write to a file instead of stdout");
  templates->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitError;
  }

  try {
    if (*verify) return run_verify(common, va);
    if (*batch) return run_batch(batch_common, ba);
    if (*claimgen) return run_claimgen(claim_common, ca);
    if (*evaluate) return run_evaluate(eval_common, ea);
    if (*report) return run_report(ra);
    if (*oracle) return run_oracle(oa);
    if (*dump) {
      std::string text = serialize_templates(default_templates());
      if (dump_out.empty()) std::cout << text;
      else std::ofstream(dump_out, std::ios::binary | std::ios::trunc) << text;
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
