#include "atomchain/workbench.hpp"

#include <cstdlib>
#include <fstream>
#include <cctype>
#include <random>
#include <set>
#include <sstream>

namespace atomchain {

using nlohmann::json;

bool is_known_domain(std::string_view d) {
  for (auto k : kDomains)
    if (k == d) return true;
  return false;
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kGenerated: return "GENERATED";
    case Provenance::kImported: return "IMPORTED";
    case Provenance::kHuman: return "HUMAN";
  }
  return "?";
}

std::optional<Provenance> provenance_from_string(std::string_view s) {
  for (auto p : {Provenance::kGenerated, Provenance::kImported, Provenance::kHuman})
    if (to_string(p) == s) return p;
  return std::nullopt;
}

Table DatasetEntry::table() const { return Table(caption, rows, header_rows); }

Claim DatasetEntry::to_claim() const {
  Claim c;
  c.id = id;
  c.text = claim;
  c.gold_label = label;
  c.domain_tag = domain;
  c.check = check;
  return c;
}

json to_json(const DatasetEntry& e) {
  json j = {{"schema_version", kDatasetSchemaVersion},
            {"id", e.id},
            {"domain", e.domain},
            {"caption", e.caption},
            {"table", e.rows},
            {"claim", e.claim},
            {"label", std::string(to_string(e.label))},
            {"provenance", std::string(to_string(e.provenance))}};
  if (e.header_rows != 1) j["header_rows"] = e.header_rows;
  if (e.check) j["check"] = *e.check;
  return j;
}

DatasetEntry dataset_entry_from_json(const json& j) {
  auto fail = [](const std::string& m) { return WorkbenchError(WorkbenchError::Kind::kSchema, m); };
  if (!j.is_object()) throw fail("dataset line is not an object");
  DatasetEntry e;
  try {
    int version = j.value("schema_version", kDatasetSchemaVersion);
    if (version != kDatasetSchemaVersion) throw fail("unsupported schema_version " + std::to_string(version));
    e.id = j.at("id").get<std::string>();
    e.domain = j.value("domain", std::string("other"));
    e.caption = j.value("caption", std::string());
    const json& t = j.at("table");
    const json& rows = t.is_object() ? t.at("rows") : t;
    for (const auto& r : rows) {
      std::vector<std::string> row;
      for (const auto& c : r) row.push_back(c.is_string() ? c.get<std::string>() : c.dump());
      e.rows.push_back(std::move(row));
    }
    if (t.is_object() && e.caption.empty()) e.caption = t.value("caption", std::string());
    e.header_rows = j.value("header_rows", 1);
    e.claim = j.at("claim").get<std::string>();
    std::string label = j.at("label").get<std::string>();
    auto v = verdict_from_string(label);
    if (!v || *v == Verdict::kNotEnoughInfo) throw fail(e.id + ": gold label must be SUPPORT or REFUTE, got " + label);
    e.label = *v;
    auto p = provenance_from_string(j.value("provenance", std::string("IMPORTED")));
    if (!p) throw fail(e.id + ": bad provenance");
    e.provenance = *p;
    if (j.contains("check") && !j["check"].is_null()) e.check = j["check"].get<std::string>();
  } catch (const json::exception& ex) {
    throw fail(std::string("dataset line: ") + ex.what());
  }
  if (!is_known_domain(e.domain)) throw fail(e.id + ": unknown domain '" + e.domain + "'");
  try {
    (void)e.table();
  } catch (const TableError& ex) {
    throw fail(e.id + ": " + ex.what());
  }
  return e;
}

std::vector<DatasetEntry> load_dataset(const std::filesystem::path& path, const DatasetAdapter& adapter) {
  std::ifstream in(path);
  if (!in) throw WorkbenchError(WorkbenchError::Kind::kIo, "cannot read " + path.string());
  std::vector<DatasetEntry> out;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& ex) {
      throw WorkbenchError(WorkbenchError::Kind::kSchema,
                           path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
    DatasetEntry e = adapter ? adapter(j) : dataset_entry_from_json(j);
    if (!seen.insert(e.id).second)
      throw WorkbenchError(WorkbenchError::Kind::kDuplicateId,
                           path.string() + ":" + std::to_string(lineno) + ": duplicate id " + e.id);
    out.push_back(std::move(e));
  }
  return out;
}

void save_dataset(const std::vector<DatasetEntry>& entries, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WorkbenchError(WorkbenchError::Kind::kIo, "cannot write " + path.string());
  for (const auto& e : entries) out << to_json(e).dump() << '\n';
}

std::vector<DatasetEntry> entries_from_pairs(const std::vector<ClaimPair>& pairs, const Table& table,
                                            const std::string& domain) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : table.rows()) {
    std::vector<std::string> row;
    for (const auto& c : r) row.push_back(c.raw_text());
    rows.push_back(std::move(row));
  }
  std::vector<DatasetEntry> out;
  for (const auto& p : pairs) {
    for (const Claim* c : {&p.positive, &p.negative}) {
      DatasetEntry e;
      e.id = c->id;
      e.domain = domain;
      e.caption = table.caption();
      e.rows = rows;
      e.header_rows = table.header_row_count();
      e.claim = c->text;
      e.label = c->gold_label.value_or(c == &p.positive ? Verdict::kSupport : Verdict::kRefute);
      e.provenance = p.validation == Validation::kHuman ? Provenance::kHuman : Provenance::kGenerated;
      e.check = c->check;
      out.push_back(std::move(e));
    }
  }
  return out;
}

std::vector<BatchItem> batch_items(const std::vector<DatasetEntry>& entries) {
  std::map<std::pair<std::string, std::vector<std::vector<std::string>>>, std::shared_ptr<const Table>> shared;
  std::map<std::shared_ptr<const Table>, std::string> refs;
  std::vector<BatchItem> out;
  for (const auto& e : entries) {
    auto& t = shared[{e.caption, e.rows}];
    if (!t) {
      t = std::make_shared<const Table>(e.table());
      refs[t] = "table-" + std::to_string(refs.size() + 1);
    }
    out.push_back({e.to_claim(), t, refs[t]});
  }
  return out;
}

DatasetSplit split_dataset(const std::vector<DatasetEntry>& entries, std::size_t train, std::size_t val,
                           unsigned long long seed) {
  if (train + val > entries.size())
    throw WorkbenchError(WorkbenchError::Kind::kSplit, "split " + std::to_string(train) + "+" + std::to_string(val) +
                                                           " exceeds " + std::to_string(entries.size()) + " entries");
  std::vector<std::size_t> idx(entries.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  // Fisher-Yates over raw engine output so the order is the same everywhere.
  std::mt19937_64 rng(seed);
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
  DatasetSplit s;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto& dst = i < train ? s.train : i < train + val ? s.val : s.test;
    dst.push_back(entries[idx[i]]);
  }
  return s;
}

// ---- run configuration ----

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = {
      "backend",     "base_url",  "endpoint",  "model_id", "temperature", "top_p",      "top_k",
      "max_tokens",  "max_plans", "retries",   "concurrency", "token_budget", "templates", "session",
      "record",      "mock_script", "train_size", "val_size", "seed",     "nei_policy"};
  return keys;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  std::string value = trim(raw);
  auto bad = [&](const std::string& why) {
    return WorkbenchError(WorkbenchError::Kind::kConfig, "config " + key + "=" + value + ": " + why);
  };
  auto as_ll = [&]() -> long long {
    try {
      std::size_t used = 0;
      long long v = std::stoll(value, &used);
      if (used != value.size()) throw bad("not an integer");
      return v;
    } catch (const std::logic_error&) {
      throw bad("not an integer");
    }
  };
  auto as_int = [&] { return static_cast<int>(as_ll()); };
  auto as_double = [&]() -> double {
    try {
      std::size_t used = 0;
      double v = std::stod(value, &used);
      if (used != value.size()) throw bad("not a number");
      return v;
    } catch (const std::logic_error&) {
      throw bad("not a number");
    }
  };
  auto as_size = [&]() -> std::size_t {
    long long v = as_ll();
    if (v < 0) throw bad("must be non-negative");
    return static_cast<std::size_t>(v);
  };
  if (key == "backend") {
    if (value != "live" && value != "replay" && value != "mock") throw bad("expected live, replay or mock");
    backend = value;
  } else if (key == "base_url") base_url = value;
  else if (key == "endpoint") endpoint = value;
  else if (key == "model_id") model_id = value;
  else if (key == "temperature") temperature = as_double();
  else if (key == "top_p") top_p = as_double();
  else if (key == "top_k") top_k = as_int();
  else if (key == "max_tokens") max_tokens = as_int();
  else if (key == "max_plans") max_plans = as_int();
  else if (key == "retries") retries = as_int();
  else if (key == "concurrency") concurrency = as_int();
  else if (key == "token_budget") token_budget = static_cast<long>(as_ll());
  else if (key == "templates") templates = value;
  else if (key == "session") session = value;
  else if (key == "record") record = value;
  else if (key == "mock_script") mock_script = value;
  else if (key == "train_size") train_size = as_size();
  else if (key == "val_size") val_size = as_size();
  else if (key == "seed") seed = as_ll();
  else if (key == "nei_policy") {
    auto p = nei_policy_from_string(value);
    if (!p) throw bad("expected count_as_wrong or exclude");
    nei_policy = *p;
  } else {
    throw WorkbenchError(WorkbenchError::Kind::kConfig, "unknown config key '" + key + "'");
  }
}

ChainConfig RunConfig::chain() const {
  ChainConfig c;
  c.model_id = model_id;
  c.temperature = temperature;
  c.top_p = top_p;
  c.top_k = top_k;
  c.max_tokens = max_tokens;
  c.seed = seed;
  c.max_plans = max_plans;
  c.parse_retries = retries;
  return c;
}

ClientOptions RunConfig::client() const {
  ClientOptions o;
  o.max_retries = retries;
  o.token_budget = token_budget;
  o.max_in_flight = concurrency;
  return o;
}

void RunConfig::validate() const {
  auto bad = [](const std::string& m) { return WorkbenchError(WorkbenchError::Kind::kConfig, m); };
  if (concurrency < 1) throw bad("concurrency must be positive");
  if (token_budget < 0) throw bad("token_budget must be non-negative");
  if (backend != "live" && backend != "replay" && backend != "mock") throw bad("unknown backend " + backend);
  if (backend == "replay" && !session) throw bad("replay backend needs a session file");
  if (backend == "mock" && !mock_script) throw bad("mock backend needs a mock script");
  try {
    chain().validate();
  } catch (const ConfigError& e) {
    throw bad(e.what());
  }
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& file,
                          const std::map<std::string, std::string>& overrides,
                          const std::function<std::optional<std::string>(const std::string&)>& getenv) {
  RunConfig c;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw WorkbenchError(WorkbenchError::Kind::kIo, "cannot read config " + file->string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      auto eq = t.find('=');
      if (eq == std::string::npos)
        throw WorkbenchError(WorkbenchError::Kind::kConfig,
                             file->string() + ":" + std::to_string(lineno) + ": expected key=value");
      c.set(trim(t.substr(0, eq)), t.substr(eq + 1));
    }
  }
  auto env = getenv ? getenv : [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    return v ? std::optional<std::string>(v) : std::nullopt;
  };
  for (const auto& key : run_config_keys()) {
    std::string name = "ATOMCHAIN_";
    for (char ch : key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (auto v = env(name)) c.set(key, *v);
  }
  for (const auto& [k, v] : overrides) c.set(k, v);
  return c;
}

Table load_table_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WorkbenchError(WorkbenchError::Kind::kIo, "cannot read table file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  if (path.extension() == ".json") {
    try {
      return table_from_json(json::parse(text));
    } catch (const json::exception& e) {
      throw WorkbenchError(WorkbenchError::Kind::kSchema, path.string() + ": " + e.what());
    }
  }
  std::istringstream lines(text);
  std::string line, caption, body;
  bool in_table = false;
  while (std::getline(lines, line)) {
    std::string t = trim(line);
    if (!in_table && !t.empty() && t.front() != '|') {
      caption += (caption.empty() ? "" : " ") + t;
      continue;
    }
    if (!t.empty()) in_table = true;
    body += line + "\n";
  }
  Table table = parse_table(body);
  table.set_caption(caption);
  return table;
}

std::shared_ptr<Backend> make_backend(const RunConfig& config) {
  if (config.backend == "live") {
    LiveOptions o;
    o.base_url = config.base_url;
    o.path = config.endpoint;
    return std::make_shared<LiveBackend>(o);
  }
  if (config.backend == "replay") {
    if (!config.session) throw WorkbenchError(WorkbenchError::Kind::kConfig, "replay backend needs --session");
    if (!std::filesystem::exists(*config.session))
      throw WorkbenchError(WorkbenchError::Kind::kIo, "session file not found: " + config.session->string());
    return std::make_shared<ReplayBackend>(load_session(*config.session));
  }
  if (config.backend == "mock") {
    if (!config.mock_script) throw WorkbenchError(WorkbenchError::Kind::kConfig, "mock backend needs --mock-script");
    return MockBackend::from_file(*config.mock_script);
  }
  throw WorkbenchError(WorkbenchError::Kind::kConfig, "unknown backend " + config.backend);
}

const TemplateSet& load_config_templates(const RunConfig& config) {
  if (!config.templates) return default_templates();
  // Kept alive for the process; the CLI loads one bundle per run.
  static std::map<std::string, std::unique_ptr<TemplateSet>> cache;
  auto& slot = cache[config.templates->string()];
  if (!slot) slot = std::make_unique<TemplateSet>(load_templates(*config.templates));
  return *slot;
}

}  // namespace atomchain
