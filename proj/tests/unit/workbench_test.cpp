#include "atomchain/workbench.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <set>

using namespace atomchain;

namespace {

DatasetEntry entry(const std::string& id, const std::string& domain = "ml") {
  DatasetEntry e;
  e.id = id;
  e.domain = domain;
  e.caption = "cap";
  e.rows = {{"h", "v"}, {"a", "1.5"}};
  e.claim = "a is 1.5";
  e.label = Verdict::kSupport;
  return e;
}

WorkbenchError::Kind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const WorkbenchError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no WorkbenchError";
  return WorkbenchError::Kind::kIo;
}

}  // namespace

TEST(Dataset, JsonRoundTripAndValidation) {
  DatasetEntry e = entry("x");
  e.check = "(= (cell 2 2) (lit 1.5))";
  e.provenance = Provenance::kHuman;
  EXPECT_EQ(dataset_entry_from_json(to_json(e)), e);
  auto j = to_json(e);
  j["label"] = "NOT ENOUGH INFO";
  EXPECT_EQ(kind_of([&] { dataset_entry_from_json(j); }), WorkbenchError::Kind::kSchema);
  j = to_json(e);
  j["domain"] = "astrology";
  EXPECT_EQ(kind_of([&] { dataset_entry_from_json(j); }), WorkbenchError::Kind::kSchema);
  EXPECT_EQ(e.table().caption(), "cap");
  EXPECT_EQ(e.to_claim().gold_label, Verdict::kSupport);
}

TEST(Dataset, FileRoundTripAndDuplicateIds) {
  support::TempDir dir("wb");
  std::vector<DatasetEntry> es = {entry("a"), entry("b", "finance")};
  save_dataset(es, dir / "d.jsonl");
  EXPECT_EQ(load_dataset(dir / "d.jsonl"), es);
  es.push_back(entry("a"));
  save_dataset(es, dir / "dup.jsonl");
  EXPECT_EQ(kind_of([&] { load_dataset(dir / "dup.jsonl"); }), WorkbenchError::Kind::kDuplicateId);
}

TEST(Dataset, AdapterHook) {
  support::TempDir dir("wb");
  std::ofstream(dir / "foreign.jsonl") << R"({"uid": "q1", "statement": "a is 1.5", "verdict": true})" << "\n";
  auto adapter = [](const nlohmann::json& j) {
    DatasetEntry e = entry(j.at("uid").get<std::string>());
    e.claim = j.at("statement").get<std::string>();
    e.label = j.at("verdict").get<bool>() ? Verdict::kSupport : Verdict::kRefute;
    return e;
  };
  auto es = load_dataset(dir / "foreign.jsonl", adapter);
  ASSERT_EQ(es.size(), 1u);
  EXPECT_EQ(es[0].id, "q1");
}

TEST(Dataset, SplitIsSeededPartition) {
  std::vector<DatasetEntry> es;
  for (int i = 0; i < 20; ++i) es.push_back(entry("e" + std::to_string(i)));
  auto a = split_dataset(es, 12, 3, 42), b = split_dataset(es, 12, 3, 42), c = split_dataset(es, 12, 3, 43);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test.size(), 5u);
  EXPECT_NE(a.train, c.train);
  std::set<std::string> ids;
  for (const auto* part : {&a.train, &a.val, &a.test})
    for (const auto& e : *part) ids.insert(e.id);
  EXPECT_EQ(ids.size(), 20u);
  EXPECT_EQ(kind_of([&] { split_dataset(es, 15, 6, 1); }), WorkbenchError::Kind::kSplit);
}

TEST(Dataset, BatchItemsShareTables) {
  std::vector<DatasetEntry> es = {entry("a"), entry("b"), entry("c")};
  es[2].rows[1][1] = "2.0";
  auto items = batch_items(es);
  ASSERT_EQ(items.size(), 3u);
  EXPECT_EQ(items[0].table, items[1].table);
  EXPECT_NE(items[0].table, items[2].table);
  EXPECT_EQ(items[0].claim.id, "a");
}

TEST(RunConfig, LayeringOrder) {
  support::TempDir dir("cfg");
  std::ofstream(dir / "run.conf") << "# comment\ntemperature = 0.5\nmax_plans=4\nseed=9\n";
  auto env = [](const std::string& name) -> std::optional<std::string> {
    if (name == "ATOMCHAIN_MAX_PLANS") return "5";
    return std::nullopt;
  };
  RunConfig c = load_run_config(dir / "run.conf", {{"seed", "11"}, {"mock_script", "m.json"}}, env);
  EXPECT_DOUBLE_EQ(c.temperature, 0.5);
  EXPECT_EQ(c.max_plans, 5);
  EXPECT_EQ(c.seed, 11);
  EXPECT_EQ(c.chain().max_plans, 5);
  EXPECT_EQ(kind_of([&] { RunConfig().set("nonsense", "1"); }), WorkbenchError::Kind::kConfig);
  EXPECT_EQ(kind_of([&] { RunConfig().set("max_plans", "many"); }), WorkbenchError::Kind::kConfig);
}

TEST(RunConfig, BackendRequirements) {
  RunConfig c;
  c.backend = "replay";
  EXPECT_EQ(kind_of([&] { c.validate(); }), WorkbenchError::Kind::kConfig);
  c.backend = "mock";
  c.mock_script = support::fixture_path("appendix_mock.json");
  c.validate();
  EXPECT_NE(make_backend(c), nullptr);
  c.backend = "carrier-pigeon";
  EXPECT_EQ(kind_of([&] { c.validate(); }), WorkbenchError::Kind::kConfig);
}

TEST(Tables, LoadsJsonAndText) {
  support::TempDir dir("tab");
  Table t = support::xlpe_table();
  std::ofstream(dir / "t.json") << table_to_json(t).dump();
  EXPECT_EQ(load_table_file(dir / "t.json"), t);
  EXPECT_EQ(t.header_row_count(), 1);
  EXPECT_EQ(kind_of([&] { load_table_file(dir / "missing.txt"); }), WorkbenchError::Kind::kIo);
}
