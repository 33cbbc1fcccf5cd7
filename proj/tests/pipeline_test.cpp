#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "maui/pipeline.hpp"
#include "maui/rng.hpp"

using namespace maui;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json minimal_synth_config() {
  return json::parse(R"({
    "label": "unit",
    "seed": 11,
    "input": {"synthetic": {
      "n_authors": 60,
      "dimension": 8,
      "haystack_docs_per_author": 3,
      "query_docs_per_author": 2,
      "doc_noise_sigma": 0.2,
      "generator": {"type": "isotropic_gaussian", "sigma": 0.5}
    }},
    "stats": {"group_size": 15}
  })");
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "maui_pipeline_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

json parse_file(const fs::path& path) { return json::parse(slurp(path)); }

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) {
    if (c == '\n') ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("config defaults") {
  const auto config = run_config_from_json(minimal_synth_config());
  CHECK(config.label == "unit");
  CHECK(config.seed == 11);
  CHECK(config.synthetic.has_value());
  CHECK_FALSE(config.store_input.has_value());
  CHECK_FALSE(config.synthetic_seed_explicit);
  CHECK(config.query_mode == QueryMode::kAttribution);
  CHECK(config.query_author_count == 0);
  CHECK(config.ks == std::vector<std::size_t>{5, 10, 15, 20});
  CHECK(config.exceed_k == 10);
  CHECK(config.exceed_multipliers == std::vector<double>{2.0, 4.0, 5.0});
  CHECK(config.recall_k == 8);
  CHECK(config.geometry_bins == 20);
  CHECK(config.stats_group_size == 15);
  CHECK(config.alpha == 0.05);
  CHECK_FALSE(config.include_self_hits);
  CHECK_FALSE(config.risk_ratio_all_authors);
  CHECK(config.mean_rank_include_self);
  CHECK(config.rank_dump_top_k == 0);
  CHECK(config.output_dir.empty());
}

TEST_CASE("config rejects unknown keys at every level") {
  auto j = minimal_synth_config();
  j["surprise"] = 1;
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);

  j = minimal_synth_config();
  j["input"]["synthetic"]["sigma"] = 0.5;  // belongs inside generator
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);

  j = minimal_synth_config();
  j["input"]["synthetic"]["generator"]["hub_pull"] = 0.9;  // wrong generator
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);

  j = minimal_synth_config();
  j["stats"]["group"] = 10;
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);

  j = minimal_synth_config();
  j["queries"] = {{"mode", "attribution"}, {"docs", 3}};
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);

  j = minimal_synth_config();
  j["exceed"] = {{"k", 10}, {"mult", {2.0}}};
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
}

TEST_CASE("config input and mode validation") {
  auto j = minimal_synth_config();
  j["input"]["store"] = {{"path", "x.jsonl"}, {"format", "jsonl"}};
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);  // both inputs

  j = minimal_synth_config();
  j["input"].erase("synthetic");
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);  // neither input

  j = minimal_synth_config();
  j["split"] = {{"haystack_docs", 2}, {"query_docs", 1}};
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);  // synthetic is pre-split

  j = json::parse(R"({
    "input": {"store": {"path": "x.jsonl", "format": "jsonl"}}
  })");
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);  // store needs split
  j["split"] = {{"haystack_docs", 2}, {"query_docs", 1}};
  const auto with_store = run_config_from_json(j);
  CHECK(with_store.store_input.has_value());
  CHECK(with_store.split.has_value());
  CHECK(with_store.split->haystack_docs == 2);
  CHECK_FALSE(with_store.split->seed.has_value());

  j = minimal_synth_config();
  j["label"] = "has,comma";
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j["label"] = "";
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);

  j = minimal_synth_config();
  j["ks"] = {10, 5};
  CHECK(run_config_from_json(j).ks == std::vector<std::size_t>{5, 10});
  j["ks"] = {10, 10};
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j["ks"] = json::array();
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);

  j = minimal_synth_config();
  j["stats"]["alpha"] = 1.0;
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);

  j = minimal_synth_config();
  j["queries"] = {{"mode", "attribution"}, {"queries_per_author", 2}};
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j["queries"] = {{"mode", "sideways"}};
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  j["queries"] = {{"mode", "needle_mrr"}};
  const auto needle = run_config_from_json(j);
  CHECK(needle.query_mode == QueryMode::kNeedleMrr);
  CHECK(needle.queries_per_author == 4);
  CHECK(needle.docs_per_query == 4);

  j = minimal_synth_config();
  j["input"]["synthetic"]["seed"] = 123;
  const auto seeded = run_config_from_json(j);
  CHECK(seeded.synthetic_seed_explicit);
  CHECK(seeded.synthetic->seed == 123);
}

TEST_CASE("run produces the full report set with consistent numbers") {
  const auto out = fresh_dir("full_run");
  auto config = run_config_from_json(minimal_synth_config());
  config.output_dir = out.string();
  config.rank_dump_top_k = 3;

  const auto result = run(config, RunOptions{});
  CHECK(result.n_haystack == 60);
  CHECK(result.n_queries == 60);
  CHECK(result.output_dir == out.string());
  REQUIRE(result.maui_by_k.size() == 4);
  CHECK(result.maui_by_k[0].first == 5);

  const auto manifest = parse_file(out / "manifest.json");
  CHECK(manifest["tool"] == "maui");
  CHECK(manifest["label"] == "unit");
  CHECK(manifest["n_haystack"] == 60);
  CHECK(manifest["n_queries"] == 60);
  CHECK(manifest["n_query_authors"] == 60);
  CHECK(manifest["dimension"] == 8);
  CHECK(manifest["seeds"]["run"] == 11);
  CHECK(manifest["seeds"]["synthetic"] == 11);  // inherits the run seed
  CHECK_FALSE(manifest["seeds"].contains("split"));
  CHECK_FALSE(manifest.contains("dropped_authors"));

  // Every advertised report landed, plus the manifest and timings.
  for (const auto& name : manifest["reports"]) {
    CHECK(fs::exists(out / name.get<std::string>()));
  }
  CHECK(fs::exists(out / "timings.json"));
  CHECK_FALSE(fs::exists(out / ".staging"));

  // fairness.json and the manifest quote the same headline numbers.
  const auto fairness = parse_file(out / "fairness.json");
  CHECK(fairness["effectiveness"]["recall"] == manifest["metrics"]["recall"]);
  CHECK(fairness["effectiveness"]["mrr"] == manifest["metrics"]["mrr"]);
  REQUIRE(fairness["maui"].size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(fairness["maui"][i]["value"] == manifest["metrics"]["maui"][i]);
    CHECK(fairness["maui"][i]["value"].get<double>() ==
          result.maui_by_k[i].second);
  }

  const auto authors_csv = slurp(out / "authors.csv");
  CHECK(line_count(authors_csv) == 61);  // header + one row per author
  const auto rankings = slurp(out / "rankings.csv");
  CHECK(rankings.rfind("query_id,position,author_id,similarity,is_true\n", 0) ==
        0);
  CHECK(line_count(rankings) == 1 + 60 * 3);

  const auto geometry = parse_file(out / "geometry.json");
  CHECK(geometry["authors"].size() == 60);
  CHECK(geometry["curve"].size() == 20);
  const auto hypotheses = parse_file(out / "hypotheses.json");
  CHECK(hypotheses["results"].size() == 3);
  CHECK(hypotheses["groups"]["high"].size() == 15);
}

TEST_CASE("reports are byte-identical across reruns and thread counts") {
  const auto out_a = fresh_dir("det_a");
  const auto out_b = fresh_dir("det_b");
  auto config = run_config_from_json(minimal_synth_config());

  RunOptions serial;
  serial.out_override = out_a.string();
  run(config, serial);

  RunOptions threaded;
  threaded.threads = 4;
  threaded.out_override = out_b.string();
  run(config, threaded);

  const auto manifest = parse_file(out_a / "manifest.json");
  std::vector<std::string> names;
  for (const auto& name : manifest["reports"]) {
    names.push_back(name.get<std::string>());
  }
  names.push_back("manifest.json");
  for (const auto& name : names) {
    CAPTURE(name);
    CHECK(slurp(out_a / name) == slurp(out_b / name));
  }

  // A different run seed changes the synthetic population and the numbers.
  const auto out_c = fresh_dir("det_c");
  RunOptions reseeded;
  reseeded.seed_override = 12;
  reseeded.out_override = out_c.string();
  run(config, reseeded);
  const auto other = parse_file(out_c / "manifest.json");
  CHECK(other["store_checksum"] != manifest["store_checksum"]);
  CHECK(other["seeds"]["run"] == 12);
}

TEST_CASE("needle mode multiplies queries per author") {
  const auto out = fresh_dir("needle");
  auto j = minimal_synth_config();
  j["queries"] = {{"mode", "needle_mrr"},
                  {"queries_per_author", 2},
                  {"docs_per_query", 1}};
  auto config = run_config_from_json(j);
  config.output_dir = out.string();
  const auto result = run(config, RunOptions{});
  CHECK(result.n_queries == 120);
  const auto manifest = parse_file(out / "manifest.json");
  CHECK(manifest["config"]["queries"]["mode"] == "needle_mrr");
  CHECK(manifest["config"]["queries"]["docs_per_query"] == 1);
}

TEST_CASE("store input splits documents and reports dropped authors") {
  const auto dir = fresh_dir("store_input");
  std::vector<DocumentEmbedding> docs;
  maui::Rng rng(5);
  for (int a = 0; a < 10; ++a) {
    const std::string id = "w" + std::to_string(a);
    for (int d = 0; d < 6; ++d) {
      auto v = rng.normal_vector(6);
      docs.push_back({id, "d" + std::to_string(d), v});
    }
  }
  docs.push_back({"thin", "only", rng.normal_vector(6)});
  const auto store = EmbeddingStore::from_documents(std::move(docs));
  const auto store_path = (dir / "store.jsonl").string();
  write_store(store, store_path, StoreFormat::kJsonl);

  json j = json::parse(R"({
    "label": "stored",
    "seed": 3,
    "input": {"store": {"path": "PATH", "format": "jsonl"}},
    "split": {"haystack_docs": 3, "query_docs": 2},
    "stats": {"group_size": 2},
    "ks": [3, 5],
    "exceed": {"k": 5, "multipliers": [2.0]},
    "recall_k": 5
  })");
  j["input"]["store"]["path"] = store_path;
  auto config = run_config_from_json(j);
  const auto out = fresh_dir("store_out");
  config.output_dir = out.string();

  const auto result = run(config, RunOptions{});
  CHECK(result.n_haystack == 10);  // "thin" lacks documents for the split
  const auto manifest = parse_file(out / "manifest.json");
  CHECK(manifest["dropped_authors"] == json::array({"thin"}));
  CHECK(manifest["seeds"].contains("split"));
  CHECK_FALSE(manifest["seeds"].contains("synthetic"));
}

TEST_CASE("run refuses to start without an output directory") {
  auto config = run_config_from_json(minimal_synth_config());
  CHECK_THROWS_AS(run(config, RunOptions{}), ConfigError);
  RunOptions options;
  options.threads = 0;
  options.out_override = "somewhere";
  CHECK_THROWS_AS(run(config, options), ConfigError);
}

TEST_CASE("oversized stats groups surface as a config error") {
  const auto out = fresh_dir("small_stats");
  auto j = minimal_synth_config();
  j.erase("stats");  // default group size of 300 cannot fit 60 authors
  auto config = run_config_from_json(j);
  config.output_dir = out.string();
  CHECK_THROWS_AS(run(config, RunOptions{}), ConfigError);
  CHECK_FALSE(fs::exists(out / "manifest.json"));
}

TEST_CASE("compare joins runs and rejects incomparable ones") {
  const auto out_a = fresh_dir("cmp_a");
  const auto out_b = fresh_dir("cmp_b");
  auto j = minimal_synth_config();
  auto config = run_config_from_json(j);
  config.output_dir = out_a.string();
  run(config, RunOptions{});

  j["label"] = "other";
  j["seed"] = 21;
  auto config_b = run_config_from_json(j);
  config_b.output_dir = out_b.string();
  run(config_b, RunOptions{});

  const auto joined = compare(
      {(out_a / "manifest.json").string(), (out_b / "manifest.json").string()});
  REQUIRE(joined.rows.size() == 2);
  CHECK(joined.rows[0].label == "unit");
  CHECK(joined.rows[1].label == "other");
  CHECK(joined.recall_k == 8);
  CHECK(joined.ks == std::vector<std::size_t>{5, 10, 15, 20});

  const auto csv = compare_csv(joined);
  CHECK(csv.rfind("run,n_haystack,n_queries,recall@8,mrr,maui@5,maui@10,"
                  "maui@15,maui@20\n",
                  0) == 0);
  CHECK(line_count(csv) == 3);

  // Different ks make the headline numbers incomparable.
  const auto out_c = fresh_dir("cmp_c");
  j["label"] = "narrow";
  j["ks"] = {5, 10};
  auto config_c = run_config_from_json(j);
  config_c.output_dir = out_c.string();
  run(config_c, RunOptions{});
  CHECK_THROWS_AS(compare({(out_a / "manifest.json").string(),
                           (out_c / "manifest.json").string()}),
                  DataError);
  CHECK_THROWS_AS(compare({(out_a / "missing.json").string()}), DataError);
  CHECK_THROWS_AS(compare({}), ConfigError);
}
