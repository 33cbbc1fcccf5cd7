#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "maui/store.hpp"
#include "maui/synth.hpp"

namespace maui {

struct StoreInput {
  std::string path;
  StoreFormat format = StoreFormat::kJsonl;
};

struct SplitSpec {
  std::size_t haystack_docs = 0;
  std::size_t query_docs = 0;
  std::optional<std::uint64_t> seed;
};

enum class QueryMode { kAttribution, kNeedleMrr };

// Full description of one evaluation run. Parsed strictly: unknown keys
// anywhere in the config are an error, so typos fail loudly instead of
// silently running with defaults.
struct RunConfig {
  std::string label = "run";
  std::uint64_t seed = 0;

  std::optional<StoreInput> store_input;     // exactly one of these two
  std::optional<PopulationSpec> synthetic;
  bool synthetic_seed_explicit = false;
  std::optional<SplitSpec> split;            // required with store input

  QueryMode query_mode = QueryMode::kAttribution;
  std::size_t queries_per_author = 4;        // needle_mrr mode only
  std::size_t docs_per_query = 4;            // needle_mrr mode only

  std::size_t query_author_count = 0;        // 0 = every eligible author
  std::optional<std::uint64_t> query_author_seed;
  std::optional<std::uint64_t> query_seed;

  std::vector<std::size_t> ks = {5, 10, 15, 20};
  std::size_t exceed_k = 10;
  std::vector<double> exceed_multipliers = {2.0, 4.0, 5.0};
  std::size_t recall_k = 8;
  std::size_t geometry_bins = 20;

  std::size_t stats_group_size = 300;
  double alpha = 0.05;
  std::optional<std::uint64_t> stats_seed;

  bool include_self_hits = false;
  bool risk_ratio_all_authors = false;
  bool mean_rank_include_self = true;
  std::size_t rank_dump_top_k = 0;

  std::string output_dir;
};

// Throws ConfigError when obj holds a key outside `allowed`.
void require_keys(const nlohmann::json& obj,
                  std::initializer_list<const char*> allowed,
                  const std::string& where);

// "jsonl" or "binary" (alias "binary-matrix").
StoreFormat store_format_from_string(const std::string& name,
                                     const std::string& where);

PopulationSpec population_spec_from_json(const nlohmann::json& j,
                                         bool& seed_given);
RunConfig run_config_from_json(const nlohmann::json& j);

struct RunOptions {
  int threads = 1;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
};

struct RunResult {
  std::string output_dir;
  std::size_t n_haystack = 0;
  std::size_t n_queries = 0;
  double recall = 0.0;
  double mrr = 0.0;
  std::vector<std::pair<std::size_t, double>> maui_by_k;
};

// Executes the whole pipeline and writes every report into the output
// directory (reports appear all-or-nothing via a staging subdirectory).
// Identical config + seed + inputs give byte-identical reports regardless
// of thread count; timings.json is the one file allowed to differ.
RunResult run(const RunConfig& config, const RunOptions& options);

struct CompareRow {
  std::string label;
  std::size_t n_haystack = 0;
  std::size_t n_queries = 0;
  double recall = 0.0;
  double mrr = 0.0;
  std::vector<double> maui;  // aligned with CompareResult::ks
};

struct CompareResult {
  std::size_t recall_k = 0;
  std::vector<std::size_t> ks;
  std::vector<CompareRow> rows;
};

// Joins the headline metrics of several run manifests; the runs must share
// population sizes, ks and recall_k or the numbers would not be comparable.
CompareResult compare(const std::vector<std::string>& manifest_paths);
std::string compare_csv(const CompareResult& result);

}  // namespace maui
