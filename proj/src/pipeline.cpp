#include "maui/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "maui/geometry.hpp"
#include "maui/metrics.hpp"
#include "maui/ranking.hpp"
#include "maui/rng.hpp"
#include "maui/stats.hpp"
#include "maui/util.hpp"

namespace maui {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

// True for any integer value >= 0, however the parser stored it.
bool is_nonnegative_integer(const json& v) {
  if (v.is_number_unsigned()) return true;
  return v.is_number_integer() && v.get<std::int64_t>() >= 0;
}

std::string get_string(const json& j, const char* key,
                       const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw ConfigError(where + ": missing or non-string \"" + key + "\"");
  }
  return it->get<std::string>();
}

std::size_t get_size(const json& j, const char* key, const std::string& where,
                     std::optional<std::size_t> fallback = {}) {
  const auto it = j.find(key);
  if (it == j.end()) {
    if (fallback) return *fallback;
    throw ConfigError(where + ": missing \"" + key + "\"");
  }
  if (!is_nonnegative_integer(*it)) {
    throw ConfigError(where + ": \"" + key +
                      "\" must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

std::uint64_t get_u64(const json& j, const char* key, const std::string& where,
                      std::optional<std::uint64_t> fallback = {}) {
  const auto it = j.find(key);
  if (it == j.end()) {
    if (fallback) return *fallback;
    throw ConfigError(where + ": missing \"" + key + "\"");
  }
  if (!is_nonnegative_integer(*it)) {
    throw ConfigError(where + ": \"" + key +
                      "\" must be a non-negative integer");
  }
  return it->get<std::uint64_t>();
}

double get_double(const json& j, const char* key, const std::string& where,
                  std::optional<double> fallback = {}) {
  const auto it = j.find(key);
  if (it == j.end()) {
    if (fallback) return *fallback;
    throw ConfigError(where + ": missing \"" + key + "\"");
  }
  if (!it->is_number()) {
    throw ConfigError(where + ": \"" + key + "\" must be a number");
  }
  return it->get<double>();
}

bool get_bool(const json& j, const char* key, const std::string& where,
              bool fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_boolean()) {
    throw ConfigError(where + ": \"" + key + "\" must be a boolean");
  }
  return it->get<bool>();
}

}  // namespace

StoreFormat store_format_from_string(const std::string& name,
                                     const std::string& where) {
  if (name == "jsonl") return StoreFormat::kJsonl;
  if (name == "binary" || name == "binary-matrix") return StoreFormat::kBinary;
  throw ConfigError(where + ": unknown format \"" + name +
                    "\" (expected jsonl or binary)");
}

void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                  const std::string& where) {
  require_object(obj, where);
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end()) {
      throw ConfigError(where + ": unknown key \"" + key + "\"");
    }
  }
}

PopulationSpec population_spec_from_json(const json& j, bool& seed_given) {
  const std::string where = "synthetic";
  require_keys(j,
               {"n_authors", "dimension", "haystack_docs_per_author",
                "query_docs_per_author", "doc_noise_sigma", "seed",
                "generator", "mean_direction"},
               where);
  PopulationSpec spec;
  spec.n_authors = get_size(j, "n_authors", where);
  spec.dimension = get_size(j, "dimension", where);
  spec.haystack_docs_per_author = get_size(j, "haystack_docs_per_author", where);
  spec.query_docs_per_author = get_size(j, "query_docs_per_author", where);
  spec.doc_noise_sigma = get_double(j, "doc_noise_sigma", where, 0.0);
  seed_given = j.contains("seed");
  spec.seed = seed_given ? get_u64(j, "seed", where) : 0;

  if (j.contains("mean_direction")) {
    const auto& md = j["mean_direction"];
    if (!md.is_array()) {
      throw ConfigError(where + ": mean_direction must be an array");
    }
    for (const auto& x : md) {
      if (!x.is_number()) {
        throw ConfigError(where + ": mean_direction entries must be numbers");
      }
      spec.mean_direction.push_back(x.get<double>());
    }
  }

  const auto git = j.find("generator");
  if (git == j.end()) throw ConfigError(where + ": missing \"generator\"");
  const json& g = *git;
  const std::string gwhere = where + ".generator";
  const std::string type = get_string(g, "type", gwhere);
  if (type == "isotropic_gaussian") {
    require_keys(g, {"type", "mean_norm", "sigma"}, gwhere);
    spec.generator = IsotropicGaussian{get_double(g, "mean_norm", gwhere, 1.0),
                                       get_double(g, "sigma", gwhere)};
  } else if (type == "radius_bands") {
    require_keys(g, {"type", "bands"}, gwhere);
    const auto bit = g.find("bands");
    if (bit == g.end() || !bit->is_array()) {
      throw ConfigError(gwhere + ": missing or non-array \"bands\"");
    }
    RadiusBands bands;
    for (const auto& b : *bit) {
      require_keys(b, {"fraction", "radial_offset", "sigma"},
                   gwhere + ".bands");
      bands.bands.push_back(RadiusBand{
          get_double(b, "fraction", gwhere),
          get_double(b, "radial_offset", gwhere),
          get_double(b, "sigma", gwhere)});
    }
    spec.generator = std::move(bands);
  } else if (type == "planted_hubs") {
    require_keys(g, {"type", "mean_norm", "sigma", "hub_fraction", "hub_pull"},
                 gwhere);
    spec.generator = PlantedHubs{get_double(g, "mean_norm", gwhere, 1.0),
                                 get_double(g, "sigma", gwhere),
                                 get_double(g, "hub_fraction", gwhere),
                                 get_double(g, "hub_pull", gwhere)};
  } else {
    throw ConfigError(gwhere + ": unknown type \"" + type + "\"");
  }
  return spec;
}

RunConfig run_config_from_json(const json& j) {
  const std::string where = "config";
  require_keys(j,
               {"label", "seed", "input", "split", "queries", "query_authors",
                "ks", "exceed", "recall_k", "geometry_bins", "stats",
                "include_self_hits", "risk_ratio_all_authors",
                "mean_rank_include_self", "rank_dump_top_k", "output_dir"},
               where);

  RunConfig config;
  if (j.contains("label")) config.label = get_string(j, "label", where);
  if (config.label.empty() ||
      config.label.find_first_of(",\"\n\r") != std::string::npos) {
    throw ConfigError(where +
                      ": label must be nonempty without commas or quotes");
  }
  config.seed = get_u64(j, "seed", where, 0);

  const auto iit = j.find("input");
  if (iit == j.end()) throw ConfigError(where + ": missing \"input\"");
  require_keys(*iit, {"store", "synthetic"}, where + ".input");
  const bool has_store = iit->contains("store");
  const bool has_synth = iit->contains("synthetic");
  if (has_store == has_synth) {
    throw ConfigError(where +
                      ".input: exactly one of \"store\" or \"synthetic\"");
  }
  if (has_store) {
    const json& s = (*iit)["store"];
    require_keys(s, {"path", "format"}, where + ".input.store");
    config.store_input = StoreInput{
        get_string(s, "path", where + ".input.store"),
        store_format_from_string(
            get_string(s, "format", where + ".input.store"),
            where + ".input.store")};
  } else {
    bool seed_given = false;
    config.synthetic =
        population_spec_from_json((*iit)["synthetic"], seed_given);
    config.synthetic_seed_explicit = seed_given;
  }

  if (j.contains("split")) {
    if (has_synth) {
      throw ConfigError(where +
                        ": split applies to store input only; synthetic "
                        "populations come pre-split");
    }
    const json& s = j["split"];
    require_keys(s, {"haystack_docs", "query_docs", "seed"}, where + ".split");
    SplitSpec split;
    split.haystack_docs = get_size(s, "haystack_docs", where + ".split");
    split.query_docs = get_size(s, "query_docs", where + ".split");
    if (s.contains("seed")) split.seed = get_u64(s, "seed", where + ".split");
    config.split = split;
  } else if (has_store) {
    throw ConfigError(where + ": store input requires a \"split\" section");
  }

  if (j.contains("queries")) {
    const json& q = j["queries"];
    require_keys(q, {"mode", "queries_per_author", "docs_per_query", "seed"},
                 where + ".queries");
    const std::string mode = get_string(q, "mode", where + ".queries");
    if (mode == "attribution") {
      config.query_mode = QueryMode::kAttribution;
      if (q.contains("queries_per_author") || q.contains("docs_per_query")) {
        throw ConfigError(where +
                          ".queries: queries_per_author/docs_per_query apply "
                          "to needle_mrr mode only");
      }
    } else if (mode == "needle_mrr") {
      config.query_mode = QueryMode::kNeedleMrr;
      config.queries_per_author =
          get_size(q, "queries_per_author", where + ".queries", 4);
      config.docs_per_query =
          get_size(q, "docs_per_query", where + ".queries", 4);
      if (config.queries_per_author < 1 || config.docs_per_query < 1) {
        throw ConfigError(where + ".queries: counts must be at least 1");
      }
    } else {
      throw ConfigError(where + ".queries: unknown mode \"" + mode + "\"");
    }
    if (q.contains("seed")) {
      config.query_seed = get_u64(q, "seed", where + ".queries");
    }
  }

  if (j.contains("query_authors")) {
    const json& q = j["query_authors"];
    require_keys(q, {"count", "seed"}, where + ".query_authors");
    config.query_author_count =
        get_size(q, "count", where + ".query_authors", 0);
    if (q.contains("seed")) {
      config.query_author_seed = get_u64(q, "seed", where + ".query_authors");
    }
  }

  if (j.contains("ks")) {
    const json& ks = j["ks"];
    if (!ks.is_array() || ks.empty()) {
      throw ConfigError(where + ": ks must be a nonempty array");
    }
    config.ks.clear();
    for (const auto& k : ks) {
      if (!is_nonnegative_integer(k) || k.get<std::size_t>() < 1) {
        throw ConfigError(where + ": ks entries must be positive integers");
      }
      config.ks.push_back(k.get<std::size_t>());
    }
    std::sort(config.ks.begin(), config.ks.end());
    if (std::adjacent_find(config.ks.begin(), config.ks.end()) !=
        config.ks.end()) {
      throw ConfigError(where + ": duplicate entries in ks");
    }
  }

  if (j.contains("exceed")) {
    const json& e = j["exceed"];
    require_keys(e, {"k", "multipliers"}, where + ".exceed");
    config.exceed_k = get_size(e, "k", where + ".exceed", 10);
    if (config.exceed_k < 1) {
      throw ConfigError(where + ".exceed: k must be at least 1");
    }
    if (e.contains("multipliers")) {
      const json& ms = e["multipliers"];
      if (!ms.is_array() || ms.empty()) {
        throw ConfigError(where + ".exceed: multipliers must be a nonempty array");
      }
      config.exceed_multipliers.clear();
      for (const auto& m : ms) {
        if (!m.is_number() || !(m.get<double>() > 0.0)) {
          throw ConfigError(where + ".exceed: multipliers must be positive");
        }
        config.exceed_multipliers.push_back(m.get<double>());
      }
    }
  }

  config.recall_k = get_size(j, "recall_k", where, 8);
  if (config.recall_k < 1) throw ConfigError(where + ": recall_k must be at least 1");
  config.geometry_bins = get_size(j, "geometry_bins", where, 20);
  if (config.geometry_bins < 1) {
    throw ConfigError(where + ": geometry_bins must be at least 1");
  }

  if (j.contains("stats")) {
    const json& s = j["stats"];
    require_keys(s, {"group_size", "alpha", "seed"}, where + ".stats");
    config.stats_group_size = get_size(s, "group_size", where + ".stats", 300);
    if (config.stats_group_size < 1) {
      throw ConfigError(where + ".stats: group_size must be at least 1");
    }
    config.alpha = get_double(s, "alpha", where + ".stats", 0.05);
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
      throw ConfigError(where + ".stats: alpha must lie in (0, 1)");
    }
    if (s.contains("seed")) {
      config.stats_seed = get_u64(s, "seed", where + ".stats");
    }
  }

  config.include_self_hits = get_bool(j, "include_self_hits", where, false);
  config.risk_ratio_all_authors =
      get_bool(j, "risk_ratio_all_authors", where, false);
  config.mean_rank_include_self =
      get_bool(j, "mean_rank_include_self", where, true);
  config.rank_dump_top_k = get_size(j, "rank_dump_top_k", where, 0);
  if (j.contains("output_dir")) {
    config.output_dir = get_string(j, "output_dir", where);
  }
  return config;
}

namespace {

class StageTimer {
 public:
  explicit StageTimer(std::vector<std::pair<std::string, double>>& sink)
      : sink_(sink) {}

  template <typename F>
  auto run(const char* name, F&& fn) -> decltype(fn()) {
    const auto start = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        record(name, start);
      } else {
        auto result = fn();
        record(name, start);
        return result;
      }
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(name) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(std::string(name) + ": " + e.what());
    }
  }

  double elapsed(const std::chrono::steady_clock::time_point& start) const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }

 private:
  void record(const char* name,
              const std::chrono::steady_clock::time_point& start) {
    sink_.emplace_back(name, elapsed(start));
  }

  std::vector<std::pair<std::string, double>>& sink_;
};

json generator_echo(const Generator& generator) {
  json g;
  if (const auto* iso = std::get_if<IsotropicGaussian>(&generator)) {
    g["type"] = "isotropic_gaussian";
    g["mean_norm"] = iso->mean_norm;
    g["sigma"] = iso->sigma;
  } else if (const auto* bands = std::get_if<RadiusBands>(&generator)) {
    g["type"] = "radius_bands";
    json arr = json::array();
    for (const auto& band : bands->bands) {
      arr.push_back({{"fraction", band.fraction},
                     {"radial_offset", band.radial_offset},
                     {"sigma", band.sigma}});
    }
    g["bands"] = std::move(arr);
  } else if (const auto* hubs = std::get_if<PlantedHubs>(&generator)) {
    g["type"] = "planted_hubs";
    g["mean_norm"] = hubs->mean_norm;
    g["sigma"] = hubs->sigma;
    g["hub_fraction"] = hubs->hub_fraction;
    g["hub_pull"] = hubs->hub_pull;
  }
  return g;
}

struct ResolvedSeeds {
  std::uint64_t run = 0;
  std::optional<std::uint64_t> split;
  std::uint64_t query_authors = 0;
  std::uint64_t queries = 0;
  std::uint64_t stats = 0;
};

json config_echo(const RunConfig& config, const ResolvedSeeds& seeds,
                 const PopulationSpec* synth_spec) {
  json c;
  c["label"] = config.label;
  c["seed"] = seeds.run;
  json input;
  if (config.store_input) {
    input["store"] = {
        {"path", config.store_input->path},
        {"format",
         config.store_input->format == StoreFormat::kJsonl ? "jsonl" : "binary"}};
  } else {
    json s;
    s["n_authors"] = synth_spec->n_authors;
    s["dimension"] = synth_spec->dimension;
    s["haystack_docs_per_author"] = synth_spec->haystack_docs_per_author;
    s["query_docs_per_author"] = synth_spec->query_docs_per_author;
    s["doc_noise_sigma"] = synth_spec->doc_noise_sigma;
    s["seed"] = synth_spec->seed;
    s["generator"] = generator_echo(synth_spec->generator);
    if (!synth_spec->mean_direction.empty()) {
      s["mean_direction"] = synth_spec->mean_direction;
    }
    input["synthetic"] = std::move(s);
  }
  c["input"] = std::move(input);
  if (config.split) {
    c["split"] = {{"haystack_docs", config.split->haystack_docs},
                  {"query_docs", config.split->query_docs},
                  {"seed", *seeds.split}};
  }
  json queries;
  queries["mode"] =
      config.query_mode == QueryMode::kAttribution ? "attribution" : "needle_mrr";
  if (config.query_mode == QueryMode::kNeedleMrr) {
    queries["queries_per_author"] = config.queries_per_author;
    queries["docs_per_query"] = config.docs_per_query;
  }
  queries["seed"] = seeds.queries;
  c["queries"] = std::move(queries);
  c["query_authors"] = {{"count", config.query_author_count},
                        {"seed", seeds.query_authors}};
  c["ks"] = config.ks;
  c["exceed"] = {{"k", config.exceed_k},
                 {"multipliers", config.exceed_multipliers}};
  c["recall_k"] = config.recall_k;
  c["geometry_bins"] = config.geometry_bins;
  c["stats"] = {{"group_size", config.stats_group_size},
                {"alpha", config.alpha},
                {"seed", seeds.stats}};
  c["include_self_hits"] = config.include_self_hits;
  c["risk_ratio_all_authors"] = config.risk_ratio_all_authors;
  c["mean_rank_include_self"] = config.mean_rank_include_self;
  c["rank_dump_top_k"] = config.rank_dump_top_k;
  return c;
}

const char* alternative_name(Alternative alt) {
  return alt == Alternative::kGreater ? "greater" : "less";
}

const char* method_name(MwMethod method) {
  switch (method) {
    case MwMethod::kExact:
      return "exact";
    case MwMethod::kApprox:
      return "approx";
    case MwMethod::kAuto:
      break;
  }
  return "auto";
}

}  // namespace

RunResult run(const RunConfig& config, const RunOptions& options) {
  if (options.threads < 1) throw ConfigError("threads must be at least 1");
  if (config.store_input.has_value() == config.synthetic.has_value()) {
    throw ConfigError("config needs exactly one input: store or synthetic");
  }
  const std::string out_dir_str =
      options.out_override.value_or(config.output_dir);
  if (out_dir_str.empty()) {
    throw ConfigError("no output directory: set output_dir or pass --out");
  }

  ResolvedSeeds seeds;
  seeds.run = options.seed_override.value_or(config.seed);
  seeds.query_authors =
      config.query_author_seed.value_or(mix_seed(seeds.run, 2));
  seeds.queries = config.query_seed.value_or(mix_seed(seeds.run, 3));
  seeds.stats = config.stats_seed.value_or(mix_seed(seeds.run, 4));

  std::vector<std::pair<std::string, double>> timings;
  StageTimer stage(timings);

  // --- input: load + split, or generate.
  std::vector<std::string> dropped;
  PopulationSpec synth_spec;
  EmbeddingStore store = stage.run("input", [&]() -> EmbeddingStore {
    if (config.store_input) {
      if (!config.split) {
        throw ConfigError("store input requires a split section");
      }
      seeds.split = config.split->seed.value_or(mix_seed(seeds.run, 1));
      auto loaded = load_store(config.store_input->path,
                               config.store_input->format);
      auto result = split_documents(loaded, config.split->haystack_docs,
                                    config.split->query_docs, *seeds.split);
      dropped = std::move(result.dropped);
      return std::move(result.store);
    }
    synth_spec = *config.synthetic;
    if (!config.synthetic_seed_explicit) synth_spec.seed = seeds.run;
    return generate(synth_spec);
  });

  // --- queries: pick query authors, build query embeddings.
  std::vector<std::string> query_authors;
  std::vector<Query> queries = stage.run("queries", [&] {
    const std::size_t min_docs =
        config.query_mode == QueryMode::kNeedleMrr ? config.docs_per_query : 1;
    auto eligible = store.eligible_query_authors(min_docs);
    if (eligible.empty()) throw DataError("no eligible query authors");
    if (config.query_author_count == 0 ||
        config.query_author_count == eligible.size()) {
      query_authors = std::move(eligible);
    } else if (config.query_author_count > eligible.size()) {
      throw DataError(num_to_string(std::uint64_t(config.query_author_count)) +
                      " query authors requested, only " +
                      num_to_string(std::uint64_t(eligible.size())) +
                      " eligible");
    } else {
      Rng rng(seeds.query_authors);
      auto idx =
          rng.sample_indices(eligible.size(), config.query_author_count);
      std::sort(idx.begin(), idx.end());
      query_authors.reserve(idx.size());
      for (std::size_t i : idx) query_authors.push_back(eligible[i]);
    }
    if (config.query_mode == QueryMode::kNeedleMrr) {
      return sample_queries(store, query_authors, config.queries_per_author,
                            config.docs_per_query, seeds.queries);
    }
    return sample_queries(store, query_authors, 1, kAllQueryDocs,
                          seeds.queries);
  });

  // --- rank every query against the haystack once, keeping the widest
  // slice any later consumer needs.
  std::vector<AuthorEmbedding> haystack;
  RankTable table = stage.run("rank", [&] {
    haystack = build_haystack(store);
    std::size_t slice_k = config.exceed_k;
    for (std::size_t k : config.ks) slice_k = std::max(slice_k, k);
    slice_k = std::max(slice_k, config.rank_dump_top_k);
    RankOptions opt;
    opt.threads = options.threads;
    opt.slice_k = std::min(slice_k, haystack.size());
    return rank_batch_full(queries, haystack, opt);
  });

  const std::int64_t n_h = std::int64_t(haystack.size());
  const std::int64_t n_q = std::int64_t(queries.size());

  // --- scalar metrics and tallies.
  struct KMetrics {
    std::size_t k;
    std::int64_t expected;
    double value;
  };
  std::vector<KMetrics> per_k;
  std::vector<ExceedRow> exceed;
  RiskRatioStats risk;
  Tally exceed_tally;
  double recall = 0.0;
  double mrr = 0.0;
  std::map<std::string, double> author_mrr;
  stage.run("metrics", [&] {
    const auto ranks = needle_ranks(table);
    recall = recall_at_k(ranks, config.recall_k);
    mrr = mean_reciprocal_rank(ranks);
    author_mrr = per_author_mrr(table);
    per_k.reserve(config.ks.size());
    for (std::size_t k : config.ks) {
      const auto tally = tally_topk(table, k, config.include_self_hits);
      per_k.push_back(KMetrics{k, expected_count(std::int64_t(k), n_h, n_q),
                               maui_index(tally)});
    }
    exceed_tally = tally_topk(table, config.exceed_k, config.include_self_hits);
    exceed = exceed_table(exceed_tally, config.exceed_multipliers);
    risk = risk_ratio_stats(exceed_tally, config.risk_ratio_all_authors);
  });

  // --- centroid geometry.
  std::vector<double> distances;
  std::vector<double> distances_norm;
  std::vector<double> mean_ranks;
  std::vector<CurveBin> curve;
  std::vector<HistogramBin> histogram;
  double rho = 0.0;
  stage.run("geometry", [&] {
    const auto c = centroid(haystack);
    distances.reserve(haystack.size());
    for (const auto& a : haystack) {
      distances.push_back(distance_to_centroid(a.vector, c));
    }
    distances_norm = min_max_normalize(distances);
    mean_ranks = mean_rank_per_author(table, config.mean_rank_include_self);
    curve = binned_curve(distances_norm, mean_ranks, config.geometry_bins);
    rho = spearman(distances, mean_ranks);
    histogram = distance_histogram(distances, config.geometry_bins);
  });

  // --- hypothesis tests over MRR-selected groups.
  MrrGroups groups;
  std::vector<HypothesisResult> hypotheses;
  stage.run("stats", [&] {
    groups = select_mrr_groups(author_mrr, config.stats_group_size, seeds.stats);
    std::map<std::string, double> distance_by_author;
    for (std::size_t i = 0; i < table.author_ids.size(); ++i) {
      distance_by_author[table.author_ids[i]] = distances[i];
    }
    hypotheses = run_hypotheses(groups, distance_by_author, config.alpha);
  });

  // --- reports: build everything, then land files all-or-nothing.
  const auto report_start = std::chrono::steady_clock::now();
  stage.run("report", [&] {
    const fs::path out(out_dir_str);
    fs::create_directories(out);
    const fs::path staging = out / ".staging";
    std::error_code ec;
    fs::remove_all(staging, ec);
    fs::create_directories(staging);

    std::vector<std::pair<std::string, std::string>> files;

    {
      std::string s = "metric,value\n";
      s += "recall@" + num_to_string(std::uint64_t(config.recall_k)) + "," +
           num_to_string(recall) + "\n";
      s += "mrr," + num_to_string(mrr) + "\n";
      s += "n_haystack," + num_to_string(n_h) + "\n";
      s += "n_queries," + num_to_string(n_q) + "\n";
      s += "n_query_authors," +
           num_to_string(std::uint64_t(query_authors.size())) + "\n";
      files.emplace_back("effectiveness.csv", std::move(s));
    }
    {
      std::string s = "k,expected_count,maui\n";
      for (const auto& m : per_k) {
        s += num_to_string(std::uint64_t(m.k)) + "," +
             num_to_string(m.expected) + "," + num_to_string(m.value) + "\n";
      }
      files.emplace_back("maui.csv", std::move(s));
    }
    {
      std::string s = "k,expected_count,multiplier,authors_above\n";
      for (const auto& row : exceed) {
        s += num_to_string(std::uint64_t(config.exceed_k)) + "," +
             num_to_string(risk.expected) + "," + num_to_string(row.multiplier) +
             "," + num_to_string(row.count) + "\n";
      }
      files.emplace_back("exceed.csv", std::move(s));
    }
    {
      std::string s =
          "author_id,topk_count,risk_ratio,distance,distance_norm,mean_rank,"
          "mrr\n";
      for (std::size_t i = 0; i < table.author_ids.size(); ++i) {
        const auto& id = table.author_ids[i];
        s += id;
        s += ',';
        s += num_to_string(exceed_tally.counts[i]);
        s += ',';
        s += num_to_string(double(exceed_tally.counts[i]) /
                           double(risk.expected));
        s += ',';
        s += num_to_string(distances[i]);
        s += ',';
        s += num_to_string(distances_norm[i]);
        s += ',';
        s += num_to_string(mean_ranks[i]);
        s += ',';
        const auto it = author_mrr.find(id);
        if (it != author_mrr.end()) s += num_to_string(it->second);
        s += '\n';
      }
      files.emplace_back("authors.csv", std::move(s));
    }
    {
      std::string s = "bin_lo,bin_hi,count,mean_rank\n";
      for (const auto& bin : curve) {
        s += num_to_string(bin.lo) + "," + num_to_string(bin.hi) + "," +
             num_to_string(std::uint64_t(bin.count)) + ",";
        s += bin.count ? num_to_string(bin.mean) : "nan";
        s += '\n';
      }
      files.emplace_back("geometry_curve.csv", std::move(s));
    }
    {
      std::string s = "bin_lo,bin_hi,count\n";
      for (const auto& bin : histogram) {
        s += num_to_string(bin.lo) + "," + num_to_string(bin.hi) + "," +
             num_to_string(std::uint64_t(bin.count)) + "\n";
      }
      files.emplace_back("distance_histogram.csv", std::move(s));
    }
    {
      std::string s = "hypothesis,alternative,n1,n2,u,p,reject,method,degenerate\n";
      for (const auto& h : hypotheses) {
        s += h.id;
        s += ',';
        s += alternative_name(h.alternative);
        s += ',';
        s += num_to_string(std::uint64_t(h.mw.n1));
        s += ',';
        s += num_to_string(std::uint64_t(h.mw.n2));
        s += ',';
        s += num_to_string(h.mw.u);
        s += ',';
        s += num_to_string(h.mw.p);
        s += ',';
        s += h.reject ? '1' : '0';
        s += ',';
        s += method_name(h.mw.method);
        s += ',';
        s += h.mw.degenerate ? '1' : '0';
        s += '\n';
      }
      files.emplace_back("hypotheses.csv", std::move(s));
    }
    if (config.rank_dump_top_k > 0) {
      files.emplace_back("rankings.csv",
                         rank_dump_csv(table, config.rank_dump_top_k));
    }

    {
      json f;
      f["n_haystack"] = n_h;
      f["n_queries"] = n_q;
      f["n_query_authors"] = query_authors.size();
      f["include_self_hits"] = config.include_self_hits;
      f["effectiveness"] = {{"recall_k", config.recall_k},
                            {"recall", recall},
                            {"mrr", mrr}};
      json maui_arr = json::array();
      for (const auto& m : per_k) {
        maui_arr.push_back(
            {{"k", m.k}, {"expected_count", m.expected}, {"value", m.value}});
      }
      f["maui"] = std::move(maui_arr);
      json exceed_rows = json::array();
      for (const auto& row : exceed) {
        exceed_rows.push_back({{"multiplier", row.multiplier},
                               {"authors_above", row.count}});
      }
      f["exceed"] = {{"k", config.exceed_k},
                     {"expected_count", risk.expected},
                     {"rows", std::move(exceed_rows)}};
      f["risk_ratio"] = {{"k", config.exceed_k},
                         {"expected_count", risk.expected},
                         {"population", risk.population},
                         {"all_authors", risk.all_authors},
                         {"max", risk.max},
                         {"mean", risk.mean},
                         {"std", risk.std_dev}};
      files.emplace_back("fairness.json", f.dump(2) + "\n");
    }
    {
      json g;
      g["spearman"] = rho;
      g["bins"] = config.geometry_bins;
      g["mean_rank_include_self"] = config.mean_rank_include_self;
      json authors = json::array();
      for (std::size_t i = 0; i < table.author_ids.size(); ++i) {
        authors.push_back({{"id", table.author_ids[i]},
                           {"distance", distances[i]},
                           {"distance_norm", distances_norm[i]},
                           {"mean_rank", mean_ranks[i]}});
      }
      g["authors"] = std::move(authors);
      json curve_arr = json::array();
      for (const auto& bin : curve) {
        json b = {{"lo", bin.lo}, {"hi", bin.hi}, {"count", bin.count}};
        if (bin.count) {
          b["mean_rank"] = bin.mean;
        } else {
          b["mean_rank"] = nullptr;
        }
        curve_arr.push_back(std::move(b));
      }
      g["curve"] = std::move(curve_arr);
      json hist_arr = json::array();
      for (const auto& bin : histogram) {
        hist_arr.push_back(
            {{"lo", bin.lo}, {"hi", bin.hi}, {"count", bin.count}});
      }
      g["histogram"] = std::move(hist_arr);
      files.emplace_back("geometry.json", g.dump(2) + "\n");
    }
    {
      json h;
      h["alpha"] = config.alpha;
      h["group_size"] = config.stats_group_size;
      h["seed"] = seeds.stats;
      h["groups"] = {{"high", groups.high},
                     {"low", groups.low},
                     {"random", groups.random}};
      json results = json::array();
      for (const auto& r : hypotheses) {
        results.push_back({{"id", r.id},
                           {"alternative", alternative_name(r.alternative)},
                           {"n1", r.mw.n1},
                           {"n2", r.mw.n2},
                           {"u", r.mw.u},
                           {"p", r.mw.p},
                           {"reject", r.reject},
                           {"method", method_name(r.mw.method)},
                           {"degenerate", r.mw.degenerate}});
      }
      h["results"] = std::move(results);
      files.emplace_back("hypotheses.json", h.dump(2) + "\n");
    }
    {
      json m;
      m["tool"] = "maui";
      m["version"] = "0.1.0";
      m["label"] = config.label;
      m["n_haystack"] = n_h;
      m["n_queries"] = n_q;
      m["n_query_authors"] = query_authors.size();
      m["dimension"] = store.dimension();
      m["store_checksum"] = hex_string(store.checksum());
      if (config.store_input) m["dropped_authors"] = dropped;
      json seeds_json;
      seeds_json["run"] = seeds.run;
      if (seeds.split) seeds_json["split"] = *seeds.split;
      seeds_json["query_authors"] = seeds.query_authors;
      seeds_json["queries"] = seeds.queries;
      seeds_json["stats"] = seeds.stats;
      if (config.synthetic) seeds_json["synthetic"] = synth_spec.seed;
      m["seeds"] = std::move(seeds_json);
      m["config"] = config_echo(config, seeds,
                                config.synthetic ? &synth_spec : nullptr);
      json metrics;
      metrics["recall_k"] = config.recall_k;
      metrics["recall"] = recall;
      metrics["mrr"] = mrr;
      metrics["ks"] = config.ks;
      json maui_values = json::array();
      for (const auto& mk : per_k) maui_values.push_back(mk.value);
      metrics["maui"] = std::move(maui_values);
      m["metrics"] = std::move(metrics);
      json report_names = json::array();
      for (const auto& [name, content] : files) {
        (void)content;
        report_names.push_back(name);
      }
      m["reports"] = std::move(report_names);
      files.emplace_back("manifest.json", m.dump(2) + "\n");
    }
    {
      // Wall-clock lives in its own file so every other report stays
      // byte-reproducible.
      json t;
      json stages = json::array();
      for (const auto& [name, secs] : timings) {
        stages.push_back({{"name", name}, {"seconds", secs}});
      }
      stages.push_back({{"name", "report"},
                        {"seconds", stage.elapsed(report_start)}});
      t["stages"] = std::move(stages);
      files.emplace_back("timings.json", t.dump(2) + "\n");
    }

    try {
      for (const auto& [name, content] : files) {
        std::ofstream f(staging / name, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("cannot write " + (staging / name).string());
        f << content;
        f.flush();
        if (!f) throw DataError("write failed for " + name);
      }
    } catch (...) {
      fs::remove_all(staging, ec);
      throw;
    }
    for (const auto& [name, content] : files) {
      (void)content;
      fs::rename(staging / name, out / name);
    }
    fs::remove_all(staging, ec);
  });

  RunResult result;
  result.output_dir = out_dir_str;
  result.n_haystack = std::size_t(n_h);
  result.n_queries = std::size_t(n_q);
  result.recall = recall;
  result.mrr = mrr;
  for (const auto& m : per_k) result.maui_by_k.emplace_back(m.k, m.value);
  return result;
}

CompareResult compare(const std::vector<std::string>& manifest_paths) {
  if (manifest_paths.empty()) {
    throw ConfigError("compare needs at least one manifest");
  }
  CompareResult result;
  for (const auto& path : manifest_paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    json m;
    try {
      m = json::parse(in);
    } catch (const json::exception& e) {
      throw DataError(path + ": " + e.what());
    }
    for (const char* key : {"label", "n_haystack", "n_queries", "metrics"}) {
      if (!m.contains(key)) {
        throw DataError(path + ": manifest missing \"" + std::string(key) +
                        "\"");
      }
    }
    const json& metrics = m["metrics"];
    for (const char* key : {"recall_k", "recall", "mrr", "ks", "maui"}) {
      if (!metrics.contains(key)) {
        throw DataError(path + ": manifest metrics missing \"" +
                        std::string(key) + "\"");
      }
    }
    CompareRow row;
    row.label = m["label"].get<std::string>();
    row.n_haystack = m["n_haystack"].get<std::size_t>();
    row.n_queries = m["n_queries"].get<std::size_t>();
    row.recall = metrics["recall"].get<double>();
    row.mrr = metrics["mrr"].get<double>();
    std::vector<std::size_t> ks = metrics["ks"].get<std::vector<std::size_t>>();
    row.maui = metrics["maui"].get<std::vector<double>>();
    if (row.maui.size() != ks.size()) {
      throw DataError(path + ": maui values do not align with ks");
    }
    const std::size_t recall_k = metrics["recall_k"].get<std::size_t>();
    if (result.rows.empty()) {
      result.recall_k = recall_k;
      result.ks = std::move(ks);
    } else if (ks != result.ks || recall_k != result.recall_k ||
               row.n_haystack != result.rows.front().n_haystack ||
               row.n_queries != result.rows.front().n_queries) {
      throw DataError(path +
                      ": run not comparable (population sizes, ks and "
                      "recall_k must all match)");
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::string compare_csv(const CompareResult& result) {
  std::string s = "run,n_haystack,n_queries,recall@" +
                  num_to_string(std::uint64_t(result.recall_k)) + ",mrr";
  for (std::size_t k : result.ks) {
    s += ",maui@" + num_to_string(std::uint64_t(k));
  }
  s += '\n';
  for (const auto& row : result.rows) {
    s += row.label;
    s += ',';
    s += num_to_string(std::uint64_t(row.n_haystack));
    s += ',';
    s += num_to_string(std::uint64_t(row.n_queries));
    s += ',';
    s += num_to_string(row.recall);
    s += ',';
    s += num_to_string(row.mrr);
    for (double v : row.maui) {
      s += ',';
      s += num_to_string(v);
    }
    s += '\n';
  }
  return s;
}

}  // namespace maui
