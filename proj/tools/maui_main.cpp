#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "maui/pipeline.hpp"
#include "maui/store.hpp"
#include "maui/synth.hpp"
#include "maui/util.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw maui::ConfigError("cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw maui::ConfigError(path + ": " + e.what());
  }
}

std::string need_string(const json& j, const char* key,
                        const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw maui::ConfigError(where + ": missing or non-string \"" + key + "\"");
  }
  return it->get<std::string>();
}

struct StoreTarget {
  std::string path;
  maui::StoreFormat format;
};

StoreTarget parse_target(const json& j, const std::string& where) {
  maui::require_keys(j, {"path", "format"}, where);
  return StoreTarget{
      need_string(j, "path", where),
      maui::store_format_from_string(need_string(j, "format", where), where)};
}

int do_ingest(const std::string& config_path) {
  const json c = load_config(config_path);
  maui::require_keys(c, {"input", "output"}, "config");
  if (!c.contains("input") || !c.contains("output")) {
    throw maui::ConfigError("config: needs \"input\" and \"output\"");
  }
  const auto input = parse_target(c["input"], "config.input");
  const auto output = parse_target(c["output"], "config.output");

  const auto store = maui::load_store(input.path, input.format);
  maui::write_store(store, output.path, output.format);
  std::cout << "ingested " << store.author_count() << " authors, "
            << store.document_count() << " documents, dimension "
            << store.dimension() << "\n"
            << "checksum " << maui::hex_string(store.checksum()) << "\n"
            << "wrote " << output.path << "\n";
  return 0;
}

int do_synth(const std::string& config_path,
             std::optional<std::uint64_t> seed) {
  const json c = load_config(config_path);
  maui::require_keys(c, {"spec", "output"}, "config");
  if (!c.contains("spec") || !c.contains("output")) {
    throw maui::ConfigError("config: needs \"spec\" and \"output\"");
  }
  bool seed_given = false;
  auto spec = maui::population_spec_from_json(c["spec"], seed_given);
  if (seed) spec.seed = *seed;
  const auto output = parse_target(c["output"], "config.output");

  const auto store = maui::generate(spec);
  maui::write_store(store, output.path, output.format);
  std::cout << "generated " << store.author_count() << " authors, "
            << store.document_count() << " documents, dimension "
            << store.dimension() << " (seed " << spec.seed << ")\n"
            << "checksum " << maui::hex_string(store.checksum()) << "\n"
            << "wrote " << output.path << "\n";
  return 0;
}

int do_run(const std::string& config_path, std::optional<std::string> out,
           std::optional<std::uint64_t> seed, int threads) {
  const auto config = maui::run_config_from_json(load_config(config_path));
  maui::RunOptions options;
  options.threads = threads;
  options.seed_override = seed;
  options.out_override = std::move(out);

  const auto result = maui::run(config, options);
  std::cout << "haystack " << result.n_haystack << " authors, "
            << result.n_queries << " queries\n"
            << "recall " << maui::num_to_string(result.recall) << ", mrr "
            << maui::num_to_string(result.mrr) << "\n";
  for (const auto& [k, value] : result.maui_by_k) {
    std::cout << "maui@" << k << " " << maui::num_to_string(value) << "\n";
  }
  std::cout << "wrote " << result.output_dir << "\n";
  return 0;
}

int do_compare(const std::string& config_path,
               std::optional<std::string> out) {
  const json c = load_config(config_path);
  maui::require_keys(c, {"manifests"}, "config");
  const auto it = c.find("manifests");
  if (it == c.end() || !it->is_array() || it->empty()) {
    throw maui::ConfigError(
        "config: \"manifests\" must be a nonempty array of paths");
  }
  std::vector<std::string> paths;
  for (const auto& p : *it) {
    if (!p.is_string()) {
      throw maui::ConfigError("config: manifest entries must be strings");
    }
    paths.push_back(p.get<std::string>());
  }

  const auto result = maui::compare(paths);
  const auto csv = maui::compare_csv(result);
  if (out) {
    fs::create_directories(*out);
    const fs::path target = fs::path(*out) / "comparison.csv";
    std::ofstream f(target, std::ios::binary | std::ios::trunc);
    if (!f) throw maui::DataError("cannot write " + target.string());
    f << csv;
    if (!f) throw maui::DataError("write failed for " + target.string());
    std::cout << "wrote " << target.string() << "\n";
  } else {
    std::cout << csv;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "misattribution-risk evaluation for embed-and-rank authorship "
      "attribution"};
  app.require_subcommand(1);

  std::string ingest_config;
  auto* ingest = app.add_subcommand(
      "ingest", "validate a store and convert it between formats");
  ingest->add_option("--config", ingest_config, "ingest config (JSON)")
      ->required();

  std::string synth_config;
  std::optional<std::uint64_t> synth_seed;
  auto* synth = app.add_subcommand(
      "synth", "generate a synthetic population store");
  synth->add_option("--config", synth_config, "population config (JSON)")
      ->required();
  synth->add_option("--seed", synth_seed, "override the population seed");

  std::string run_config;
  std::optional<std::string> run_out;
  std::optional<std::uint64_t> run_seed;
  int run_threads = 1;
  auto* run = app.add_subcommand(
      "run", "execute an evaluation run and write its reports");
  run->add_option("--config", run_config, "run config (JSON)")->required();
  run->add_option("--out", run_out, "output directory (overrides config)");
  run->add_option("--seed", run_seed, "override the run seed");
  run->add_option("--threads", run_threads, "worker threads for ranking")
      ->check(CLI::PositiveNumber);

  std::string compare_config;
  std::optional<std::string> compare_out;
  auto* compare = app.add_subcommand(
      "compare", "tabulate headline metrics across run manifests");
  compare->add_option("--config", compare_config, "compare config (JSON)")
      ->required();
  compare->add_option("--out", compare_out,
                      "directory for comparison.csv (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (ingest->parsed()) return do_ingest(ingest_config);
    if (synth->parsed()) return do_synth(synth_config, synth_seed);
    if (run->parsed()) return do_run(run_config, run_out, run_seed, run_threads);
    if (compare->parsed()) return do_compare(compare_config, compare_out);
    return 1;
  } catch (const maui::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const maui::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
