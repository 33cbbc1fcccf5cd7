#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "maui/store.hpp"

namespace maui {

// Latent author vectors mean_norm * mu + sigma * g around a common
// direction mu; the fair baseline.
struct IsotropicGaussian {
  double mean_norm = 1.0;
  double sigma = 0.5;
};

// Authors placed at fixed angular offsets from mu: cos(angle) = 1 - offset,
// one band per entry, fractions summing to 1. Small sigma jitters within
// the band. Produces multimodal centroid-distance histograms.
struct RadiusBand {
  double fraction = 0.0;
  double radial_offset = 0.0;  // target centroid distance in [0, 2]
  double sigma = 0.0;
};

struct RadiusBands {
  std::vector<RadiusBand> bands;
};

// Isotropic population where a fraction of authors is pulled toward the
// population mean, manufacturing over-retrieved hub authors.
struct PlantedHubs {
  double mean_norm = 1.0;
  double sigma = 0.5;
  double hub_fraction = 0.05;
  double hub_pull = 0.9;
};

using Generator = std::variant<IsotropicGaussian, RadiusBands, PlantedHubs>;

struct PopulationSpec {
  std::size_t n_authors = 0;
  std::size_t dimension = 0;
  std::size_t haystack_docs_per_author = 0;
  std::size_t query_docs_per_author = 0;
  double doc_noise_sigma = 0.0;
  std::uint64_t seed = 0;
  Generator generator;
  // Unit direction of the population mean; empty means the first axis.
  std::vector<double> mean_direction;
};

// Deterministic population: per-author streams keyed on (seed, author id),
// documents = unit-normalized latent + doc noise. The store comes back
// pre-split: the first haystack_docs_per_author documents of each author
// form the haystack split, the rest the query split.
EmbeddingStore generate(const PopulationSpec& spec);

// Author ids that the planted-hub generator turns into hubs (the first
// round(hub_fraction * n) by id).
std::vector<std::string> hub_author_ids(const PopulationSpec& spec);

struct PlantedResult {
  EmbeddingStore store;
  std::vector<std::string> hub_ids;
};

// Re-generates an isotropic population with hubs planted on top, keeping
// every other parameter; the unfair twin of a fair baseline.
PlantedResult planted_unfairness(const PopulationSpec& base,
                                 double hub_fraction, double hub_pull);

}  // namespace maui
