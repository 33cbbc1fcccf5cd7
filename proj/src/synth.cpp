#include "maui/synth.hpp"

#include <algorithm>
#include <cmath>

#include "maui/rng.hpp"
#include "maui/util.hpp"

namespace maui {

namespace {

std::string padded_id(const char* prefix, std::size_t i, std::size_t count) {
  std::size_t width = 1;
  for (std::size_t v = count > 0 ? count - 1 : 0; v >= 10; v /= 10) ++width;
  std::string digits = num_to_string(std::uint64_t(i));
  std::string out(prefix);
  out.append(width > digits.size() ? width - digits.size() : 0, '0');
  out += digits;
  return out;
}

std::vector<double> resolve_mean_direction(const PopulationSpec& spec) {
  if (spec.mean_direction.empty()) {
    std::vector<double> mu(spec.dimension, 0.0);
    mu[0] = 1.0;
    return mu;
  }
  if (spec.mean_direction.size() != spec.dimension) {
    throw ConfigError("mean_direction length does not match dimension");
  }
  double n2 = 0.0;
  for (double x : spec.mean_direction) n2 += x * x;
  const double norm = std::sqrt(n2);
  if (norm < 1e-12) throw ConfigError("mean_direction must be nonzero");
  std::vector<double> mu(spec.mean_direction);
  for (double& x : mu) x /= norm;
  return mu;
}

std::size_t resolve_hub_count(const PlantedHubs& hubs, std::size_t n_authors) {
  if (!(hubs.hub_fraction > 0.0 && hubs.hub_fraction < 1.0)) {
    throw ConfigError("hub_fraction must lie in (0, 1)");
  }
  const auto n_hubs =
      std::size_t(std::llround(hubs.hub_fraction * double(n_authors)));
  if (n_hubs < 1 || n_hubs >= n_authors) {
    throw ConfigError("hub_fraction leaves no hubs or no non-hubs");
  }
  return n_hubs;
}

void validate(const PopulationSpec& spec) {
  if (spec.n_authors < 2) throw ConfigError("need at least 2 authors");
  if (spec.dimension < 2) throw ConfigError("dimension must be at least 2");
  if (spec.haystack_docs_per_author < 1) {
    throw ConfigError("haystack_docs_per_author must be at least 1");
  }
  if (!(spec.doc_noise_sigma >= 0.0)) {
    throw ConfigError("doc_noise_sigma must be non-negative");
  }
  if (const auto* iso = std::get_if<IsotropicGaussian>(&spec.generator)) {
    if (!(iso->sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (!(iso->mean_norm >= 0.0)) {
      throw ConfigError("mean_norm must be non-negative");
    }
  } else if (const auto* bands = std::get_if<RadiusBands>(&spec.generator)) {
    if (bands->bands.empty()) throw ConfigError("need at least one band");
    double total = 0.0;
    for (const auto& band : bands->bands) {
      if (!(band.fraction >= 0.0)) {
        throw ConfigError("band fraction must be non-negative");
      }
      if (!(band.radial_offset >= 0.0 && band.radial_offset <= 2.0)) {
        throw ConfigError("band radial_offset must lie in [0, 2]");
      }
      if (!(band.sigma > 0.0)) throw ConfigError("band sigma must be positive");
      total += band.fraction;
    }
    if (std::fabs(total - 1.0) > 1e-9) {
      throw ConfigError("band fractions must sum to 1");
    }
  } else if (const auto* hubs = std::get_if<PlantedHubs>(&spec.generator)) {
    if (!(hubs->sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (!(hubs->mean_norm >= 0.0)) {
      throw ConfigError("mean_norm must be non-negative");
    }
    if (!(hubs->hub_pull >= 0.0 && hubs->hub_pull <= 1.0)) {
      throw ConfigError("hub_pull must lie in [0, 1]");
    }
    resolve_hub_count(*hubs, spec.n_authors);
  }
}

// Random unit vector orthogonal to mu.
std::vector<double> orthogonal_direction(Rng& rng,
                                         const std::vector<double>& mu) {
  for (;;) {
    auto g = rng.normal_vector(mu.size());
    double proj = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) proj += g[i] * mu[i];
    double n2 = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      g[i] -= proj * mu[i];
      n2 += g[i] * g[i];
    }
    const double norm = std::sqrt(n2);
    if (norm >= 1e-9) {
      for (double& x : g) x /= norm;
      return g;
    }
  }
}

// Authors per band by cumulative rounding: exact total, deterministic.
std::vector<std::size_t> band_boundaries(const RadiusBands& bands,
                                         std::size_t n) {
  std::vector<std::size_t> bounds;
  bounds.reserve(bands.bands.size() + 1);
  bounds.push_back(0);
  double cum = 0.0;
  for (const auto& band : bands.bands) {
    cum += band.fraction;
    bounds.push_back(std::size_t(std::llround(cum * double(n))));
  }
  bounds.back() = n;
  return bounds;
}

std::vector<double> author_latent(const PopulationSpec& spec,
                                  const std::vector<double>& mu,
                                  const std::vector<std::size_t>& bounds,
                                  std::size_t author_index, std::size_t n_hubs,
                                  Rng& rng) {
  const std::size_t d = spec.dimension;
  std::vector<double> latent(d, 0.0);
  if (const auto* iso = std::get_if<IsotropicGaussian>(&spec.generator)) {
    const auto g = rng.normal_vector(d);
    for (std::size_t i = 0; i < d; ++i) {
      latent[i] = iso->mean_norm * mu[i] + iso->sigma * g[i];
    }
  } else if (const auto* bands = std::get_if<RadiusBands>(&spec.generator)) {
    std::size_t b = 0;
    while (b + 1 < bounds.size() - 1 && author_index >= bounds[b + 1]) ++b;
    const RadiusBand& band = bands->bands[b];
    const double cos_a = 1.0 - band.radial_offset;
    const double sin_a = std::sqrt(std::max(0.0, 1.0 - cos_a * cos_a));
    const auto u = orthogonal_direction(rng, mu);
    const auto g = rng.normal_vector(d);
    for (std::size_t i = 0; i < d; ++i) {
      latent[i] = cos_a * mu[i] + sin_a * u[i] + band.sigma * g[i];
    }
  } else {
    const auto& hubs = std::get<PlantedHubs>(spec.generator);
    const auto g = rng.normal_vector(d);
    for (std::size_t i = 0; i < d; ++i) {
      latent[i] = hubs.mean_norm * mu[i] + hubs.sigma * g[i];
    }
    if (author_index < n_hubs) {
      for (std::size_t i = 0; i < d; ++i) {
        latent[i] = (1.0 - hubs.hub_pull) * latent[i] +
                    hubs.hub_pull * hubs.mean_norm * mu[i];
      }
    }
  }
  return latent;
}

}  // namespace

EmbeddingStore generate(const PopulationSpec& spec) {
  validate(spec);
  const auto mu = resolve_mean_direction(spec);
  const std::size_t docs_per_author =
      spec.haystack_docs_per_author + spec.query_docs_per_author;

  std::vector<std::size_t> bounds;
  if (const auto* bands = std::get_if<RadiusBands>(&spec.generator)) {
    bounds = band_boundaries(*bands, spec.n_authors);
  }
  std::size_t n_hubs = 0;
  if (const auto* hubs = std::get_if<PlantedHubs>(&spec.generator)) {
    n_hubs = resolve_hub_count(*hubs, spec.n_authors);
  }

  std::vector<DocumentEmbedding> docs;
  docs.reserve(spec.n_authors * docs_per_author);
  for (std::size_t a = 0; a < spec.n_authors; ++a) {
    const std::string author_id = padded_id("a", a, spec.n_authors);
    Rng rng(mix_seed(spec.seed, fnv1a(author_id)));
    const auto latent = author_latent(spec, mu, bounds, a, n_hubs, rng);
    for (std::size_t j = 0; j < docs_per_author; ++j) {
      std::vector<double> v(latent);
      if (spec.doc_noise_sigma > 0.0) {
        const auto g = rng.normal_vector(spec.dimension);
        for (std::size_t i = 0; i < spec.dimension; ++i) {
          v[i] += spec.doc_noise_sigma * g[i];
        }
      }
      double n2 = 0.0;
      for (double x : v) n2 += x * x;
      const double norm = std::sqrt(n2);
      if (norm < 1e-12) {
        throw DataError("degenerate synthetic document for author " +
                        author_id);
      }
      for (double& x : v) x /= norm;
      docs.push_back(DocumentEmbedding{
          author_id, padded_id("d", j, docs_per_author), std::move(v)});
    }
  }

  auto store = EmbeddingStore::from_documents(std::move(docs));
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>>
      splits(spec.n_authors);
  for (auto& [haystack, query] : splits) {
    for (std::size_t j = 0; j < spec.haystack_docs_per_author; ++j) {
      haystack.push_back(j);
    }
    for (std::size_t j = 0; j < spec.query_docs_per_author; ++j) {
      query.push_back(spec.haystack_docs_per_author + j);
    }
  }
  return store.with_split(splits);
}

std::vector<std::string> hub_author_ids(const PopulationSpec& spec) {
  const auto* hubs = std::get_if<PlantedHubs>(&spec.generator);
  if (hubs == nullptr) {
    throw ConfigError("population has no planted-hub generator");
  }
  const std::size_t n_hubs = resolve_hub_count(*hubs, spec.n_authors);
  std::vector<std::string> ids;
  ids.reserve(n_hubs);
  for (std::size_t a = 0; a < n_hubs; ++a) {
    ids.push_back(padded_id("a", a, spec.n_authors));
  }
  return ids;
}

PlantedResult planted_unfairness(const PopulationSpec& base,
                                 double hub_fraction, double hub_pull) {
  const auto* iso = std::get_if<IsotropicGaussian>(&base.generator);
  if (iso == nullptr) {
    throw ConfigError(
        "planted_unfairness needs an isotropic_gaussian baseline");
  }
  PopulationSpec planted = base;
  planted.generator =
      PlantedHubs{iso->mean_norm, iso->sigma, hub_fraction, hub_pull};
  PlantedResult result{generate(planted), hub_author_ids(planted)};
  return result;
}

}  // namespace maui
