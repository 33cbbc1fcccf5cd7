#include "maui/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "maui/error.hpp"
#include "maui/rng.hpp"
#include "maui/util.hpp"

namespace maui {

namespace {

constexpr std::size_t kAutoExactLimit = 20;
constexpr std::size_t kHardExactLimit = 25;

void check_sample(std::span<const double> s, const char* name) {
  if (s.empty()) {
    throw ConfigError(std::string("mann_whitney_u: empty sample ") + name);
  }
  for (double x : s) {
    if (!std::isfinite(x)) {
      throw DataError(std::string("mann_whitney_u: non-finite value in ") +
                      name);
    }
  }
}

double exact_p(const std::vector<double>& pooled_ranks, std::size_t n1,
               double u_observed, Alternative alternative) {
  const std::size_t n = pooled_ranks.size();
  const double base = 0.5 * double(n1) * double(n1 + 1);
  std::vector<char> mask(n, 0);
  std::fill(mask.begin(), mask.begin() + std::ptrdiff_t(n1), 1);
  // prev_permutation over the mask walks every n1-subset exactly once.
  std::uint64_t total = 0;
  std::uint64_t hits = 0;
  do {
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) rank_sum += pooled_ranks[i];
    }
    const double u = rank_sum - base;
    ++total;
    if (alternative == Alternative::kGreater) {
      if (u >= u_observed - 1e-9) ++hits;
    } else {
      if (u <= u_observed + 1e-9) ++hits;
    }
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return double(hits) / double(total);
}

double approx_p(const std::vector<double>& pooled, std::size_t n1,
                std::size_t n2, double u_observed, Alternative alternative) {
  const double n = double(pooled.size());
  const double mu = 0.5 * double(n1) * double(n2);

  // Tie correction over the pooled values.
  std::vector<double> sorted(pooled);
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = double(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  const double var = double(n1) * double(n2) / 12.0 *
                     ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) return 1.0;  // fully tied; caller handles degenerate
  const double sigma = std::sqrt(var);

  double p;
  if (alternative == Alternative::kGreater) {
    const double z = (u_observed - mu - 0.5) / sigma;
    p = 0.5 * std::erfc(z / std::numbers::sqrt2);
  } else {
    const double z = (u_observed - mu + 0.5) / sigma;
    p = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace

MwResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                        Alternative alternative, MwMethod method) {
  check_sample(a, "a");
  check_sample(b, "b");
  const std::size_t n1 = a.size();
  const std::size_t n2 = b.size();
  const std::size_t n = n1 + n2;

  std::vector<double> pooled;
  pooled.reserve(n);
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());

  MwResult result;
  result.n1 = n1;
  result.n2 = n2;

  const auto [lo, hi] = std::minmax_element(pooled.begin(), pooled.end());
  if (*lo == *hi) {
    result.u = 0.5 * double(n1) * double(n2);
    result.p = 1.0;
    result.degenerate = true;
    result.method =
        method == MwMethod::kAuto
            ? (n <= kAutoExactLimit ? MwMethod::kExact : MwMethod::kApprox)
            : method;
    return result;
  }

  const auto ranks = midranks(pooled);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n1; ++i) rank_sum += ranks[i];
  result.u = rank_sum - 0.5 * double(n1) * double(n1 + 1);

  MwMethod resolved = method;
  if (resolved == MwMethod::kAuto) {
    resolved = n <= kAutoExactLimit ? MwMethod::kExact : MwMethod::kApprox;
  }
  if (resolved == MwMethod::kExact && n > kHardExactLimit) {
    throw ConfigError("exact Mann-Whitney limited to " +
                      num_to_string(std::uint64_t(kHardExactLimit)) +
                      " pooled values, got " + num_to_string(std::uint64_t(n)));
  }
  result.method = resolved;
  result.p = resolved == MwMethod::kExact
                 ? exact_p(ranks, n1, result.u, alternative)
                 : approx_p(pooled, n1, n2, result.u, alternative);
  return result;
}

MrrGroups select_mrr_groups(const std::map<std::string, double>& mrr,
                            std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("group size must be at least 1");
  if (mrr.size() < 2 * n) {
    throw ConfigError("need at least " + num_to_string(std::uint64_t(2 * n)) +
                      " authors for disjoint groups of " +
                      num_to_string(std::uint64_t(n)) + ", have " +
                      num_to_string(std::uint64_t(mrr.size())));
  }
  std::vector<std::pair<double, std::string>> by_mrr;
  by_mrr.reserve(mrr.size());
  for (const auto& [id, value] : mrr) by_mrr.emplace_back(value, id);
  std::sort(by_mrr.begin(), by_mrr.end());

  MrrGroups groups;
  groups.low.reserve(n);
  groups.high.reserve(n);
  for (std::size_t i = 0; i < n; ++i) groups.low.push_back(by_mrr[i].second);
  for (std::size_t i = by_mrr.size() - n; i < by_mrr.size(); ++i) {
    groups.high.push_back(by_mrr[i].second);
  }

  Rng rng(seed);
  auto picked = rng.sample_indices(by_mrr.size(), n);
  groups.random.reserve(n);
  for (std::size_t i : picked) groups.random.push_back(by_mrr[i].second);
  std::sort(groups.random.begin(), groups.random.end());
  return groups;
}

std::vector<HypothesisResult> run_hypotheses(
    const MrrGroups& groups,
    const std::map<std::string, double>& distance_by_author, double alpha,
    MwMethod method) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("alpha must lie in (0, 1)");
  }
  auto gather = [&](const std::vector<std::string>& ids) {
    std::vector<double> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
      const auto it = distance_by_author.find(id);
      if (it == distance_by_author.end()) {
        throw DataError("no centroid distance for author " + id);
      }
      out.push_back(it->second);
    }
    return out;
  };
  const auto high = gather(groups.high);
  const auto low = gather(groups.low);
  const auto random = gather(groups.random);

  struct Plan {
    const char* id;
    const std::vector<double>* a;
    const std::vector<double>* b;
    Alternative alt;
  };
  const Plan plans[] = {
      {"high_vs_low", &high, &low, Alternative::kGreater},
      {"high_vs_random", &high, &random, Alternative::kGreater},
      {"low_vs_random", &low, &random, Alternative::kLess},
  };

  std::vector<HypothesisResult> results;
  results.reserve(3);
  for (const auto& plan : plans) {
    HypothesisResult r;
    r.id = plan.id;
    r.alternative = plan.alt;
    r.mw = mann_whitney_u(*plan.a, *plan.b, plan.alt, method);
    r.reject = r.mw.p < alpha;
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace maui
