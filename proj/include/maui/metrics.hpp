#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "maui/ranking.hpp"

namespace maui {

// Expected number of top-k appearances per haystack author under an even
// spread: ceil(k * n_queries / n_haystack), exact integer arithmetic.
std::int64_t expected_count(std::int64_t k, std::int64_t n_haystack,
                            std::int64_t n_queries);

// c_j^k: how many query top-k lists each haystack author appears in.
struct Tally {
  std::size_t k = 0;
  bool include_self_hits = false;
  std::size_t n_queries = 0;
  std::vector<std::string> author_ids;  // haystack order, ascending
  std::vector<std::int64_t> counts;     // aligned with author_ids
};

// Counts appearances in the first min(k, N_h) ranked positions of every
// query. A query's own author is skipped unless include_self_hits, so the
// tally measures exposure to misattribution, not retrieval of oneself.
Tally tally_topk(const RankTable& table, std::size_t k,
                 bool include_self_hits);

// Misattribution concentration in [0, 1]: 0 when no author exceeds the
// even-spread expectation, 1 when k authors absorb every top-k slot.
//   sum_j max(0, c_j - E_k) / (k * (N_q - E_k))
double maui_index(const Tally& tally);

double recall_at_k(std::span<const std::uint32_t> needle_ranks, std::size_t k);
double mean_reciprocal_rank(std::span<const std::uint32_t> needle_ranks);

// MRR of each author's own queries, keyed by author id.
std::map<std::string, double> per_author_mrr(const RankTable& table);

struct ExceedRow {
  double multiplier;
  std::int64_t count;  // authors with c_j strictly above multiplier * E_k
};
std::vector<ExceedRow> exceed_table(const Tally& tally,
                                    std::span<const double> multipliers);

// Distribution of u_j = c_j / E_k over a population of authors: either all
// of them or (default) only those appearing in at least one top-k.
struct RiskRatioStats {
  double max = 0.0;
  double mean = 0.0;
  double std_dev = 0.0;  // population standard deviation
  std::size_t population = 0;
  std::int64_t expected = 0;  // E_k used as denominator
  bool all_authors = false;
};
RiskRatioStats risk_ratio_stats(const Tally& tally, bool all_authors);

}  // namespace maui
