#include "maui/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "maui/error.hpp"
#include "maui/util.hpp"

namespace maui {

std::int64_t expected_count(std::int64_t k, std::int64_t n_haystack,
                            std::int64_t n_queries) {
  if (k < 1) throw ConfigError("k must be at least 1");
  if (n_haystack < 1) throw ConfigError("haystack must be nonempty");
  if (n_queries < 1) throw ConfigError("query set must be nonempty");
  if (k > n_haystack) {
    throw ConfigError("k (" + num_to_string(k) + ") exceeds haystack size (" +
                      num_to_string(n_haystack) + ")");
  }
  // ceil(k * n_q / n_h) without ever leaving integer arithmetic.
  return (k * n_queries + n_haystack - 1) / n_haystack;
}

Tally tally_topk(const RankTable& table, std::size_t k,
                 bool include_self_hits) {
  if (k < 1) throw ConfigError("k must be at least 1");
  if (table.rows.empty()) throw DataError("tally over zero queries");
  const std::size_t n = table.author_ids.size();
  const std::size_t kk = std::min(k, n);

  Tally tally;
  tally.k = k;
  tally.include_self_hits = include_self_hits;
  tally.n_queries = table.rows.size();
  tally.author_ids = table.author_ids;
  tally.counts.assign(n, 0);

  for (const auto& row : table.rows) {
    if (row.top.size() >= kk) {
      for (std::size_t r = 0; r < kk; ++r) {
        const std::uint32_t a = row.top[r].author;
        if (!include_self_hits && table.author_ids[a] == row.true_author_id) {
          continue;
        }
        ++tally.counts[a];
      }
    } else if (row.ranks.size() == n) {
      for (std::size_t a = 0; a < n; ++a) {
        if (row.ranks[a] > kk) continue;
        if (!include_self_hits && table.author_ids[a] == row.true_author_id) {
          continue;
        }
        ++tally.counts[a];
      }
    } else {
      throw DataError("query " + row.query_id + ": captured slice (" +
                      num_to_string(std::uint64_t(row.top.size())) +
                      ") shorter than k");
    }
  }
  return tally;
}

double maui_index(const Tally& tally) {
  const std::int64_t k = std::int64_t(tally.k);
  const std::int64_t n_h = std::int64_t(tally.author_ids.size());
  const std::int64_t n_q = std::int64_t(tally.n_queries);
  const std::int64_t expected = expected_count(k, n_h, n_q);
  if (n_q <= expected) {
    throw DataError(
        "too few queries to measure concentration: N_q <= E_k (" +
        num_to_string(n_q) + " <= " + num_to_string(expected) + ")");
  }
  std::int64_t over = 0;
  for (std::int64_t c : tally.counts) {
    if (c > expected) over += c - expected;
  }
  return double(over) / double(k * (n_q - expected));
}

double recall_at_k(std::span<const std::uint32_t> needle_ranks,
                   std::size_t k) {
  if (k < 1) throw ConfigError("k must be at least 1");
  if (needle_ranks.empty()) throw DataError("recall over zero queries");
  std::size_t hits = 0;
  for (std::uint32_t r : needle_ranks) {
    if (r >= 1 && r <= k) ++hits;
  }
  return double(hits) / double(needle_ranks.size());
}

double mean_reciprocal_rank(std::span<const std::uint32_t> needle_ranks) {
  if (needle_ranks.empty()) throw DataError("MRR over zero queries");
  double sum = 0.0;
  for (std::uint32_t r : needle_ranks) {
    if (r == 0) throw DataError("unresolved needle rank");
    sum += 1.0 / double(r);
  }
  return sum / double(needle_ranks.size());
}

std::map<std::string, double> per_author_mrr(const RankTable& table) {
  if (table.rows.empty()) throw DataError("MRR over zero queries");
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& row : table.rows) {
    acc[row.true_author_id].first += reciprocal_rank(row);
    acc[row.true_author_id].second += 1;
  }
  std::map<std::string, double> out;
  for (const auto& [id, sum_count] : acc) {
    out[id] = sum_count.first / double(sum_count.second);
  }
  return out;
}

std::vector<ExceedRow> exceed_table(const Tally& tally,
                                    std::span<const double> multipliers) {
  const std::int64_t expected =
      expected_count(std::int64_t(tally.k), std::int64_t(tally.author_ids.size()),
                     std::int64_t(tally.n_queries));
  std::vector<ExceedRow> out;
  out.reserve(multipliers.size());
  for (double m : multipliers) {
    if (!(m > 0.0)) throw ConfigError("exceed multiplier must be positive");
    std::int64_t n = 0;
    for (std::int64_t c : tally.counts) {
      if (double(c) > m * double(expected)) ++n;
    }
    out.push_back(ExceedRow{m, n});
  }
  return out;
}

RiskRatioStats risk_ratio_stats(const Tally& tally, bool all_authors) {
  const std::int64_t expected =
      expected_count(std::int64_t(tally.k), std::int64_t(tally.author_ids.size()),
                     std::int64_t(tally.n_queries));
  std::vector<double> u;
  u.reserve(tally.counts.size());
  for (std::int64_t c : tally.counts) {
    if (all_authors || c > 0) u.push_back(double(c) / double(expected));
  }
  if (u.empty()) {
    throw DataError("risk ratio population is empty: no author appears in "
                    "any top-k");
  }
  RiskRatioStats stats;
  stats.all_authors = all_authors;
  stats.expected = expected;
  stats.population = u.size();
  stats.max = *std::max_element(u.begin(), u.end());
  double sum = 0.0;
  for (double x : u) sum += x;
  stats.mean = sum / double(u.size());
  double var = 0.0;
  for (double x : u) var += (x - stats.mean) * (x - stats.mean);
  stats.std_dev = std::sqrt(var / double(u.size()));
  return stats;
}

}  // namespace maui
