#include "maui/ranking.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "maui/error.hpp"
#include "maui/util.hpp"

namespace maui {

double similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("similarity: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

namespace {

void check_haystack(std::span<const AuthorEmbedding> haystack) {
  if (haystack.empty()) throw DataError("empty haystack");
  for (std::size_t i = 1; i < haystack.size(); ++i) {
    if (!(haystack[i - 1].author_id < haystack[i].author_id)) {
      throw DataError("haystack not sorted by unique author id");
    }
  }
}

// Fills `order` with haystack indices sorted by (similarity desc, index
// asc). `sims` is scratch of haystack size.
void order_by_similarity(std::span<const double> query,
                         std::span<const AuthorEmbedding> haystack,
                         std::vector<double>& sims,
                         std::vector<std::uint32_t>& order) {
  const std::size_t n = haystack.size();
  sims.resize(n);
  order.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sims[i] = similarity(query, haystack[i].vector);
    order[i] = std::uint32_t(i);
  }
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) {
              if (sims[a] != sims[b]) return sims[a] > sims[b];
              return a < b;
            });
}

int clamp_threads(int threads) {
  if (threads < 1) throw ConfigError("threads must be at least 1");
  return std::min(threads, 256);
}

template <typename PerQuery>
void parallel_rows(std::size_t n_rows, int threads, PerQuery&& body) {
  if (threads <= 1 || n_rows < 2) {
    std::vector<double> sims;
    std::vector<std::uint32_t> order;
    for (std::size_t i = 0; i < n_rows; ++i) body(i, sims, order);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    std::vector<double> sims;
    std::vector<std::uint32_t> order;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_rows) break;
      body(i, sims, order);
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min<std::size_t>(threads, n_rows);
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace

std::vector<std::uint32_t> rank_query(
    std::span<const double> query, std::span<const AuthorEmbedding> haystack) {
  check_haystack(haystack);
  std::vector<double> sims;
  std::vector<std::uint32_t> order;
  order_by_similarity(query, haystack, sims, order);
  std::vector<std::uint32_t> ranks(haystack.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    ranks[order[r]] = std::uint32_t(r + 1);
  }
  return ranks;
}

RankTable rank_batch_full(std::span<const Query> queries,
                          std::span<const AuthorEmbedding> haystack,
                          const RankOptions& options) {
  check_haystack(haystack);
  const int threads = clamp_threads(options.threads);
  const std::size_t n = haystack.size();
  const std::size_t slice_k = std::min(options.slice_k, n);

  RankTable table;
  table.author_ids.reserve(n);
  for (const auto& a : haystack) table.author_ids.push_back(a.author_id);
  table.slice_k = slice_k;
  table.rows.resize(queries.size());

  // Resolve true-author indices up front so a bad query fails before any
  // ranking work starts.
  std::vector<std::uint32_t> true_idx(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto it = std::lower_bound(
        table.author_ids.begin(), table.author_ids.end(),
        queries[i].author_id);
    if (it == table.author_ids.end() || *it != queries[i].author_id) {
      throw DataError("query " + queries[i].query_id + ": true author " +
                      queries[i].author_id + " not in haystack");
    }
    true_idx[i] = std::uint32_t(it - table.author_ids.begin());
  }

  parallel_rows(queries.size(), threads,
                [&](std::size_t i, std::vector<double>& sims,
                    std::vector<std::uint32_t>& order) {
                  order_by_similarity(queries[i].vector, haystack, sims, order);
                  RankRow& row = table.rows[i];
                  row.query_id = queries[i].query_id;
                  row.true_author_id = queries[i].author_id;
                  row.ranks.resize(n);
                  for (std::size_t r = 0; r < n; ++r) {
                    row.ranks[order[r]] = std::uint32_t(r + 1);
                  }
                  row.true_author_rank = row.ranks[true_idx[i]];
                  row.top.reserve(slice_k);
                  for (std::size_t r = 0; r < slice_k; ++r) {
                    row.top.push_back(TopKEntry{order[r], sims[order[r]]});
                  }
                });
  return table;
}

RankTable rank_batch_topk(std::span<const Query> queries,
                          std::span<const AuthorEmbedding> haystack,
                          std::size_t k, int threads) {
  check_haystack(haystack);
  if (k < 1) throw ConfigError("k must be at least 1");
  const int n_threads = clamp_threads(threads);
  const std::size_t n = haystack.size();
  const std::size_t slice_k = std::min(k, n);

  RankTable table;
  table.author_ids.reserve(n);
  for (const auto& a : haystack) table.author_ids.push_back(a.author_id);
  table.slice_k = slice_k;
  table.rows.resize(queries.size());

  parallel_rows(
      queries.size(), n_threads,
      [&](std::size_t i, std::vector<double>& sims,
          std::vector<std::uint32_t>& order) {
        const std::size_t m = haystack.size();
        sims.resize(m);
        order.resize(m);
        for (std::size_t j = 0; j < m; ++j) {
          sims[j] = similarity(queries[i].vector, haystack[j].vector);
          order[j] = std::uint32_t(j);
        }
        std::partial_sort(order.begin(), order.begin() + slice_k, order.end(),
                          [&](std::uint32_t a, std::uint32_t b) {
                            if (sims[a] != sims[b]) return sims[a] > sims[b];
                            return a < b;
                          });
        RankRow& row = table.rows[i];
        row.query_id = queries[i].query_id;
        row.true_author_id = queries[i].author_id;
        row.top.reserve(slice_k);
        for (std::size_t r = 0; r < slice_k; ++r) {
          row.top.push_back(TopKEntry{order[r], sims[order[r]]});
          if (table.author_ids[order[r]] == queries[i].author_id) {
            row.true_author_rank = std::uint32_t(r + 1);
          }
        }
      });
  return table;
}

double reciprocal_rank(const RankRow& row) {
  if (row.true_author_rank == 0) {
    throw DataError("query " + row.query_id + ": true author rank unresolved");
  }
  return 1.0 / double(row.true_author_rank);
}

std::vector<std::uint32_t> needle_ranks(const RankTable& table) {
  std::vector<std::uint32_t> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    if (row.true_author_rank == 0) {
      throw DataError("query " + row.query_id +
                      ": true author rank unresolved");
    }
    out.push_back(row.true_author_rank);
  }
  return out;
}

std::string rank_dump_csv(const RankTable& table, std::size_t top_k) {
  std::string out = "query_id,position,author_id,similarity,is_true\n";
  const std::size_t limit = top_k == 0 ? table.slice_k : top_k;
  for (const auto& row : table.rows) {
    for (std::size_t r = 0; r < std::min(row.top.size(), limit); ++r) {
      const auto& e = row.top[r];
      out += row.query_id;
      out += ',';
      out += num_to_string(std::uint64_t(r + 1));
      out += ',';
      out += table.author_ids[e.author];
      out += ',';
      out += num_to_string(e.similarity);
      out += ',';
      out += (table.author_ids[e.author] == row.true_author_id) ? '1' : '0';
      out += '\n';
    }
  }
  return out;
}

}  // namespace maui
