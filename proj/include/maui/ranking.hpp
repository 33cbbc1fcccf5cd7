#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "maui/store.hpp"

namespace maui {

// Cosine similarity; both sides are unit vectors so this is a plain dot
// product, accumulated in double.
double similarity(std::span<const double> a, std::span<const double> b);

struct TopKEntry {
  std::uint32_t author;  // index into RankTable::author_ids
  double similarity;
};

struct RankRow {
  std::string query_id;
  std::string true_author_id;
  // Dense rank (1 = most similar) of the true author; 0 when the batch was
  // ranked in top-k-only mode and the author fell outside the slice.
  std::uint32_t true_author_rank = 0;
  // ranks[i] = dense rank of haystack author i; empty in top-k-only mode.
  std::vector<std::uint32_t> ranks;
  // Best slice_k entries, most similar first.
  std::vector<TopKEntry> top;
};

struct RankTable {
  std::vector<std::string> author_ids;  // haystack order, ascending
  std::size_t slice_k = 0;
  std::vector<RankRow> rows;
};

struct RankOptions {
  int threads = 1;
  std::size_t slice_k = 0;
};

// Full dense ranking of one query against the haystack: ranks 1..N, ties
// on similarity broken by ascending author id (= haystack order).
std::vector<std::uint32_t> rank_query(std::span<const double> query,
                                      std::span<const AuthorEmbedding> haystack);

// Ranks every query, keeping full rank vectors plus a top-slice_k slice.
// Output is a pure function of the inputs: thread count only changes how
// the rows are scheduled, never their content.
RankTable rank_batch_full(std::span<const Query> queries,
                          std::span<const AuthorEmbedding> haystack,
                          const RankOptions& options);

// Lighter variant keeping only the top-k slices (rank vectors left empty,
// true_author_rank filled only when the author appears in the slice).
RankTable rank_batch_topk(std::span<const Query> queries,
                          std::span<const AuthorEmbedding> haystack,
                          std::size_t k, int threads = 1);

// 1 / true_author_rank for one row; the row must carry a resolved rank.
double reciprocal_rank(const RankRow& row);

// Rank of each row's true author, in row order.
std::vector<std::uint32_t> needle_ranks(const RankTable& table);

// CSV dump of the captured slices (first top_k positions; 0 = whole
// slice): query_id,position,author_id,similarity,is_true.
std::string rank_dump_csv(const RankTable& table, std::size_t top_k = 0);

}  // namespace maui
