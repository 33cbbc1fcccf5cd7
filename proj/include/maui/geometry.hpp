#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "maui/ranking.hpp"
#include "maui/store.hpp"

namespace maui {

// Unnormalized mean of the author embeddings. Its norm measures how
// directionally concentrated the population is, so it is kept as-is.
std::vector<double> centroid(std::span<const AuthorEmbedding> haystack);

// 1 - cos(v, c) for unit v: 0 along the centroid direction, 2 opposite.
// Degenerate centroid (norm < 1e-12) is a DataError.
double distance_to_centroid(std::span<const double> v,
                            std::span<const double> c);

// Affine rescale to [0, 1]; all-equal input is a DataError.
std::vector<double> min_max_normalize(std::span<const double> values);

// Average dense rank each haystack author receives across all queries,
// aligned with table.author_ids. Rows must carry full rank vectors. With
// include_self false, an author's own queries are left out of its mean.
std::vector<double> mean_rank_per_author(const RankTable& table,
                                         bool include_self);

struct CurveBin {
  double lo = 0.0;
  double hi = 0.0;
  double mean = 0.0;  // NaN when the bin is empty
  std::size_t count = 0;
};

// Equal-width bins over x in [0, 1]; each bin reports the mean of y for
// the points falling in it.
std::vector<CurveBin> binned_curve(std::span<const double> x,
                                   std::span<const double> y,
                                   std::size_t bins);

// Tie-aware Spearman rank correlation: Pearson over midranks. Requires at
// least 3 points; zero variance on either side is a DataError.
double spearman(std::span<const double> a, std::span<const double> b);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

// Equal-width counts over the full centroid-distance range [0, 2].
std::vector<HistogramBin> distance_histogram(std::span<const double> distances,
                                             std::size_t bins);

}  // namespace maui
