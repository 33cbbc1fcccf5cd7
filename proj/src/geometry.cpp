#include "maui/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "maui/error.hpp"
#include "maui/util.hpp"

namespace maui {

std::vector<double> centroid(std::span<const AuthorEmbedding> haystack) {
  if (haystack.empty()) throw DataError("centroid of empty haystack");
  const std::size_t dimension = haystack.front().vector.size();
  std::vector<double> c(dimension, 0.0);
  for (const auto& a : haystack) {
    if (a.vector.size() != dimension) {
      throw DataError("centroid over mixed dimensions");
    }
    for (std::size_t i = 0; i < dimension; ++i) c[i] += a.vector[i];
  }
  for (double& x : c) x /= double(haystack.size());
  return c;
}

double distance_to_centroid(std::span<const double> v,
                            std::span<const double> c) {
  if (v.size() != c.size()) {
    throw DataError("distance_to_centroid: dimension mismatch");
  }
  double dot = 0.0;
  double c2 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    dot += v[i] * c[i];
    c2 += c[i] * c[i];
  }
  const double norm = std::sqrt(c2);
  if (norm < 1e-12) {
    throw DataError("degenerate centroid: population has no mean direction");
  }
  return std::clamp(1.0 - dot / norm, 0.0, 2.0);
}

std::vector<double> min_max_normalize(std::span<const double> values) {
  if (values.empty()) throw DataError("normalize of empty range");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    throw DataError("normalize of constant values: no spread to rescale");
  }
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = (values[i] - lo) / (hi - lo);
  }
  return out;
}

std::vector<double> mean_rank_per_author(const RankTable& table,
                                         bool include_self) {
  if (table.rows.empty()) throw DataError("mean rank over zero queries");
  const std::size_t n = table.author_ids.size();
  std::vector<double> sum(n, 0.0);
  std::vector<std::size_t> used(n, 0);
  for (const auto& row : table.rows) {
    if (row.ranks.size() != n) {
      throw DataError("query " + row.query_id + ": no full rank vector");
    }
    for (std::size_t a = 0; a < n; ++a) {
      if (!include_self && table.author_ids[a] == row.true_author_id) continue;
      sum[a] += double(row.ranks[a]);
      used[a] += 1;
    }
  }
  std::vector<double> out(n);
  for (std::size_t a = 0; a < n; ++a) {
    if (used[a] == 0) {
      throw DataError("author " + table.author_ids[a] +
                      ": no queries left after excluding its own");
    }
    out[a] = sum[a] / double(used[a]);
  }
  return out;
}

std::vector<CurveBin> binned_curve(std::span<const double> x,
                                   std::span<const double> y,
                                   std::size_t bins) {
  if (x.size() != y.size()) throw ConfigError("binned_curve: length mismatch");
  if (bins < 1) throw ConfigError("binned_curve: need at least one bin");
  if (x.empty()) throw DataError("binned_curve of empty range");
  std::vector<CurveBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lo = double(b) / double(bins);
    out[b].hi = double(b + 1) / double(bins);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = std::clamp(x[i], 0.0, 1.0);
    const std::size_t b =
        std::min(std::size_t(xi * double(bins)), bins - 1);
    out[b].mean += y[i];
    out[b].count += 1;
  }
  for (auto& bin : out) {
    bin.mean = bin.count ? bin.mean / double(bin.count)
                         : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ConfigError("spearman: length mismatch");
  if (a.size() < 3) throw ConfigError("spearman: need at least 3 points");
  const auto ra = midranks(a);
  const auto rb = midranks(b);
  const double n = double(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va < 1e-12 || vb < 1e-12) {
    throw DataError("spearman: constant ranks on one side");
  }
  return cov / std::sqrt(va * vb);
}

std::vector<HistogramBin> distance_histogram(std::span<const double> distances,
                                             std::size_t bins) {
  if (bins < 1) throw ConfigError("histogram: need at least one bin");
  if (distances.empty()) throw DataError("histogram of empty range");
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lo = 2.0 * double(b) / double(bins);
    out[b].hi = 2.0 * double(b + 1) / double(bins);
  }
  for (double d : distances) {
    const double v = std::clamp(d, 0.0, 2.0);
    const std::size_t b =
        std::min(std::size_t(v / 2.0 * double(bins)), bins - 1);
    out[b].count += 1;
  }
  return out;
}

}  // namespace maui
