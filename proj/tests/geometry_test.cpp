#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "maui/geometry.hpp"

using namespace maui;

namespace {

RankTable full_table(const std::vector<std::string>& authors,
                     const std::vector<std::vector<std::uint32_t>>& ranks,
                     const std::vector<std::string>& true_authors) {
  RankTable table;
  table.author_ids = authors;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    RankRow row;
    row.query_id = "q" + std::to_string(i);
    row.true_author_id = true_authors[i];
    row.ranks = ranks[i];
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace

TEST_CASE("centroid is the plain mean of author embeddings") {
  std::vector<AuthorEmbedding> hay = {
      {"a", {1.0, 0.0}},
      {"b", {0.0, 1.0}},
  };
  const auto c = centroid(hay);
  REQUIRE(c.size() == 2);
  CHECK(c[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(c[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(centroid({}), DataError);
  hay.push_back({"c", {1.0, 0.0, 0.0}});
  CHECK_THROWS_AS(centroid(hay), DataError);
}

TEST_CASE("centroid distance spans [0, 2] by alignment") {
  const std::vector<double> c = {2.0, 0.0};  // direction matters, norm does not
  const std::vector<double> along = {1.0, 0.0};
  const std::vector<double> orthogonal = {0.0, 1.0};
  const std::vector<double> opposite = {-1.0, 0.0};
  CHECK(distance_to_centroid(along, c) == doctest::Approx(0.0));
  CHECK(distance_to_centroid(orthogonal, c) == doctest::Approx(1.0));
  CHECK(distance_to_centroid(opposite, c) == doctest::Approx(2.0));

  const std::vector<double> zero = {0.0, 0.0};
  CHECK_THROWS_AS(distance_to_centroid(along, zero), DataError);
  const std::vector<double> short_v = {1.0};
  CHECK_THROWS_AS(distance_to_centroid(short_v, c), DataError);
}

TEST_CASE("min-max normalization") {
  const std::vector<double> v = {3.0, 1.0, 5.0};
  const auto n = min_max_normalize(v);
  CHECK(n[0] == doctest::Approx(0.5));
  CHECK(n[1] == doctest::Approx(0.0));
  CHECK(n[2] == doctest::Approx(1.0));
  const std::vector<double> flat = {2.0, 2.0, 2.0};
  CHECK_THROWS_AS(min_max_normalize(flat), DataError);
  CHECK_THROWS_AS(min_max_normalize({}), DataError);
}

TEST_CASE("mean rank per author, with and without self queries") {
  const auto table = full_table({"a", "b", "c"},
                                {{1, 2, 3}, {2, 1, 3}},
                                {"a", "b"});
  const auto with_self = mean_rank_per_author(table, true);
  CHECK(with_self[0] == doctest::Approx(1.5));
  CHECK(with_self[1] == doctest::Approx(1.5));
  CHECK(with_self[2] == doctest::Approx(3.0));

  const auto without = mean_rank_per_author(table, false);
  CHECK(without[0] == doctest::Approx(2.0));  // only the "b" query counts
  CHECK(without[1] == doctest::Approx(2.0));
  CHECK(without[2] == doctest::Approx(3.0));

  // Excluding self leaves "a" with zero usable queries here.
  const auto lone = full_table({"a", "b"}, {{1, 2}}, {"a"});
  CHECK_THROWS_AS(mean_rank_per_author(lone, false), DataError);
  CHECK(mean_rank_per_author(lone, true)[0] == doctest::Approx(1.0));

  RankTable sliced = table;
  sliced.rows[0].ranks.clear();
  CHECK_THROWS_AS(mean_rank_per_author(sliced, true), DataError);
}

TEST_CASE("binned curve averages y within equal-width x bins") {
  const std::vector<double> x = {0.05, 0.15, 0.95, 1.0};
  const std::vector<double> y = {1.0, 2.0, 3.0, 5.0};
  const auto curve = binned_curve(x, y, 10);
  REQUIRE(curve.size() == 10);
  CHECK(curve[0].lo == doctest::Approx(0.0));
  CHECK(curve[0].hi == doctest::Approx(0.1));
  CHECK(curve[0].count == 1);
  CHECK(curve[0].mean == doctest::Approx(1.0));
  CHECK(curve[1].count == 1);
  CHECK(curve[1].mean == doctest::Approx(2.0));
  for (std::size_t b = 2; b < 9; ++b) {
    CHECK(curve[b].count == 0);
    CHECK(std::isnan(curve[b].mean));
  }
  // x == 1.0 lands in the last bin, not one past it.
  CHECK(curve[9].count == 2);
  CHECK(curve[9].mean == doctest::Approx(4.0));

  // Out-of-range x clamps to the edge bins.
  const std::vector<double> wild_x = {-0.5, 1.7};
  const std::vector<double> wild_y = {7.0, 9.0};
  const auto clamped = binned_curve(wild_x, wild_y, 4);
  CHECK(clamped[0].count == 1);
  CHECK(clamped[3].count == 1);

  const std::vector<double> short_y = {1.0};
  CHECK_THROWS_AS(binned_curve(x, short_y, 10), ConfigError);
  CHECK_THROWS_AS(binned_curve(x, y, 0), ConfigError);
  CHECK_THROWS_AS(binned_curve({}, {}, 10), DataError);
}

TEST_CASE("spearman on hand-checked examples") {
  const std::vector<double> a = {1.0, 2.0, 3.0, 4.0};
  const std::vector<double> b = {2.0, 1.0, 4.0, 3.0};
  CHECK(spearman(a, b) == doctest::Approx(0.6).epsilon(1e-12));

  const std::vector<double> up = {0.1, 0.2, 0.9, 5.0};
  const std::vector<double> up2 = {1.0, 4.0, 9.0, 16.0};
  CHECK(spearman(up, up2) == doctest::Approx(1.0));
  std::vector<double> down(up2.rbegin(), up2.rend());
  CHECK(spearman(up, down) == doctest::Approx(-1.0));
}

TEST_CASE("spearman handles ties through midranks") {
  const std::vector<double> a = {1.0, 1.0, 2.0};
  const std::vector<double> b = {1.0, 2.0, 3.0};
  CHECK(spearman(a, b) ==
        doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-12));

  const std::vector<double> flat = {5.0, 5.0, 5.0};
  CHECK_THROWS_AS(spearman(flat, b), DataError);
  const std::vector<double> short_b = {1.0, 2.0};
  CHECK_THROWS_AS(spearman(a, short_b), ConfigError);
  CHECK_THROWS_AS(spearman(short_b, short_b), ConfigError);
}

TEST_CASE("distance histogram covers [0, 2] and clamps strays") {
  const std::vector<double> d = {0.0, 0.5, 1.0, 2.0, 2.5, -1.0};
  const auto hist = distance_histogram(d, 4);
  REQUIRE(hist.size() == 4);
  CHECK(hist[0].lo == doctest::Approx(0.0));
  CHECK(hist[0].hi == doctest::Approx(0.5));
  CHECK(hist[3].hi == doctest::Approx(2.0));
  CHECK(hist[0].count == 2);  // 0.0 and the clamped -1.0
  CHECK(hist[1].count == 1);
  CHECK(hist[2].count == 1);
  CHECK(hist[3].count == 2);  // 2.0 and the clamped 2.5
  CHECK_THROWS_AS(distance_histogram(d, 0), ConfigError);
  CHECK_THROWS_AS(distance_histogram({}, 4), DataError);
}
