#include <doctest.h>

#include <cmath>
#include <numeric>

#include "coinvest/clustering.hpp"
#include "coinvest/errors.hpp"
#include "coinvest/nullmodels.hpp"
#include "coinvest/random.hpp"
#include "oracles.hpp"

using namespace coinvest;
using namespace coinvest::clustering;
using graph::BinaryAdjacency;

namespace {

Matrix random_binary(Rng& rng, std::size_t n, std::size_t dims, double p = 0.4) {
  Matrix x(n, dims);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dims; ++j) x(i, j) = rng.bernoulli(p) ? 1.0 : 0.0;
  }
  return x;
}

std::vector<std::size_t> all_members(std::size_t n) {
  std::vector<std::size_t> m(n);
  std::iota(m.begin(), m.end(), 0);
  return m;
}

Matrix points(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix x(rows.size(), rows.begin()->size());
  std::size_t i = 0;
  for (const auto& row : rows) {
    std::size_t j = 0;
    for (double v : row) x(i, j++) = v;
    ++i;
  }
  return x;
}

/// Two disjoint cliques {0,1,2} and {3,4,5} joined by the edge 2-3.
BinaryAdjacency two_triangles() {
  BinaryAdjacency a(6);
  for (auto [i, j] : std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5},
                                                      {3, 5}, {2, 3}}) {
    a.set_edge(i, j);
  }
  return a;
}

}  // namespace

TEST_CASE("tag matrix encoding") {
  std::vector<ingest::AssetProfile> profiles = {
      {"b", "B", "b.io", {}},
      {"a", "A", "a.io", {"defi"}},
  };
  std::vector<std::string> universe = {"defi", "pow"};
  auto tm = tag_matrix(profiles, universe);
  CHECK(tm.assets == std::vector<std::string>{"a", "b"});
  CHECK(tm.x(0, 0) == 1.0);
  CHECK(tm.x(0, 1) == 0.0);
  CHECK(tm.x(1, 0) == 0.0);
  CHECK(tm.x(1, 1) == 0.0);
  CHECK(tm.constant_columns() == std::vector<std::string>{"pow"});

  profiles.push_back({"c", "C", "c.io", {"meme"}});
  try {
    tag_matrix(profiles, universe);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("meme") != std::string::npos);
  }
  CHECK_THROWS_AS(tag_matrix(profiles, std::vector<std::string>{}), ArgumentError);
}

TEST_CASE("tag matrix of a six-asset fixture") {
  std::vector<ingest::AssetProfile> profiles = {
      {"a1", "", "", {"defi", "pow"}}, {"a2", "", "", {"defi"}},
      {"a3", "", "", {"nft"}},         {"a4", "", "", {"defi", "layer1"}},
      {"a5", "", "", {"pow"}},         {"a6", "", "", {}},
  };
  std::vector<std::string> universe = {"defi", "pow", "nft", "layer1"};
  auto tm = tag_matrix(profiles, universe);
  const Matrix expected = points({{1, 1, 0, 0},
                                  {1, 0, 0, 0},
                                  {0, 0, 1, 0},
                                  {1, 0, 0, 1},
                                  {0, 1, 0, 0},
                                  {0, 0, 0, 0}});
  CHECK(tm.x == expected);
}

TEST_CASE("ward delta closed form") {
  const Matrix x = points({{0, 0}, {0, 2}, {4, 0}, {0, 0}, {3, 4}});
  const std::vector<std::size_t> a = {0, 1}, b = {2}, same = {3}, first = {0}, far = {4};
  CHECK(ward_delta(summarize(x, first), summarize(x, same)) == 0.0);
  CHECK(ward_delta(summarize(x, first), summarize(x, far)) == doctest::Approx(25.0 / 2.0));
  CHECK(ward_delta(summarize(x, a), summarize(x, b)) == doctest::Approx(34.0 / 3.0));
  CHECK(ward_delta_sum_of_squares(x, a, b) == doctest::Approx(34.0 / 3.0));
  CHECK(oracle::merge_cost(x, a, b) == doctest::Approx(34.0 / 3.0));
  CHECK_THROWS_AS(ward_delta(ClusterSummary{}, summarize(x, b)), ArgumentError);
}

TEST_CASE("ward delta dual forms agree on random clusters") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = random_binary(rng, 12, 6);
    std::vector<std::size_t> a, b;
    for (std::size_t i = 0; i < 12; ++i) {
      const auto pick = rng.below(3);
      if (pick == 0) a.push_back(i);
      if (pick == 1) b.push_back(i);
    }
    if (a.empty() || b.empty()) continue;
    const double closed = ward_delta(summarize(x, a), summarize(x, b));
    const double ss = ward_delta_sum_of_squares(x, a, b);
    CHECK(std::abs(closed - ss) <= 1e-9 * std::max(1.0, std::abs(ss)));
  }
}

TEST_CASE("ward clustering edge cases") {
  Rng rng(17);
  const auto x = random_binary(rng, 8, 5);
  SUBCASE("k = N is the identity partition") {
    auto r = ward_cluster(x, 8);
    CHECK(r.history.empty());
    CHECK(r.partition.labels == std::vector<std::size_t>{1, 2, 3, 4, 5, 6, 7, 8});
  }
  SUBCASE("k = 1 holds every asset") {
    auto r = ward_cluster(x, 1);
    CHECK(r.history.size() == 7);
    CHECK(r.partition.sizes == std::vector<std::size_t>{8});
  }
  SUBCASE("k out of range") {
    CHECK_THROWS_AS(ward_cluster(x, 0), ArgumentError);
    CHECK_THROWS_AS(ward_cluster(x, 9), ArgumentError);
  }
}

TEST_CASE("ward clustering matches the greedy oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng.below(11);
    const auto x = random_binary(rng, n, 6);
    const auto full = ward_cluster(x, 1);
    CHECK(full.history.size() == n - 1);
    for (std::size_t k = 1; k <= n; ++k) {
      const auto expected = oracle::greedy_ward(x, k);
      CHECK(ward_cluster(x, k).partition.labels == expected);
      CHECK(cut_dendrogram(x, full.history, k).labels == expected);
    }
  }
}

TEST_CASE("ties resolve toward the smallest member pair") {
  // Four identical points: every merge costs zero.
  const Matrix x(4, 2, 1.0);
  auto r = ward_cluster(x, 1);
  REQUIRE(r.history.size() == 3);
  CHECK(r.history[0].cluster_a == 0);
  CHECK(r.history[0].cluster_b == 1);
  CHECK(r.history[1].cluster_a == 2);
  CHECK(r.history[1].cluster_b == 4);
  CHECK(r.history[2].cluster_a == 3);
  CHECK(r.history[2].cluster_b == 5);
}

TEST_CASE("centroids equal member means") {
  Rng rng(8);
  const auto x = random_binary(rng, 12, 6);
  for (std::size_t k = 1; k <= 12; ++k) {
    const auto p = ward_cluster(x, k).partition;
    REQUIRE(p.centroids.rows() == k);
    std::size_t total = 0;
    for (std::size_t c = 1; c <= k; ++c) {
      const auto members = p.members(c);
      total += members.size();
      const auto s = summarize(x, members);
      for (std::size_t j = 0; j < x.cols(); ++j) {
        CHECK(std::abs(p.centroids(c - 1, j) - s.centroid[j]) <= 1e-12);
      }
    }
    CHECK(total == 12);
  }
}

TEST_CASE("elbow curve") {
  Rng rng(99);
  const auto x = random_binary(rng, 10, 6);
  std::vector<std::size_t> ks(10);
  std::iota(ks.begin(), ks.end(), 1);
  const auto curve = elbow_curve(x, ks);
  REQUIRE(curve.size() == 10);
  CHECK(curve.back().loss == 0.0);
  CHECK(curve.front().loss ==
        doctest::Approx(oracle::sum_of_squares(x, all_members(10))).epsilon(1e-12));
  const auto full = ward_cluster(x, 1);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (i > 0) CHECK(curve[i].loss <= curve[i - 1].loss);
    const auto partition = cut_dendrogram(x, full.history, curve[i].k);
    CHECK(curve[i].loss == doctest::Approx(partition_loss(x, partition)).epsilon(1e-12));
  }
}

TEST_CASE("select_k") {
  std::vector<ElbowPoint> curve = {{1, 100}, {2, 20}, {3, 15}, {4, 14}};
  CHECK(select_k(curve, std::nullopt) == 2);
  CHECK(select_k(curve, 12) == 12);
  std::vector<ElbowPoint> linear = {{1, 10}, {2, 8}, {3, 6}, {4, 4}, {5, 2}};
  CHECK(select_k(linear, std::nullopt) == 2);
  std::vector<ElbowPoint> short_curve = {{1, 10}, {2, 8}};
  CHECK_THROWS_AS(select_k(short_curve, std::nullopt), ArgumentError);
  CHECK(select_k(short_curve, 3) == 3);
  CHECK_THROWS_AS(select_k({}, std::nullopt), ArgumentError);
}

TEST_CASE("in and out densities") {
  const auto a = two_triangles();
  const std::vector<std::size_t> labels = {1, 1, 1, 2, 2, 2};
  const auto p = canonical_partition(labels);
  CHECK(*in_density(p, a, 1) == 1.0);
  CHECK(*out_density(p, a, 1) == doctest::Approx(1.0 / 9.0));

  BinaryAdjacency empty(6);
  CHECK(*in_density(p, empty, 1) == 0.0);
  CHECK(*out_density(p, empty, 2) == 0.0);

  SUBCASE("hub fully linked to outsiders") {
    BinaryAdjacency star(4);
    for (std::size_t i = 1; i < 4; ++i) star.set_edge(0, i);
    const std::vector<std::size_t> hub = {1, 2, 2, 2};
    const auto q = canonical_partition(hub);
    CHECK(*out_density(q, star, 1) == 1.0);
    CHECK_FALSE(in_density(q, star, 1).has_value());
    CHECK(*in_density(q, star, 2) == 0.0);
  }
  SUBCASE("cluster covering every node") {
    const std::vector<std::size_t> one(6, 1);
    const auto q = canonical_partition(one);
    CHECK_FALSE(out_density(q, a, 1).has_value());
    CHECK(*in_density(q, a, 1) == doctest::Approx(7.0 / 15.0));
  }
}

TEST_CASE("densities match brute-force pair enumeration") {
  Rng rng(41);
  const std::size_t n = 30;
  BinaryAdjacency a(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.bernoulli(0.2)) a.set_edge(i, j);
    }
  }
  const auto p = random_partition(n, 4, 12);
  for (std::size_t c = 1; c <= 4; ++c) {
    std::size_t inside = 0, boundary = 0, size = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (p.labels[i] != c) continue;
      ++size;
      for (std::size_t j = 0; j < n; ++j) {
        if (!a.has_edge(i, j)) continue;
        if (p.labels[j] == c) {
          ++inside;
        } else {
          ++boundary;
        }
      }
    }
    if (size >= 2) {
      CHECK(*in_density(p, a, c) ==
            doctest::Approx(static_cast<double>(inside) / static_cast<double>(size * (size - 1))));
    }
    if (size >= 1 && size < n) {
      CHECK(*out_density(p, a, c) ==
            doctest::Approx(static_cast<double>(boundary) / static_cast<double>(size * (n - size))));
    }
  }
}

TEST_CASE("random partitions") {
  const auto single = random_partition(10, 1, 5);
  CHECK(single.labels == std::vector<std::size_t>(10, 1));
  CHECK(random_partition(50, 7, 3).labels == random_partition(50, 7, 3).labels);
  CHECK(random_partition(50, 7, 3).labels != random_partition(50, 7, 4).labels);

  // Mean cluster size over 1000 partitions of 1200 nodes into 12 labels.
  const double sigma = std::sqrt(1200.0 * (1.0 / 12.0) * (11.0 / 12.0));
  std::vector<double> mean(12, 0.0);
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto p = random_partition(1200, 12, derive_seed(77, s));
    REQUIRE(p.sizes.size() == 12);
    for (std::size_t c = 0; c < 12; ++c) mean[c] += static_cast<double>(p.sizes[c]) / 1000.0;
  }
  for (double m : mean) CHECK(std::abs(m - 100.0) < 3.0 * sigma / std::sqrt(1000.0));
}

TEST_CASE("density benchmark") {
  SUBCASE("k = 1 leaves every out-density undefined") {
    const auto bench = density_benchmark(two_triangles(), 1, 5, 1);
    CHECK(bench.cloud.empty());
    CHECK(bench.undefined == 5);
  }
  SUBCASE("empty graph gives zeros") {
    const auto bench = density_benchmark(BinaryAdjacency(40), 4, 20, 2);
    REQUIRE_FALSE(bench.cloud.empty());
    for (const auto& [in, out] : bench.cloud) {
      CHECK(in == 0.0);
      CHECK(out == 0.0);
    }
  }
  SUBCASE("pooled cloud equals direct recomputation") {
    const auto a = nullmodels::sample_er(30, 0.2, 9);
    const auto bench = density_benchmark(a, 3, 10, 21);
    std::vector<std::pair<double, double>> expected;
    std::size_t undefined = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto p = random_partition(30, 3, derive_seed(21, s));
      for (std::size_t c = 1; c <= 3; ++c) {
        const auto in = in_density(p, a, c);
        const auto out = out_density(p, a, c);
        if (in && out) {
          expected.emplace_back(*in, *out);
        } else {
          ++undefined;
        }
      }
    }
    CHECK(bench.cloud == expected);
    CHECK(bench.undefined == undefined);
    for (const auto& [in, out] : bench.cloud) {
      CHECK(in >= 0.0);
      CHECK(in <= 1.0);
      CHECK(out >= 0.0);
      CHECK(out <= 1.0);
    }
    CHECK(bench.in.p05 <= bench.in.p50);
    CHECK(bench.in.p50 <= bench.in.p95);
  }
}

TEST_CASE("quantile interpolation") {
  const std::vector<double> v = {1, 2, 3, 4, 5};
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 0.5) == 3.0);
  CHECK(quantile(v, 1.0) == 5.0);
  CHECK(quantile(v, 0.05) == doctest::Approx(1.2));
}
