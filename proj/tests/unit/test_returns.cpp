#include <doctest.h>

#include <cmath>
#include <numeric>

#include "coinvest/eigen.hpp"
#include "coinvest/errors.hpp"
#include "coinvest/random.hpp"
#include "coinvest/returns.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace coinvest;
using namespace coinvest::returns;

namespace {

Date week(int i) { return parse_date("2020-01-06") + std::chrono::days{7 * i}; }

ingest::PriceSeries prices(const std::string& id, std::vector<double> closes,
                           std::vector<int> weeks = {}) {
  ingest::PriceSeries s{id, {}, 0};
  for (std::size_t i = 0; i < closes.size(); ++i) {
    const int w = weeks.empty() ? static_cast<int>(i) : weeks[i];
    s.samples.push_back({week(w), closes[i], closes[i], 1.0});
  }
  return s;
}

ReturnSeries series(const std::string& id, const std::vector<double>& values, int offset = 0) {
  ReturnSeries s{id, {}, values};
  for (std::size_t i = 0; i < values.size(); ++i) s.times.push_back(week(offset + static_cast<int>(i)));
  return s;
}

Matrix random_symmetric(Rng& rng, std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = 2.0 * rng.uniform() - 1.0;
  }
  return m;
}

/// One-factor panel with full observation: r_i = loading F + sqrt(1 - loading^2) e_i.
Panel factor_panel(std::size_t n, std::size_t weeks, double loading, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> factor(weeks);
  for (double& f : factor) f = rng.normal();
  std::map<std::string, ReturnSeries> all;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(weeks);
    for (std::size_t t = 0; t < weeks; ++t) {
      v[t] = loading * factor[t] + std::sqrt(1 - loading * loading) * rng.normal();
    }
    const std::string id = "s" + std::to_string(100 + i);
    all.emplace(id, loo_rescale(series(id, v)));
  }
  return align_panel(all);
}

double mean_off_diagonal(const Matrix& c) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (std::size_t j = 0; j < c.cols(); ++j) {
      if (i == j) continue;
      total += c(i, j);
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace

TEST_CASE("log returns") {
  auto flat = log_returns(prices("x", {5, 5, 5, 5}));
  CHECK(flat.values == std::vector<double>{0, 0, 0});

  auto doubling = log_returns(prices("x", {1, 2, 4}));
  REQUIRE(doubling.values.size() == 2);
  CHECK(doubling.values[0] == doctest::Approx(std::log(2.0)));
  CHECK(doubling.values[1] == doctest::Approx(std::log(2.0)));

  SUBCASE("a gap yields no multi-week return") {
    auto gapped = log_returns(prices("x", {1, 2, 3, 6, 3}, {0, 1, 3, 4, 5}));
    REQUIRE(gapped.values.size() == 3);
    CHECK(gapped.times == std::vector<Date>{week(0), week(3), week(4)});
    CHECK(gapped.values[0] == doctest::Approx(std::log(2.0)));
    CHECK(gapped.values[1] == doctest::Approx(std::log(2.0)));
    CHECK(gapped.values[2] == doctest::Approx(std::log(0.5)));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(log_returns(prices("x", {1})), ArgumentError);
    try {
      log_returns(prices("x", {1, 0, 2}));
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("2020-01-13") != std::string::npos);
    }
  }
}

TEST_CASE("leave-one-out rescaling") {
  SUBCASE("centred value maps to zero") {
    auto out = loo_rescale(series("x", {-1, 0, 1}));
    CHECK(out.values[1] == 0.0);
    CHECK(out.values[0] == doctest::Approx(-1.0 / std::sqrt(0.5)));
  }
  SUBCASE("matches the per-t oracle") {
    const std::vector<double> v = {2, 4, 9, 3, 7};
    const auto out = loo_rescale(series("x", v)).values;
    const auto expected = oracle::loo_rescale(v);
    for (std::size_t t = 0; t < v.size(); ++t) CHECK(std::abs(out[t] - expected[t]) <= 1e-12);
  }
  SUBCASE("rescaled values times their leave-one-out scale sum to zero") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> v(3 + rng.below(100));
      for (double& x : v) x = rng.normal();
      const auto out = loo_rescale(series("x", v)).values;
      const auto expected = oracle::loo_rescale(v);
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double centred = 0.0;
      for (std::size_t t = 0; t < v.size(); ++t) {
        CHECK(std::abs(out[t] - expected[t]) <= 1e-12);
        double ss = 0.0;
        for (std::size_t u = 0; u < v.size(); ++u) {
          if (u != t) ss += (v[u] - mean) * (v[u] - mean);
        }
        centred += out[t] * std::sqrt(ss / static_cast<double>(v.size() - 1));
      }
      CHECK(std::abs(centred) < 1e-10);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(loo_rescale(series("x", {1, 2})), ArgumentError);
    try {
      loo_rescale(series("x", {4, 4, 4}));
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("2020-01-06") != std::string::npos);
    }
  }
}

TEST_CASE("panel alignment") {
  SUBCASE("aligned series give a full mask") {
    std::map<std::string, ReturnSeries> in = {{"a", series("a", {1, 2, 3})},
                                              {"b", series("b", {3, 2, 1})}};
    auto p = align_panel(in, {2, false});
    CHECK(p.fully_observed());
    CHECK(p.grid.size() == 3);
    CHECK(p.insufficient_pairs.empty());
  }
  SUBCASE("short series are dropped under the default threshold") {
    std::map<std::string, ReturnSeries> in = {{"a", series("a", {1, 2, 3})},
                                              {"b", series("b", {3, 2, 1}, 10)}};
    auto p = align_panel(in);
    CHECK(p.assets.empty());
    CHECK(p.dropped == std::vector<std::string>{"a", "b"});
  }
  SUBCASE("staggered series") {
    std::map<std::string, ReturnSeries> in = {{"a", series("a", {1, 2, 3, 4})},
                                              {"b", series("b", {5, 6, 7, 8}, 2)},
                                              {"c", series("c", {9, 9, 9, 9}, 5)}};
    auto p = align_panel(in, {3, false});
    REQUIRE(p.grid.size() == 9);
    const std::vector<std::uint8_t> mask = {1, 1, 1, 1, 0, 0, 0, 0, 0,  //
                                            0, 0, 1, 1, 1, 1, 0, 0, 0,  //
                                            0, 0, 0, 0, 0, 1, 1, 1, 1};
    CHECK(p.mask == mask);
    CHECK(p.joint_observations(0, 1) == 2);
    CHECK(p.insufficient_pairs.size() == 3);
    CHECK_THROWS_AS(correlation_matrix(p, 3), DataError);

    auto strict = align_panel(in, {1, true});
    CHECK(strict.grid.empty());

    auto pruned = prune_insufficient(align_panel(in, {2, false}), 2);
    CHECK(pruned.insufficient_pairs.empty());
    CHECK(pruned.assets.size() == 2);
  }
}

TEST_CASE("correlation matrix") {
  Rng rng(4);
  std::map<std::string, ReturnSeries> in;
  std::vector<std::vector<double>> raw(5, std::vector<double>(80));
  for (std::size_t i = 0; i < 5; ++i) {
    for (double& x : raw[i]) x = rng.normal();
    raw[i][10 + i] = 0.0;
  }
  for (std::size_t i = 0; i < 5; ++i) {
    const std::string id = "x" + std::to_string(i);
    auto s = loo_rescale(series(id, raw[i], static_cast<int>(i)));
    in.emplace(id, s);
  }
  auto p = align_panel(in, {60, false});
  auto c = correlation_matrix(p, 60);
  for (std::size_t i = 0; i < 5; ++i) {
    std::vector<double> vi(p.grid.size()), vj(p.grid.size());
    std::vector<bool> mi(p.grid.size()), mj(p.grid.size());
    for (std::size_t t = 0; t < p.grid.size(); ++t) {
      vi[t] = p.values(i, t);
      mi[t] = p.observed(i, t);
    }
    CHECK(std::abs(c.c(i, i) - 1.0) < 0.05);
    for (std::size_t j = 0; j < 5; ++j) {
      for (std::size_t t = 0; t < p.grid.size(); ++t) {
        vj[t] = p.values(j, t);
        mj[t] = p.observed(j, t);
      }
      CHECK(std::abs(c.c(i, j) - oracle::pair_correlation(vi, mi, vj, mj)) <= 1e-12);
      CHECK(c.c(i, j) == c.c(j, i));
    }
  }

  SUBCASE("anti-correlated pair") {
    std::vector<double> a(200);
    for (double& x : a) x = rng.normal();
    std::vector<double> b(a);
    for (double& x : b) x = -x;
    std::map<std::string, ReturnSeries> pair = {{"a", loo_rescale(series("a", a))},
                                                {"b", loo_rescale(series("b", b))}};
    auto cc = correlation_matrix(align_panel(pair));
    CHECK(std::abs(cc.c(0, 1) + 1.0) < 0.02);
  }
}

TEST_CASE("symmetric eigendecomposition") {
  SUBCASE("identity") {
    auto d = linalg::symmetric_eigen(Matrix::identity(4));
    for (double v : d.values) CHECK(v == doctest::Approx(1.0));
  }
  SUBCASE("two by two closed form") {
    Matrix m(2, 2, 0.3);
    m(0, 0) = m(1, 1) = 1.0;
    auto d = linalg::symmetric_eigen(m);
    CHECK(d.values[0] == doctest::Approx(1.3));
    CHECK(d.values[1] == doctest::Approx(0.7));
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(d.vectors(0, 0) == doctest::Approx(r));
    CHECK(d.vectors(0, 1) == doctest::Approx(r));
    CHECK(std::abs(d.vectors(1, 0)) == doctest::Approx(r));
    CHECK(d.vectors(1, 0) == doctest::Approx(-d.vectors(1, 1)));
  }
  SUBCASE("random matrices verify their own residuals") {
    Rng rng(50);
    for (std::size_t n : {1, 3, 10, 50}) {
      const auto m = random_symmetric(rng, n);
      auto d = linalg::symmetric_eigen(m);
      CHECK(linalg::eigen_residual(m, d) < 1e-8);
      CHECK(linalg::orthonormality_error(d) < 1e-8);
      CHECK(std::is_sorted(d.values.rbegin(), d.values.rend()));
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) sum += d.vectors(0, j);
      CHECK(sum >= 0.0);
    }
  }
  SUBCASE("small matrices match the characteristic polynomial") {
    Rng rng(51);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 1 + rng.below(4);
      const auto m = random_symmetric(rng, n);
      const auto d = linalg::symmetric_eigen(m);
      const auto expected = oracle::eigenvalues(m);
      REQUIRE(expected.size() == n);
      for (std::size_t a = 0; a < n; ++a) CHECK(std::abs(d.values[a] - expected[a]) < 1e-8);
    }
  }
  SUBCASE("invalid input") {
    Matrix m(2, 2);
    m(0, 1) = 1.0;
    CHECK_THROWS_AS(linalg::symmetric_eigen(m), ArgumentError);
    CHECK_THROWS_AS(linalg::symmetric_eigen(Matrix(2, 3)), ArgumentError);
  }
}

TEST_CASE("modes and market-mode removal") {
  const auto panel = factor_panel(6, 120, 0.7, 3);
  const auto c = correlation_matrix(panel);
  const auto d = eigendecompose(c);

  SUBCASE("identity basis reproduces the input") {
    linalg::EigenDecomposition id;
    id.vectors = Matrix::identity(6);
    id.values.assign(6, 1.0);
    const auto modes = compute_modes(panel, id);
    CHECK(modes.modes == panel.values);
  }
  SUBCASE("full reconstruction round-trips") {
    const auto modes = compute_modes(panel, d);
    const auto back = reconstruct(modes, d);
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t t = 0; t < panel.grid.size(); ++t) {
        CHECK(std::abs(back(i, t) - panel.values(i, t)) < 1e-8);
      }
    }
  }
  SUBCASE("dimension mismatch") {
    linalg::EigenDecomposition small;
    small.vectors = Matrix::identity(3);
    CHECK_THROWS_AS(compute_modes(panel, small), ArgumentError);
  }
  SUBCASE("annihilation and spectral shift") {
    const auto adjusted = adjusted_correlation(remove_market_mode(panel, d));
    CHECK(adjusted.kind == CorrelationKind::adjusted);
    CHECK(std::abs(market_mode_residual(adjusted, d)) < 1e-6);
    CHECK(eigendecompose(adjusted).values[0] < d.values[0]);
  }
  SUBCASE("panel orthogonal to the market mode is unchanged") {
    const auto adjusted = remove_market_mode(panel, d);
    const auto again = remove_market_mode(adjusted, d);
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t t = 0; t < panel.grid.size(); ++t) {
        CHECK(std::abs(again.values(i, t) - adjusted.values(i, t)) < 1e-12);
      }
    }
  }
}

TEST_CASE("two-asset closed forms") {
  Rng rng(6);
  std::vector<double> a(100), b(100);
  for (std::size_t t = 0; t < 100; ++t) {
    a[t] = rng.normal();
    b[t] = 0.5 * a[t] + rng.normal();
  }
  std::map<std::string, ReturnSeries> in = {{"a", loo_rescale(series("a", a))},
                                            {"b", loo_rescale(series("b", b))}};
  const auto panel = align_panel(in);
  const auto d = eigendecompose(correlation_matrix(panel));
  const auto modes = compute_modes(panel, d);
  const double r = 1.0 / std::sqrt(2.0);
  if (std::abs(d.vectors(0, 0) - r) < 1e-3) {
    for (std::size_t t = 0; t < panel.grid.size(); ++t) {
      const double expected = d.vectors(0, 0) * panel.values(0, t) + d.vectors(0, 1) * panel.values(1, t);
      CHECK(modes.modes(0, t) == doctest::Approx(expected));
    }
  }

  SUBCASE("identical series leave nothing after market-mode removal") {
    std::map<std::string, ReturnSeries> twins = {{"a", loo_rescale(series("a", a))},
                                                 {"b", loo_rescale(series("b", a))}};
    const auto tp = align_panel(twins);
    const auto td = eigendecompose(correlation_matrix(tp));
    CHECK(td.vectors(0, 0) == doctest::Approx(r));
    CHECK(td.vectors(0, 1) == doctest::Approx(r));
    const auto adjusted = remove_market_mode(tp, td);
    for (double v : adjusted.values.data()) CHECK(std::abs(v) < 1e-12);
  }
}

TEST_CASE("one-factor panel loses its common correlation") {
  const auto panel = factor_panel(20, 500, 0.8, 9);
  const auto c = correlation_matrix(panel);
  const auto d = eigendecompose(c);
  const auto adjusted = adjusted_correlation(remove_market_mode(panel, d));
  CHECK(mean_off_diagonal(c.c) >= 0.5);
  CHECK(mean_off_diagonal(adjusted.c) <= 0.1);
}

TEST_CASE("permuting assets permutes both matrices") {
  Rng rng(10);
  std::map<std::string, ReturnSeries> in, renamed;
  std::vector<double> f(90);
  for (double& x : f) x = rng.normal();
  for (int i = 0; i < 4; ++i) {
    std::vector<double> v(90);
    for (std::size_t t = 0; t < 90; ++t) v[t] = 0.6 * f[t] + rng.normal();
    in.emplace("p" + std::to_string(i), loo_rescale(series("p" + std::to_string(i), v)));
    // Reverse the lexicographic order of the ids.
    renamed.emplace("q" + std::to_string(3 - i), loo_rescale(series("q" + std::to_string(3 - i), v)));
  }
  const auto p1 = align_panel(in), p2 = align_panel(renamed);
  const auto c1 = correlation_matrix(p1), c2 = correlation_matrix(p2);
  const auto a1 = adjusted_correlation(remove_market_mode(p1, eigendecompose(c1)));
  const auto a2 = adjusted_correlation(remove_market_mode(p2, eigendecompose(c2)));
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(c1.c(i, j) == c2.c(3 - i, 3 - j));
      CHECK(a1.c(i, j) == doctest::Approx(a2.c(3 - i, 3 - j)).epsilon(1e-10));
    }
  }
}

TEST_CASE("matrix files reload bit-exactly") {
  test_support::TempDir dir("matrix");
  const auto panel = factor_panel(5, 80, 0.5, 1);
  const auto c = correlation_matrix(panel);
  write_file(dir / "c.csv", matrix_csv(c));
  const auto back = read_matrix_csv(dir / "c.csv", CorrelationKind::raw);
  CHECK(back.assets == c.assets);
  CHECK(back.c == c.c);
}
