#include "coinvest/netcorr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "coinvest/csv.hpp"
#include "coinvest/errors.hpp"

namespace coinvest::netcorr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_sizes(const CorrelationMatrix& c, const BinaryAdjacency& m) {
  if (c.c.rows() != m.size() || c.c.cols() != m.size()) {
    throw ArgumentError("correlation matrix and adjacency differ in size");
  }
}

// Running sums for a mean and its standard error.
struct Accumulator {
  std::size_t count = 0;
  double sum = 0.0;
  std::vector<double> values;

  void add(double v) {
    ++count;
    sum += v;
    values.push_back(v);
  }
  double mean() const { return count ? sum / static_cast<double>(count) : kNaN; }
  double standard_error() const {
    if (count < 2) return kNaN;
    const double mu = mean();
    double ss = 0.0;
    for (double v : values) ss += (v - mu) * (v - mu);
    const double sd = std::sqrt(ss / static_cast<double>(count - 1));
    return sd / std::sqrt(static_cast<double>(count));
  }
};

}  // namespace

NetworkCorrelation network_correlation(const CorrelationMatrix& c, const BinaryAdjacency& m) {
  check_sizes(c, m);
  if (m.edge_count() == 0) throw UndefinedStatistic("network correlation over an edgeless graph");
  NetworkCorrelation out;
  double sum = 0.0;
  for (const auto& [i, j] : m.edges()) {
    const double v = c.c(i, j);
    if (std::isnan(v)) {
      ++out.skipped;
    } else {
      sum += v;
      ++out.pairs;
    }
  }
  if (out.pairs == 0) throw UndefinedStatistic("every linked pair has an undefined correlation");
  out.value = sum / static_cast<double>(out.pairs);
  return out;
}

NetworkCorrelation adjusted_network_correlation(const CorrelationMatrix& adjusted,
                                                const BinaryAdjacency& m) {
  if (adjusted.kind != returns::CorrelationKind::adjusted) {
    throw ArgumentError("expected a market-adjusted correlation matrix");
  }
  return network_correlation(adjusted, m);
}

CorrelationMatrix restrict_to(const CorrelationMatrix& c, std::span<const std::string> assets) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < c.assets.size(); ++i) index.emplace(c.assets[i], i);
  std::vector<std::size_t> rows;
  for (const auto& asset : assets) {
    auto it = index.find(asset);
    if (it == index.end()) throw ArgumentError("asset not in correlation matrix: " + asset);
    rows.push_back(it->second);
  }
  CorrelationMatrix out{std::vector<std::string>(assets.begin(), assets.end()),
                        Matrix(rows.size(), rows.size()), c.kind};
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = 0; b < rows.size(); ++b) out.c(a, b) = c.c(rows[a], rows[b]);
  }
  return out;
}

DistanceProfile distance_profile(const CorrelationMatrix& c, const CorrelationMatrix& adjusted,
                                 const BinaryAdjacency& m, std::size_t d_max) {
  if (d_max < 1) throw ArgumentError("d_max must be at least 1");
  check_sizes(c, m);
  check_sizes(adjusted, m);
  const auto hops = graph::all_pairs_hops(m);
  std::vector<Accumulator> raw(d_max + 1), adj(d_max + 1);
  DistanceProfile out;
  const std::size_t n = m.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto d = hops[i][j];
      if (d == graph::kUnreachable) {
        ++out.unreachable_pairs;
        continue;
      }
      const auto du = static_cast<std::size_t>(d);
      if (du > d_max) {
        ++out.beyond_pairs;
        continue;
      }
      if (std::isnan(c.c(i, j))) {
        ++out.skipped_pairs;
      } else {
        raw[du].add(c.c(i, j));
      }
      if (!std::isnan(adjusted.c(i, j))) adj[du].add(adjusted.c(i, j));
    }
  }
  for (std::size_t d = 1; d <= d_max; ++d) {
    out.rows.push_back(DistanceRow{d, raw[d].count, raw[d].mean(), raw[d].standard_error(),
                                   adj[d].count, adj[d].mean(), adj[d].standard_error()});
  }
  return out;
}

DistanceGap distance_gap(const DistanceProfile& profile, std::size_t near, std::size_t far,
                         bool adjusted) {
  auto row = [&](std::size_t d) -> const DistanceRow& {
    if (d < 1 || d > profile.rows.size()) throw ArgumentError("distance outside the profile");
    return profile.rows[d - 1];
  };
  const auto& a = row(near);
  const auto& b = row(far);
  const double ma = adjusted ? a.adjusted_mean : a.mean;
  const double mb = adjusted ? b.adjusted_mean : b.mean;
  const double sa = adjusted ? a.adjusted_standard_error : a.standard_error;
  const double sb = adjusted ? b.adjusted_standard_error : b.standard_error;
  return {ma - mb, std::sqrt(sa * sa + sb * sb)};
}

std::vector<double> rescale_by_reference(std::span<const double> values, double reference) {
  if (reference == 0.0) throw ArgumentError("rescale reference is zero");
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(v / reference);
  return out;
}

DistanceProfile rescale_by_reference(const DistanceProfile& profile, double reference) {
  if (reference == 0.0) throw ArgumentError("rescale reference is zero");
  DistanceProfile out = profile;
  for (auto& row : out.rows) {
    row.mean /= reference;
    row.standard_error /= std::abs(reference);
    row.adjusted_mean /= reference;
    row.adjusted_standard_error /= std::abs(reference);
  }
  out.reference = profile.reference * reference;
  return out;
}

std::vector<double> rescale_unit(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("rescale_unit: no values");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*hi > *lo)) throw ArgumentError("rescale_unit: fewer than two distinct values");
  const double low = *lo;
  const double range = *hi - *lo;
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(v == *hi ? 1.0 : (v - low) / range);
  return out;
}

Significance significance(double real_value, const nullmodels::BenchmarkSummary& summary,
                          double threshold) {
  if (!(summary.sd > 0.0)) {
    throw UndefinedStatistic("benchmark '" + summary.model + "' has zero or undefined spread");
  }
  const double z = (real_value - summary.mean) / summary.sd;
  return {z, z > threshold};
}

std::string distance_profile_csv(const DistanceProfile& profile) {
  std::ostringstream out;
  write_csv_row(out, {"distance", "pairs", "mean", "standard_error", "adjusted_pairs",
                      "adjusted_mean", "adjusted_standard_error"});
  for (const auto& row : profile.rows) {
    write_csv_row(out, {std::to_string(row.distance), std::to_string(row.pairs),
                        format_double(row.mean), format_double(row.standard_error),
                        std::to_string(row.adjusted_pairs), format_double(row.adjusted_mean),
                        format_double(row.adjusted_standard_error)});
  }
  return out.str();
}

}  // namespace coinvest::netcorr
