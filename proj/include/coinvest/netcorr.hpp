#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "coinvest/graph.hpp"
#include "coinvest/nullmodels.hpp"
#include "coinvest/returns.hpp"

namespace coinvest::netcorr {

using graph::BinaryAdjacency;
using returns::CorrelationMatrix;

struct NetworkCorrelation {
  double value = 0.0;
  std::size_t pairs = 0;    // linked pairs that entered the mean
  std::size_t skipped = 0;  // linked pairs with an undefined (NaN) correlation
};

/// Mean of C_ij over unordered pairs linked in `m`. UndefinedStatistic when m
/// has no edges or every linked pair is undefined; ArgumentError on a size
/// mismatch.
NetworkCorrelation network_correlation(const CorrelationMatrix& c, const BinaryAdjacency& m);

/// The same average over the market-adjusted matrix. ArgumentError unless
/// the matrix is of the adjusted kind.
NetworkCorrelation adjusted_network_correlation(const CorrelationMatrix& adjusted,
                                                const BinaryAdjacency& m);

/// Submatrix over `assets`, in that order. ArgumentError for an unknown id.
CorrelationMatrix restrict_to(const CorrelationMatrix& c, std::span<const std::string> assets);

struct DistanceRow {
  std::size_t distance = 0;
  std::size_t pairs = 0;           // pairs with C defined
  double mean = 0.0;               // NaN when pairs == 0
  double standard_error = 0.0;     // NaN when pairs < 2
  std::size_t adjusted_pairs = 0;  // pairs with C' defined
  double adjusted_mean = 0.0;
  double adjusted_standard_error = 0.0;
};

struct DistanceProfile {
  std::vector<DistanceRow> rows;  // distances 1..d_max
  std::size_t unreachable_pairs = 0;
  std::size_t beyond_pairs = 0;   // finite distance greater than d_max
  std::size_t skipped_pairs = 0;  // finite distance <= d_max, C undefined
  double reference = 1.0;         // divisor applied by rescale_by_reference
};

/// Averages of C and C' over unordered pairs at each exact hop distance
/// 1..d_max. The adjacency shares the matrices' asset ordering.
DistanceProfile distance_profile(const CorrelationMatrix& c, const CorrelationMatrix& adjusted,
                                 const BinaryAdjacency& m, std::size_t d_max);

/// Difference of the row means at two distances and the pooled standard
/// error sqrt(se_a^2 + se_b^2).
struct DistanceGap {
  double difference = 0.0;
  double pooled_standard_error = 0.0;
};

DistanceGap distance_gap(const DistanceProfile& profile, std::size_t near, std::size_t far,
                         bool adjusted = false);

/// values / reference. ArgumentError when reference is zero.
std::vector<double> rescale_by_reference(std::span<const double> values, double reference);

/// Profile means and standard errors divided by `reference`.
DistanceProfile rescale_by_reference(const DistanceProfile& profile, double reference);

/// Joint min-max map onto [0, 1]. ArgumentError when fewer than two distinct
/// values are present.
std::vector<double> rescale_unit(std::span<const double> values);

inline constexpr double kDefaultSignificanceThreshold = 2.0;

struct Significance {
  double z = 0.0;
  bool significant = false;
};

/// z = (real - mean) / sd; significant iff z > threshold. UndefinedStatistic
/// when the benchmark standard deviation is zero or undefined.
Significance significance(double real_value, const nullmodels::BenchmarkSummary& summary,
                          double threshold = kDefaultSignificanceThreshold);

/// distance, pairs, mean, standard_error, adjusted_pairs, adjusted_mean,
/// adjusted_standard_error.
std::string distance_profile_csv(const DistanceProfile& profile);

}  // namespace coinvest::netcorr
