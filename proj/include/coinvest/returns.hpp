#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "coinvest/date.hpp"
#include "coinvest/eigen.hpp"
#include "coinvest/ingest.hpp"
#include "coinvest/matrix.hpp"

namespace coinvest::returns {

using linalg::EigenDecomposition;

/// Observations of one asset at the weeks where they exist. times[i] is the
/// start week of the return period.
struct ReturnSeries {
  std::string asset_id;
  std::vector<Date> times;
  std::vector<double> values;
};

/// ln(close(t+1) / close(t)) for consecutive weekly samples. Gaps yield no
/// return. ArgumentError for fewer than two samples; DataError naming the
/// timestamp of a non-positive close.
ReturnSeries log_returns(const ingest::PriceSeries& prices);

/// Leave-one-out standardization: (r(t) - mean) / sqrt(V_t), where V_t is the
/// mean squared deviation from the full-series mean over the T - 1
/// observations other than t. ArgumentError for T < 3; DataError naming t
/// when V_t is zero.
ReturnSeries loo_rescale(const ReturnSeries& series);

/// Assets x weeks grid. values(i, t) is meaningful only where observed(i, t).
struct Panel {
  std::vector<std::string> assets;
  std::vector<Date> grid;
  Matrix values;
  std::vector<std::uint8_t> mask;  // row-major, same shape as values
  std::vector<std::string> dropped;
  /// Retained pairs (i < j) with fewer than min_overlap joint observations.
  std::vector<std::pair<std::size_t, std::size_t>> insufficient_pairs;

  bool observed(std::size_t i, std::size_t t) const { return mask[i * grid.size() + t] != 0; }
  std::size_t observations(std::size_t i) const;
  std::size_t joint_observations(std::size_t i, std::size_t j) const;
  bool fully_observed() const;
};

inline constexpr std::size_t kDefaultMinOverlap = 52;

struct AlignOptions {
  std::size_t min_overlap = kDefaultMinOverlap;
  /// Restrict the grid to weeks observed by every retained asset.
  bool strict_intersection = false;
};

/// Places series on the union of their weeks (or the common weeks when
/// strict). Assets with fewer than min_overlap observations are dropped and
/// listed; pairs with too little overlap are flagged.
Panel align_panel(const std::map<std::string, ReturnSeries>& series,
                  const AlignOptions& options = {});

/// Drops assets until no insufficient pair remains, always removing the asset
/// in the most flagged pairs (the later asset id on ties).
Panel prune_insufficient(Panel panel, std::size_t min_overlap = kDefaultMinOverlap);

enum class CorrelationKind { raw, adjusted };

struct CorrelationMatrix {
  std::vector<std::string> assets;
  Matrix c;
  CorrelationKind kind = CorrelationKind::raw;
};

/// C_ij = mean over jointly observed weeks of values_i * values_j. Both
/// triangles are written from one computation. DataError listing the pairs
/// whose joint observations fall below min_overlap.
CorrelationMatrix correlation_matrix(const Panel& panel,
                                     std::size_t min_overlap = kDefaultMinOverlap,
                                     CorrelationKind kind = CorrelationKind::raw);

/// Full spectrum of a correlation matrix.
EigenDecomposition eigendecompose(const CorrelationMatrix& c);

/// Projections m_a(t) = sum_j v_aj r_j(t) on the panel grid. Unobserved
/// cells contribute zero.
struct ModePanel {
  std::vector<Date> grid;
  Matrix modes;  // modes(a, t)
};

/// ArgumentError when the decomposition's dimension differs from the panel's.
ModePanel compute_modes(const Panel& panel, const EigenDecomposition& decomposition);

/// r_i(t) = sum_a v_ai m_a(t), the inverse of compute_modes.
Matrix reconstruct(const ModePanel& modes, const EigenDecomposition& decomposition);

/// Subtracts the market-mode term: r'_i(t) = r_i(t) - v_1i m_1(t). Mask and
/// grid are preserved.
Panel remove_market_mode(const Panel& panel, const EigenDecomposition& decomposition);

CorrelationMatrix adjusted_correlation(const Panel& adjusted,
                                       std::size_t min_overlap = kDefaultMinOverlap);

/// v_1^T C' v_1 for the top eigenvector of the raw matrix.
double market_mode_residual(const CorrelationMatrix& adjusted,
                            const EigenDecomposition& decomposition);

/// Wide table: a date column then one column per asset; unobserved cells empty.
std::string panel_csv(const Panel& panel);

/// Square table with an asset header row and an asset label column. Every
/// entry is written in shortest round-trip form so a reload is bit-exact.
std::string matrix_csv(const CorrelationMatrix& c);
CorrelationMatrix read_matrix_csv(const std::filesystem::path& path, CorrelationKind kind);

}  // namespace coinvest::returns
