#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "coinvest/clustering.hpp"
#include "coinvest/graph.hpp"
#include "coinvest/matrix.hpp"

namespace coinvest::nullmodels {

using graph::BinaryAdjacency;

/// Fraction of the N(N-1)/2 unordered pairs that are linked.
/// ArgumentError for N < 2.
double er_probability(const BinaryAdjacency& adjacency);

/// G(N, p): each unordered pair independently with probability p.
BinaryAdjacency sample_er(std::size_t n, double p, std::uint64_t seed);

/// Erdos-Gallai test: some simple graph has exactly these degrees.
bool is_graphical(std::span<const std::size_t> degrees);

inline constexpr std::size_t kDefaultSwapFactor = 10;

struct ConfigurationSample {
  BinaryAdjacency graph;
  std::size_t accepted_swaps = 0;
  std::size_t attempts = 0;
  /// Set when the input has fewer than two edges (returned unchanged) or when
  /// the attempt budget ran out before swap_factor * |E| swaps were accepted.
  bool warning = false;
};

/// Degree-preserving double-edge swaps starting from `adjacency`. Swaps that
/// would create a self-loop or a duplicate edge are rejected. At most
/// 100 * swap_factor * |E| + 1000 swaps are attempted.
ConfigurationSample sample_configuration(const BinaryAdjacency& adjacency, std::uint64_t seed,
                                         std::size_t swap_factor = kDefaultSwapFactor);

struct BlockDensities {
  Matrix b;                       // k x k
  std::vector<bool> undefined;    // diagonal entry undefined (cluster size < 2)
  std::vector<std::size_t> sizes;
};

/// B_aa is the in-density of cluster a (0 and flagged when undefined);
/// B_ab = edges between S_a and S_b / (|S_a| |S_b|), 0 when either is empty.
BlockDensities block_density_matrix(const BinaryAdjacency& adjacency,
                                    const clustering::ClusterPartition& partition);

/// Independent edges with probability b(block_of_node[i], block_of_node[j]).
/// Blocks are 0-based. ArgumentError unless b is symmetric with entries in
/// [0, 1] and every block index is in range.
BinaryAdjacency sample_sbm(std::span<const std::size_t> block_of_node, const Matrix& b,
                           std::uint64_t seed);

/// Consecutive blocks of the given sizes.
BinaryAdjacency sample_sbm_sizes(std::span<const std::size_t> sizes, const Matrix& b,
                                 std::uint64_t seed);

struct ErModel {
  std::size_t n = 0;
  double p = 0.0;
};

struct ConfigurationModel {
  BinaryAdjacency base;  // fixes the degree sequence
  std::size_t swap_factor = kDefaultSwapFactor;
};

struct SbmModel {
  std::vector<std::size_t> block_of_node;  // 0-based
  Matrix b;
};

struct NullModelSpec {
  std::variant<ErModel, ConfigurationModel, SbmModel> model;
  std::uint64_t master_seed = 0;

  std::string name() const;  // "erdos_renyi", "configuration" or "sbm"
  std::size_t node_count() const;
  /// ArgumentError on invalid parameters.
  void validate() const;
};

/// Instance i of a benchmark is sample(spec, derive_seed(master_seed, i)).
BinaryAdjacency sample(const NullModelSpec& spec, std::uint64_t seed);

/// A statistic may throw UndefinedStatistic; that instance is then recorded
/// as NaN and excluded from the moments.
struct Statistic {
  std::string name;
  std::function<double(const BinaryAdjacency&)> evaluate;
  std::optional<double> real_value;
};

struct BenchmarkSummary {
  std::string statistic;
  std::string model;
  std::uint64_t master_seed = 0;
  std::size_t n = 0;
  std::vector<double> values;  // by instance index
  std::size_t undefined = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation
  std::optional<double> real_value;
  std::optional<double> z;  // empty when sd == 0 or no real value
};

/// Samples n instances (n >= 2) and evaluates every statistic on each.
/// Instances are spread over `threads` workers; results do not depend on the
/// thread count.
std::vector<BenchmarkSummary> benchmark(const NullModelSpec& spec, std::size_t n,
                                        std::span<const Statistic> statistics,
                                        std::size_t threads = 1);

BenchmarkSummary benchmark(const NullModelSpec& spec, std::size_t n, const Statistic& statistic,
                           std::size_t threads = 1);

/// JSON record of a summary; non-finite numbers and missing values are null.
std::string summary_json(const BenchmarkSummary& summary, bool include_values = false);

}  // namespace coinvest::nullmodels
