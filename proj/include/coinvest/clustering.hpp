#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coinvest/graph.hpp"
#include "coinvest/ingest.hpp"
#include "coinvest/matrix.hpp"

namespace coinvest::clustering {

/// Binary asset-by-tag indicator matrix.
struct TagMatrix {
  std::vector<std::string> assets;    // row order
  std::vector<std::string> universe;  // column order
  Matrix x;

  /// Tags carried by no asset (all-zero columns).
  std::vector<std::string> constant_columns() const;
};

/// Rows follow `profiles` sorted by asset id. SchemaError names the first tag
/// outside `universe`; ArgumentError for an empty universe.
TagMatrix tag_matrix(std::span<const ingest::AssetProfile> profiles,
                     std::span<const std::string> universe);

struct ClusterSummary {
  std::size_t size = 0;
  std::vector<double> centroid;
};

ClusterSummary summarize(const Matrix& x, std::span<const std::size_t> members);

/// Ward merge cost |a||b| / (|a| + |b|) * ||mu_a - mu_b||^2.
/// ArgumentError if either cluster is empty.
double ward_delta(const ClusterSummary& a, const ClusterSummary& b);

/// The same cost as the growth in within-cluster sum of squares caused by
/// merging the two member sets.
double ward_delta_sum_of_squares(const Matrix& x, std::span<const std::size_t> a,
                                 std::span<const std::size_t> b);

/// One agglomeration step. Clusters are numbered as in SciPy linkage
/// matrices: points are 0..N-1 and the cluster created at step s (1-based)
/// is N + s - 1. cluster_a < cluster_b.
struct Merge {
  std::size_t step = 0;
  std::size_t cluster_a = 0;
  std::size_t cluster_b = 0;
  double delta = 0.0;
  std::size_t new_size = 0;

  friend bool operator==(const Merge&, const Merge&) = default;
};

/// Hard assignment of N items to clusters 1..k. Empty clusters are allowed
/// (random partitions). `centroids` is k x dims for data-driven partitions
/// and empty otherwise.
struct ClusterPartition {
  std::size_t k = 0;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> sizes;  // sizes[c - 1] is |S_c|
  Matrix centroids;

  std::vector<std::size_t> members(std::size_t cluster) const;
};

/// Builds a partition from 1-based labels, relabelling clusters 1..k in order
/// of their smallest member.
ClusterPartition canonical_partition(std::span<const std::size_t> labels);

struct WardResult {
  ClusterPartition partition;
  std::vector<Merge> history;
};

/// Agglomerates N singletons with the Ward criterion until k clusters remain.
/// Every step merges the pair with minimal cost; pairs within 1e-12 of the
/// minimum are tied and resolved towards the lexicographically smallest
/// (smaller min-member index, larger min-member index). Final labels are
/// ordered by smallest member. ArgumentError unless 1 <= k <= N.
WardResult ward_cluster(const Matrix& x, std::size_t k);
WardResult ward_cluster(const TagMatrix& x, std::size_t k);

/// Partition after replaying the first N - k merges of `history`.
ClusterPartition cut_dendrogram(const Matrix& x, std::span<const Merge> history, std::size_t k);

/// Within-cluster sum of squared distances to cluster means.
double partition_loss(const Matrix& x, const ClusterPartition& partition);

struct ElbowPoint {
  std::size_t k = 0;
  double loss = 0.0;
};

/// Loss of the Ward partition at each k, all cut from one dendrogram. The
/// loss at k is the running sum of the first N - k merge costs.
std::vector<ElbowPoint> elbow_curve(const Matrix& x, std::span<const std::size_t> k_values);

inline constexpr std::size_t kDefaultClusters = 12;

/// Returns `default_k` when given. Otherwise the interior k with the largest
/// discrete second difference L(k-1) - 2 L(k) + L(k+1), smallest k on ties.
/// ArgumentError for an empty curve, or fewer than three points without a
/// default.
std::size_t select_k(std::span<const ElbowPoint> curve, std::optional<std::size_t> default_k);

/// Edge density inside cluster `cluster` (1-based); nullopt for clusters with
/// fewer than two members.
std::optional<double> in_density(const ClusterPartition& partition,
                                 const graph::BinaryAdjacency& adjacency, std::size_t cluster);

/// Edge density between the cluster and the rest of the graph; nullopt for
/// an empty cluster or one covering every node.
std::optional<double> out_density(const ClusterPartition& partition,
                                  const graph::BinaryAdjacency& adjacency, std::size_t cluster);

struct DensityRow {
  std::size_t cluster = 0;
  std::size_t size = 0;
  std::optional<double> in;
  std::optional<double> out;
};

std::vector<DensityRow> density_report(const ClusterPartition& partition,
                                       const graph::BinaryAdjacency& adjacency);

/// Independent uniform labels in 1..k; deterministic per seed.
ClusterPartition random_partition(std::size_t n, std::size_t k, std::uint64_t seed);

struct Quantiles {
  double p05 = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
};

/// Linear-interpolation quantile (Hyndman-Fan type 7); `sorted` ascending
/// and non-empty.
double quantile(std::span<const double> sorted, double q);

struct DensityBenchmark {
  /// (in, out) for every sampled cluster with both densities defined.
  std::vector<std::pair<double, double>> cloud;
  std::size_t undefined = 0;  // sampled clusters with a missing density
  Quantiles in;
  Quantiles out;
};

/// Pools densities of `n_samples` random k-partitions; sample s uses seed
/// derive_seed(seed, s).
DensityBenchmark density_benchmark(const graph::BinaryAdjacency& adjacency, std::size_t k,
                                   std::size_t n_samples, std::uint64_t seed);

}  // namespace coinvest::clustering
