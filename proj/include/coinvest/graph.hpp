#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coinvest/date.hpp"
#include "coinvest/ingest.hpp"

namespace coinvest::graph {

/// Investor-asset network. An edge records that the investor took part in at
/// least one round of the asset, dated at the earliest such round.
struct BipartiteGraph {
  std::set<std::string> investors;
  std::set<std::string> assets;
  std::map<std::pair<std::string, std::string>, Date> edges;  // (investor, asset)
};

BipartiteGraph build_bipartite(const ingest::MergedDataset& dataset);

/// Simple undirected graph on nodes 0..n-1 stored as a dense 0/1 matrix.
class BinaryAdjacency {
 public:
  explicit BinaryAdjacency(std::size_t n = 0) : n_(n), cells_(n * n, 0) {}

  std::size_t size() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_; }

  bool has_edge(std::size_t i, std::size_t j) const { return cells_[i * n_ + j] != 0; }

  /// Sets or clears the undirected edge {i, j}. Self-loops are rejected.
  void set_edge(std::size_t i, std::size_t j, bool present = true);

  std::size_t degree(std::size_t i) const;
  std::vector<std::size_t> degrees() const;

  /// Unordered pairs (i < j), lexicographic.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;
  std::vector<std::vector<std::size_t>> neighbors() const;

  friend bool operator==(const BinaryAdjacency&, const BinaryAdjacency&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> cells_;
  std::size_t edges_ = 0;
};

struct CoInvestmentEdge {
  std::size_t u = 0;  // u < v, indices into CoInvestmentGraph::nodes
  std::size_t v = 0;
  std::size_t weight = 0;  // number of common investors
  Date earliest{};         // first date both endpoints shared an investor

  friend bool operator==(const CoInvestmentEdge&, const CoInvestmentEdge&) = default;
};

/// Weighted projection onto assets. Nodes are sorted asset ids; edges are
/// sorted by (u, v). `first_dates[i]` is the date of node i's first
/// bipartite edge.
struct CoInvestmentGraph {
  std::vector<std::string> nodes;
  std::vector<Date> first_dates;
  std::vector<CoInvestmentEdge> edges;

  std::optional<std::size_t> index_of(const std::string& asset) const;
  BinaryAdjacency adjacency() const;

  /// Binary adjacency over `assets` in the given order; assets absent from
  /// the graph become isolated nodes.
  BinaryAdjacency adjacency_for(std::span<const std::string> assets) const;

  friend bool operator==(const CoInvestmentGraph&, const CoInvestmentGraph&) = default;
};

/// Links two assets iff they share an investor; weight counts the shared
/// investors and earliest = min over them of max(date(v, i), date(v, j)).
/// Assets sharing no investor are left out.
CoInvestmentGraph project(const BipartiteGraph& bipartite);

/// Edges dated on or before `cutoff`, and the nodes whose first bipartite
/// edge is on or before `cutoff`.
CoInvestmentGraph snapshot_at(const CoInvestmentGraph& g, Date cutoff);

struct GrowthRow {
  int year = 0;
  std::size_t cumulative_nodes = 0;
  std::size_t cumulative_edges = 0;

  friend bool operator==(const GrowthRow&, const GrowthRow&) = default;
};

/// Year-end snapshot sizes. `years` must be sorted.
std::vector<GrowthRow> growth_series(const CoInvestmentGraph& g, std::span<const int> years);

struct DegreeDistribution {
  std::map<std::size_t, std::size_t> histogram;  // degree -> node count
  /// (d, fraction of nodes with degree >= d) for each degree present.
  std::vector<std::pair<std::size_t, double>> survival;
};

DegreeDistribution degree_distribution(const BinaryAdjacency& adjacency);
DegreeDistribution degree_distribution(const CoInvestmentGraph& g);

inline constexpr std::ptrdiff_t kUnreachable = -1;

/// Hop distances from `source`; kUnreachable for other components.
std::vector<std::ptrdiff_t> hop_distances(const std::vector<std::vector<std::size_t>>& neighbors,
                                          std::size_t source);

/// Hop-distance matrix, one BFS per node.
std::vector<std::vector<std::ptrdiff_t>> all_pairs_hops(const BinaryAdjacency& adjacency);

/// Hop distances keyed by asset id; unreachable assets are omitted.
/// ArgumentError when `source` is not a node.
std::map<std::string, std::size_t> bfs_distances(const CoInvestmentGraph& g,
                                                 const std::string& source);

/// (asset_i, asset_j, weight, earliest_date) rows, lexicographic.
std::string edge_list_csv(const CoInvestmentGraph& g);

/// (asset_id, first_investment_date, degree) rows, lexicographic.
std::string node_list_csv(const CoInvestmentGraph& g);

}  // namespace coinvest::graph
