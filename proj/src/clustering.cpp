#include "coinvest/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "coinvest/errors.hpp"
#include "coinvest/random.hpp"

namespace coinvest::clustering {

namespace {

constexpr double kTieTolerance = 1e-12;

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double sum_of_squares(const Matrix& x, std::span<const std::size_t> members) {
  if (members.empty()) return 0.0;
  const auto mean = summarize(x, members).centroid;
  double s = 0.0;
  for (std::size_t m : members) s += squared_distance(x.row(m), mean);
  return s;
}

// Cluster edge counts in one pass over the edge list: internal[c] counts
// edges inside cluster c, boundary[c] edges leaving it.
void edge_counts(const ClusterPartition& p, const graph::BinaryAdjacency& a,
                 std::vector<std::size_t>& internal, std::vector<std::size_t>& boundary) {
  internal.assign(p.k + 1, 0);
  boundary.assign(p.k + 1, 0);
  for (const auto& [i, j] : a.edges()) {
    const std::size_t ci = p.labels[i];
    const std::size_t cj = p.labels[j];
    if (ci == cj) {
      ++internal[ci];
    } else {
      ++boundary[ci];
      ++boundary[cj];
    }
  }
}

std::optional<double> in_from_counts(std::size_t size, std::size_t internal) {
  if (size < 2) return std::nullopt;
  const double s = static_cast<double>(size);
  return 2.0 * static_cast<double>(internal) / (s * (s - 1.0));
}

std::optional<double> out_from_counts(std::size_t size, std::size_t n, std::size_t boundary) {
  if (size == 0 || size >= n) return std::nullopt;
  return static_cast<double>(boundary) /
         (static_cast<double>(size) * static_cast<double>(n - size));
}

void check_cluster(const ClusterPartition& p, const graph::BinaryAdjacency& a,
                   std::size_t cluster) {
  if (cluster < 1 || cluster > p.k) {
    throw ArgumentError("cluster index " + std::to_string(cluster) + " outside 1.." +
                        std::to_string(p.k));
  }
  if (p.labels.size() != a.size()) throw ArgumentError("partition and graph sizes differ");
}

}  // namespace

std::vector<std::string> TagMatrix::constant_columns() const {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    bool any = false;
    for (std::size_t i = 0; i < x.rows() && !any; ++i) any = x(i, j) != 0.0;
    if (!any) out.push_back(universe[j]);
  }
  return out;
}

TagMatrix tag_matrix(std::span<const ingest::AssetProfile> profiles,
                     std::span<const std::string> universe) {
  if (universe.empty()) throw ArgumentError("empty tag universe");
  std::map<std::string, std::size_t> column;
  for (std::size_t j = 0; j < universe.size(); ++j) column.emplace(universe[j], j);

  std::vector<const ingest::AssetProfile*> sorted;
  for (const auto& p : profiles) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(),
            [](auto* a, auto* b) { return a->asset_id < b->asset_id; });

  TagMatrix m;
  m.universe.assign(universe.begin(), universe.end());
  m.x = Matrix(sorted.size(), universe.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    m.assets.push_back(sorted[i]->asset_id);
    for (const auto& tag : sorted[i]->tags) {
      auto it = column.find(tag);
      if (it == column.end()) {
        throw SchemaError("asset " + sorted[i]->asset_id + " has tag '" + tag +
                          "' outside the tag universe");
      }
      m.x(i, it->second) = 1.0;
    }
  }
  return m;
}

ClusterSummary summarize(const Matrix& x, std::span<const std::size_t> members) {
  ClusterSummary s{members.size(), std::vector<double>(x.cols(), 0.0)};
  for (std::size_t m : members) {
    for (std::size_t j = 0; j < x.cols(); ++j) s.centroid[j] += x(m, j);
  }
  for (double& c : s.centroid) c /= static_cast<double>(std::max<std::size_t>(members.size(), 1));
  return s;
}

double ward_delta(const ClusterSummary& a, const ClusterSummary& b) {
  if (a.size == 0 || b.size == 0) throw ArgumentError("ward_delta: empty cluster");
  const double na = static_cast<double>(a.size);
  const double nb = static_cast<double>(b.size);
  return na * nb / (na + nb) * squared_distance(a.centroid, b.centroid);
}

double ward_delta_sum_of_squares(const Matrix& x, std::span<const std::size_t> a,
                                 std::span<const std::size_t> b) {
  if (a.empty() || b.empty()) throw ArgumentError("ward_delta: empty cluster");
  std::vector<std::size_t> both(a.begin(), a.end());
  both.insert(both.end(), b.begin(), b.end());
  return sum_of_squares(x, both) - sum_of_squares(x, a) - sum_of_squares(x, b);
}

std::vector<std::size_t> ClusterPartition::members(std::size_t cluster) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == cluster) out.push_back(i);
  }
  return out;
}

ClusterPartition canonical_partition(std::span<const std::size_t> labels) {
  std::map<std::size_t, std::size_t> relabel;
  ClusterPartition p;
  p.labels.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = relabel.try_emplace(labels[i], relabel.size() + 1);
    p.labels[i] = it->second;
  }
  p.k = relabel.size();
  p.sizes.assign(p.k, 0);
  for (std::size_t l : p.labels) ++p.sizes[l - 1];
  return p;
}

WardResult ward_cluster(const Matrix& x, std::size_t k) {
  const std::size_t n = x.rows();
  if (k < 1 || k > n) {
    throw ArgumentError("k = " + std::to_string(k) + " outside 1.." + std::to_string(n));
  }
  // Slot i holds the cluster whose smallest member is point i.
  std::vector<ClusterSummary> cluster(n);
  std::vector<std::size_t> node_id(n);
  std::vector<bool> active(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    cluster[i] = {1, std::vector<double>(x.row(i).begin(), x.row(i).end())};
    node_id[i] = i;
  }
  Matrix delta(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) delta(i, j) = ward_delta(cluster[i], cluster[j]);
  }

  WardResult result;
  result.history.reserve(n - k);
  for (std::size_t step = 1; step <= n - k; ++step) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (active[j]) best = std::min(best, delta(i, j));
      }
    }
    // Row-major scan finds the lexicographically smallest tied pair first.
    std::size_t a = n, b = n;
    for (std::size_t i = 0; i < n && a == n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (active[j] && delta(i, j) <= best + kTieTolerance) {
          a = i;
          b = j;
          break;
        }
      }
    }

    const double merged_delta = delta(a, b);
    const double na = static_cast<double>(cluster[a].size);
    const double nb = static_cast<double>(cluster[b].size);
    for (std::size_t c = 0; c < x.cols(); ++c) {
      cluster[a].centroid[c] = (na * cluster[a].centroid[c] + nb * cluster[b].centroid[c]) / (na + nb);
    }
    cluster[a].size += cluster[b].size;
    active[b] = false;

    result.history.push_back({step, std::min(node_id[a], node_id[b]),
                              std::max(node_id[a], node_id[b]), merged_delta, cluster[a].size});
    node_id[a] = n + step - 1;

    for (std::size_t c = 0; c < n; ++c) {
      if (!active[c] || c == a) continue;
      const double d = ward_delta(cluster[a], cluster[c]);
      if (c < a) {
        delta(c, a) = d;
      } else {
        delta(a, c) = d;
      }
    }
  }

  result.partition = cut_dendrogram(x, result.history, k);
  return result;
}

WardResult ward_cluster(const TagMatrix& x, std::size_t k) { return ward_cluster(x.x, k); }

ClusterPartition cut_dendrogram(const Matrix& x, std::span<const Merge> history, std::size_t k) {
  const std::size_t n = x.rows();
  if (k < 1 || k > n || n - k > history.size()) {
    throw ArgumentError("cannot cut dendrogram at k = " + std::to_string(k));
  }
  // Representative point of each dendrogram node, and a union-find over points.
  std::vector<std::size_t> representative(n + history.size());
  std::iota(representative.begin(), representative.begin() + static_cast<std::ptrdiff_t>(n), 0);
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t s = 0; s < n - k; ++s) {
    const Merge& m = history[s];
    const std::size_t ra = find(representative[m.cluster_a]);
    const std::size_t rb = find(representative[m.cluster_b]);
    const std::size_t root = std::min(ra, rb);
    parent[std::max(ra, rb)] = root;
    representative[n + s] = root;
  }
  std::vector<std::size_t> roots(n);
  for (std::size_t i = 0; i < n; ++i) roots[i] = find(i) + 1;
  ClusterPartition p = canonical_partition(roots);
  p.centroids = Matrix(p.k, x.cols());
  for (std::size_t c = 1; c <= p.k; ++c) {
    const auto mean = summarize(x, p.members(c)).centroid;
    std::copy(mean.begin(), mean.end(), p.centroids.row(c - 1).begin());
  }
  return p;
}

double partition_loss(const Matrix& x, const ClusterPartition& partition) {
  double total = 0.0;
  for (std::size_t c = 1; c <= partition.k; ++c) total += sum_of_squares(x, partition.members(c));
  return total;
}

std::vector<ElbowPoint> elbow_curve(const Matrix& x, std::span<const std::size_t> k_values) {
  const std::size_t n = x.rows();
  for (std::size_t k : k_values) {
    if (k < 1 || k > n) {
      throw ArgumentError("k = " + std::to_string(k) + " outside 1.." + std::to_string(n));
    }
  }
  const auto full = ward_cluster(x, 1);
  // cumulative[s] = loss after s merges.
  std::vector<double> cumulative(n, 0.0);
  for (std::size_t s = 1; s < n; ++s) cumulative[s] = cumulative[s - 1] + full.history[s - 1].delta;
  std::vector<ElbowPoint> curve;
  curve.reserve(k_values.size());
  for (std::size_t k : k_values) curve.push_back({k, cumulative[n - k]});
  return curve;
}

std::size_t select_k(std::span<const ElbowPoint> curve, std::optional<std::size_t> default_k) {
  if (curve.empty()) throw ArgumentError("select_k: empty elbow curve");
  if (default_k) {
    if (*default_k < 1) throw ArgumentError("select_k: default k must be positive");
    return *default_k;
  }
  if (curve.size() < 3) throw ArgumentError("select_k: need at least three curve points");
  std::size_t best_k = curve[1].k;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < curve.size(); ++i) {
    const double second = curve[i - 1].loss - 2.0 * curve[i].loss + curve[i + 1].loss;
    if (second > best + kTieTolerance) {
      best = second;
      best_k = curve[i].k;
    }
  }
  return best_k;
}

std::optional<double> in_density(const ClusterPartition& partition,
                                  const graph::BinaryAdjacency& adjacency, std::size_t cluster) {
  check_cluster(partition, adjacency, cluster);
  const auto members = partition.members(cluster);
  std::size_t internal = 0;
  for (std::size_t x = 0; x < members.size(); ++x) {
    for (std::size_t y = x + 1; y < members.size(); ++y) {
      internal += adjacency.has_edge(members[x], members[y]);
    }
  }
  return in_from_counts(members.size(), internal);
}

std::optional<double> out_density(const ClusterPartition& partition,
                                  const graph::BinaryAdjacency& adjacency, std::size_t cluster) {
  check_cluster(partition, adjacency, cluster);
  std::size_t size = 0, boundary = 0;
  for (std::size_t i = 0; i < adjacency.size(); ++i) {
    if (partition.labels[i] != cluster) continue;
    ++size;
    for (std::size_t j = 0; j < adjacency.size(); ++j) {
      boundary += partition.labels[j] != cluster && adjacency.has_edge(i, j);
    }
  }
  return out_from_counts(size, adjacency.size(), boundary);
}

std::vector<DensityRow> density_report(const ClusterPartition& partition,
                                       const graph::BinaryAdjacency& adjacency) {
  if (partition.labels.size() != adjacency.size()) {
    throw ArgumentError("partition and graph sizes differ");
  }
  std::vector<std::size_t> internal, boundary;
  edge_counts(partition, adjacency, internal, boundary);
  std::vector<DensityRow> rows;
  for (std::size_t c = 1; c <= partition.k; ++c) {
    const std::size_t size = partition.sizes[c - 1];
    rows.push_back({c, size, in_from_counts(size, internal[c]),
                    out_from_counts(size, adjacency.size(), boundary[c])});
  }
  return rows;
}

ClusterPartition random_partition(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 1) throw ArgumentError("random_partition: k must be positive");
  Rng rng(seed);
  ClusterPartition p;
  p.k = k;
  p.labels.resize(n);
  p.sizes.assign(k, 0);
  for (auto& label : p.labels) {
    label = 1 + static_cast<std::size_t>(rng.below(k));
    ++p.sizes[label - 1];
  }
  return p;
}

double quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ArgumentError("quantile of empty sample");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

DensityBenchmark density_benchmark(const graph::BinaryAdjacency& adjacency, std::size_t k,
                                   std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw ArgumentError("density_benchmark: need at least one sample");
  DensityBenchmark bench;
  std::vector<std::size_t> internal, boundary;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const auto p = random_partition(adjacency.size(), k, derive_seed(seed, s));
    edge_counts(p, adjacency, internal, boundary);
    for (std::size_t c = 1; c <= k; ++c) {
      auto in = in_from_counts(p.sizes[c - 1], internal[c]);
      auto out = out_from_counts(p.sizes[c - 1], adjacency.size(), boundary[c]);
      if (in && out) {
        bench.cloud.emplace_back(*in, *out);
      } else {
        ++bench.undefined;
      }
    }
  }
  if (!bench.cloud.empty()) {
    std::vector<double> ins, outs;
    for (const auto& [i, o] : bench.cloud) {
      ins.push_back(i);
      outs.push_back(o);
    }
    std::sort(ins.begin(), ins.end());
    std::sort(outs.begin(), outs.end());
    bench.in = {quantile(ins, 0.05), quantile(ins, 0.5), quantile(ins, 0.95)};
    bench.out = {quantile(outs, 0.05), quantile(outs, 0.5), quantile(outs, 0.95)};
  }
  return bench;
}

}  // namespace coinvest::clustering
