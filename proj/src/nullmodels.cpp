#include "coinvest/nullmodels.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include <json.hpp>

#include "coinvest/errors.hpp"
#include "coinvest/random.hpp"

namespace coinvest::nullmodels {

double er_probability(const BinaryAdjacency& adjacency) {
  const std::size_t n = adjacency.size();
  if (n < 2) throw ArgumentError("er_probability: need at least two nodes");
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return static_cast<double>(adjacency.edge_count()) / pairs;
}

BinaryAdjacency sample_er(std::size_t n, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("sample_er: p outside [0, 1]");
  Rng rng(seed);
  BinaryAdjacency g(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.bernoulli(p)) g.set_edge(i, j);
    }
  }
  return g;
}

bool is_graphical(std::span<const std::size_t> degrees) {
  std::vector<std::size_t> d(degrees.begin(), degrees.end());
  std::sort(d.begin(), d.end(), std::greater<>());
  std::size_t total = 0;
  for (std::size_t x : d) total += x;
  if (total % 2 != 0) return false;
  const std::size_t n = d.size();
  std::size_t prefix = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    prefix += d[k - 1];
    std::size_t tail = 0;
    for (std::size_t i = k; i < n; ++i) tail += std::min(d[i], k);
    if (prefix > k * (k - 1) + tail) return false;
  }
  return true;
}

ConfigurationSample sample_configuration(const BinaryAdjacency& adjacency, std::uint64_t seed,
                                         std::size_t swap_factor) {
  if (swap_factor < 1) throw ArgumentError("swap_factor must be positive");
  ConfigurationSample out{adjacency, 0, 0, false};
  auto edges = adjacency.edges();
  if (edges.size() < 2) {
    out.warning = true;
    return out;
  }
  const std::size_t target = swap_factor * edges.size();
  const std::size_t budget = 100 * target + 1000;
  Rng rng(seed);
  BinaryAdjacency& g = out.graph;
  while (out.accepted_swaps < target && out.attempts < budget) {
    ++out.attempts;
    const auto e1 = static_cast<std::size_t>(rng.below(edges.size()));
    const auto e2 = static_cast<std::size_t>(rng.below(edges.size()));
    if (e1 == e2) continue;
    auto [a, b] = edges[e1];
    auto [c, d] = edges[e2];
    if (rng.bernoulli(0.5)) std::swap(c, d);
    // (a, b), (c, d) -> (a, d), (c, b)
    if (a == d || c == b || g.has_edge(a, d) || g.has_edge(c, b)) continue;
    g.set_edge(a, b, false);
    g.set_edge(c, d, false);
    g.set_edge(a, d);
    g.set_edge(c, b);
    edges[e1] = {std::min(a, d), std::max(a, d)};
    edges[e2] = {std::min(c, b), std::max(c, b)};
    ++out.accepted_swaps;
  }
  out.warning = out.accepted_swaps < target;
  return out;
}

BlockDensities block_density_matrix(const BinaryAdjacency& adjacency,
                                    const clustering::ClusterPartition& partition) {
  if (partition.labels.size() != adjacency.size()) {
    throw ArgumentError("partition does not cover the graph");
  }
  const std::size_t k = partition.k;
  BlockDensities out{Matrix(k, k), std::vector<bool>(k, false), partition.sizes};
  Matrix counts(k, k);
  for (const auto& [i, j] : adjacency.edges()) {
    const std::size_t a = partition.labels[i] - 1;
    const std::size_t b = partition.labels[j] - 1;
    counts(a, b) += 1.0;
    if (a != b) counts(b, a) += 1.0;
  }
  for (std::size_t a = 0; a < k; ++a) {
    const double na = static_cast<double>(out.sizes[a]);
    for (std::size_t b = 0; b < k; ++b) {
      const double nb = static_cast<double>(out.sizes[b]);
      if (a == b) {
        if (out.sizes[a] < 2) {
          out.undefined[a] = true;
        } else {
          out.b(a, a) = 2.0 * counts(a, a) / (na * (na - 1.0));
        }
      } else if (na > 0 && nb > 0) {
        out.b(a, b) = counts(a, b) / (na * nb);
      }
    }
  }
  return out;
}

namespace {

void validate_blocks(std::span<const std::size_t> block_of_node, const Matrix& b) {
  if (b.rows() != b.cols()) throw ArgumentError("block matrix must be square");
  for (std::size_t x = 0; x < b.rows(); ++x) {
    for (std::size_t y = 0; y < b.cols(); ++y) {
      if (!(b(x, y) >= 0.0 && b(x, y) <= 1.0)) {
        throw ArgumentError("block probability outside [0, 1]");
      }
      if (b(x, y) != b(y, x)) throw ArgumentError("block matrix must be symmetric");
    }
  }
  for (std::size_t block : block_of_node) {
    if (block >= b.rows()) throw ArgumentError("block index out of range");
  }
}

}  // namespace

BinaryAdjacency sample_sbm(std::span<const std::size_t> block_of_node, const Matrix& b,
                           std::uint64_t seed) {
  validate_blocks(block_of_node, b);
  Rng rng(seed);
  BinaryAdjacency g(block_of_node.size());
  for (std::size_t i = 0; i < block_of_node.size(); ++i) {
    for (std::size_t j = i + 1; j < block_of_node.size(); ++j) {
      if (rng.bernoulli(b(block_of_node[i], block_of_node[j]))) g.set_edge(i, j);
    }
  }
  return g;
}

BinaryAdjacency sample_sbm_sizes(std::span<const std::size_t> sizes, const Matrix& b,
                                 std::uint64_t seed) {
  std::vector<std::size_t> blocks;
  for (std::size_t block = 0; block < sizes.size(); ++block) blocks.insert(blocks.end(), sizes[block], block);
  return sample_sbm(blocks, b, seed);
}

std::string NullModelSpec::name() const {
  struct Visitor {
    std::string operator()(const ErModel&) const { return "erdos_renyi"; }
    std::string operator()(const ConfigurationModel&) const { return "configuration"; }
    std::string operator()(const SbmModel&) const { return "sbm"; }
  };
  return std::visit(Visitor{}, model);
}

std::size_t NullModelSpec::node_count() const {
  struct Visitor {
    std::size_t operator()(const ErModel& m) const { return m.n; }
    std::size_t operator()(const ConfigurationModel& m) const { return m.base.size(); }
    std::size_t operator()(const SbmModel& m) const { return m.block_of_node.size(); }
  };
  return std::visit(Visitor{}, model);
}

void NullModelSpec::validate() const {
  if (const auto* er = std::get_if<ErModel>(&model)) {
    if (!(er->p >= 0.0 && er->p <= 1.0)) throw ArgumentError("ER p outside [0, 1]");
  } else if (const auto* cm = std::get_if<ConfigurationModel>(&model)) {
    if (cm->swap_factor < 1) throw ArgumentError("swap_factor must be positive");
    if (!is_graphical(cm->base.degrees())) throw ArgumentError("degree sequence is not graphical");
  } else {
    const auto& sbm = std::get<SbmModel>(model);
    validate_blocks(sbm.block_of_node, sbm.b);
  }
}

BinaryAdjacency sample(const NullModelSpec& spec, std::uint64_t seed) {
  if (const auto* er = std::get_if<ErModel>(&spec.model)) return sample_er(er->n, er->p, seed);
  if (const auto* cm = std::get_if<ConfigurationModel>(&spec.model)) {
    return sample_configuration(cm->base, seed, cm->swap_factor).graph;
  }
  const auto& sbm = std::get<SbmModel>(spec.model);
  return sample_sbm(sbm.block_of_node, sbm.b, seed);
}

std::vector<BenchmarkSummary> benchmark(const NullModelSpec& spec, std::size_t n,
                                        std::span<const Statistic> statistics,
                                        std::size_t threads) {
  if (n < 2) throw ArgumentError("benchmark: need at least two instances");
  spec.validate();
  const std::size_t m = statistics.size();
  std::vector<std::vector<double>> values(m, std::vector<double>(n, 0.0));

  auto run = [&](std::size_t first, std::size_t last) {
    for (std::size_t i = first; i < last; ++i) {
      const auto instance = sample(spec, derive_seed(spec.master_seed, i));
      for (std::size_t s = 0; s < m; ++s) {
        try {
          values[s][i] = statistics[s].evaluate(instance);
        } catch (const UndefinedStatistic&) {
          values[s][i] = std::numeric_limits<double>::quiet_NaN();
        }
      }
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, n);
  if (threads == 1) {
    run(0, n);
  } else {
    std::vector<std::jthread> workers;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t first = 0; first < n; first += chunk) {
      workers.emplace_back(run, first, std::min(n, first + chunk));
    }
  }

  std::vector<BenchmarkSummary> out;
  for (std::size_t s = 0; s < m; ++s) {
    BenchmarkSummary summary;
    summary.statistic = statistics[s].name;
    summary.model = spec.name();
    summary.master_seed = spec.master_seed;
    summary.n = n;
    summary.values = std::move(values[s]);
    summary.real_value = statistics[s].real_value;
    // Reduction in instance order so the result is independent of threading.
    double sum = 0.0;
    std::size_t defined = 0;
    for (double v : summary.values) {
      if (std::isnan(v)) {
        ++summary.undefined;
      } else {
        sum += v;
        ++defined;
      }
    }
    summary.mean = defined ? sum / static_cast<double>(defined)
                           : std::numeric_limits<double>::quiet_NaN();
    double ss = 0.0;
    for (double v : summary.values) {
      if (!std::isnan(v)) ss += (v - summary.mean) * (v - summary.mean);
    }
    summary.sd = defined > 1 ? std::sqrt(ss / static_cast<double>(defined - 1))
                             : std::numeric_limits<double>::quiet_NaN();
    if (summary.real_value && summary.sd > 0.0) {
      summary.z = (*summary.real_value - summary.mean) / summary.sd;
    }
    out.push_back(std::move(summary));
  }
  return out;
}

BenchmarkSummary benchmark(const NullModelSpec& spec, std::size_t n, const Statistic& statistic,
                           std::size_t threads) {
  return std::move(benchmark(spec, n, std::span(&statistic, 1), threads).front());
}

std::string summary_json(const BenchmarkSummary& summary, bool include_values) {
  using Json = nlohmann::ordered_json;
  auto number = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  Json j;
  j["statistic"] = summary.statistic;
  j["model"] = summary.model;
  j["master_seed"] = summary.master_seed;
  j["n"] = summary.n;
  j["undefined"] = summary.undefined;
  j["mean"] = number(summary.mean);
  j["sd"] = number(summary.sd);
  j["real"] = summary.real_value ? number(*summary.real_value) : Json(nullptr);
  j["z"] = summary.z ? number(*summary.z) : Json(nullptr);
  if (include_values) {
    Json values = Json::array();
    for (double v : summary.values) values.push_back(number(v));
    j["values"] = values;
  }
  return j.dump(2) + "\n";
}

}  // namespace coinvest::nullmodels
