#include "coinvest/graph.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <unordered_map>

#include "coinvest/csv.hpp"
#include "coinvest/errors.hpp"

namespace coinvest::graph {

BipartiteGraph build_bipartite(const ingest::MergedDataset& dataset) {
  std::unordered_map<std::string, std::pair<std::string, Date>> round_info;
  for (const auto& r : dataset.rounds) {
    round_info.emplace(r.uuid, std::make_pair(dataset.asset_of_org.at(r.org_uuid), r.announced_on));
  }
  BipartiteGraph b;
  for (const auto& inv : dataset.investments) {
    const auto& [asset, date] = round_info.at(inv.funding_round_uuid);
    b.investors.insert(inv.investor_uuid);
    b.assets.insert(asset);
    auto [it, inserted] = b.edges.try_emplace({inv.investor_uuid, asset}, date);
    if (!inserted) it->second = std::min(it->second, date);
  }
  return b;
}

void BinaryAdjacency::set_edge(std::size_t i, std::size_t j, bool present) {
  if (i == j) throw ArgumentError("self-loop on node " + std::to_string(i));
  auto& cell = cells_[i * n_ + j];
  if ((cell != 0) == present) return;
  cell = present ? 1 : 0;
  cells_[j * n_ + i] = cell;
  if (present) {
    ++edges_;
  } else {
    --edges_;
  }
}

std::size_t BinaryAdjacency::degree(std::size_t i) const {
  std::size_t d = 0;
  for (std::size_t j = 0; j < n_; ++j) d += cells_[i * n_ + j];
  return d;
}

std::vector<std::size_t> BinaryAdjacency::degrees() const {
  std::vector<std::size_t> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = degree(i);
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> BinaryAdjacency::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(edges_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      if (cells_[i * n_ + j]) out.emplace_back(i, j);
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> BinaryAdjacency::neighbors() const {
  std::vector<std::vector<std::size_t>> out(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      if (cells_[i * n_ + j]) out[i].push_back(j);
    }
  }
  return out;
}

std::optional<std::size_t> CoInvestmentGraph::index_of(const std::string& asset) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), asset);
  if (it == nodes.end() || *it != asset) return std::nullopt;
  return static_cast<std::size_t>(it - nodes.begin());
}

BinaryAdjacency CoInvestmentGraph::adjacency() const {
  BinaryAdjacency a(nodes.size());
  for (const auto& e : edges) a.set_edge(e.u, e.v);
  return a;
}

BinaryAdjacency CoInvestmentGraph::adjacency_for(std::span<const std::string> assets) const {
  std::vector<std::ptrdiff_t> position(nodes.size(), -1);
  for (std::size_t i = 0; i < assets.size(); ++i) {
    if (auto idx = index_of(assets[i])) position[*idx] = static_cast<std::ptrdiff_t>(i);
  }
  BinaryAdjacency a(assets.size());
  for (const auto& e : edges) {
    if (position[e.u] >= 0 && position[e.v] >= 0) {
      a.set_edge(static_cast<std::size_t>(position[e.u]), static_cast<std::size_t>(position[e.v]));
    }
  }
  return a;
}

CoInvestmentGraph project(const BipartiteGraph& bipartite) {
  std::vector<std::string> assets(bipartite.assets.begin(), bipartite.assets.end());
  std::unordered_map<std::string, std::size_t> asset_index;
  for (std::size_t i = 0; i < assets.size(); ++i) asset_index.emplace(assets[i], i);

  // Portfolio of each investor; edges are keyed (investor, asset) so each
  // investor's entries are contiguous and in asset order.
  std::vector<Date> first(assets.size(), Date::max());
  std::map<std::pair<std::size_t, std::size_t>, std::pair<std::size_t, Date>> pairs;
  auto it = bipartite.edges.begin();
  std::vector<std::pair<std::size_t, Date>> portfolio;
  while (it != bipartite.edges.end()) {
    const std::string& investor = it->first.first;
    portfolio.clear();
    for (; it != bipartite.edges.end() && it->first.first == investor; ++it) {
      const std::size_t a = asset_index.at(it->first.second);
      portfolio.emplace_back(a, it->second);
      first[a] = std::min(first[a], it->second);
    }
    for (std::size_t x = 0; x < portfolio.size(); ++x) {
      for (std::size_t y = x + 1; y < portfolio.size(); ++y) {
        const Date shared = std::max(portfolio[x].second, portfolio[y].second);
        auto [p, inserted] =
            pairs.try_emplace({portfolio[x].first, portfolio[y].first}, 1, shared);
        if (!inserted) {
          ++p->second.first;
          p->second.second = std::min(p->second.second, shared);
        }
      }
    }
  }

  std::vector<bool> connected(assets.size(), false);
  for (const auto& [key, value] : pairs) {
    connected[key.first] = true;
    connected[key.second] = true;
  }
  CoInvestmentGraph g;
  std::vector<std::size_t> remap(assets.size(), 0);
  for (std::size_t i = 0; i < assets.size(); ++i) {
    if (!connected[i]) continue;
    remap[i] = g.nodes.size();
    g.nodes.push_back(assets[i]);
    g.first_dates.push_back(first[i]);
  }
  g.edges.reserve(pairs.size());
  for (const auto& [key, value] : pairs) {
    g.edges.push_back({remap[key.first], remap[key.second], value.first, value.second});
  }
  return g;
}

CoInvestmentGraph snapshot_at(const CoInvestmentGraph& g, Date cutoff) {
  CoInvestmentGraph s;
  std::vector<std::size_t> remap(g.nodes.size(), 0);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (g.first_dates[i] > cutoff) continue;
    remap[i] = s.nodes.size();
    s.nodes.push_back(g.nodes[i]);
    s.first_dates.push_back(g.first_dates[i]);
  }
  for (const auto& e : g.edges) {
    // An edge's date is never earlier than either endpoint's first date, so
    // both endpoints of a kept edge are kept.
    if (e.earliest <= cutoff) s.edges.push_back({remap[e.u], remap[e.v], e.weight, e.earliest});
  }
  return s;
}

std::vector<GrowthRow> growth_series(const CoInvestmentGraph& g, std::span<const int> years) {
  std::vector<GrowthRow> rows;
  rows.reserve(years.size());
  for (int year : years) {
    const Date cutoff = year_end(year);
    std::size_t nodes = 0, edges = 0;
    for (Date d : g.first_dates) nodes += d <= cutoff;
    for (const auto& e : g.edges) edges += e.earliest <= cutoff;
    rows.push_back({year, nodes, edges});
  }
  return rows;
}

DegreeDistribution degree_distribution(const BinaryAdjacency& adjacency) {
  DegreeDistribution out;
  for (std::size_t d : adjacency.degrees()) ++out.histogram[d];
  const double n = static_cast<double>(adjacency.size());
  std::size_t at_least = adjacency.size();
  for (const auto& [degree, count] : out.histogram) {
    out.survival.emplace_back(degree, static_cast<double>(at_least) / n);
    at_least -= count;
  }
  return out;
}

DegreeDistribution degree_distribution(const CoInvestmentGraph& g) {
  return degree_distribution(g.adjacency());
}

std::vector<std::ptrdiff_t> hop_distances(const std::vector<std::vector<std::size_t>>& neighbors,
                                          std::size_t source) {
  std::vector<std::ptrdiff_t> dist(neighbors.size(), kUnreachable);
  std::deque<std::size_t> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t v : neighbors[u]) {
      if (dist[v] != kUnreachable) continue;
      dist[v] = dist[u] + 1;
      queue.push_back(v);
    }
  }
  return dist;
}

std::vector<std::vector<std::ptrdiff_t>> all_pairs_hops(const BinaryAdjacency& adjacency) {
  const auto neighbors = adjacency.neighbors();
  std::vector<std::vector<std::ptrdiff_t>> out;
  out.reserve(adjacency.size());
  for (std::size_t s = 0; s < adjacency.size(); ++s) out.push_back(hop_distances(neighbors, s));
  return out;
}

std::map<std::string, std::size_t> bfs_distances(const CoInvestmentGraph& g,
                                                 const std::string& source) {
  auto start = g.index_of(source);
  if (!start) throw ArgumentError("unknown source asset '" + source + "'");
  const auto dist = hop_distances(g.adjacency().neighbors(), *start);
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] != kUnreachable) out.emplace(g.nodes[i], static_cast<std::size_t>(dist[i]));
  }
  return out;
}

std::string edge_list_csv(const CoInvestmentGraph& g) {
  std::ostringstream s;
  write_csv_row(s, {"asset_i", "asset_j", "weight", "earliest_date"});
  for (const auto& e : g.edges) {
    write_csv_row(s, {g.nodes[e.u], g.nodes[e.v], std::to_string(e.weight),
                      format_date(e.earliest)});
  }
  return s.str();
}

std::string node_list_csv(const CoInvestmentGraph& g) {
  const auto degrees = g.adjacency().degrees();
  std::ostringstream s;
  write_csv_row(s, {"asset_id", "first_investment_date", "degree"});
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    write_csv_row(s, {g.nodes[i], format_date(g.first_dates[i]), std::to_string(degrees[i])});
  }
  return s.str();
}

}  // namespace coinvest::graph
