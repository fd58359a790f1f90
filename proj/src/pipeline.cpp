#include "coinvest/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "coinvest/clustering.hpp"
#include "coinvest/csv.hpp"
#include "coinvest/errors.hpp"
#include "coinvest/graph.hpp"
#include "coinvest/hash.hpp"
#include "coinvest/ingest.hpp"
#include "coinvest/netcorr.hpp"
#include "coinvest/nullmodels.hpp"
#include "coinvest/random.hpp"
#include "coinvest/returns.hpp"

namespace coinvest::pipeline {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

// Indices fed to derive_seed for the independent random streams of a run.
constexpr std::uint64_t kSynthStream = 1;
constexpr std::uint64_t kDensityStream = 2;
constexpr std::uint64_t kErStream = 11;
constexpr std::uint64_t kConfigurationStream = 12;
constexpr std::uint64_t kSbmStream = 13;

// ---------------------------------------------------------------- config

[[noreturn]] void bad_setting(const std::string& key, const std::string& why) {
  throw ConfigError("config: '" + key + "' " + why);
}

std::size_t as_size(const Json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return v.get<std::size_t>();
  bad_setting(key, "must be a non-negative integer");
}

std::uint64_t as_u64(const Json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return v.get<std::uint64_t>();
  bad_setting(key, "must be a non-negative integer");
}

double as_double(const Json& v, const std::string& key) {
  if (!v.is_number()) bad_setting(key, "must be a number");
  return v.get<double>();
}

bool as_bool(const Json& v, const std::string& key) {
  if (!v.is_boolean()) bad_setting(key, "must be true or false");
  return v.get<bool>();
}

std::string as_string(const Json& v, const std::string& key) {
  if (!v.is_string()) bad_setting(key, "must be a string");
  return v.get<std::string>();
}

fs::path as_path(const Json& v, const std::string& key, const fs::path& base) {
  fs::path p = as_string(v, key);
  if (p.is_relative()) p = base / p;
  return p.lexically_normal();
}

void parse_inputs(const Json& j, InputPaths& in, const fs::path& base) {
  if (!j.is_object()) bad_setting("inputs", "must be an object");
  const std::map<std::string, std::optional<fs::path>*> fields = {
      {"dir", &in.dir},
      {"organizations", &in.organizations},
      {"funding_rounds", &in.funding_rounds},
      {"investments", &in.investments},
      {"assets", &in.assets},
      {"tags", &in.tags},
      {"prices", &in.prices},
      {"tag_universe", &in.tag_universe},
      {"market_cap", &in.market_cap},
  };
  for (const auto& [key, value] : j.items()) {
    auto it = fields.find(key);
    if (it == fields.end()) bad_setting("inputs." + key, "is not a recognised input");
    *it->second = as_path(value, "inputs." + key, base);
  }
}

void parse_synth(const Json& j, synth::PlantedSpec& s) {
  if (!j.is_object()) bad_setting("synth", "must be an object");
  for (const auto& [key, value] : j.items()) {
    const std::string name = "synth." + key;
    if (key == "n_communities") s.n_communities = as_size(value, name);
    else if (key == "assets_per_community") s.assets_per_community = as_size(value, name);
    else if (key == "investors_per_community") s.investors_per_community = as_size(value, name);
    else if (key == "within_probability") s.within_probability = as_double(value, name);
    else if (key == "cross_probability") s.cross_probability = as_double(value, name);
    else if (key == "beta_market") s.beta_market = as_double(value, name);
    else if (key == "beta_community") s.beta_community = as_double(value, name);
    else if (key == "idiosyncratic_sd") s.idiosyncratic_sd = as_double(value, name);
    else if (key == "volatility") s.volatility = as_double(value, name);
    else if (key == "weeks") s.weeks = as_size(value, name);
    else if (key == "start") {
      auto d = try_parse_date(as_string(value, name));
      if (!d) bad_setting(name, "must be a YYYY-MM-DD date");
      s.start = *d;
    } else if (key == "tag_signal") s.tag_signal = as_double(value, name);
    else if (key == "noise_tags") s.noise_tags = as_size(value, name);
    else if (key == "tag_noise") s.tag_noise = as_double(value, name);
    else bad_setting(name, "is not a recognised setting");
  }
}

Json synth_json(const synth::PlantedSpec& s) {
  Json j;
  j["n_communities"] = s.n_communities;
  j["assets_per_community"] = s.assets_per_community;
  j["investors_per_community"] = s.investors_per_community;
  j["within_probability"] = s.within_probability;
  j["cross_probability"] = s.cross_probability;
  j["beta_market"] = s.beta_market;
  j["beta_community"] = s.beta_community;
  j["idiosyncratic_sd"] = s.idiosyncratic_sd ? Json(*s.idiosyncratic_sd) : Json(nullptr);
  j["volatility"] = s.volatility;
  j["weeks"] = s.weeks;
  j["start"] = format_date(s.start);
  j["tag_signal"] = s.tag_signal;
  j["noise_tags"] = s.noise_tags;
  j["tag_noise"] = s.tag_noise;
  return j;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json optional_number(const std::optional<double>& v) {
  return v ? number_or_null(*v) : Json(nullptr);
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

// ------------------------------------------------------------- artifacts

class Output {
 public:
  explicit Output(const PipelineConfig& config)
      : root_(config.output_dir), fingerprint_(config.fingerprint()), seed_(config.seed) {}

  fs::path path(const fs::path& relative) const { return root_ / relative; }

  std::string header(std::string_view figure) const {
    return "# figure: " + std::string(figure) + "\n# config_fingerprint: " + fingerprint_ +
           "\n# seed: " + std::to_string(seed_) + "\n";
  }

  void csv(const fs::path& relative, std::string_view figure, const std::string& body) const {
    write_file(path(relative), header(figure) + body);
  }

  void json(const fs::path& relative, std::string_view figure, const Json& body) const {
    json_at(path(relative), figure, body);
  }

  void json_at(const fs::path& file, std::string_view figure, const Json& body) const {
    Json doc;
    doc["meta"] = {{"figure", figure}, {"config_fingerprint", fingerprint_}, {"seed", seed_}};
    for (const auto& [key, value] : body.items()) doc[key] = value;
    write_file(file, doc.dump(2) + "\n");
  }

  /// Prepends the header to a table written by another module.
  void annotate(const fs::path& file, std::string_view figure) const {
    write_file(file, header(figure) + read_file(file));
  }

  void require(const fs::path& relative, const std::string& stage) const {
    if (!fs::exists(path(relative))) {
      throw PrerequisiteError("missing " + path(relative).string() + "; run `coinvest " + stage +
                                  "` first",
                              stage);
    }
  }

 private:
  fs::path root_;
  std::string fingerprint_;
  std::uint64_t seed_;
};

const fs::path kJoinReport = "ingest/join_report.json";
const fs::path kEdges = "graph/edges.csv";
const fs::path kPartition = "cluster/partition.csv";
const fs::path kCorrelation = "returns/correlation.csv";
const fs::path kAdjustedCorrelation = "returns/adjusted_correlation.csv";
const fs::path kNullSummary = "nullbench/summary.json";

ingest::ParseOptions parse_options(const PipelineConfig& config) {
  ingest::ParseOptions options;
  if (config.ingestion_date) options.ingestion_date = *config.ingestion_date;
  return options;
}

ingest::MergedDataset load_dataset(const PipelineConfig& config, const Output& out) {
  out.require(kJoinReport, "ingest");
  return ingest::load_merged(out.path("ingest"), parse_options(config));
}

void annotate_merged(const Output& out, const fs::path& dir, std::string_view figure) {
  const auto paths = ingest::merged_paths(dir);
  for (const auto& p : {paths.organizations, paths.funding_rounds, paths.investments, paths.assets,
                        paths.tags, paths.prices, *paths.tag_universe}) {
    out.annotate(p, figure);
  }
  out.json_at(dir / "join_report.json", "join report",
           Json::parse(read_file(dir / "join_report.json")));
}

/// Cluster labels by asset id from the cluster stage output.
std::map<std::string, std::size_t> read_partition(const Output& out) {
  out.require(kPartition, "cluster");
  std::ifstream in(out.path(kPartition));
  CsvReader reader(in);
  const auto asset_col = reader.column("asset_id");
  const auto cluster_col = reader.column("cluster");
  if (!asset_col || !cluster_col) throw SchemaError(out.path(kPartition).string() + ": bad header");
  std::map<std::string, std::size_t> labels;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    auto label = parse_integer(fields.at(*cluster_col));
    if (!label || *label < 1) {
      throw SchemaError(out.path(kPartition).string() + ": bad cluster at line " +
                        std::to_string(reader.line()));
    }
    labels[fields.at(*asset_col)] = static_cast<std::size_t>(*label);
  }
  return labels;
}

std::size_t label_of(const std::map<std::string, std::size_t>& labels, const std::string& asset) {
  auto it = labels.find(asset);
  if (it == labels.end()) {
    throw DataError("asset " + asset + " has no cluster; rerun `coinvest cluster`");
  }
  return it->second;
}

double mean_off_diagonal(const Matrix& c) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (std::size_t j = i + 1; j < c.cols(); ++j) {
      sum += c(i, j);
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : std::nan("");
}

// ---------------------------------------------------------------- stages

void stage_synth(const PipelineConfig& config, const Output& out, std::ostream& log) {
  synth::PlantedSpec spec = config.synth;
  spec.seed = derive_seed(config.seed, kSynthStream);
  const auto planted = synth::generate_dataset(spec);
  const fs::path dir = out.path("synth");
  synth::write_dataset(planted, dir);
  annotate_merged(out, dir, "synthetic planted-community dataset");
  out.annotate(dir / synth::kGroundTruthFile, "synthetic planted communities");
  out.annotate(dir / synth::kMarketCapFile, "synthetic yearly market capitalization");

  const auto g = graph::project(graph::build_bipartite(planted.dataset));
  std::map<std::string, std::size_t> community;
  for (std::size_t i = 0; i < planted.dataset.assets.size(); ++i) {
    community[planted.dataset.assets[i].asset_id] = planted.ground_truth.labels[i];
  }
  std::size_t within = 0;
  for (const auto& e : g.edges) {
    if (community.at(g.nodes[e.u]) == community.at(g.nodes[e.v])) ++within;
  }
  Json body;
  body["spec"] = synth_json(spec);
  body["seed"] = spec.seed;
  body["idiosyncratic_sd"] = spec.sigma();
  body["assets"] = planted.dataset.assets.size();
  body["network_nodes"] = g.nodes.size();
  body["network_edges"] = g.edges.size();
  body["within_community_edge_fraction"] =
      g.edges.empty() ? Json(nullptr)
                      : Json(static_cast<double>(within) / static_cast<double>(g.edges.size()));
  out.json("synth/synth_summary.json", "synthetic dataset summary", body);
  log << "synth: " << planted.dataset.assets.size() << " assets, " << g.edges.size()
      << " co-investment links, written to " << dir.string() << "\n";
}

void stage_ingest(const PipelineConfig& config, const Output& out, std::ostream& log) {
  const auto in = config.resolve_inputs();
  for (const auto& p : {in.organizations, in.funding_rounds, in.investments, in.assets, in.tags,
                        in.prices}) {
    if (fs::exists(p)) continue;
    if (!config.inputs.dir && !config.inputs.organizations) {
      throw PrerequisiteError("input file " + p.string() +
                                  " not found; run `coinvest synth` first or set inputs in the "
                                  "configuration",
                              "synth");
    }
    throw ConfigError("input file not found: " + p.string());
  }
  if (config.inputs.tag_universe && !fs::exists(*config.inputs.tag_universe)) {
    throw ConfigError("input file not found: " + config.inputs.tag_universe->string());
  }
  if (config.inputs.market_cap && !fs::exists(*config.inputs.market_cap)) {
    throw ConfigError("input file not found: " + config.inputs.market_cap->string());
  }

  const auto options = parse_options(config);
  auto result = ingest::ingest_files({in.organizations, in.funding_rounds, in.investments,
                                      in.assets, in.tags, in.prices, in.tag_universe},
                                     options);
  const auto& data = result.dataset;
  const fs::path dir = out.path("ingest");
  ingest::write_merged(data, dir);
  annotate_merged(out, dir, "merged investment and market dataset");

  std::ostringstream rejects;
  write_csv_row(rejects, {"bundle", "line", "reason"});
  for (const auto& r : result.rejects) {
    write_csv_row(rejects, {r.bundle, std::to_string(r.line), r.reason});
  }
  out.csv("ingest/rejects.csv", "quarantined input rows", rejects.str());

  std::map<int, double> caps;
  if (in.market_cap) {
    auto parsed = ingest::parse_bundle_file<ingest::MarketCapRecord>(*in.market_cap, options);
    for (const auto& r : parsed.records) caps[r.year] = r.market_cap_usd;
    result.rejects.insert(result.rejects.end(), parsed.rejects.begin(), parsed.rejects.end());
  }
  const auto yearly = ingest::yearly_aggregates(data.rounds);
  std::ostringstream table;
  write_csv_row(table, {"year", "total_raised_usd", "investment_count", "market_cap_usd"});
  std::vector<double> vi, ni, mc;
  for (const auto& row : yearly) {
    auto cap = caps.find(row.year);
    write_csv_row(table, {std::to_string(row.year), format_double(row.total_raised_usd),
                          std::to_string(row.investment_count),
                          cap == caps.end() ? "" : format_double(cap->second)});
    if (cap != caps.end()) {
      vi.push_back(row.total_raised_usd);
      ni.push_back(static_cast<double>(row.investment_count));
      mc.push_back(cap->second);
    }
  }
  out.csv("ingest/yearly.csv", "yearly investment volume and count versus market capitalization",
          table.str());

  auto rank_correlation = [](const std::vector<double>& a, const std::vector<double>& b) -> Json {
    try {
      return ingest::spearman(a, b);
    } catch (const UndefinedStatistic&) {
      return nullptr;
    } catch (const ArgumentError&) {
      return nullptr;
    }
  };
  Json body;
  body["assets"] = data.assets.size();
  body["rounds"] = data.rounds.size();
  body["investments"] = data.investments.size();
  body["price_series"] = data.prices.size();
  body["rejects"] = result.rejects.size();
  body["years_with_market_cap"] = mc.size();
  body["spearman_market_cap_vs_volume"] = rank_correlation(mc, vi);
  body["spearman_market_cap_vs_count"] = rank_correlation(mc, ni);
  out.json("ingest/ingest_summary.json", "ingestion summary", body);
  log << "ingest: " << data.assets.size() << " matched assets, " << data.rounds.size()
      << " rounds, " << data.investments.size() << " investments, " << result.rejects.size()
      << " rejected rows\n";
}

void stage_graph(const PipelineConfig& config, const Output& out, std::ostream& log) {
  const auto data = load_dataset(config, out);
  const auto bipartite = graph::build_bipartite(data);
  const auto g = graph::project(bipartite);
  out.csv(kEdges, "co-investment network edge list", graph::edge_list_csv(g));
  out.csv("graph/nodes.csv", "co-investment network node list", graph::node_list_csv(g));

  std::vector<int> years = config.years;
  if (years.empty() && !g.first_dates.empty()) {
    const auto [lo, hi] = std::minmax_element(g.first_dates.begin(), g.first_dates.end());
    int last = year_of(*hi);
    for (const auto& e : g.edges) last = std::max(last, year_of(e.earliest));
    for (int y = year_of(*lo); y <= last; ++y) years.push_back(y);
  }
  std::sort(years.begin(), years.end());
  years.erase(std::unique(years.begin(), years.end()), years.end());

  std::ostringstream growth;
  write_csv_row(growth, {"year", "cumulative_nodes", "cumulative_edges"});
  for (const auto& row : graph::growth_series(g, years)) {
    write_csv_row(growth, {std::to_string(row.year), std::to_string(row.cumulative_nodes),
                           std::to_string(row.cumulative_edges)});
  }
  out.csv("graph/growth.csv", "co-investment network growth by year", growth.str());

  auto degree_table = [](const graph::DegreeDistribution& dist) {
    std::ostringstream s;
    write_csv_row(s, {"degree", "nodes", "survival"});
    for (const auto& [d, p] : dist.survival) {
      write_csv_row(s, {std::to_string(d), std::to_string(dist.histogram.at(d)), format_double(p)});
    }
    return s.str();
  };
  for (int y : years) {
    const auto snapshot = graph::snapshot_at(g, year_end(y));
    out.csv("graph/degree_" + std::to_string(y) + ".csv",
            "degree distribution of the network at the end of " + std::to_string(y),
            degree_table(graph::degree_distribution(snapshot)));
  }
  out.csv("graph/degree_all.csv", "degree distribution of the full network",
          degree_table(graph::degree_distribution(g)));

  Json body;
  body["investors"] = bipartite.investors.size();
  body["assets_with_investors"] = bipartite.assets.size();
  body["investor_asset_links"] = bipartite.edges.size();
  body["nodes"] = g.nodes.size();
  body["edges"] = g.edges.size();
  body["years"] = years;
  out.json("graph/graph_summary.json", "co-investment network summary", body);
  log << "graph: " << g.nodes.size() << " nodes, " << g.edges.size() << " edges\n";
}

void stage_cluster(const PipelineConfig& config, const Output& out, std::ostream& log) {
  const auto data = load_dataset(config, out);
  const auto tags = clustering::tag_matrix(data.assets, data.tag_universe);
  const std::size_t n = tags.assets.size();
  if (config.k > n) {
    throw ConfigError("k = " + std::to_string(config.k) + " exceeds the " + std::to_string(n) +
                      " assets with tag profiles");
  }
  const auto ward = clustering::ward_cluster(tags, config.k);
  const auto full = clustering::ward_cluster(tags, 1);

  std::ostringstream partition;
  write_csv_row(partition, {"asset_id", "cluster"});
  for (std::size_t i = 0; i < n; ++i) {
    write_csv_row(partition, {tags.assets[i], std::to_string(ward.partition.labels[i])});
  }
  out.csv(kPartition, "tag clusters", partition.str());

  std::ostringstream dendrogram;
  write_csv_row(dendrogram, {"step", "cluster_a", "cluster_b", "delta", "size"});
  for (const auto& m : full.history) {
    write_csv_row(dendrogram, {std::to_string(m.step), std::to_string(m.cluster_a),
                               std::to_string(m.cluster_b), format_double(m.delta),
                               std::to_string(m.new_size)});
  }
  out.csv("cluster/dendrogram.csv", "Ward dendrogram of tag profiles", dendrogram.str());

  std::vector<std::size_t> ks;
  for (std::size_t k = 1; k <= std::min(n, config.elbow_max_k); ++k) ks.push_back(k);
  const auto curve = clustering::elbow_curve(tags.x, ks);
  std::ostringstream elbow;
  write_csv_row(elbow, {"k", "loss"});
  for (const auto& p : curve) write_csv_row(elbow, {std::to_string(p.k), format_double(p.loss)});
  out.csv("cluster/elbow.csv", "elbow curve of the clustering loss", elbow.str());

  Json clusters = Json::array();
  for (std::size_t c = 1; c <= ward.partition.k; ++c) {
    Json tag_share;
    for (std::size_t t = 0; t < tags.universe.size(); ++t) {
      const double share = ward.partition.centroids(c - 1, t);
      if (share > 0.0) tag_share[tags.universe[t]] = share;
    }
    clusters.push_back({{"cluster", c},
                        {"size", ward.partition.sizes[c - 1]},
                        {"tag_share", tag_share.is_null() ? Json::object() : tag_share}});
  }
  Json body;
  body["k"] = config.k;
  body["elbow_k"] = curve.size() >= 3 ? Json(clustering::select_k(curve, std::nullopt)) : Json(nullptr);
  body["assets"] = n;
  body["loss"] = clustering::partition_loss(tags.x, ward.partition);
  body["unused_tags"] = tags.constant_columns();
  body["clusters"] = clusters;
  out.json("cluster/cluster_summary.json", "tag clusters summary", body);
  log << "cluster: " << n << " assets in " << config.k << " clusters\n";
}

void stage_density(const PipelineConfig& config, const Output& out, std::ostream& log) {
  out.require(kEdges, "graph");
  const auto labels = read_partition(out);
  const auto data = load_dataset(config, out);
  const auto g = graph::project(graph::build_bipartite(data));
  std::size_t k = 0;
  for (const auto& [asset, label] : labels) k = std::max(k, label);

  clustering::ClusterPartition partition;
  partition.k = k;
  partition.sizes.assign(k, 0);
  for (const auto& node : g.nodes) {
    const std::size_t label = label_of(labels, node);
    partition.labels.push_back(label);
    ++partition.sizes[label - 1];
  }
  const auto adjacency = g.adjacency();
  const auto rows = clustering::density_report(partition, adjacency);
  const auto bench = clustering::density_benchmark(adjacency, k, config.density_samples,
                                                   derive_seed(config.seed, kDensityStream));

  std::ostringstream points;
  write_csv_row(points, {"cluster", "size", "in_density", "out_density", "in_above_p95",
                         "out_below_p05"});
  Json above = Json::array();
  for (const auto& r : rows) {
    const bool high_in = r.in && *r.in > bench.in.p95;
    const bool low_out = r.out && *r.out < bench.out.p05;
    write_csv_row(points, {std::to_string(r.cluster), std::to_string(r.size), optional_cell(r.in),
                           optional_cell(r.out), high_in ? "1" : "0", low_out ? "1" : "0"});
    if (high_in) above.push_back(r.cluster);
  }
  out.csv("density/clusters.csv", "cluster in-density versus out-density", points.str());

  std::ostringstream cloud;
  write_csv_row(cloud, {"in_density", "out_density"});
  for (const auto& [in, outd] : bench.cloud) {
    write_csv_row(cloud, {format_double(in), format_double(outd)});
  }
  out.csv("density/cloud.csv", "random-partition density cloud", cloud.str());

  std::ostringstream quantiles;
  write_csv_row(quantiles, {"density", "p05", "p50", "p95"});
  write_csv_row(quantiles, {"in", format_double(bench.in.p05), format_double(bench.in.p50),
                            format_double(bench.in.p95)});
  write_csv_row(quantiles, {"out", format_double(bench.out.p05), format_double(bench.out.p50),
                            format_double(bench.out.p95)});
  out.csv("density/cloud_quantiles.csv", "random-partition density cloud quantiles",
          quantiles.str());

  Json body;
  body["nodes"] = g.nodes.size();
  body["k"] = k;
  body["samples"] = config.density_samples;
  body["cloud_points"] = bench.cloud.size();
  body["undefined_sampled_clusters"] = bench.undefined;
  body["clusters_above_cloud_in_p95"] = above;
  out.json("density/density_summary.json", "cluster density summary", body);
  log << "density: " << rows.size() << " clusters, " << above.size()
      << " above the random in-density 95th percentile\n";
}

void stage_returns(const PipelineConfig& config, const Output& out, std::ostream& log) {
  const auto data = load_dataset(config, out);
  std::map<std::string, returns::ReturnSeries> series;
  Json excluded = Json::array();
  for (const auto& [asset, prices] : data.prices) {
    try {
      series.emplace(asset, returns::loo_rescale(returns::log_returns(prices)));
    } catch (const ArgumentError& e) {
      excluded.push_back({{"asset_id", asset}, {"reason", e.what()}});
    } catch (const DataError& e) {
      excluded.push_back({{"asset_id", asset}, {"reason", e.what()}});
    }
  }
  auto panel = returns::align_panel(series, {config.min_overlap, config.strict_intersection});
  panel = returns::prune_insufficient(std::move(panel), config.min_overlap);
  if (panel.assets.size() < 2) {
    throw DataError("fewer than two assets have " + std::to_string(config.min_overlap) +
                    " overlapping weekly returns");
  }
  const auto c = returns::correlation_matrix(panel, config.min_overlap);
  const auto eigen = returns::eigendecompose(c);
  const auto adjusted_panel = returns::remove_market_mode(panel, eigen);
  const auto adjusted = returns::adjusted_correlation(adjusted_panel, config.min_overlap);
  const double residual = returns::market_mode_residual(adjusted, eigen);

  out.csv("returns/panel.csv", "rescaled weekly log-return panel", returns::panel_csv(panel));
  out.csv("returns/adjusted_panel.csv", "market-adjusted return panel",
          returns::panel_csv(adjusted_panel));
  out.csv(kCorrelation, "return correlation matrix", returns::matrix_csv(c));
  out.csv(kAdjustedCorrelation, "market-adjusted return correlation matrix",
          returns::matrix_csv(adjusted));

  std::ostringstream spectrum;
  write_csv_row(spectrum, {"rank", "eigenvalue"});
  for (std::size_t a = 0; a < eigen.values.size(); ++a) {
    write_csv_row(spectrum, {std::to_string(a + 1), format_double(eigen.values[a])});
  }
  out.csv("returns/spectrum.csv", "correlation matrix spectrum", spectrum.str());

  std::ostringstream market;
  write_csv_row(market, {"asset_id", "market_mode_loading"});
  for (std::size_t i = 0; i < panel.assets.size(); ++i) {
    write_csv_row(market, {panel.assets[i], format_double(eigen.vectors(0, i))});
  }
  out.csv("returns/market_mode.csv", "market mode loadings", market.str());

  Json body;
  body["assets"] = panel.assets.size();
  body["weeks"] = panel.grid.size();
  body["fully_observed"] = panel.fully_observed();
  body["excluded"] = excluded;
  body["dropped"] = panel.dropped;
  body["mean_off_diagonal"] = number_or_null(mean_off_diagonal(c.c));
  body["mean_off_diagonal_adjusted"] = number_or_null(mean_off_diagonal(adjusted.c));
  body["top_eigenvalue"] = eigen.values.front();
  body["negative_eigenvalues"] = eigen.negative_count;
  body["jacobi_sweeps"] = eigen.sweeps;
  body["market_mode_residual"] = residual;
  body["correlation_fingerprint"] = eigen.fingerprint;
  out.json("returns/returns_summary.json", "return correlation summary", body);
  log << "returns: " << panel.assets.size() << " assets over " << panel.grid.size()
      << " weeks, top eigenvalue " << format_double(eigen.values.front()) << "\n";
}

/// Shared inputs of the null-model and correlation stages: the network
/// restricted to assets with return data, the matching correlation
/// submatrices, and the three null models.
struct NetworkContext {
  std::vector<std::string> assets;
  returns::CorrelationMatrix c;
  returns::CorrelationMatrix adjusted;
  graph::BinaryAdjacency adjacency;
  nullmodels::BlockDensities blocks;
  std::vector<nullmodels::NullModelSpec> models;
};

NetworkContext network_context(const PipelineConfig& config, const Output& out) {
  out.require(kEdges, "graph");
  out.require(kCorrelation, "returns");
  out.require(kAdjustedCorrelation, "returns");
  const auto labels = read_partition(out);
  const auto data = load_dataset(config, out);
  const auto g = graph::project(graph::build_bipartite(data));
  const auto c = returns::read_matrix_csv(out.path(kCorrelation), returns::CorrelationKind::raw);
  const auto adjusted =
      returns::read_matrix_csv(out.path(kAdjustedCorrelation), returns::CorrelationKind::adjusted);

  NetworkContext ctx;
  std::set<std::string> with_returns(c.assets.begin(), c.assets.end());
  for (const auto& node : g.nodes) {
    if (with_returns.count(node)) ctx.assets.push_back(node);
  }
  if (ctx.assets.size() < 2) {
    throw DataError("fewer than two network nodes have return correlations");
  }
  ctx.c = netcorr::restrict_to(c, ctx.assets);
  ctx.adjusted = netcorr::restrict_to(adjusted, ctx.assets);
  ctx.adjacency = g.adjacency_for(ctx.assets);
  if (ctx.adjacency.edge_count() == 0) {
    throw DataError("no co-investment link joins two assets with return correlations");
  }

  std::vector<std::size_t> node_labels;
  for (const auto& asset : ctx.assets) node_labels.push_back(label_of(labels, asset));
  const auto partition = clustering::canonical_partition(node_labels);
  ctx.blocks = nullmodels::block_density_matrix(ctx.adjacency, partition);
  std::vector<std::size_t> block_of_node;
  for (std::size_t label : partition.labels) block_of_node.push_back(label - 1);

  const std::size_t n = ctx.assets.size();
  ctx.models.push_back({nullmodels::ErModel{n, nullmodels::er_probability(ctx.adjacency)},
                        derive_seed(config.seed, kErStream)});
  ctx.models.push_back({nullmodels::ConfigurationModel{ctx.adjacency, config.swap_factor},
                        derive_seed(config.seed, kConfigurationStream)});
  ctx.models.push_back({nullmodels::SbmModel{block_of_node, ctx.blocks.b},
                        derive_seed(config.seed, kSbmStream)});
  return ctx;
}

void stage_nullbench(const PipelineConfig& config, const Output& out, std::ostream& log) {
  const auto ctx = network_context(config, out);
  const auto real = netcorr::network_correlation(ctx.c, ctx.adjacency);
  const auto real_adjusted = netcorr::adjusted_network_correlation(ctx.adjusted, ctx.adjacency);
  const std::vector<nullmodels::Statistic> statistics = {
      {"C", [&](const graph::BinaryAdjacency& m) { return netcorr::network_correlation(ctx.c, m).value; },
       real.value},
      {"C_adjusted",
       [&](const graph::BinaryAdjacency& m) {
         return netcorr::adjusted_network_correlation(ctx.adjusted, m).value;
       },
       real_adjusted.value},
  };

  std::ostringstream summary, values;
  write_csv_row(summary, {"model", "statistic", "n", "undefined", "mean", "sd", "real", "z"});
  write_csv_row(values, {"model", "instance", "C", "C_adjusted"});
  Json models = Json::array();
  for (const auto& spec : ctx.models) {
    const auto results = nullmodels::benchmark(spec, config.null_samples, statistics, config.threads);
    Json stats = Json::array();
    for (const auto& s : results) {
      write_csv_row(summary, {s.model, s.statistic, std::to_string(s.n), std::to_string(s.undefined),
                              format_double(s.mean), format_double(s.sd),
                              optional_cell(s.real_value), optional_cell(s.z)});
      stats.push_back({{"statistic", s.statistic},
                       {"n", s.n},
                       {"undefined", s.undefined},
                       {"mean", number_or_null(s.mean)},
                       {"sd", number_or_null(s.sd)},
                       {"real", optional_number(s.real_value)},
                       {"z", optional_number(s.z)}});
    }
    for (std::size_t i = 0; i < config.null_samples; ++i) {
      write_csv_row(values, {spec.name(), std::to_string(i), format_double(results[0].values[i]),
                             format_double(results[1].values[i])});
    }
    Json model{{"model", spec.name()}, {"master_seed", spec.master_seed}, {"statistics", stats}};
    if (const auto* cm = std::get_if<nullmodels::ConfigurationModel>(&spec.model)) {
      model["swap_warning"] =
          nullmodels::sample_configuration(cm->base, derive_seed(spec.master_seed, 0), cm->swap_factor)
              .warning;
    } else if (const auto* er = std::get_if<nullmodels::ErModel>(&spec.model)) {
      model["p"] = er->p;
    }
    models.push_back(model);
    log << "nullbench: " << spec.name() << " done (" << config.null_samples << " instances)\n";
  }
  out.csv("nullbench/summary.csv", "null-model benchmark of link-averaged correlation",
          summary.str());
  out.csv("nullbench/values.csv", "null-model link-averaged correlation per instance",
          values.str());

  std::ostringstream blocks;
  std::vector<std::string> head = {"block", "size"};
  for (std::size_t b = 0; b < ctx.blocks.sizes.size(); ++b) head.push_back(std::to_string(b + 1));
  write_csv_row(blocks, head);
  for (std::size_t a = 0; a < ctx.blocks.sizes.size(); ++a) {
    std::vector<std::string> row = {std::to_string(a + 1), std::to_string(ctx.blocks.sizes[a])};
    for (std::size_t b = 0; b < ctx.blocks.sizes.size(); ++b) {
      row.push_back(a == b && ctx.blocks.undefined[a] ? "" : format_double(ctx.blocks.b(a, b)));
    }
    write_csv_row(blocks, row);
  }
  out.csv("nullbench/block_matrix.csv", "stochastic block model edge probabilities", blocks.str());

  Json body;
  body["nodes"] = ctx.assets.size();
  body["edges"] = ctx.adjacency.edge_count();
  body["real"] = {{"C", real.value},
                  {"C_adjusted", real_adjusted.value},
                  {"pairs", real.pairs},
                  {"skipped", real.skipped}};
  body["models"] = models;
  out.json(kNullSummary, "null-model benchmark summary", body);
}

struct NullProfile {
  std::string model;
  std::size_t samples = 0;
  std::vector<netcorr::DistanceRow> rows;
};

/// Distance profile averaged over the first `samples` benchmark instances;
/// standard errors describe the spread across instances.
NullProfile null_profile(const NetworkContext& ctx, const nullmodels::NullModelSpec& spec,
                         std::size_t samples, std::size_t d_max) {
  std::vector<std::vector<double>> raw(d_max), adj(d_max);
  std::vector<std::size_t> pairs(d_max, 0), adjusted_pairs(d_max, 0);
  for (std::size_t i = 0; i < samples; ++i) {
    const auto instance = nullmodels::sample(spec, derive_seed(spec.master_seed, i));
    const auto p = netcorr::distance_profile(ctx.c, ctx.adjusted, instance, d_max);
    for (std::size_t d = 0; d < d_max; ++d) {
      pairs[d] += p.rows[d].pairs;
      adjusted_pairs[d] += p.rows[d].adjusted_pairs;
      if (p.rows[d].pairs > 0) raw[d].push_back(p.rows[d].mean);
      if (p.rows[d].adjusted_pairs > 0) adj[d].push_back(p.rows[d].adjusted_mean);
    }
  }
  auto moments = [](const std::vector<double>& v) -> std::pair<double, double> {
    if (v.empty()) return {std::nan(""), std::nan("")};
    double sum = 0.0;
    for (double x : v) sum += x;
    const double mean = sum / static_cast<double>(v.size());
    if (v.size() < 2) return {mean, std::nan("")};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    return {mean, sd / std::sqrt(static_cast<double>(v.size()))};
  };
  NullProfile out{spec.name(), samples, {}};
  for (std::size_t d = 0; d < d_max; ++d) {
    const auto [m, se] = moments(raw[d]);
    const auto [am, ase] = moments(adj[d]);
    out.rows.push_back({d + 1, samples ? pairs[d] / samples : 0, m, se,
                        samples ? adjusted_pairs[d] / samples : 0, am, ase});
  }
  return out;
}

void stage_corr(const PipelineConfig& config, const Output& out, std::ostream& log) {
  out.require(kNullSummary, "nullbench");
  const auto ctx = network_context(config, out);
  const auto null_summary = Json::parse(read_file(out.path(kNullSummary)));
  const auto real = netcorr::network_correlation(ctx.c, ctx.adjacency);
  const auto real_adjusted = netcorr::adjusted_network_correlation(ctx.adjusted, ctx.adjacency);

  // Benchmark moments recorded by the nullbench stage.
  std::map<std::pair<std::string, std::string>, nullmodels::BenchmarkSummary> moments;
  for (const auto& model : null_summary.at("models")) {
    for (const auto& s : model.at("statistics")) {
      nullmodels::BenchmarkSummary b;
      b.model = model.at("model").get<std::string>();
      b.statistic = s.at("statistic").get<std::string>();
      b.n = s.at("n").get<std::size_t>();
      b.mean = s.at("mean").is_null() ? std::nan("") : s.at("mean").get<double>();
      b.sd = s.at("sd").is_null() ? std::nan("") : s.at("sd").get<double>();
      moments[{b.model, b.statistic}] = b;
    }
  }

  // Link-averaged correlations, real and null, with joint unit rescaling.
  struct Entry {
    std::string network, statistic;
    double value;
    std::optional<double> sd;
  };
  std::vector<Entry> entries = {{"real", "C", real.value, std::nullopt},
                                {"real", "C_adjusted", real_adjusted.value, std::nullopt}};
  for (const auto& spec : ctx.models) {
    for (const std::string stat : {"C", "C_adjusted"}) {
      auto it = moments.find({spec.name(), stat});
      if (it == moments.end()) {
        throw PrerequisiteError("null summary lacks " + spec.name() + "; rerun `coinvest nullbench`",
                                "nullbench");
      }
      entries.push_back({spec.name(), stat, it->second.mean, it->second.sd});
    }
  }
  std::vector<double> raw_values;
  for (const auto& e : entries) raw_values.push_back(e.value);
  std::optional<std::vector<double>> unit;
  try {
    unit = netcorr::rescale_unit(raw_values);
  } catch (const ArgumentError&) {
  }

  std::ostringstream table;
  write_csv_row(table, {"network", "statistic", "value", "sd", "z", "significant", "unit_rescaled"});
  Json significance = Json::array();
  bool beats_all = true;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    std::string z_cell, sig_cell;
    if (e.network != "real") {
      const double real_value = e.statistic == "C" ? real.value : real_adjusted.value;
      Json row{{"model", e.network}, {"statistic", e.statistic}};
      try {
        const auto s = netcorr::significance(real_value, moments.at({e.network, e.statistic}),
                                             config.significance_threshold);
        z_cell = format_double(s.z);
        sig_cell = s.significant ? "1" : "0";
        row["z"] = s.z;
        row["significant"] = s.significant;
        if (e.statistic == "C" && !s.significant) beats_all = false;
      } catch (const UndefinedStatistic&) {
        row["z"] = nullptr;
        row["significant"] = nullptr;
        if (e.statistic == "C") beats_all = false;
      }
      significance.push_back(row);
    }
    write_csv_row(table, {e.network, e.statistic, format_double(e.value),
                          e.sd ? format_double(*e.sd) : "", z_cell, sig_cell,
                          unit ? format_double((*unit)[i]) : ""});
  }
  out.csv("corr/network_correlation.csv",
          "link-averaged return correlation on real and null networks, unit rescaled",
          table.str());

  // Correlation versus hop distance, rescaled by the real network's value.
  const auto profile = netcorr::distance_profile(ctx.c, ctx.adjusted, ctx.adjacency, config.d_max);
  const std::size_t samples = std::min(config.profile_samples, config.null_samples);
  std::vector<NullProfile> profiles = {{"real", 1, profile.rows}};
  for (const auto& spec : ctx.models) {
    profiles.push_back(null_profile(ctx, spec, samples, config.d_max));
  }
  std::ostringstream dist;
  write_csv_row(dist, {"network", "distance", "pairs", "mean", "standard_error", "adjusted_pairs",
                       "adjusted_mean", "adjusted_standard_error", "rescaled_mean",
                       "rescaled_adjusted_mean"});
  for (const auto& p : profiles) {
    for (const auto& r : p.rows) {
      write_csv_row(dist, {p.model, std::to_string(r.distance), std::to_string(r.pairs),
                           format_double(r.mean), format_double(r.standard_error),
                           std::to_string(r.adjusted_pairs), format_double(r.adjusted_mean),
                           format_double(r.adjusted_standard_error),
                           format_double(r.mean / real.value),
                           format_double(r.adjusted_mean / real_adjusted.value)});
    }
  }
  out.csv("corr/distance_profile.csv",
          "return correlation versus co-investment distance, rescaled by the real network value",
          dist.str());

  Json body;
  body["nodes"] = ctx.assets.size();
  body["edges"] = ctx.adjacency.edge_count();
  body["C"] = real.value;
  body["C_adjusted"] = real_adjusted.value;
  body["linked_pairs"] = real.pairs;
  body["skipped_pairs"] = real.skipped;
  body["significance_threshold"] = config.significance_threshold;
  body["significance"] = significance;
  body["significant_against_all_models"] = beats_all;
  body["unreachable_pairs"] = profile.unreachable_pairs;
  body["pairs_beyond_d_max"] = profile.beyond_pairs;
  if (config.d_max >= 3) {
    const auto gap = netcorr::distance_gap(profile, 1, 3);
    body["distance_gap_1_3"] = {{"difference", number_or_null(gap.difference)},
                                {"pooled_standard_error", number_or_null(gap.pooled_standard_error)},
                                {"exceeds_two_standard_errors",
                                 gap.difference > 2.0 * gap.pooled_standard_error}};
  }
  out.json("corr/corr_summary.json", "network-conditioned correlation summary", body);
  log << "corr: C_A = " << format_double(real.value)
      << ", C'_A = " << format_double(real_adjusted.value)
      << (beats_all ? ", above every null model\n" : ", not above every null model\n");
}

void write_manifest(const PipelineConfig& config) {
  write_file(config.output_dir / kManifestFile, build_manifest(config.output_dir, config));
}

}  // namespace

// ------------------------------------------------------------ public API

void PipelineConfig::validate() const {
  auto require = [](bool ok, const std::string& key, const std::string& rule) {
    if (!ok) bad_setting(key, rule);
  };
  require(k >= 1, "k", "must be at least 1");
  require(min_overlap >= 2, "min_overlap", "must be at least 2");
  require(null_samples >= 2, "null_samples", "must be at least 2");
  require(d_max >= 1, "d_max", "must be at least 1");
  require(swap_factor >= 1, "swap_factor", "must be at least 1");
  require(density_samples >= 1, "density_samples", "must be at least 1");
  require(elbow_max_k >= 1, "elbow_max_k", "must be at least 1");
  require(threads >= 1, "threads", "must be at least 1");
  require(std::isfinite(significance_threshold), "significance_threshold", "must be finite");
  require(!output_dir.empty(), "output_dir", "must not be empty");
  try {
    synth.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

std::string canonical_settings(const PipelineConfig& c) {
  Json j;
  j["k"] = c.k;
  j["min_overlap"] = c.min_overlap;
  j["null_samples"] = c.null_samples;
  j["seed"] = c.seed;
  j["d_max"] = c.d_max;
  j["years"] = c.years;
  j["swap_factor"] = c.swap_factor;
  j["density_samples"] = c.density_samples;
  j["profile_samples"] = c.profile_samples;
  j["elbow_max_k"] = c.elbow_max_k;
  j["strict_intersection"] = c.strict_intersection;
  j["significance_threshold"] = c.significance_threshold;
  j["ingestion_date"] = c.ingestion_date ? Json(format_date(*c.ingestion_date)) : Json(nullptr);
  j["synth"] = synth_json(c.synth);
  return j.dump();
}

std::string PipelineConfig::fingerprint() const { return sha256_hex(canonical_settings(*this)); }

ResolvedInputs PipelineConfig::resolve_inputs() const {
  const fs::path dir = inputs.dir ? *inputs.dir : output_dir / "synth";
  const auto defaults = ingest::merged_paths(dir);
  ResolvedInputs r;
  r.organizations = inputs.organizations.value_or(defaults.organizations);
  r.funding_rounds = inputs.funding_rounds.value_or(defaults.funding_rounds);
  r.investments = inputs.investments.value_or(defaults.investments);
  r.assets = inputs.assets.value_or(defaults.assets);
  r.tags = inputs.tags.value_or(defaults.tags);
  r.prices = inputs.prices.value_or(defaults.prices);
  if (inputs.tag_universe) {
    r.tag_universe = inputs.tag_universe;
  } else if (defaults.tag_universe && fs::exists(*defaults.tag_universe)) {
    r.tag_universe = defaults.tag_universe;
  }
  if (inputs.market_cap) {
    r.market_cap = inputs.market_cap;
  } else if (fs::exists(dir / synth::kMarketCapFile)) {
    r.market_cap = dir / synth::kMarketCapFile;
  }
  return r;
}

PipelineConfig parse_config(std::string_view json_text, const fs::path& base_dir) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  PipelineConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "inputs") parse_inputs(value, c.inputs, base_dir);
    else if (key == "output_dir") c.output_dir = as_path(value, key, base_dir);
    else if (key == "k") c.k = as_size(value, key);
    else if (key == "min_overlap") c.min_overlap = as_size(value, key);
    else if (key == "null_samples") c.null_samples = as_size(value, key);
    else if (key == "seed") c.seed = as_u64(value, key);
    else if (key == "d_max") c.d_max = as_size(value, key);
    else if (key == "years") {
      if (!value.is_array()) bad_setting(key, "must be an array of years");
      c.years.clear();
      for (const auto& y : value) {
        if (!y.is_number_integer()) bad_setting(key, "must be an array of years");
        c.years.push_back(y.get<int>());
      }
    } else if (key == "swap_factor") c.swap_factor = as_size(value, key);
    else if (key == "density_samples") c.density_samples = as_size(value, key);
    else if (key == "profile_samples") c.profile_samples = as_size(value, key);
    else if (key == "elbow_max_k") c.elbow_max_k = as_size(value, key);
    else if (key == "strict_intersection") c.strict_intersection = as_bool(value, key);
    else if (key == "significance_threshold") c.significance_threshold = as_double(value, key);
    else if (key == "threads") c.threads = as_size(value, key);
    else if (key == "ingestion_date") {
      auto d = try_parse_date(as_string(value, key));
      if (!d) bad_setting(key, "must be a YYYY-MM-DD date");
      c.ingestion_date = *d;
    } else if (key == "synth") parse_synth(value, c.synth);
    else bad_setting(key, "is not a recognised setting");
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("cannot read configuration: ") + e.what());
  }
  const fs::path base = fs::absolute(path).parent_path();
  return parse_config(text, base);
}

std::optional<Stage> parse_stage(std::string_view name) {
  static const std::map<std::string_view, Stage> stages = {
      {"ingest", Stage::ingest},   {"graph", Stage::graph},         {"cluster", Stage::cluster},
      {"density", Stage::density}, {"returns", Stage::returns},     {"nullbench", Stage::nullbench},
      {"corr", Stage::corr},       {"synth", Stage::synth},         {"all", Stage::all},
  };
  auto it = stages.find(name);
  if (it == stages.end()) return std::nullopt;
  return it->second;
}

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::ingest: return "ingest";
    case Stage::graph: return "graph";
    case Stage::cluster: return "cluster";
    case Stage::density: return "density";
    case Stage::returns: return "returns";
    case Stage::nullbench: return "nullbench";
    case Stage::corr: return "corr";
    case Stage::synth: return "synth";
    case Stage::all: return "all";
  }
  return "unknown";
}

void run_stage(Stage stage, const PipelineConfig& config, std::ostream& log) {
  config.validate();
  const Output out(config);
  auto step = [&](Stage s) {
    switch (s) {
      case Stage::ingest: stage_ingest(config, out, log); break;
      case Stage::graph: stage_graph(config, out, log); break;
      case Stage::cluster: stage_cluster(config, out, log); break;
      case Stage::density: stage_density(config, out, log); break;
      case Stage::returns: stage_returns(config, out, log); break;
      case Stage::nullbench: stage_nullbench(config, out, log); break;
      case Stage::corr: stage_corr(config, out, log); break;
      case Stage::synth: stage_synth(config, out, log); break;
      case Stage::all: break;
    }
    write_manifest(config);
  };
  if (stage != Stage::all) {
    step(stage);
    return;
  }
  for (Stage s : {Stage::ingest, Stage::graph, Stage::cluster, Stage::density, Stage::returns,
                  Stage::nullbench, Stage::corr}) {
    step(s);
  }
}

int exit_code_for_current_exception(std::ostream& err) {
  try {
    throw;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const AmbiguityError& e) {
    err << "data error: " << e.what();
    for (const auto& id : e.ids()) err << "\n  " << id;
    err << "\n";
    return kExitData;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << "\n";
    return kExitData;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitData;
  } catch (const UndefinedStatistic& e) {
    err << "undefined statistic: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << " (residual " << format_double(e.residual())
        << ")\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOther;
  }
}

int run(std::string_view subcommand, const PipelineConfig& config, std::ostream& log,
        std::ostream& err) {
  const auto stage = parse_stage(subcommand);
  if (!stage) {
    err << "configuration error: unknown subcommand '" << subcommand << "'\n";
    return kExitConfig;
  }
  try {
    run_stage(*stage, config, log);
  } catch (...) {
    return exit_code_for_current_exception(err);
  }
  return kExitSuccess;
}

std::string build_manifest(const fs::path& output_dir, const PipelineConfig& config) {
  std::vector<std::pair<std::string, fs::path>> files;
  for (const auto& entry : fs::recursive_directory_iterator(output_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto relative = fs::relative(entry.path(), output_dir).generic_string();
    if (relative == kManifestFile) continue;
    files.emplace_back(relative, entry.path());
  }
  std::sort(files.begin(), files.end());
  Json artifacts = Json::array();
  for (const auto& [relative, path] : files) {
    const auto bytes = read_file(path);
    artifacts.push_back({{"path", relative}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
  }
  Json doc;
  doc["config_fingerprint"] = config.fingerprint();
  doc["seed"] = config.seed;
  doc["artifacts"] = artifacts;
  return doc.dump(2) + "\n";
}

}  // namespace coinvest::pipeline
