#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "coinvest/clustering.hpp"
#include "coinvest/date.hpp"
#include "coinvest/ingest.hpp"

namespace coinvest::synth {

/// Planted-community dataset parameters. Asset returns follow
///   r_i(t) = volatility * (beta_market F(t) + beta_community G_c(i)(t) + sigma e_i(t))
/// with independent standard normal factors. When `idiosyncratic_sd` is unset
/// sigma is sqrt(1 - beta_market^2 - beta_community^2), so every return has
/// variance volatility^2.
struct PlantedSpec {
  std::size_t n_communities = 4;
  std::size_t assets_per_community = 15;
  std::size_t investors_per_community = 6;
  /// Chance that an investor funds a given asset of its own community.
  double within_probability = 0.5;
  /// Chance, per investor and foreign community, of one investment into a
  /// random asset of that community.
  double cross_probability = 0.05;
  double beta_market = 0.5;
  double beta_community = 0.6;
  std::optional<double> idiosyncratic_sd;
  double volatility = 0.05;
  std::size_t weeks = 500;  // number of weekly returns; one more price sample
  Date start = Date{std::chrono::year{2012} / 1 / 2};
  /// Tags: community c carries tag "sector-<c>" with probability tag_signal;
  /// every asset also draws each of `noise_tags` generic tags with
  /// probability tag_noise.
  double tag_signal = 0.25;
  std::size_t noise_tags = 6;
  double tag_noise = 0.3;
  std::uint64_t seed = 20240501;

  double sigma() const;
  /// ArgumentError naming the offending field.
  void validate() const;
};

struct PlantedDataset {
  ingest::MergedDataset dataset;
  /// Community of each asset, 1-based, in dataset.assets order.
  clustering::ClusterPartition ground_truth;
  /// Yearly capitalization series that tracks the funding totals.
  std::vector<ingest::MarketCapRecord> market_caps;
};

/// Deterministic per seed.
PlantedDataset generate_dataset(const PlantedSpec& spec);

/// File names written by write_dataset besides the merged bundle.
inline constexpr const char* kGroundTruthFile = "ground_truth.csv";
inline constexpr const char* kMarketCapFile = "market_cap.csv";

/// Writes the dataset in the ingest input formats (see ingest::write_merged)
/// plus ground_truth.csv and market_cap.csv.
void write_dataset(const PlantedDataset& planted, const std::filesystem::path& dir);

}  // namespace coinvest::synth
