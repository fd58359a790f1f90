#include "coinvest/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "coinvest/csv.hpp"
#include "coinvest/errors.hpp"
#include "coinvest/random.hpp"

namespace coinvest::synth {

namespace {

std::string numbered(const char* prefix, std::size_t value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%s%03zu", prefix, value);
  return buffer;
}

void require(bool ok, const std::string& field, const std::string& rule) {
  if (!ok) throw ArgumentError("planted spec: " + field + " " + rule);
}

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

double PlantedSpec::sigma() const {
  if (idiosyncratic_sd) return *idiosyncratic_sd;
  return std::sqrt(1.0 - beta_market * beta_market - beta_community * beta_community);
}

void PlantedSpec::validate() const {
  require(n_communities >= 1, "n_communities", "must be at least 1");
  require(assets_per_community >= 1, "assets_per_community", "must be at least 1");
  require(investors_per_community >= 1, "investors_per_community", "must be at least 1");
  require(probability(within_probability), "within_probability", "must lie in [0, 1]");
  require(probability(cross_probability), "cross_probability", "must lie in [0, 1]");
  require(beta_market >= 0.0 && beta_market < 1.0, "beta_market", "must lie in [0, 1)");
  require(beta_community >= 0.0 && beta_community < 1.0, "beta_community", "must lie in [0, 1)");
  require(beta_market * beta_market + beta_community * beta_community < 1.0,
          "beta_market, beta_community", "must satisfy beta_market^2 + beta_community^2 < 1");
  if (idiosyncratic_sd) {
    require(std::isfinite(*idiosyncratic_sd) && *idiosyncratic_sd > 0.0, "idiosyncratic_sd",
            "must be positive");
  }
  require(std::isfinite(volatility) && volatility > 0.0, "volatility", "must be positive");
  require(weeks >= 3, "weeks", "must be at least 3");
  require(probability(tag_signal), "tag_signal", "must lie in [0, 1]");
  require(probability(tag_noise), "tag_noise", "must lie in [0, 1]");
}

PlantedDataset generate_dataset(const PlantedSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t k = spec.n_communities;
  const std::size_t per = spec.assets_per_community;
  const std::size_t n = k * per;

  ingest::MergeInputs inputs;
  std::vector<std::size_t> community(n);
  for (std::size_t c = 0; c < k; ++c) inputs.tag_universe.push_back(numbered("sector-", c + 1));
  for (std::size_t t = 0; t < spec.noise_tags; ++t) {
    inputs.tag_universe.push_back(numbered("theme-", t + 1));
  }

  for (std::size_t i = 0; i < n; ++i) {
    community[i] = i / per;
    const std::string slug = numbered("asset-", i + 1);
    ingest::AssetProfile profile{numbered("A", i + 1), numbered("TK", i + 1), slug + ".io", {}};
    if (rng.bernoulli(spec.tag_signal)) profile.tags.insert(inputs.tag_universe[community[i]]);
    for (std::size_t t = 0; t < spec.noise_tags; ++t) {
      if (rng.bernoulli(spec.tag_noise)) profile.tags.insert(inputs.tag_universe[k + t]);
    }
    inputs.profiles.push_back(std::move(profile));

    ingest::OrganizationRecord org;
    org.uuid = numbered("org-", i + 1);
    org.name = "Asset " + std::to_string(i + 1);
    org.homepage_url = "https://www." + slug + ".io/";
    org.category_list = {"Blockchain", "Cryptocurrency"};
    org.founded_on = Date{std::chrono::year{2013} / 1 / 1} +
                     std::chrono::days{static_cast<int>(rng.below(365))};
    inputs.organizations.push_back(std::move(org));
  }

  // Funding rounds: one to three per asset between 2014 and 2021.
  std::vector<std::vector<std::size_t>> rounds_of(n);
  const Date first_round{std::chrono::year{2014} / 1 / 1};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t count = 1 + static_cast<std::size_t>(rng.below(3));
    std::vector<Date> dates;
    for (std::size_t r = 0; r < count; ++r) {
      dates.push_back(first_round + std::chrono::days{static_cast<int>(rng.below(8 * 365))});
    }
    std::sort(dates.begin(), dates.end());
    for (const Date date : dates) {
      ingest::FundingRoundRecord round;
      round.uuid = numbered("round-", inputs.rounds.size() + 1);
      round.org_uuid = inputs.organizations[i].uuid;
      round.announced_on = date;
      round.raised_amount_usd = std::round(std::exp(std::log(1e5) + rng.uniform() * std::log(200.0)));
      inputs.organizations[i].total_funding_usd += *round.raised_amount_usd;
      rounds_of[i].push_back(inputs.rounds.size());
      inputs.rounds.push_back(std::move(round));
    }
  }

  // Investors fund their own community densely and other communities rarely.
  std::map<std::size_t, std::size_t> investors_in_round;
  auto invest = [&](const std::string& investor, std::size_t asset) {
    const auto& rounds = rounds_of[asset];
    const std::size_t round = rounds[rng.below(rounds.size())];
    inputs.investments.push_back({numbered("inv-", inputs.investments.size() + 1),
                                  inputs.rounds[round].uuid, investor, "Investor " + investor});
    ++investors_in_round[round];
  };
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<bool> funded(per, false);
    for (std::size_t v = 0; v < spec.investors_per_community; ++v) {
      const std::string investor = "fund-" + std::to_string(c + 1) + "-" + std::to_string(v + 1);
      for (std::size_t a = 0; a < per; ++a) {
        if (rng.bernoulli(spec.within_probability)) {
          invest(investor, c * per + a);
          funded[a] = true;
        }
      }
      for (std::size_t other = 0; other < k; ++other) {
        if (other == c || !rng.bernoulli(spec.cross_probability)) continue;
        invest(investor, other * per + static_cast<std::size_t>(rng.below(per)));
      }
    }
    // Every asset keeps at least one home investor so it joins the network.
    for (std::size_t a = 0; a < per; ++a) {
      if (funded[a]) continue;
      const auto v = rng.below(spec.investors_per_community);
      invest("fund-" + std::to_string(c + 1) + "-" + std::to_string(v + 1), c * per + a);
    }
  }
  for (const auto& [round, count] : investors_in_round) {
    inputs.rounds[round].investor_count = static_cast<long long>(count);
  }

  // Factor-model log returns, prices from 1.
  const double sigma = spec.sigma();
  const std::size_t weeks = spec.weeks;
  std::vector<double> market(weeks);
  std::vector<std::vector<double>> sector(k, std::vector<double>(weeks));
  for (std::size_t t = 0; t < weeks; ++t) market[t] = rng.normal();
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t t = 0; t < weeks; ++t) sector[c][t] = rng.normal();
  }
  for (std::size_t i = 0; i < n; ++i) {
    ingest::PriceSeries series;
    series.asset_id = inputs.profiles[i].asset_id;
    double log_price = 0.0;
    double previous = 1.0;
    series.samples.push_back({spec.start, 1.0, 1.0, 1000.0});
    for (std::size_t t = 0; t < weeks; ++t) {
      const double r = spec.volatility * (spec.beta_market * market[t] +
                                          spec.beta_community * sector[community[i]][t] +
                                          sigma * rng.normal());
      log_price += r;
      const double close = std::exp(log_price);
      const double volume = std::round(1000.0 * std::exp(0.5 * rng.normal()));
      series.samples.push_back(
          {spec.start + std::chrono::days{7 * static_cast<int>(t + 1)}, previous, close, volume});
      previous = close;
    }
    inputs.prices.emplace(series.asset_id, std::move(series));
  }

  PlantedDataset out;
  out.dataset = ingest::merge_datasets(inputs);

  std::map<std::string, std::size_t> community_of;
  for (std::size_t i = 0; i < n; ++i) community_of[inputs.profiles[i].asset_id] = community[i] + 1;
  std::vector<std::size_t> labels;
  for (const auto& asset : out.dataset.assets) labels.push_back(community_of.at(asset.asset_id));
  out.ground_truth = clustering::canonical_partition(labels);

  for (const auto& row : ingest::yearly_aggregates(out.dataset.rounds)) {
    const double cap = std::round(20.0 * row.total_raised_usd * std::exp(0.3 * rng.normal()));
    out.market_caps.push_back({row.year, cap});
  }
  return out;
}

void write_dataset(const PlantedDataset& planted, const std::filesystem::path& dir) {
  ingest::write_merged(planted.dataset, dir);
  std::ostringstream truth;
  write_csv_row(truth, {"asset_id", "community"});
  for (std::size_t i = 0; i < planted.dataset.assets.size(); ++i) {
    write_csv_row(truth, {planted.dataset.assets[i].asset_id,
                          std::to_string(planted.ground_truth.labels[i])});
  }
  write_file(dir / kGroundTruthFile, truth.str());
  std::ostringstream caps;
  write_csv_row(caps, {"year", "market_cap_usd"});
  for (const auto& row : planted.market_caps) {
    write_csv_row(caps, {std::to_string(row.year), format_double(row.market_cap_usd)});
  }
  write_file(dir / kMarketCapFile, caps.str());
}

}  // namespace coinvest::synth
