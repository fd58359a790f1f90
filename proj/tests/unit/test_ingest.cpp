#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "coinvest/errors.hpp"
#include "coinvest/ingest.hpp"
#include "coinvest/random.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace coinvest;
using namespace coinvest::ingest;
using test_support::fixture;

namespace {

Date d(const char* text) { return parse_date(text); }

FundingRoundRecord round_of(const char* uuid, const char* date, std::optional<double> amount) {
  FundingRoundRecord r;
  r.uuid = uuid;
  r.org_uuid = "o";
  r.announced_on = d(date);
  r.raised_amount_usd = amount;
  return r;
}

}  // namespace

TEST_CASE("organizations bundle parses well-formed rows") {
  std::istringstream in(
      "uuid,name,homepage_url,category_list,total_funding_usd,founded_on\n"
      "a,Alpha,https://alpha.io,\"DeFi,Payments\",100,2017-01-01\n"
      "b,Beta,,Blockchain,,\n"
      "c,Gamma,gamma.io,,0,2018-05-05\n");
  auto result = parse_bundle<OrganizationRecord>(in);
  CHECK(result.records.size() == 3);
  CHECK(result.rejects.empty());
  CHECK(result.records[0].category_list == std::vector<std::string>{"DeFi", "Payments"});
  CHECK(result.records[1].total_funding_usd == 0.0);
  CHECK_FALSE(result.records[1].founded_on.has_value());
}

TEST_CASE("negative raised amount is quarantined") {
  std::istringstream in(
      "uuid,org_uuid,announced_on,raised_amount_usd,investor_count\n"
      "r1,o1,2017-01-01,-5,1\n"
      "r2,o1,2017-02-01,10,1\n");
  auto result = parse_bundle<FundingRoundRecord>(in);
  REQUIRE(result.records.size() == 1);
  REQUIRE(result.rejects.size() == 1);
  CHECK(result.rejects[0].reason == "negative amount");
  CHECK(result.rejects[0].line == 2);
}

TEST_CASE("funding dates outside the accepted window are quarantined") {
  std::istringstream in(
      "uuid,org_uuid,announced_on,raised_amount_usd,investor_count\n"
      "r1,o1,1989-12-31,1,1\n"
      "r2,o1,2030-01-01,1,1\n"
      "r3,o1,2020-01-01,1,1\n");
  ParseOptions options;
  options.ingestion_date = d("2025-01-01");
  auto result = parse_bundle<FundingRoundRecord>(in, options);
  CHECK(result.records.size() == 1);
  CHECK(result.rejects.size() == 2);
}

TEST_CASE("organizations fixture yields 18 records and 2 rejects") {
  auto result = parse_bundle_file<OrganizationRecord>(fixture("organizations_mini.csv"));
  CHECK(result.records.size() == 18);
  REQUIRE(result.rejects.size() == 2);
  CHECK(result.rejects[0].reason == "negative amount");
  CHECK(result.rejects[1].reason == "missing uuid");
}

TEST_CASE("missing mandatory column is a schema error naming it") {
  std::istringstream in("uuid,funding_round_uuid,investor_name\nx,y,z\n");
  try {
    parse_bundle<InvestmentRecord>(in);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("investor_uuid") != std::string::npos);
  }
}

TEST_CASE("unreadable bundle file is an I/O error") {
  CHECK_THROWS_AS(parse_bundle_file<OrganizationRecord>(fixture("does_not_exist.csv")), IoError);
}

TEST_CASE("duplicate investment pairs are quarantined") {
  std::istringstream in(
      "uuid,funding_round_uuid,investor_uuid,investor_name\n"
      "i1,r1,v1,V\n"
      "i2,r1,v1,V\n");
  auto result = parse_bundle<InvestmentRecord>(in);
  CHECK(result.records.size() == 1);
  REQUIRE(result.rejects.size() == 1);
  CHECK(result.rejects[0].reason == "duplicate investment pair");
}

TEST_CASE("normalize_url") {
  CHECK(normalize_url("https://www.Example.com/about?x=1") == "example.com");
  CHECK(normalize_url("example.com") == "example.com");
  CHECK(normalize_url("HTTP://Sub.Domain.io:8080/p") == "sub.domain.io");
  CHECK(normalize_url("") == "");
  CHECK(normalize_url("   ") == "");
  CHECK(normalize_url("https://user:pw@www.coin.io#top") == "coin.io");
  CHECK(normalize_url("coin.io/") == "coin.io");
}

TEST_CASE("price rows become weekly series with gaps recorded") {
  std::vector<PriceRecord> rows = {
      {"x", d("2020-01-06"), 1, 1, 0, 2},
      {"x", d("2020-01-13"), 1, 2, 0, 3},
      {"x", d("2020-01-27"), 2, 3, 0, 4},
      {"x", d("2020-01-29"), 3, 3, 0, 5},
      {"y", d("2020-01-06"), 1, 1, 0, 6},
      {"y", d("2020-01-06"), 1, 1, 0, 7},
  };
  std::vector<Reject> rejects;
  auto series = build_price_series(rows, rejects);
  REQUIRE(series.size() == 2);
  CHECK(series.at("x").samples.size() == 3);
  CHECK(series.at("x").missing_weeks == 1);
  CHECK(series.at("y").samples.size() == 1);
  CHECK(rejects.size() == 2);
}

TEST_CASE("profiles reject tags outside the universe") {
  std::vector<AssetRecord> assets = {{"a", "A", "a.io"}, {"b", "B", "b.io"}};
  std::vector<TagRecord> tags = {{"a", "defi"}, {"b", "meme"}, {"z", "defi"}};
  std::vector<std::string> universe = {"defi", "pow"};
  std::vector<Reject> rejects;
  auto profiles = build_profiles(assets, tags, universe, rejects);
  REQUIRE(profiles.size() == 2);
  CHECK(profiles[0].tags == std::set<std::string>{"defi"});
  CHECK(profiles[1].tags.empty());
  CHECK(rejects.size() == 2);
}

TEST_CASE("merge matches on normalized domains") {
  MergeInputs in;
  in.organizations.push_back({"o1", "Coin", "https://coin.io", {}, 0, {}});
  in.organizations.push_back({"o2", "NoSite", "", {}, 0, {}});
  in.organizations.push_back({"o3", "Other", "https://other.io", {}, 0, {}});
  in.profiles.push_back({"c", "C", "coin.io", {}});
  in.rounds.push_back(round_of("r1", "2018-01-01", 5.0));
  in.rounds.back().org_uuid = "o1";
  in.rounds.push_back(round_of("r2", "2018-01-01", 5.0));
  in.rounds.back().org_uuid = "o2";
  in.rounds.push_back(round_of("r3", "2018-01-01", 5.0));
  in.rounds.back().org_uuid = "ghost";
  in.investments.push_back({"i1", "r1", "v1", "V1"});
  in.investments.push_back({"i2", "r2", "v1", "V1"});
  in.investments.push_back({"i3", "nope", "v2", "V2"});

  auto merged = merge_datasets(in);
  REQUIRE(merged.assets.size() == 1);
  CHECK(merged.asset_of_org.at("o1") == "c");
  const auto& r = merged.report;
  CHECK(r.organizations_matched == 1);
  CHECK(r.organizations_without_url == 1);
  CHECK(r.organizations_unmatched == 1);
  CHECK(r.organizations_matched + r.organizations_without_url + r.organizations_unmatched ==
        r.organizations_in);
  CHECK(r.rounds_kept == 1);
  CHECK(r.rounds_unmatched == 1);
  CHECK(r.rounds_orphaned == 1);
  CHECK(r.investments_kept == 1);
  CHECK(r.investments_unmatched == 1);
  CHECK(r.investments_orphaned == 1);
}

TEST_CASE("ambiguous domain keys are reported, never picked") {
  MergeInputs in;
  in.organizations.push_back({"o1", "Coin", "https://coin.io", {}, 0, {}});
  in.organizations.push_back({"o2", "Coin again", "http://www.coin.io/x", {}, 0, {}});
  in.profiles.push_back({"c", "C", "coin.io", {}});
  try {
    merge_datasets(in);
    FAIL("expected AmbiguityError");
  } catch (const AmbiguityError& e) {
    CHECK(e.ids() == std::vector<std::string>{"o1", "o2", "c"});
  }
}

TEST_CASE("mini dataset ingests with a conserved join report") {
  auto result = ingest_files(merged_paths(fixture("mini")));
  CHECK(result.rejects.empty());
  const auto& ds = result.dataset;
  const auto& r = ds.report;
  CHECK(ds.assets.size() == 8);
  CHECK(r.organizations_in == 10);
  CHECK(r.organizations_matched == 8);
  CHECK(r.organizations_without_url == 1);
  CHECK(r.organizations_unmatched == 1);
  CHECK(r.profiles_in == 9);
  CHECK(r.rounds_kept == 10);
  CHECK(r.rounds_unmatched == 1);
  CHECK(r.investments_kept == 12);
  CHECK(r.investments_unmatched == 1);
  CHECK(r.investors == 5);
  CHECK(r.lead_only_investors == 1);
  CHECK(r.price_series_matched == 8);
  CHECK(ds.prices.at("a3").missing_weeks == 1);
  CHECK(ds.tag_universe == std::vector<std::string>{"defi", "pow", "nft", "layer1", "privacy"});
}

TEST_CASE("merge is idempotent") {
  auto first = ingest_files(merged_paths(fixture("mini"))).dataset;
  auto second = merge_datasets(first.constituents());
  CHECK(same_content(first, second));
  auto third = merge_datasets(second.constituents());
  CHECK(same_content(second, third));
  CHECK(second.report == third.report);
}

TEST_CASE("merged dataset round-trips through files") {
  test_support::TempDir dir("merged");
  auto dataset = ingest_files(merged_paths(fixture("mini"))).dataset;
  write_merged(dataset, dir.path());
  auto reloaded = load_merged(dir.path());
  CHECK(same_content(dataset, reloaded));
}

TEST_CASE("yearly aggregates") {
  SUBCASE("two rounds in one year") {
    std::vector<FundingRoundRecord> rounds = {round_of("a", "2017-03-01", 1e6),
                                              round_of("b", "2017-09-01", 2e6)};
    auto rows = yearly_aggregates(rounds);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == YearAggregate{2017, 3e6, 2});
  }
  SUBCASE("absent amount counts but adds nothing") {
    std::vector<FundingRoundRecord> rounds = {round_of("a", "2018-03-01", std::nullopt)};
    auto rows = yearly_aggregates(rounds);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == YearAggregate{2018, 0.0, 1});
  }
  SUBCASE("empty input") { CHECK(yearly_aggregates({}).empty()); }
  SUBCASE("gap years emit zeros") {
    std::vector<FundingRoundRecord> rounds = {round_of("a", "2015-03-01", 1.0),
                                              round_of("b", "2017-03-01", 2.0)};
    auto rows = yearly_aggregates(rounds);
    REQUIRE(rows.size() == 3);
    CHECK(rows[1] == YearAggregate{2016, 0.0, 0});
  }
  SUBCASE("mini fixture: ten rounds over three years") {
    auto ds = ingest_files(merged_paths(fixture("mini"))).dataset;
    auto rows = yearly_aggregates(ds.rounds);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == YearAggregate{2017, 1'500'000, 3});
    CHECK(rows[1] == YearAggregate{2018, 5'250'000, 3});
    CHECK(rows[2] == YearAggregate{2019, 4'850'000, 4});
    double total = 0.0, present = 0.0;
    for (const auto& row : rows) total += row.total_raised_usd;
    for (const auto& round : ds.rounds) present += round.raised_amount_usd.value_or(0.0);
    CHECK(total == present);
  }
}

TEST_CASE("spearman") {
  auto rho = [](std::vector<double> x, std::vector<double> y) { return spearman(x, y); };
  CHECK(rho({1, 2, 3}, {10, 20, 30}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rho({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(rho({1, 2, 3, 4}, {2, 1, 4, 3}) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK_THROWS_AS(rho({1, 2}, {1}), ArgumentError);
  CHECK_THROWS_AS(rho({1}, {1}), ArgumentError);
  CHECK_THROWS_AS(rho({1, 1, 1}, {1, 2, 3}), UndefinedStatistic);
  CHECK(average_ranks(std::vector<double>{3, 1, 3, 2}) == std::vector<double>{3.5, 1, 3.5, 2});
}

TEST_CASE("spearman is symmetric and invariant under increasing transforms") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(19);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.below(8));
      y[i] = static_cast<double>(rng.below(8));
    }
    const auto rx = oracle::ranks(x);
    const auto ry = oracle::ranks(y);
    if (std::adjacent_find(rx.begin(), rx.end(), std::not_equal_to<>()) == rx.end() ||
        std::adjacent_find(ry.begin(), ry.end(), std::not_equal_to<>()) == ry.end()) {
      continue;
    }
    const double rho = spearman(x, y);
    CHECK(rho == spearman(y, x));
    std::vector<double> tx(n);
    for (std::size_t i = 0; i < n; ++i) tx[i] = std::exp(x[i]) + 3.0;
    CHECK(spearman(tx, y) == doctest::Approx(rho).epsilon(1e-12));
    CHECK(rho == oracle::spearman(x, y));
  }
}
