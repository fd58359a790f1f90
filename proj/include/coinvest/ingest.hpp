#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coinvest/date.hpp"

namespace coinvest::ingest {

// Crunchbase-style bundles. Only the columns the pipeline consumes are
// mandatory; every other column in the export is ignored.

struct OrganizationRecord {
  std::string uuid;
  std::string name;
  std::string homepage_url;
  std::vector<std::string> category_list;
  double total_funding_usd = 0.0;  // empty cell reads as 0
  std::optional<Date> founded_on;

  friend bool operator==(const OrganizationRecord&, const OrganizationRecord&) = default;
};

struct FundingRoundRecord {
  std::string uuid;
  std::string org_uuid;
  Date announced_on{};
  std::optional<double> raised_amount_usd;
  long long investor_count = 0;
  std::vector<std::string> lead_investor_uuids;  // optional column

  friend bool operator==(const FundingRoundRecord&, const FundingRoundRecord&) = default;
};

struct InvestmentRecord {
  std::string uuid;
  std::string funding_round_uuid;
  std::string investor_uuid;
  std::string investor_name;

  friend bool operator==(const InvestmentRecord&, const InvestmentRecord&) = default;
};

// Market-side files.

/// One row of the asset file (asset_id, symbol, url).
struct AssetRecord {
  std::string asset_id;
  std::string symbol;
  std::string url;
};

/// One row of the tag file (asset_id, tag).
struct TagRecord {
  std::string asset_id;
  std::string tag;
};

/// One row of the optional tag-universe file (tag). Row order is the
/// universe order.
struct TagUniverseRecord {
  std::string tag;
};

/// One row of the price file (asset_id, date, open, close, volume).
struct PriceRecord {
  std::string asset_id;
  Date date{};
  double open = 0.0;
  double close = 0.0;
  double volume = 0.0;
  std::size_t line = 0;  // source line, for quarantine reports
};

/// Yearly market capitalization (year, market_cap_usd), used only for the
/// capitalization-vs-investment rank correlations.
struct MarketCapRecord {
  int year = 0;
  double market_cap_usd = 0.0;
};

struct AssetProfile {
  std::string asset_id;
  std::string symbol;
  std::string url;
  std::set<std::string> tags;

  friend bool operator==(const AssetProfile&, const AssetProfile&) = default;
};

struct PriceSample {
  Date week{};
  double open = 0.0;
  double close = 0.0;
  double volume = 0.0;

  friend bool operator==(const PriceSample&, const PriceSample&) = default;
};

/// Weekly samples with strictly increasing timestamps spaced by multiples of
/// seven days. `missing_weeks` counts the weeks skipped by gaps.
struct PriceSeries {
  std::string asset_id;
  std::vector<PriceSample> samples;
  std::size_t missing_weeks = 0;

  friend bool operator==(const PriceSeries&, const PriceSeries&) = default;
};

/// A quarantined input row.
struct Reject {
  std::string bundle;
  std::size_t line = 0;
  std::string reason;

  friend bool operator==(const Reject&, const Reject&) = default;
};

template <class Record>
struct ParseResult {
  std::vector<Record> records;
  std::vector<Reject> rejects;
};

struct ParseOptions {
  /// Upper bound for funding-round announcement dates.
  Date ingestion_date = today();
};

/// Mandatory header columns of the bundle parsed into `Record`.
template <class Record>
std::span<const std::string_view> bundle_columns();

/// Parses one delimited bundle. Rows violating a type invariant are
/// quarantined in `rejects` with a reason; a header lacking a mandatory
/// column raises SchemaError naming it.
template <class Record>
ParseResult<Record> parse_bundle(std::istream& in, const ParseOptions& options = {});

/// File variant; IoError when the file cannot be read.
template <class Record>
ParseResult<Record> parse_bundle_file(const std::filesystem::path& path,
                                      const ParseOptions& options = {});

/// Groups price rows into per-asset weekly series. Duplicate timestamps and
/// samples off the seven-day grid of their series are quarantined.
std::map<std::string, PriceSeries> build_price_series(std::span<const PriceRecord> rows,
                                                      std::vector<Reject>& rejects);

/// Joins asset rows with tag rows. Tags outside `universe` and tags naming an
/// unknown asset are quarantined. An empty universe means "all tags seen",
/// which is then written back sorted.
std::vector<AssetProfile> build_profiles(std::span<const AssetRecord> assets,
                                         std::span<const TagRecord> tags,
                                         std::vector<std::string>& universe,
                                         std::vector<Reject>& rejects);

/// Join key: lowercase host with scheme, userinfo, leading "www.", port, path,
/// query and fragment removed. Empty input yields an empty key, which never
/// joins.
std::string normalize_url(std::string_view url);

struct JoinReport {
  std::size_t organizations_in = 0;
  std::size_t organizations_matched = 0;
  std::size_t organizations_without_url = 0;
  std::size_t organizations_unmatched = 0;
  std::size_t profiles_in = 0;
  std::size_t profiles_matched = 0;
  std::size_t rounds_in = 0;
  std::size_t rounds_kept = 0;
  std::size_t rounds_orphaned = 0;   // org_uuid does not resolve
  std::size_t rounds_unmatched = 0;  // org resolves but is not matched
  std::size_t investments_in = 0;
  std::size_t investments_kept = 0;
  std::size_t investments_orphaned = 0;  // funding_round_uuid does not resolve
  std::size_t investments_unmatched = 0;
  std::size_t price_series_in = 0;
  std::size_t price_series_matched = 0;
  std::size_t investors = 0;
  /// Investors named only in lead_investor_uuids of kept rounds, with no
  /// investment row anywhere. They contribute no edges.
  std::size_t lead_only_investors = 0;

  friend bool operator==(const JoinReport&, const JoinReport&) = default;
};

struct MergeInputs {
  std::vector<OrganizationRecord> organizations;
  std::vector<FundingRoundRecord> rounds;
  std::vector<InvestmentRecord> investments;
  std::vector<AssetProfile> profiles;
  std::map<std::string, PriceSeries> prices;
  std::vector<std::string> tag_universe;
};

/// Investment data joined to market data, restricted to matched assets.
/// Everything is ordered by asset id (rounds by asset, date, uuid;
/// investments by round order, then investor uuid).
struct MergedDataset {
  std::vector<AssetProfile> assets;
  std::vector<std::string> tag_universe;
  std::vector<OrganizationRecord> organizations;
  std::map<std::string, std::string> asset_of_org;
  std::vector<FundingRoundRecord> rounds;
  std::vector<InvestmentRecord> investments;
  std::map<std::string, PriceSeries> prices;
  JoinReport report;

  /// Constituents of this dataset as merge inputs.
  MergeInputs constituents() const;
};

/// Content equality ignoring the join report, which describes the inputs.
bool same_content(const MergedDataset& a, const MergedDataset& b);

/// Matches organizations to asset profiles on normalize_url. A key used by
/// both sides but repeated on either side raises AmbiguityError listing the
/// colliding ids.
MergedDataset merge_datasets(const MergeInputs& inputs);

struct IngestPaths {
  std::filesystem::path organizations;
  std::filesystem::path funding_rounds;
  std::filesystem::path investments;
  std::filesystem::path assets;
  std::filesystem::path tags;
  std::filesystem::path prices;
  std::optional<std::filesystem::path> tag_universe;
};

struct IngestResult {
  MergedDataset dataset;
  std::vector<Reject> rejects;
};

/// Parses every input file and merges them.
IngestResult ingest_files(const IngestPaths& paths, const ParseOptions& options = {});

/// Writes the dataset as normalized delimited files plus join_report.json.
void write_merged(const MergedDataset& dataset, const std::filesystem::path& dir);

/// Paths of a directory written by write_merged.
IngestPaths merged_paths(const std::filesystem::path& dir);

/// Re-reads a directory written by write_merged.
MergedDataset load_merged(const std::filesystem::path& dir, const ParseOptions& options = {});

std::string join_report_json(const JoinReport& report);

struct YearAggregate {
  int year = 0;
  double total_raised_usd = 0.0;
  std::size_t investment_count = 0;

  friend bool operator==(const YearAggregate&, const YearAggregate&) = default;
};

/// One row per calendar year from the first to the last announcement year.
/// Rounds without an amount count toward investment_count and add 0.
std::vector<YearAggregate> yearly_aggregates(std::span<const FundingRoundRecord> rounds);

/// Ranks starting at 1; tied values share the average of their ranks.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of the average-rank vectors.
/// ArgumentError on length mismatch, n < 2 or non-finite input;
/// UndefinedStatistic when either rank vector is constant.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace coinvest::ingest
