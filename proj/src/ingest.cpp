#include "coinvest/ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include <json.hpp>

#include "coinvest/csv.hpp"
#include "coinvest/errors.hpp"

namespace coinvest::ingest {

namespace {

constexpr Date kEarliestRound{std::chrono::year{1990} / std::chrono::January / 1};

class Row {
 public:
  Row(const CsvReader& reader, const std::vector<std::string>& fields)
      : reader_(reader), fields_(fields) {}

  std::string get(std::string_view column) const {
    auto idx = reader_.column(column);
    if (!idx || *idx >= fields_.size()) return {};
    return trim(fields_[*idx]);
  }

 private:
  const CsvReader& reader_;
  const std::vector<std::string>& fields_;
};

// Returns a reject reason, or nullopt when the amount is acceptable. Empty
// text yields an absent amount.
std::optional<std::string> read_amount(const std::string& text, std::optional<double>& out) {
  out.reset();
  if (text.empty()) return std::nullopt;
  auto value = parse_double(text);
  if (!value || !std::isfinite(*value)) return "non-numeric amount";
  if (*value < 0.0) return "negative amount";
  out = *value;
  return std::nullopt;
}

using Reason = std::optional<std::string>;

template <class Record>
struct Schema;

template <>
struct Schema<OrganizationRecord> {
  static constexpr std::string_view name = "organizations";
  static constexpr std::array<std::string_view, 6> columns{
      "uuid", "name", "homepage_url", "category_list", "total_funding_usd", "founded_on"};

  static Reason read(const Row& row, OrganizationRecord& r, const ParseOptions&) {
    r.uuid = row.get("uuid");
    if (r.uuid.empty()) return "missing uuid";
    r.name = row.get("name");
    r.homepage_url = row.get("homepage_url");
    r.category_list = split_list(row.get("category_list"));
    std::optional<double> funding;
    if (auto bad = read_amount(row.get("total_funding_usd"), funding)) return bad;
    r.total_funding_usd = funding.value_or(0.0);
    const std::string founded = row.get("founded_on");
    if (!founded.empty()) {
      r.founded_on = try_parse_date(founded);
      if (!r.founded_on) return "invalid date";
    }
    return std::nullopt;
  }

  static std::vector<std::pair<const char*, std::string>> keys(const OrganizationRecord& r) {
    return {{"duplicate uuid", r.uuid}};
  }
};

template <>
struct Schema<FundingRoundRecord> {
  static constexpr std::string_view name = "funding_rounds";
  static constexpr std::array<std::string_view, 5> columns{
      "uuid", "org_uuid", "announced_on", "raised_amount_usd", "investor_count"};

  static Reason read(const Row& row, FundingRoundRecord& r, const ParseOptions& options) {
    r.uuid = row.get("uuid");
    if (r.uuid.empty()) return "missing uuid";
    r.org_uuid = row.get("org_uuid");
    if (r.org_uuid.empty()) return "missing org_uuid";
    auto date = try_parse_date(row.get("announced_on"));
    if (!date) return "invalid date";
    if (*date < kEarliestRound || *date > options.ingestion_date) return "date out of range";
    r.announced_on = *date;
    if (auto bad = read_amount(row.get("raised_amount_usd"), r.raised_amount_usd)) return bad;
    const std::string count = row.get("investor_count");
    if (!count.empty()) {
      auto n = parse_integer(count);
      if (!n) return "non-numeric investor_count";
      if (*n < 0) return "negative investor_count";
      r.investor_count = *n;
    }
    r.lead_investor_uuids = split_list(row.get("lead_investor_uuids"));
    return std::nullopt;
  }

  static std::vector<std::pair<const char*, std::string>> keys(const FundingRoundRecord& r) {
    return {{"duplicate uuid", r.uuid}};
  }
};

template <>
struct Schema<InvestmentRecord> {
  static constexpr std::string_view name = "investments";
  static constexpr std::array<std::string_view, 4> columns{"uuid", "funding_round_uuid",
                                                           "investor_uuid", "investor_name"};

  static Reason read(const Row& row, InvestmentRecord& r, const ParseOptions&) {
    r.uuid = row.get("uuid");
    if (r.uuid.empty()) return "missing uuid";
    r.funding_round_uuid = row.get("funding_round_uuid");
    if (r.funding_round_uuid.empty()) return "missing funding_round_uuid";
    r.investor_uuid = row.get("investor_uuid");
    if (r.investor_uuid.empty()) return "missing investor_uuid";
    r.investor_name = row.get("investor_name");
    return std::nullopt;
  }

  static std::vector<std::pair<const char*, std::string>> keys(const InvestmentRecord& r) {
    return {{"duplicate uuid", r.uuid},
            {"duplicate investment pair", r.funding_round_uuid + '\x1f' + r.investor_uuid}};
  }
};

template <>
struct Schema<AssetRecord> {
  static constexpr std::string_view name = "assets";
  static constexpr std::array<std::string_view, 3> columns{"asset_id", "symbol", "url"};

  static Reason read(const Row& row, AssetRecord& r, const ParseOptions&) {
    r.asset_id = row.get("asset_id");
    if (r.asset_id.empty()) return "missing asset_id";
    r.symbol = row.get("symbol");
    r.url = row.get("url");
    return std::nullopt;
  }

  static std::vector<std::pair<const char*, std::string>> keys(const AssetRecord& r) {
    return {{"duplicate asset_id", r.asset_id}};
  }
};

template <>
struct Schema<TagRecord> {
  static constexpr std::string_view name = "tags";
  static constexpr std::array<std::string_view, 2> columns{"asset_id", "tag"};

  static Reason read(const Row& row, TagRecord& r, const ParseOptions&) {
    r.asset_id = row.get("asset_id");
    if (r.asset_id.empty()) return "missing asset_id";
    r.tag = row.get("tag");
    if (r.tag.empty()) return "missing tag";
    return std::nullopt;
  }

  static std::vector<std::pair<const char*, std::string>> keys(const TagRecord& r) {
    return {{"duplicate tag", r.asset_id + '\x1f' + r.tag}};
  }
};

template <>
struct Schema<TagUniverseRecord> {
  static constexpr std::string_view name = "tag_universe";
  static constexpr std::array<std::string_view, 1> columns{"tag"};

  static Reason read(const Row& row, TagUniverseRecord& r, const ParseOptions&) {
    r.tag = row.get("tag");
    if (r.tag.empty()) return "missing tag";
    return std::nullopt;
  }

  static std::vector<std::pair<const char*, std::string>> keys(const TagUniverseRecord& r) {
    return {{"duplicate tag", r.tag}};
  }
};

template <>
struct Schema<PriceRecord> {
  static constexpr std::string_view name = "prices";
  static constexpr std::array<std::string_view, 5> columns{"asset_id", "date", "open", "close",
                                                           "volume"};

  static Reason read(const Row& row, PriceRecord& r, const ParseOptions&) {
    r.asset_id = row.get("asset_id");
    if (r.asset_id.empty()) return "missing asset_id";
    auto date = try_parse_date(row.get("date"));
    if (!date) return "invalid date";
    r.date = *date;
    auto open = parse_double(row.get("open"));
    auto close = parse_double(row.get("close"));
    auto volume = parse_double(row.get("volume"));
    if (!open || !close || !volume || !std::isfinite(*open) || !std::isfinite(*close) ||
        !std::isfinite(*volume)) {
      return "non-numeric price";
    }
    if (*open <= 0.0 || *close <= 0.0) return "non-positive price";
    if (*volume < 0.0) return "negative volume";
    r.open = *open;
    r.close = *close;
    r.volume = *volume;
    return std::nullopt;
  }

  static std::vector<std::pair<const char*, std::string>> keys(const PriceRecord&) { return {}; }
};

template <>
struct Schema<MarketCapRecord> {
  static constexpr std::string_view name = "market_cap";
  static constexpr std::array<std::string_view, 2> columns{"year", "market_cap_usd"};

  static Reason read(const Row& row, MarketCapRecord& r, const ParseOptions&) {
    auto year = parse_integer(row.get("year"));
    if (!year) return "invalid year";
    r.year = static_cast<int>(*year);
    std::optional<double> cap;
    if (auto bad = read_amount(row.get("market_cap_usd"), cap)) return bad;
    if (!cap) return "missing amount";
    r.market_cap_usd = *cap;
    return std::nullopt;
  }

  static std::vector<std::pair<const char*, std::string>> keys(const MarketCapRecord& r) {
    return {{"duplicate year", std::to_string(r.year)}};
  }
};

}  // namespace

template <class Record>
std::span<const std::string_view> bundle_columns() {
  return Schema<Record>::columns;
}

template <class Record>
ParseResult<Record> parse_bundle(std::istream& in, const ParseOptions& options) {
  using S = Schema<Record>;
  CsvReader reader(in);
  for (std::string_view col : S::columns) {
    if (!reader.column(col)) {
      throw SchemaError(std::string(S::name) + ": missing mandatory column '" + std::string(col) +
                        "'");
    }
  }

  ParseResult<Record> result;
  std::unordered_map<std::string, std::unordered_set<std::string>> seen;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    Record record{};
    Row row(reader, fields);
    if (auto reason = S::read(row, record, options)) {
      result.rejects.push_back({std::string(S::name), reader.line(), *reason});
      continue;
    }
    bool duplicate = false;
    for (auto& [reason, key] : S::keys(record)) {
      if (seen[reason].contains(key)) {
        result.rejects.push_back({std::string(S::name), reader.line(), reason});
        duplicate = true;
        break;
      }
    }
    if (duplicate) continue;
    for (auto& [reason, key] : S::keys(record)) seen[reason].insert(key);
    if constexpr (std::is_same_v<Record, PriceRecord>) record.line = reader.line();
    result.records.push_back(std::move(record));
  }
  return result;
}

template <class Record>
ParseResult<Record> parse_bundle_file(const std::filesystem::path& path,
                                      const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_bundle<Record>(in, options);
}

#define COINVEST_INSTANTIATE(R)                                                              \
  template std::span<const std::string_view> bundle_columns<R>();                            \
  template ParseResult<R> parse_bundle<R>(std::istream&, const ParseOptions&);               \
  template ParseResult<R> parse_bundle_file<R>(const std::filesystem::path&, const ParseOptions&);

COINVEST_INSTANTIATE(OrganizationRecord)
COINVEST_INSTANTIATE(FundingRoundRecord)
COINVEST_INSTANTIATE(InvestmentRecord)
COINVEST_INSTANTIATE(AssetRecord)
COINVEST_INSTANTIATE(TagRecord)
COINVEST_INSTANTIATE(TagUniverseRecord)
COINVEST_INSTANTIATE(PriceRecord)
COINVEST_INSTANTIATE(MarketCapRecord)
#undef COINVEST_INSTANTIATE

std::map<std::string, PriceSeries> build_price_series(std::span<const PriceRecord> rows,
                                                      std::vector<Reject>& rejects) {
  std::map<std::string, std::vector<const PriceRecord*>> by_asset;
  for (const auto& row : rows) by_asset[row.asset_id].push_back(&row);

  std::map<std::string, PriceSeries> out;
  for (auto& [asset, samples] : by_asset) {
    std::stable_sort(samples.begin(), samples.end(),
                     [](const PriceRecord* a, const PriceRecord* b) { return a->date < b->date; });
    PriceSeries series;
    series.asset_id = asset;
    for (const PriceRecord* s : samples) {
      if (!series.samples.empty()) {
        const auto delta = (s->date - series.samples.back().week).count();
        if (delta == 0) {
          rejects.push_back({"prices", s->line, "duplicate timestamp"});
          continue;
        }
        if (delta % 7 != 0) {
          rejects.push_back({"prices", s->line, "off-grid date"});
          continue;
        }
        series.missing_weeks += static_cast<std::size_t>(delta / 7 - 1);
      }
      series.samples.push_back({s->date, s->open, s->close, s->volume});
    }
    out.emplace(asset, std::move(series));
  }
  return out;
}

std::vector<AssetProfile> build_profiles(std::span<const AssetRecord> assets,
                                         std::span<const TagRecord> tags,
                                         std::vector<std::string>& universe,
                                         std::vector<Reject>& rejects) {
  std::map<std::string, AssetProfile> profiles;
  for (const auto& a : assets) profiles[a.asset_id] = {a.asset_id, a.symbol, a.url, {}};

  const bool derive_universe = universe.empty();
  std::set<std::string> allowed(universe.begin(), universe.end());
  std::set<std::string> seen_tags;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto& t = tags[i];
    auto it = profiles.find(t.asset_id);
    if (it == profiles.end()) {
      rejects.push_back({"tags", 0, "unknown asset '" + t.asset_id + "'"});
      continue;
    }
    if (!derive_universe && !allowed.contains(t.tag)) {
      rejects.push_back({"tags", 0, "tag '" + t.tag + "' outside universe"});
      continue;
    }
    it->second.tags.insert(t.tag);
    seen_tags.insert(t.tag);
  }
  if (derive_universe) universe.assign(seen_tags.begin(), seen_tags.end());

  std::vector<AssetProfile> out;
  out.reserve(profiles.size());
  for (auto& [id, p] : profiles) out.push_back(std::move(p));
  return out;
}

std::string normalize_url(std::string_view url) {
  std::string s = trim(url);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (auto scheme = s.find("://"); scheme != std::string::npos) s.erase(0, scheme + 3);
  if (auto end = s.find_first_of("/?#"); end != std::string::npos) s.erase(end);
  if (auto at = s.rfind('@'); at != std::string::npos) s.erase(0, at + 1);
  if (auto colon = s.find(':'); colon != std::string::npos) s.erase(colon);
  if (s.starts_with("www.")) s.erase(0, 4);
  while (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

MergeInputs MergedDataset::constituents() const {
  return {organizations, rounds, investments, assets, prices, tag_universe};
}

bool same_content(const MergedDataset& a, const MergedDataset& b) {
  return a.assets == b.assets && a.tag_universe == b.tag_universe &&
         a.organizations == b.organizations && a.asset_of_org == b.asset_of_org &&
         a.rounds == b.rounds && a.investments == b.investments && a.prices == b.prices;
}

MergedDataset merge_datasets(const MergeInputs& in) {
  MergedDataset out;
  JoinReport& report = out.report;
  report.organizations_in = in.organizations.size();
  report.profiles_in = in.profiles.size();
  report.rounds_in = in.rounds.size();
  report.investments_in = in.investments.size();
  report.price_series_in = in.prices.size();

  std::map<std::string, std::vector<std::size_t>> org_keys;
  std::map<std::string, std::vector<std::size_t>> profile_keys;
  for (std::size_t i = 0; i < in.organizations.size(); ++i) {
    std::string key = normalize_url(in.organizations[i].homepage_url);
    if (key.empty()) {
      ++report.organizations_without_url;
      continue;
    }
    org_keys[key].push_back(i);
  }
  for (std::size_t i = 0; i < in.profiles.size(); ++i) {
    std::string key = normalize_url(in.profiles[i].url);
    if (!key.empty()) profile_keys[key].push_back(i);
  }

  std::vector<std::string> colliding;
  std::string message;
  for (const auto& [key, orgs] : org_keys) {
    auto p = profile_keys.find(key);
    if (p == profile_keys.end()) continue;
    if (orgs.size() > 1 || p->second.size() > 1) {
      message += (message.empty() ? "" : "; ") + key + ":";
      for (auto i : orgs) {
        colliding.push_back(in.organizations[i].uuid);
        message += " org " + in.organizations[i].uuid;
      }
      for (auto i : p->second) {
        colliding.push_back(in.profiles[i].asset_id);
        message += " asset " + in.profiles[i].asset_id;
      }
    }
  }
  if (!colliding.empty()) {
    throw AmbiguityError("ambiguous URL join: " + message, std::move(colliding));
  }

  std::map<std::string, const OrganizationRecord*> matched_by_asset;
  for (const auto& [key, orgs] : org_keys) {
    auto p = profile_keys.find(key);
    if (p == profile_keys.end()) {
      report.organizations_unmatched += orgs.size();
      continue;
    }
    const OrganizationRecord& org = in.organizations[orgs.front()];
    const AssetProfile& profile = in.profiles[p->second.front()];
    out.asset_of_org[org.uuid] = profile.asset_id;
    matched_by_asset[profile.asset_id] = &org;
    out.assets.push_back(profile);
  }
  report.organizations_matched = out.asset_of_org.size();
  report.profiles_matched = out.assets.size();
  std::sort(out.assets.begin(), out.assets.end(),
            [](const AssetProfile& a, const AssetProfile& b) { return a.asset_id < b.asset_id; });
  for (const auto& [asset, org] : matched_by_asset) out.organizations.push_back(*org);
  out.tag_universe = in.tag_universe;

  std::unordered_set<std::string> all_orgs;
  for (const auto& o : in.organizations) all_orgs.insert(o.uuid);
  std::unordered_set<std::string> all_rounds;
  for (const auto& r : in.rounds) {
    all_rounds.insert(r.uuid);
    if (!all_orgs.contains(r.org_uuid)) {
      ++report.rounds_orphaned;
    } else if (!out.asset_of_org.contains(r.org_uuid)) {
      ++report.rounds_unmatched;
    } else {
      out.rounds.push_back(r);
    }
  }
  std::sort(out.rounds.begin(), out.rounds.end(),
            [&](const FundingRoundRecord& a, const FundingRoundRecord& b) {
              return std::tie(out.asset_of_org.at(a.org_uuid), a.announced_on, a.uuid) <
                     std::tie(out.asset_of_org.at(b.org_uuid), b.announced_on, b.uuid);
            });
  report.rounds_kept = out.rounds.size();

  std::unordered_map<std::string, std::size_t> round_position;
  for (std::size_t i = 0; i < out.rounds.size(); ++i) round_position[out.rounds[i].uuid] = i;

  std::unordered_set<std::string> any_investor;
  std::set<std::string> investors;
  for (const auto& inv : in.investments) {
    any_investor.insert(inv.investor_uuid);
    if (!all_rounds.contains(inv.funding_round_uuid)) {
      ++report.investments_orphaned;
    } else if (!round_position.contains(inv.funding_round_uuid)) {
      ++report.investments_unmatched;
    } else {
      out.investments.push_back(inv);
      investors.insert(inv.investor_uuid);
    }
  }
  std::sort(out.investments.begin(), out.investments.end(),
            [&](const InvestmentRecord& a, const InvestmentRecord& b) {
              return std::tie(round_position.at(a.funding_round_uuid), a.investor_uuid, a.uuid) <
                     std::tie(round_position.at(b.funding_round_uuid), b.investor_uuid, b.uuid);
            });
  report.investments_kept = out.investments.size();
  report.investors = investors.size();

  std::set<std::string> lead_only;
  for (const auto& r : out.rounds) {
    for (const auto& lead : r.lead_investor_uuids) {
      if (!any_investor.contains(lead)) lead_only.insert(lead);
    }
  }
  report.lead_only_investors = lead_only.size();

  for (const auto& [asset, series] : in.prices) {
    if (matched_by_asset.contains(asset)) out.prices.emplace(asset, series);
  }
  report.price_series_matched = out.prices.size();
  return out;
}

namespace {

void append_rejects(std::vector<Reject>& all, const std::vector<Reject>& more) {
  all.insert(all.end(), more.begin(), more.end());
}

}  // namespace

IngestResult ingest_files(const IngestPaths& paths, const ParseOptions& options) {
  IngestResult result;
  auto& rejects = result.rejects;

  auto orgs = parse_bundle_file<OrganizationRecord>(paths.organizations, options);
  auto rounds = parse_bundle_file<FundingRoundRecord>(paths.funding_rounds, options);
  auto investments = parse_bundle_file<InvestmentRecord>(paths.investments, options);
  auto assets = parse_bundle_file<AssetRecord>(paths.assets, options);
  auto tags = parse_bundle_file<TagRecord>(paths.tags, options);
  auto prices = parse_bundle_file<PriceRecord>(paths.prices, options);
  for (const auto* r : {&orgs.rejects, &rounds.rejects, &investments.rejects, &assets.rejects,
                        &tags.rejects, &prices.rejects}) {
    append_rejects(rejects, *r);
  }

  MergeInputs inputs;
  if (paths.tag_universe) {
    auto universe = parse_bundle_file<TagUniverseRecord>(*paths.tag_universe, options);
    append_rejects(rejects, universe.rejects);
    for (auto& t : universe.records) inputs.tag_universe.push_back(std::move(t.tag));
  }
  inputs.profiles = build_profiles(assets.records, tags.records, inputs.tag_universe, rejects);
  inputs.prices = build_price_series(prices.records, rejects);
  inputs.organizations = std::move(orgs.records);
  inputs.rounds = std::move(rounds.records);
  inputs.investments = std::move(investments.records);
  result.dataset = merge_datasets(inputs);
  return result;
}

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += items[i];
  }
  return out;
}

}  // namespace

IngestPaths merged_paths(const std::filesystem::path& dir) {
  return {dir / "organizations.csv", dir / "funding_rounds.csv", dir / "investments.csv",
          dir / "assets.csv",        dir / "tags.csv",           dir / "prices.csv",
          dir / "tag_universe.csv"};
}

void write_merged(const MergedDataset& d, const std::filesystem::path& dir) {
  const IngestPaths paths = merged_paths(dir);
  std::ostringstream s;

  write_csv_row(s, {"uuid", "name", "homepage_url", "category_list", "total_funding_usd",
                    "founded_on"});
  for (const auto& o : d.organizations) {
    write_csv_row(s, {o.uuid, o.name, o.homepage_url, join(o.category_list),
                      format_double(o.total_funding_usd),
                      o.founded_on ? format_date(*o.founded_on) : ""});
  }
  write_file(paths.organizations, s.str());

  s.str({});
  write_csv_row(s, {"uuid", "org_uuid", "announced_on", "raised_amount_usd", "investor_count",
                    "lead_investor_uuids"});
  for (const auto& r : d.rounds) {
    write_csv_row(s, {r.uuid, r.org_uuid, format_date(r.announced_on),
                      r.raised_amount_usd ? format_double(*r.raised_amount_usd) : "",
                      std::to_string(r.investor_count), join(r.lead_investor_uuids)});
  }
  write_file(paths.funding_rounds, s.str());

  s.str({});
  write_csv_row(s, {"uuid", "funding_round_uuid", "investor_uuid", "investor_name"});
  for (const auto& i : d.investments) {
    write_csv_row(s, {i.uuid, i.funding_round_uuid, i.investor_uuid, i.investor_name});
  }
  write_file(paths.investments, s.str());

  s.str({});
  write_csv_row(s, {"asset_id", "symbol", "url"});
  for (const auto& a : d.assets) write_csv_row(s, {a.asset_id, a.symbol, a.url});
  write_file(paths.assets, s.str());

  s.str({});
  write_csv_row(s, {"asset_id", "tag"});
  for (const auto& a : d.assets) {
    for (const auto& t : a.tags) write_csv_row(s, {a.asset_id, t});
  }
  write_file(paths.tags, s.str());

  s.str({});
  write_csv_row(s, {"tag"});
  for (const auto& t : d.tag_universe) write_csv_row(s, {t});
  write_file(*paths.tag_universe, s.str());

  s.str({});
  write_csv_row(s, {"asset_id", "date", "open", "close", "volume"});
  for (const auto& [asset, series] : d.prices) {
    for (const auto& p : series.samples) {
      write_csv_row(s, {asset, format_date(p.week), format_double(p.open), format_double(p.close),
                        format_double(p.volume)});
    }
  }
  write_file(paths.prices, s.str());

  write_file(dir / "join_report.json", join_report_json(d.report));
}

MergedDataset load_merged(const std::filesystem::path& dir, const ParseOptions& options) {
  if (!std::filesystem::exists(dir / "join_report.json")) {
    throw IoError("no merged dataset in " + dir.string());
  }
  auto result = ingest_files(merged_paths(dir), options);
  if (!result.rejects.empty()) {
    throw DataError("merged dataset in " + dir.string() + " has invalid rows (line " +
                    std::to_string(result.rejects.front().line) + " of " +
                    result.rejects.front().bundle + ": " + result.rejects.front().reason + ")");
  }
  return std::move(result.dataset);
}

std::string join_report_json(const JoinReport& r) {
  nlohmann::ordered_json j;
  j["organizations"] = {{"input", r.organizations_in},
                        {"matched", r.organizations_matched},
                        {"without_url", r.organizations_without_url},
                        {"unmatched", r.organizations_unmatched}};
  j["asset_profiles"] = {{"input", r.profiles_in}, {"matched", r.profiles_matched}};
  j["funding_rounds"] = {{"input", r.rounds_in},
                         {"kept", r.rounds_kept},
                         {"orphaned", r.rounds_orphaned},
                         {"unmatched", r.rounds_unmatched}};
  j["investments"] = {{"input", r.investments_in},
                      {"kept", r.investments_kept},
                      {"orphaned", r.investments_orphaned},
                      {"unmatched", r.investments_unmatched}};
  j["price_series"] = {{"input", r.price_series_in}, {"matched", r.price_series_matched}};
  j["investors"] = r.investors;
  j["lead_only_investors"] = r.lead_only_investors;
  return j.dump(2) + "\n";
}

std::vector<YearAggregate> yearly_aggregates(std::span<const FundingRoundRecord> rounds) {
  if (rounds.empty()) return {};
  int first = year_of(rounds.front().announced_on);
  int last = first;
  for (const auto& r : rounds) {
    first = std::min(first, year_of(r.announced_on));
    last = std::max(last, year_of(r.announced_on));
  }
  std::vector<YearAggregate> table;
  for (int y = first; y <= last; ++y) table.push_back({y, 0.0, 0});
  for (const auto& r : rounds) {
    auto& row = table[static_cast<std::size_t>(year_of(r.announced_on) - first)];
    row.total_raised_usd += r.raised_amount_usd.value_or(0.0);
    ++row.investment_count;
  }
  return table;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("spearman: length mismatch");
  if (x.size() < 2) throw ArgumentError("spearman: need at least two observations");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw ArgumentError("spearman: non-finite value");
    }
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  // Both rank vectors have mean (n + 1) / 2.
  const double mean = 0.5 * static_cast<double>(x.size() + 1);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedStatistic("spearman: constant ranks");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace coinvest::ingest
