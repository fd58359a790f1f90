// Command-line front end for the co-investment analysis pipeline.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coinvest/date.hpp"
#include "coinvest/errors.hpp"
#include "coinvest/pipeline.hpp"

namespace fs = std::filesystem;
namespace cp = coinvest::pipeline;

namespace {

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> output;
  std::optional<std::string> input_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::optional<std::size_t> min_overlap;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> d_max;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> swap_factor;
  std::optional<std::size_t> density_samples;
  std::optional<std::size_t> profile_samples;
  std::optional<double> threshold;
  std::optional<std::string> ingestion_date;
  std::vector<int> years;
  bool strict = false;
};

cp::PipelineConfig build_config(const Overrides& o) {
  cp::PipelineConfig c = o.config ? cp::load_config(*o.config) : cp::PipelineConfig{};
  if (o.output) c.output_dir = fs::absolute(*o.output).lexically_normal();
  if (o.input_dir) c.inputs.dir = fs::absolute(*o.input_dir).lexically_normal();
  if (o.seed) c.seed = *o.seed;
  if (o.k) c.k = *o.k;
  if (o.min_overlap) c.min_overlap = *o.min_overlap;
  if (o.samples) c.null_samples = *o.samples;
  if (o.d_max) c.d_max = *o.d_max;
  if (o.threads) c.threads = *o.threads;
  if (o.swap_factor) c.swap_factor = *o.swap_factor;
  if (o.density_samples) c.density_samples = *o.density_samples;
  if (o.profile_samples) c.profile_samples = *o.profile_samples;
  if (o.threshold) c.significance_threshold = *o.threshold;
  if (!o.years.empty()) c.years = o.years;
  if (o.strict) c.strict_intersection = true;
  if (o.ingestion_date) {
    auto d = coinvest::try_parse_date(*o.ingestion_date);
    if (!d) throw coinvest::ConfigError("--ingestion-date must be a YYYY-MM-DD date");
    c.ingestion_date = *d;
  }
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-investment network and crypto-asset return correlation pipeline"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Overrides o;
  app.add_option("-c,--config", o.config, "JSON configuration file");
  app.add_option("-o,--output", o.output, "Output directory");
  app.add_option("--input-dir", o.input_dir, "Directory holding the input files");
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("-k,--clusters", o.k, "Number of tag clusters");
  app.add_option("--min-overlap", o.min_overlap, "Minimum joint weekly observations per pair");
  app.add_option("-n,--samples", o.samples, "Instances per null model");
  app.add_option("--d-max", o.d_max, "Largest network distance in the distance profile");
  app.add_option("-j,--threads", o.threads, "Worker threads for null-model sampling");
  app.add_option("--swap-factor", o.swap_factor, "Accepted swaps per edge in the configuration model");
  app.add_option("--density-samples", o.density_samples, "Random partitions in the density benchmark");
  app.add_option("--profile-samples", o.profile_samples,
                 "Null instances averaged in the distance profile");
  app.add_option("--threshold", o.threshold, "z-score above which a result is significant");
  app.add_option("--ingestion-date", o.ingestion_date, "Latest accepted funding date (YYYY-MM-DD)");
  app.add_option("--years", o.years, "Snapshot years, comma separated")->delimiter(',');
  app.add_flag("--strict-intersection", o.strict, "Keep only weeks observed by every asset");

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"synth", "Generate a planted-community synthetic dataset"},
      {"ingest", "Parse, validate and join the input files"},
      {"graph", "Build the co-investment network, growth series and degree distributions"},
      {"cluster", "Ward clustering of tag profiles and the elbow curve"},
      {"density", "Cluster in/out densities against random partitions"},
      {"returns", "Return panels, correlation matrices and market-mode removal"},
      {"nullbench", "Benchmark link-averaged correlation on null networks"},
      {"corr", "Network-conditioned correlation and distance profile"},
      {"all", "Run every analysis stage from ingest to corr"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cp::kExitConfig;
  }

  cp::PipelineConfig config;
  try {
    config = build_config(o);
  } catch (...) {
    return cp::exit_code_for_current_exception(std::cerr);
  }
  return cp::run(app.get_subcommands().front()->get_name(), config, std::cout, std::cerr);
}
