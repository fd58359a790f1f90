#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coinvest/date.hpp"
#include "coinvest/synth.hpp"

namespace coinvest::pipeline {

/// Input files. Unset entries default to the standard file names inside
/// `dir`; when `dir` is unset too, the synthetic dataset directory
/// (<output_dir>/synth) is used.
struct InputPaths {
  std::optional<std::filesystem::path> dir;
  std::optional<std::filesystem::path> organizations;
  std::optional<std::filesystem::path> funding_rounds;
  std::optional<std::filesystem::path> investments;
  std::optional<std::filesystem::path> assets;
  std::optional<std::filesystem::path> tags;
  std::optional<std::filesystem::path> prices;
  std::optional<std::filesystem::path> tag_universe;
  std::optional<std::filesystem::path> market_cap;
};

struct ResolvedInputs {
  std::filesystem::path organizations;
  std::filesystem::path funding_rounds;
  std::filesystem::path investments;
  std::filesystem::path assets;
  std::filesystem::path tags;
  std::filesystem::path prices;
  std::optional<std::filesystem::path> tag_universe;  // present only if it exists
  std::optional<std::filesystem::path> market_cap;    // present only if it exists
};

struct PipelineConfig {
  InputPaths inputs;
  std::filesystem::path output_dir = "coinvest-out";
  std::size_t k = 12;
  std::size_t min_overlap = 52;
  std::size_t null_samples = 1000;
  std::uint64_t seed = 20240501;
  std::size_t d_max = 5;
  /// Years for the growth series and degree snapshots; empty means every
  /// year spanned by the network.
  std::vector<int> years;
  std::size_t swap_factor = 10;
  std::size_t density_samples = 1000;
  /// Null instances whose distance profiles are averaged.
  std::size_t profile_samples = 20;
  /// Largest k on the elbow curve.
  std::size_t elbow_max_k = 30;
  bool strict_intersection = false;
  double significance_threshold = 2.0;
  std::size_t threads = 1;
  std::optional<Date> ingestion_date;
  synth::PlantedSpec synth;

  /// ConfigError describing the first invalid field.
  void validate() const;
  /// SHA-256 of the canonical settings. Paths, the output directory and the
  /// thread count are left out: they do not change any result.
  std::string fingerprint() const;
  ResolvedInputs resolve_inputs() const;
};

/// Parses a JSON configuration. Relative paths are resolved against
/// `base_dir`. Unknown keys and ill-typed values raise ConfigError.
PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir);

/// Reads and parses a configuration file; paths resolve against its directory.
PipelineConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of every setting that affects results.
std::string canonical_settings(const PipelineConfig& config);

enum class Stage { ingest, graph, cluster, density, returns, nullbench, corr, synth, all };

std::optional<Stage> parse_stage(std::string_view name);
std::string_view stage_name(Stage stage);

/// Runs one stage (or every analysis stage for Stage::all) and refreshes the
/// manifest. Progress goes to `log`. Throws on failure; PrerequisiteError
/// names the subcommand that must run first.
void run_stage(Stage stage, const PipelineConfig& config, std::ostream& log);

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

/// Exit status for the exception currently being handled.
int exit_code_for_current_exception(std::ostream& err);

/// run_stage with errors reported on `err` and mapped to an exit status.
int run(std::string_view subcommand, const PipelineConfig& config, std::ostream& log,
        std::ostream& err);

inline constexpr const char* kManifestFile = "manifest.json";

/// Relative path and SHA-256 of every file under the output directory except
/// the manifest itself, sorted by path.
std::string build_manifest(const std::filesystem::path& output_dir, const PipelineConfig& config);

}  // namespace coinvest::pipeline
