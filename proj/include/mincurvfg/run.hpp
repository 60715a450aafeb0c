#pragma once

// Run configuration and report emission behind the CLI: one JSON document
// selects the track, SDF settings and every planner parameter; laps and
// ablation benches are serialized to CSV, JSON and SVG.

#include "mincurvfg/planner.hpp"
#include "mincurvfg/track.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mincurvfg::run {

/// Malformed configuration document.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrackSource {
  std::string generator = "ring";  // used when no file is given
  std::filesystem::path file;      // schema A
  std::filesystem::path left;      // schema B pair
  std::filesystem::path right;
  double spacing = 0.01;
};

struct SdfSettings {
  double resolution = 0.005;
  std::filesystem::path cache;  // loaded when present, else built and written
};

struct RunConfig {
  TrackSource track;
  SdfSettings sdf;
  planner::PlannerConfig planner;
  std::uint64_t seed = 0;
};

/// Parses a config document. Missing sections and keys keep their defaults;
/// unknown keys and wrong types throw ConfigError. Relative paths are
/// resolved against `base_dir`.
RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Complete config with every value spelled out; parse_config of it
/// reproduces the same configuration.
std::string config_json(const RunConfig& config);

/// FNV-1a over config_json.
std::uint64_t config_hash(const RunConfig& config);

track::Track resolve_track(const TrackSource& source);

struct SdfOrigin {
  std::string source;  // "built", "built+cached" or "loaded"
  std::filesystem::path path;
};

/// Loads the cache when it exists and matches the resolution, otherwise
/// builds the grid (and writes the cache when a path is configured).
std::shared_ptr<const track::SdfGrid> resolve_sdf(const track::Track& track,
                                                  const SdfSettings& settings,
                                                  SdfOrigin* origin = nullptr);

/// Trajectory table: one row per plant sample. The last row has no applied
/// control, so its control and timing fields are empty.
std::string lap_csv(const planner::LapResult& lap, const planner::PlannerConfig& config);

std::string lap_report_json(const RunConfig& config, const planner::LapResult& lap,
                            const SdfOrigin& sdf);

/// Boundaries, centerline and the driven trajectory colored by speed.
std::string lap_svg(const track::Track& track, const planner::LapResult& lap);

struct BenchResult {
  planner::LapResult enabled;   // curvature factors on
  planner::LapResult disabled;  // curvature factors omitted
};

/// Both laps of the ablation; they run concurrently when more than one
/// worker is allowed, with results identical to sequential runs.
BenchResult run_bench(const RunConfig& config, const track::Track& track,
                      std::shared_ptr<const track::SdfGrid> sdf);

std::string bench_csv(const RunConfig& config, const BenchResult& bench);
std::string bench_json(const RunConfig& config, const BenchResult& bench, const SdfOrigin& sdf);

/// Writes `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace mincurvfg::run
