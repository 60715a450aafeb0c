// mincurvfg command-line front end. Talks to the planner only through the C API.

#include "mincurvfg/mincurvfg.h"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace {

constexpr int kExitUsage = 2;

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using ConfigPtr = std::unique_ptr<mcfg_config, Deleter<mcfg_config, mcfg_config_free>>;
using TrackPtr = std::unique_ptr<mcfg_track, Deleter<mcfg_track, mcfg_track_free>>;
using SdfPtr = std::unique_ptr<mcfg_sdf, Deleter<mcfg_sdf, mcfg_sdf_free>>;
using LapPtr = std::unique_ptr<mcfg_lap, Deleter<mcfg_lap, mcfg_lap_free>>;
using BenchPtr = std::unique_ptr<mcfg_bench, Deleter<mcfg_bench, mcfg_bench_free>>;

// Thrown with the C API status; main turns it into the exit code.
struct Failure {
  int code;
};

void check(mcfg_status status, const char* what) {
  if (status == MCFG_OK) return;
  std::fprintf(stderr, "mincurvfg: %s: %s\n", what, mcfg_last_error());
  throw Failure{int(status)};
}

ConfigPtr load_config(const std::string& path) {
  mcfg_config* c = nullptr;
  if (path.empty()) {
    check(mcfg_config_default(&c), "config");
  } else {
    check(mcfg_config_load(path.c_str(), &c), "config");
  }
  return ConfigPtr(c);
}

void apply_timing(mcfg_config* config, const std::string& timing) {
  if (!timing.empty()) check(mcfg_config_set_record_timing(config, timing == "wall"), "config");
}

void print_metrics(const char* label, const mcfg_metrics& m) {
  std::printf("%s: curvature %.3f  distance %.3f m  speed mean %.3f max %.3f min %.3f m/s  "
              "solve mean %.2f median %.2f max %.2f ms\n",
              label, m.cumulative_curvature, m.distance, m.mean_speed, m.max_speed, m.min_speed,
              m.mean_solve_ms, m.median_solve_ms, m.max_solve_ms);
}

bool is_generator(const std::string& s) {
  return s == "ring" || s == "oval" || s == "chicane" || s == "straight";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-curvature factor-graph racing planner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mcfg_version()));

  std::string config_path;
  std::string out;
  std::optional<double> resolution;
  std::string timing;
  bool no_curvature = false;

  auto* sdf_cmd = app.add_subcommand("sdf", "Build the signed distance field of a track");
  std::string sdf_track;
  sdf_cmd->add_option("track", sdf_track,
                      "Track file (schema A) or generator name; defaults to the config's track");
  sdf_cmd->add_option("--config", config_path, "Run configuration (JSON)");
  sdf_cmd->add_option("--resolution", resolution, "Grid cell size [m]")
      ->check(CLI::PositiveNumber);
  sdf_cmd->add_option("--out", out, "Output SDF cache file")->required();

  auto* plan_cmd = app.add_subcommand("plan", "Drive one closed-loop lap");
  plan_cmd->add_option("--config", config_path, "Run configuration (JSON)");
  plan_cmd->add_option("--out", out, "Output directory")->default_val("out");
  plan_cmd->add_option("--resolution", resolution, "SDF cell size [m]")
      ->check(CLI::PositiveNumber);
  plan_cmd->add_flag("--no-curvature", no_curvature, "Omit the curvature factors");
  plan_cmd->add_option("--timing", timing, "Solve-time recording (off writes zeros)")
      ->check(CLI::IsMember({"off", "wall"}));

  auto* bench_cmd = app.add_subcommand("bench", "Curvature factors on vs off on one track");
  bench_cmd->add_option("--config", config_path, "Run configuration (JSON)");
  bench_cmd->add_option("--out", out, "Output directory")->default_val("out");
  bench_cmd->add_option("--resolution", resolution, "SDF cell size [m]")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--timing", timing, "Solve-time recording (off writes zeros)")
      ->check(CLI::IsMember({"off", "wall"}));

  auto* tracks_cmd = app.add_subcommand("tracks", "Track utilities");
  tracks_cmd->require_subcommand(1);
  auto* gen_cmd = tracks_cmd->add_subcommand("gen", "Write a built-in track as a schema A file");
  std::string kind;
  double spacing = 0.01;
  gen_cmd->add_option("kind", kind, "Generator")
      ->required()
      ->check(CLI::IsMember({"ring", "oval", "chicane", "straight"}));
  gen_cmd->add_option("--spacing", spacing, "Centerline station spacing [m]")
      ->check(CLI::PositiveNumber)
      ->default_val(0.01);
  gen_cmd->add_option("--out", out, "Output track file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (const char* env = std::getenv("MINCURVFG_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*env == '\0' || *end != '\0' || v < 1) {
      std::fprintf(stderr, "mincurvfg: MINCURVFG_THREADS must be a positive integer, got '%s'\n",
                   env);
      return kExitUsage;
    }
  }

  try {
    if (*sdf_cmd) {
      ConfigPtr config = load_config(config_path);
      if (resolution) check(mcfg_config_set_sdf_resolution(config.get(), *resolution), "config");
      mcfg_track* t = nullptr;
      if (sdf_track.empty()) {
        check(mcfg_track_from_config(config.get(), &t), "track");
      } else if (std::filesystem::exists(sdf_track)) {
        check(mcfg_track_load(sdf_track.c_str(), 0.01, &t), "track");
      } else if (is_generator(sdf_track)) {
        check(mcfg_track_generate(sdf_track.c_str(), 0.01, &t), "track");
      } else {
        std::fprintf(stderr, "mincurvfg: track: no such file or generator '%s'\n",
                     sdf_track.c_str());
        return MCFG_ERR_INPUT;
      }
      TrackPtr track(t);
      double res = 0.0;
      check(mcfg_config_sdf_resolution(config.get(), &res), "config");
      mcfg_sdf* s = nullptr;
      check(mcfg_sdf_build(track.get(), res, &s), "sdf");
      SdfPtr sdf(s);
      check(mcfg_sdf_save(sdf.get(), out.c_str()), "sdf");
      std::uint32_t w = 0, h = 0;
      check(mcfg_sdf_info(sdf.get(), &w, &h, nullptr), "sdf");
      std::printf("sdf %ux%u at %.4g m -> %s\n", w, h, res, out.c_str());
      return 0;
    }

    if (*gen_cmd) {
      mcfg_track* t = nullptr;
      check(mcfg_track_generate(kind.c_str(), spacing, &t), "track");
      TrackPtr track(t);
      check(mcfg_track_save(track.get(), out.c_str()), "track");
      std::size_t n = 0;
      double length = 0.0;
      check(mcfg_track_info(track.get(), &n, &length, nullptr, nullptr), "track");
      std::printf("%s: %zu stations, %.3f m -> %s\n", kind.c_str(), n, length, out.c_str());
      return 0;
    }

    ConfigPtr config = load_config(config_path);
    if (resolution) check(mcfg_config_set_sdf_resolution(config.get(), *resolution), "config");
    apply_timing(config.get(), timing);
    mcfg_track* t = nullptr;
    check(mcfg_track_from_config(config.get(), &t), "track");
    TrackPtr track(t);
    mcfg_sdf* s = nullptr;
    check(mcfg_sdf_from_config(config.get(), track.get(), &s), "sdf");
    SdfPtr sdf(s);

    if (*plan_cmd) {
      if (no_curvature) check(mcfg_config_set_curvature(config.get(), 0), "config");
      mcfg_lap* l = nullptr;
      const mcfg_status run_status = mcfg_lap_run(config.get(), track.get(), sdf.get(), &l);
      if (l == nullptr) check(run_status, "plan");
      LapPtr lap(l);
      check(mcfg_lap_write(lap.get(), out.c_str()), "write");
      int completed = 0;
      const char* status = nullptr;
      check(mcfg_lap_status(lap.get(), &completed, &status), "plan");
      mcfg_metrics m{};
      check(mcfg_lap_metrics(lap.get(), &m), "plan");
      std::printf("lap %s, outputs in %s\n", status, out.c_str());
      print_metrics("metrics", m);
      if (run_status != MCFG_OK) {
        std::fprintf(stderr, "mincurvfg: plan: %s (partial trajectory written)\n",
                     mcfg_last_error());
        return run_status;
      }
      return 0;
    }

    if (*bench_cmd) {
      mcfg_bench* b = nullptr;
      const mcfg_status run_status = mcfg_bench_run(config.get(), track.get(), sdf.get(), &b);
      if (b == nullptr) check(run_status, "bench");
      BenchPtr bench(b);
      check(mcfg_bench_write(bench.get(), out.c_str()), "write");
      mcfg_metrics on{}, off{};
      check(mcfg_bench_metrics(bench.get(), &on, &off), "bench");
      print_metrics("curvature on ", on);
      print_metrics("curvature off", off);
      std::printf("outputs in %s\n", out.c_str());
      if (run_status != MCFG_OK) {
        std::fprintf(stderr, "mincurvfg: bench: %s\n", mcfg_last_error());
        return run_status;
      }
      return 0;
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}
