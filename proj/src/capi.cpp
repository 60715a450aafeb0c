#include "mincurvfg/mincurvfg.h"

#include "mincurvfg/run.hpp"

#include <filesystem>
#include <memory>
#include <new>
#include <string>

using namespace mincurvfg;

struct mcfg_config {
  run::RunConfig config;
  std::string json;
};

struct mcfg_track {
  track::Track track;
};

struct mcfg_sdf {
  std::shared_ptr<const track::SdfGrid> grid;
  run::SdfOrigin origin;
};

struct mcfg_lap {
  run::RunConfig config;
  track::Track track;
  run::SdfOrigin origin;
  planner::LapResult lap;
};

struct mcfg_bench {
  run::RunConfig config;
  run::SdfOrigin origin;
  run::BenchResult bench;
};

namespace {

thread_local std::string g_last_error;

// Failure writing an output file.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

mcfg_status fail(mcfg_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <typename Body>
mcfg_status guard(Body&& body) {
  try {
    return body();
  } catch (const run::ConfigError& e) {
    return fail(MCFG_ERR_INPUT, e.what());
  } catch (const track::LoadError& e) {
    return fail(MCFG_ERR_INPUT, e.what());
  } catch (const OutputError& e) {
    return fail(MCFG_ERR_INPUT, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(MCFG_ERR_INPUT, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(MCFG_ERR_USAGE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MCFG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MCFG_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(MCFG_ERR_INTERNAL, "unknown error");
  }
}

#define MCFG_REQUIRE(cond, what) \
  if (!(cond)) return fail(MCFG_ERR_USAGE, what)

void write_file(const std::filesystem::path& path, std::string_view text) {
  try {
    run::write_text(path, text);
  } catch (const std::exception& e) {
    throw OutputError(e.what());
  }
}

mcfg_metrics to_c(const metrics::LapMetrics& m) {
  return mcfg_metrics{m.cumulative_curvature, m.distance,        m.mean_speed,
                      m.max_speed,            m.min_speed,       m.mean_solve_ms,
                      m.median_solve_ms,      m.max_solve_ms,    m.min_solve_ms,
                      m.skipped_points};
}

mcfg_status make_config(run::RunConfig c, mcfg_config** out) {
  auto h = std::make_unique<mcfg_config>();
  h->config = std::move(c);
  h->json = run::config_json(h->config);
  *out = h.release();
  return MCFG_OK;
}

// Re-validates after a setter and refreshes the cached echo.
void refresh(mcfg_config* h) {
  h->config.planner.validate();
  h->json = run::config_json(h->config);
}

}  // namespace

extern "C" {

const char* mcfg_version(void) { return "0.1.0"; }

const char* mcfg_last_error(void) { return g_last_error.c_str(); }

// ---------------------------------------------------------------- config

mcfg_status mcfg_config_default(mcfg_config** out) {
  MCFG_REQUIRE(out, "null output pointer");
  return guard([&] { return make_config(run::RunConfig{}, out); });
}

mcfg_status mcfg_config_parse(const char* json, const char* base_dir, mcfg_config** out) {
  MCFG_REQUIRE(json && out, "null argument");
  return guard([&] {
    return make_config(run::parse_config(json, base_dir ? base_dir : ""), out);
  });
}

mcfg_status mcfg_config_load(const char* path, mcfg_config** out) {
  MCFG_REQUIRE(path && out, "null argument");
  return guard([&] { return make_config(run::load_config(path), out); });
}

mcfg_status mcfg_config_set_curvature(mcfg_config* config, int enabled) {
  MCFG_REQUIRE(config, "null config");
  return guard([&] {
    config->config.planner.curvature = enabled != 0;
    refresh(config);
    return MCFG_OK;
  });
}

mcfg_status mcfg_config_set_record_timing(mcfg_config* config, int enabled) {
  MCFG_REQUIRE(config, "null config");
  return guard([&] {
    config->config.planner.record_timing = enabled != 0;
    refresh(config);
    return MCFG_OK;
  });
}

mcfg_status mcfg_config_set_sdf_resolution(mcfg_config* config, double resolution) {
  MCFG_REQUIRE(config, "null config");
  MCFG_REQUIRE(resolution > 0.0, "SDF resolution must be positive");
  return guard([&] {
    config->config.sdf.resolution = resolution;
    refresh(config);
    return MCFG_OK;
  });
}

mcfg_status mcfg_config_sdf_resolution(const mcfg_config* config, double* resolution) {
  MCFG_REQUIRE(config && resolution, "null argument");
  *resolution = config->config.sdf.resolution;
  return MCFG_OK;
}

mcfg_status mcfg_config_json(const mcfg_config* config, const char** json) {
  MCFG_REQUIRE(config && json, "null argument");
  *json = config->json.c_str();
  return MCFG_OK;
}

void mcfg_config_free(mcfg_config* config) { delete config; }

// ---------------------------------------------------------------- tracks

mcfg_status mcfg_track_from_config(const mcfg_config* config, mcfg_track** out) {
  MCFG_REQUIRE(config && out, "null argument");
  return guard([&] {
    *out = new mcfg_track{run::resolve_track(config->config.track)};
    return MCFG_OK;
  });
}

mcfg_status mcfg_track_generate(const char* kind, double spacing, mcfg_track** out) {
  MCFG_REQUIRE(kind && out, "null argument");
  MCFG_REQUIRE(spacing > 0.0, "track spacing must be positive");
  return guard([&] {
    *out = new mcfg_track{track::generate_track(kind, spacing)};
    return MCFG_OK;
  });
}

mcfg_status mcfg_track_load(const char* path, double spacing, mcfg_track** out) {
  MCFG_REQUIRE(path && out, "null argument");
  MCFG_REQUIRE(spacing > 0.0, "track spacing must be positive");
  return guard([&] {
    *out = new mcfg_track{track::load_track(path, spacing)};
    return MCFG_OK;
  });
}

mcfg_status mcfg_track_save(const mcfg_track* track, const char* path) {
  MCFG_REQUIRE(track && path, "null argument");
  return guard([&] {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    track::save_track(track->track, p);
    return MCFG_OK;
  });
}

mcfg_status mcfg_track_info(const mcfg_track* track, size_t* stations, double* length,
                            int* closed, uint64_t* hash) {
  MCFG_REQUIRE(track, "null track");
  if (stations) *stations = track->track.size();
  if (length) *length = track->track.length();
  if (closed) *closed = track->track.closed ? 1 : 0;
  if (hash) *hash = track->track.hash();
  return MCFG_OK;
}

void mcfg_track_free(mcfg_track* track) { delete track; }

// ---------------------------------------------------------------- sdf

mcfg_status mcfg_sdf_build(const mcfg_track* track, double resolution, mcfg_sdf** out) {
  MCFG_REQUIRE(track && out, "null argument");
  MCFG_REQUIRE(resolution > 0.0, "SDF resolution must be positive");
  return guard([&] {
    auto grid = std::make_shared<const track::SdfGrid>(track::build_sdf(track->track, resolution));
    *out = new mcfg_sdf{std::move(grid), run::SdfOrigin{"built", {}}};
    return MCFG_OK;
  });
}

mcfg_status mcfg_sdf_from_config(const mcfg_config* config, const mcfg_track* track,
                                 mcfg_sdf** out) {
  MCFG_REQUIRE(config && track && out, "null argument");
  return guard([&] {
    run::SdfOrigin origin;
    auto grid = run::resolve_sdf(track->track, config->config.sdf, &origin);
    *out = new mcfg_sdf{std::move(grid), std::move(origin)};
    return MCFG_OK;
  });
}

mcfg_status mcfg_sdf_load(const char* path, mcfg_sdf** out) {
  MCFG_REQUIRE(path && out, "null argument");
  return guard([&] {
    auto grid = std::make_shared<const track::SdfGrid>(track::load_sdf(path));
    *out = new mcfg_sdf{std::move(grid), run::SdfOrigin{"loaded", path}};
    return MCFG_OK;
  });
}

mcfg_status mcfg_sdf_save(const mcfg_sdf* sdf, const char* path) {
  MCFG_REQUIRE(sdf && path, "null argument");
  return guard([&] {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    track::save_sdf(*sdf->grid, p);
    return MCFG_OK;
  });
}

mcfg_status mcfg_sdf_info(const mcfg_sdf* sdf, uint32_t* width, uint32_t* height,
                          double* resolution) {
  MCFG_REQUIRE(sdf, "null sdf");
  if (width) *width = sdf->grid->width;
  if (height) *height = sdf->grid->height;
  if (resolution) *resolution = sdf->grid->resolution;
  return MCFG_OK;
}

mcfg_status mcfg_sdf_source(const mcfg_sdf* sdf, const char** source) {
  MCFG_REQUIRE(sdf && source, "null argument");
  *source = sdf->origin.source.c_str();
  return MCFG_OK;
}

mcfg_status mcfg_sdf_query(const mcfg_sdf* sdf, double x, double y, double* distance) {
  MCFG_REQUIRE(sdf && distance, "null argument");
  return guard([&] {
    try {
      *distance = track::query_sdf(*sdf->grid, {x, y}).distance;
    } catch (const track::SdfRangeError& e) {
      return fail(MCFG_ERR_USAGE, e.what());
    }
    return MCFG_OK;
  });
}

void mcfg_sdf_free(mcfg_sdf* sdf) { delete sdf; }

// ---------------------------------------------------------------- laps

mcfg_status mcfg_lap_run(const mcfg_config* config, const mcfg_track* track, const mcfg_sdf* sdf,
                         mcfg_lap** out) {
  MCFG_REQUIRE(config && track && sdf && out, "null argument");
  return guard([&] {
    auto h = std::make_unique<mcfg_lap>();
    h->config = config->config;
    h->track = track->track;
    h->origin = sdf->origin;
    h->lap = planner::run_lap(config->config.planner, track->track, sdf->grid);
    const bool completed = h->lap.completed;
    const std::string status = h->lap.status;
    *out = h.release();
    return completed ? MCFG_OK : fail(MCFG_ERR_PLANNER, "lap did not complete: " + status);
  });
}

mcfg_status mcfg_lap_status(const mcfg_lap* lap, int* completed, const char** status) {
  MCFG_REQUIRE(lap, "null lap");
  if (completed) *completed = lap->lap.completed ? 1 : 0;
  if (status) *status = lap->lap.status.c_str();
  return MCFG_OK;
}

mcfg_status mcfg_lap_metrics(const mcfg_lap* lap, mcfg_metrics* out) {
  MCFG_REQUIRE(lap && out, "null argument");
  *out = to_c(lap->lap.metrics);
  return MCFG_OK;
}

mcfg_status mcfg_lap_steps(const mcfg_lap* lap, size_t* steps) {
  MCFG_REQUIRE(lap && steps, "null argument");
  *steps = lap->lap.steps.size();
  return MCFG_OK;
}

mcfg_status mcfg_lap_write(const mcfg_lap* lap, const char* dir) {
  MCFG_REQUIRE(lap && dir, "null argument");
  return guard([&] {
    const std::filesystem::path d(dir);
    write_file(d / "trajectory.csv", run::lap_csv(lap->lap, lap->config.planner));
    write_file(d / "report.json", run::lap_report_json(lap->config, lap->lap, lap->origin));
    write_file(d / "trajectory.svg", run::lap_svg(lap->track, lap->lap));
    return MCFG_OK;
  });
}

void mcfg_lap_free(mcfg_lap* lap) { delete lap; }

// ---------------------------------------------------------------- bench

mcfg_status mcfg_bench_run(const mcfg_config* config, const mcfg_track* track,
                           const mcfg_sdf* sdf, mcfg_bench** out) {
  MCFG_REQUIRE(config && track && sdf && out, "null argument");
  return guard([&] {
    auto h = std::make_unique<mcfg_bench>();
    h->config = config->config;
    h->origin = sdf->origin;
    h->bench = run::run_bench(config->config, track->track, sdf->grid);
    const bool ok = h->bench.enabled.completed && h->bench.disabled.completed;
    const std::string on = h->bench.enabled.status, off = h->bench.disabled.status;
    *out = h.release();
    return ok ? MCFG_OK
              : fail(MCFG_ERR_PLANNER, "bench lap failed (curvature on: " + on +
                                           ", curvature off: " + off + ")");
  });
}

mcfg_status mcfg_bench_metrics(const mcfg_bench* bench, mcfg_metrics* enabled,
                               mcfg_metrics* disabled) {
  MCFG_REQUIRE(bench, "null bench");
  if (enabled) *enabled = to_c(bench->bench.enabled.metrics);
  if (disabled) *disabled = to_c(bench->bench.disabled.metrics);
  return MCFG_OK;
}

mcfg_status mcfg_bench_write(const mcfg_bench* bench, const char* dir) {
  MCFG_REQUIRE(bench && dir, "null argument");
  return guard([&] {
    const std::filesystem::path d(dir);
    write_file(d / "bench.csv", run::bench_csv(bench->config, bench->bench));
    write_file(d / "bench.json", run::bench_json(bench->config, bench->bench, bench->origin));
    write_file(d / "curvature_on.csv", run::lap_csv(bench->bench.enabled, bench->config.planner));
    write_file(d / "curvature_off.csv",
               run::lap_csv(bench->bench.disabled, bench->config.planner));
    return MCFG_OK;
  });
}

void mcfg_bench_free(mcfg_bench* bench) { delete bench; }

}  // extern "C"
