#ifndef MINCURVFG_H
#define MINCURVFG_H

/* C interface to the minimum-curvature factor-graph planner.
 *
 * Objects are opaque handles released with their *_free function (NULL is
 * accepted). Every other call returns an mcfg_status; on failure
 * mcfg_last_error() describes the problem for the calling thread until its
 * next failing call. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MCFG_API __declspec(dllexport)
#else
#define MCFG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mcfg_status {
  MCFG_OK = 0,
  MCFG_ERR_INTERNAL = 1, /* unexpected failure inside the library */
  MCFG_ERR_USAGE = 2,    /* invalid argument: null handle, bad value */
  MCFG_ERR_INPUT = 3,    /* unreadable or malformed file, invalid config or track */
  MCFG_ERR_PLANNER = 4   /* lap did not complete */
} mcfg_status;

typedef struct mcfg_config mcfg_config;
typedef struct mcfg_track mcfg_track;
typedef struct mcfg_sdf mcfg_sdf;
typedef struct mcfg_lap mcfg_lap;
typedef struct mcfg_bench mcfg_bench;

typedef struct mcfg_metrics {
  double cumulative_curvature;
  double distance;
  double mean_speed;
  double max_speed;
  double min_speed;
  double mean_solve_ms;
  double median_solve_ms;
  double max_solve_ms;
  double min_solve_ms;
  int skipped_points;
} mcfg_metrics;

MCFG_API const char* mcfg_version(void);
MCFG_API const char* mcfg_last_error(void);

/* ---- configuration */

/* Defaults: ring track, every planner parameter at its documented value. */
MCFG_API mcfg_status mcfg_config_default(mcfg_config** out);
/* Relative paths inside the document resolve against base_dir (may be NULL). */
MCFG_API mcfg_status mcfg_config_parse(const char* json, const char* base_dir, mcfg_config** out);
MCFG_API mcfg_status mcfg_config_load(const char* path, mcfg_config** out);
MCFG_API mcfg_status mcfg_config_set_curvature(mcfg_config* config, int enabled);
MCFG_API mcfg_status mcfg_config_set_record_timing(mcfg_config* config, int enabled);
MCFG_API mcfg_status mcfg_config_set_sdf_resolution(mcfg_config* config, double resolution);
MCFG_API mcfg_status mcfg_config_sdf_resolution(const mcfg_config* config, double* resolution);
/* Complete config document; the string lives as long as the handle. */
MCFG_API mcfg_status mcfg_config_json(const mcfg_config* config, const char** json);
MCFG_API void mcfg_config_free(mcfg_config* config);

/* ---- tracks */

/* Track selected by the config (file or generator). */
MCFG_API mcfg_status mcfg_track_from_config(const mcfg_config* config, mcfg_track** out);
/* kind: "ring", "oval", "chicane" or "straight". */
MCFG_API mcfg_status mcfg_track_generate(const char* kind, double spacing, mcfg_track** out);
MCFG_API mcfg_status mcfg_track_load(const char* path, double spacing, mcfg_track** out);
MCFG_API mcfg_status mcfg_track_save(const mcfg_track* track, const char* path);
MCFG_API mcfg_status mcfg_track_info(const mcfg_track* track, size_t* stations, double* length,
                                     int* closed, uint64_t* hash);
MCFG_API void mcfg_track_free(mcfg_track* track);

/* ---- signed distance fields */

MCFG_API mcfg_status mcfg_sdf_build(const mcfg_track* track, double resolution, mcfg_sdf** out);
/* Loads the config's cache file when it exists with the configured
 * resolution, else builds (and caches when a cache path is set). */
MCFG_API mcfg_status mcfg_sdf_from_config(const mcfg_config* config, const mcfg_track* track,
                                          mcfg_sdf** out);
MCFG_API mcfg_status mcfg_sdf_load(const char* path, mcfg_sdf** out);
MCFG_API mcfg_status mcfg_sdf_save(const mcfg_sdf* sdf, const char* path);
MCFG_API mcfg_status mcfg_sdf_info(const mcfg_sdf* sdf, uint32_t* width, uint32_t* height,
                                   double* resolution);
/* "built", "built+cached" or "loaded". */
MCFG_API mcfg_status mcfg_sdf_source(const mcfg_sdf* sdf, const char** source);
MCFG_API mcfg_status mcfg_sdf_query(const mcfg_sdf* sdf, double x, double y, double* distance);
MCFG_API void mcfg_sdf_free(mcfg_sdf* sdf);

/* ---- laps */

/* Runs one closed-loop lap. A lap that stops early still yields a handle;
 * the call then returns MCFG_ERR_PLANNER and *out holds the partial lap. */
MCFG_API mcfg_status mcfg_lap_run(const mcfg_config* config, const mcfg_track* track,
                                  const mcfg_sdf* sdf, mcfg_lap** out);
MCFG_API mcfg_status mcfg_lap_status(const mcfg_lap* lap, int* completed, const char** status);
MCFG_API mcfg_status mcfg_lap_metrics(const mcfg_lap* lap, mcfg_metrics* out);
MCFG_API mcfg_status mcfg_lap_steps(const mcfg_lap* lap, size_t* steps);
/* trajectory.csv, report.json and trajectory.svg under dir. */
MCFG_API mcfg_status mcfg_lap_write(const mcfg_lap* lap, const char* dir);
MCFG_API void mcfg_lap_free(mcfg_lap* lap);

/* ---- ablation bench */

/* Curvature factors on vs off. Returns MCFG_ERR_PLANNER when either lap
 * failed; *out is still set and the failed row is marked in the reports. */
MCFG_API mcfg_status mcfg_bench_run(const mcfg_config* config, const mcfg_track* track,
                                    const mcfg_sdf* sdf, mcfg_bench** out);
MCFG_API mcfg_status mcfg_bench_metrics(const mcfg_bench* bench, mcfg_metrics* enabled,
                                        mcfg_metrics* disabled);
/* bench.csv, bench.json and the two trajectory tables under dir. */
MCFG_API mcfg_status mcfg_bench_write(const mcfg_bench* bench, const char* dir);
MCFG_API void mcfg_bench_free(mcfg_bench* bench);

#ifdef __cplusplus
}
#endif

#endif /* MINCURVFG_H */
