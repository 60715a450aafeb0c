#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

namespace mincurvfg::metrics {

struct LapMetrics {
  double cumulative_curvature = 0.0;  // sum of Menger curvature over interior samples, 1/m
  double distance = 0.0;              // m
  double mean_speed = 0.0;            // m/s
  double max_speed = 0.0;
  double min_speed = 0.0;
  double mean_solve_ms = 0.0;
  double max_solve_ms = 0.0;
  double min_solve_ms = 0.0;
  double median_solve_ms = 0.0;
  int skipped_points = 0;  // repeated samples ignored by the curvature sum
};

/// Three-point (Menger) curvature 2|cross(b-a, c-b)| / (|b-a| |c-b| |c-a|).
/// NaN when two of the points coincide.
double menger_curvature(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                        const Eigen::Vector2d& c);

struct CurvatureSum {
  double total = 0.0;
  int skipped = 0;
};

/// Samples closer than this to the previously kept sample are treated as
/// repeated. Near standstill the plant moves sub-millimetre per step and the
/// three-point formula would amplify that jitter into huge curvature spikes.
inline constexpr double kMinSampleSeparation = 5e-3;  // m

/// Sum of Menger curvature over consecutive triples; repeated points are
/// dropped before forming triples and counted in `skipped`.
CurvatureSum cumulative_curvature(std::span<const Eigen::Vector2d> positions,
                                  double min_separation = kMinSampleSeparation);

double path_length(std::span<const Eigen::Vector2d> positions);

struct Summary {
  double mean = 0.0;
  double max = 0.0;
  double min = 0.0;
  double median = 0.0;
};

Summary summarize(std::span<const double> samples);

/// Metrics of a closed-loop trace: positions/speeds per plant sample and the
/// wall time of each planner step in milliseconds.
LapMetrics trace_metrics(std::span<const Eigen::Vector2d> positions,
                         std::span<const double> speeds, std::span<const double> solve_ms);

}  // namespace mincurvfg::metrics
