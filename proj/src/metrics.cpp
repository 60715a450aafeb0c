#include "mincurvfg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mincurvfg::metrics {

double menger_curvature(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                        const Eigen::Vector2d& c) {
  const Eigen::Vector2d ab = b - a;
  const Eigen::Vector2d bc = c - b;
  const double denom = ab.norm() * bc.norm() * (c - a).norm();
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double cross = ab.x() * bc.y() - ab.y() * bc.x();
  return 2.0 * std::abs(cross) / denom;
}

CurvatureSum cumulative_curvature(std::span<const Eigen::Vector2d> positions,
                                  double min_separation) {
  CurvatureSum out;
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(positions.size());
  for (const auto& p : positions) {
    if (!pts.empty() && (p - pts.back()).norm() <= min_separation) {
      ++out.skipped;
      continue;
    }
    pts.push_back(p);
  }
  for (std::size_t i = 0; i + 2 < pts.size(); ++i) {
    const double k = menger_curvature(pts[i], pts[i + 1], pts[i + 2]);
    if (std::isnan(k)) {
      ++out.skipped;  // a == c: the path doubled back on itself
      continue;
    }
    out.total += k;
  }
  return out;
}

double path_length(std::span<const Eigen::Vector2d> positions) {
  double total = 0.0;
  for (std::size_t i = 1; i < positions.size(); ++i) total += (positions[i] - positions[i - 1]).norm();
  return total;
}

Summary summarize(std::span<const double> samples) {
  Summary s;
  if (samples.empty()) return s;
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / double(samples.size());
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  s.min = *lo;
  s.max = *hi;
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return s;
}

LapMetrics trace_metrics(std::span<const Eigen::Vector2d> positions,
                         std::span<const double> speeds, std::span<const double> solve_ms) {
  LapMetrics m;
  const CurvatureSum k = cumulative_curvature(positions);
  m.cumulative_curvature = k.total;
  m.skipped_points = k.skipped;
  m.distance = path_length(positions);
  const Summary v = summarize(speeds);
  m.mean_speed = v.mean;
  m.max_speed = v.max;
  m.min_speed = v.min;
  const Summary t = summarize(solve_ms);
  m.mean_solve_ms = t.mean;
  m.max_solve_ms = t.max;
  m.min_solve_ms = t.min;
  m.median_solve_ms = t.median;
  return m;
}

}  // namespace mincurvfg::metrics
