#pragma once

// Racetrack geometry, track files, and the signed distance field used by the
// obstacle factor.

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mincurvfg::track {

using Point = Eigen::Vector2d;
using Polyline = std::vector<Point>;

/// Malformed or geometrically invalid track input.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Query outside the usable extent of an SDF grid.
class SdfRangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Track {
  Polyline centerline;  // equidistant stations
  Polyline left;
  Polyline right;
  std::vector<double> width_left;  // per centerline station
  std::vector<double> width_right;
  bool closed = true;
  double spacing = 0.0;  // arc length between stations

  std::size_t size() const noexcept { return centerline.size(); }
  double length() const;

  /// Station position at arc length s. Closed tracks wrap; open tracks
  /// extrapolate along the end tangents.
  Point point_at(double s) const;
  Point tangent_at(double s) const;
  double heading_at(double s) const;

  struct Projection {
    double s = 0.0;           // arc length of the foot point
    std::size_t segment = 0;  // segment index containing the foot point
    double lateral = 0.0;     // signed offset, positive to the left
  };
  /// Nearest point on the centerline. With a hint, only segments within
  /// +-window of arc length around the hint are searched.
  Projection project(const Point& p, std::optional<double> hint = std::nullopt,
                     double window = 0.5) const;

  /// Stable hash of the geometry, used to tag reports.
  std::uint64_t hash() const;
};

/// Builds a track from raw centerline samples and half-widths: resamples the
/// centerline to uniform spacing, derives boundaries, validates geometry.
Track make_track(const Polyline& centerline, const std::vector<double>& width_left,
                 const std::vector<double>& width_right, bool closed, double spacing);

/// Track from explicit boundary polylines paired point by point.
Track make_track_from_boundaries(const Polyline& left, const Polyline& right, bool closed,
                                 double spacing);

/// Schema A file: header `x_c,y_c,w_left,w_right`.
Track load_track(const std::filesystem::path& path, double spacing = 0.01);
/// Schema B: two files with headers `x_l,y_l` and `x_r,y_r`.
Track load_track(const std::filesystem::path& left_path, const std::filesystem::path& right_path,
                 double spacing = 0.01);

/// Writes schema A.
void save_track(const Track& track, const std::filesystem::path& path);

// Built-in synthetic tracks.
Track ring_track(double r_inner = 1.0, double r_outer = 1.4, double spacing = 0.01);
Track oval_track(double straight = 2.0, double radius = 0.5, double width = 0.37,
                 double spacing = 0.01);
Track chicane_track(double spacing = 0.01);
Track straight_track(double length = 10.0, double width = 0.37, double spacing = 0.01);

/// Generator by name: "ring", "oval", "chicane", "straight".
Track generate_track(const std::string& kind, double spacing = 0.01);

/// Boundary segments and sign polygons of the drivable region. Open tracks
/// get their side walls extended past both ends and closed with caps.
struct Region {
  std::vector<Polyline> walls;     // polylines whose segments define |d|
  std::vector<Polyline> polygons;  // implicitly closed rings, inside = odd crossing parity
};

inline constexpr double kOpenTrackExtension = 1.0;

Region drivable_region(const Track& track);

struct SdfGrid {
  Point origin = Point::Zero();  // position of sample (0, 0)
  double resolution = 0.0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<double> values;  // row-major, values[j * width + i]

  double at(std::uint32_t i, std::uint32_t j) const { return values[std::size_t(j) * width + i]; }
  Point sample_point(std::uint32_t i, std::uint32_t j) const {
    return origin + resolution * Point(double(i), double(j));
  }
  Point max_corner() const { return sample_point(width - 1, height - 1); }
};

/// Margin added around the region bounding box when no margin is given.
double default_sdf_margin(double resolution);

/// Exact signed Euclidean distance sampled on a regular grid, positive inside.
SdfGrid build_sdf(const Track& track, double resolution, std::optional<double> margin = {});

struct SdfQuery {
  double distance = 0.0;
  Point gradient = Point::Zero();
  bool extrapolated = false;
};

/// Bilinear interpolation; outside the grid the value is extrapolated from
/// the nearest extent point and flagged. Throws SdfRangeError beyond
/// max_extrapolation(grid).
SdfQuery query_sdf(const SdfGrid& grid, const Point& p);
double max_extrapolation(const SdfGrid& grid);

/// -d + epsilon when d <= epsilon, else 0.
double hinge_cost(double distance, double epsilon);

/// Binary cache: "SDF1", u32 width, u32 height, f64 origin_x, origin_y,
/// resolution, then width*height little-endian f64 row-major.
void save_sdf(const SdfGrid& grid, const std::filesystem::path& path);
SdfGrid load_sdf(const std::filesystem::path& path);

// Geometry helpers shared with tests.
double point_segment_distance(const Point& p, const Point& a, const Point& b);
bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d);

}  // namespace mincurvfg::track
