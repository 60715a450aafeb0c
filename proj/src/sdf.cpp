#include "mincurvfg/track.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace mincurvfg::track {

namespace {

struct Segment {
  Point a;
  Point b;
};

// Uniform bucket grid over segments for exact nearest-distance queries.
class SegmentIndex {
 public:
  SegmentIndex(std::vector<Segment> segments, const Point& lo, const Point& hi, double bucket)
      : segments_(std::move(segments)), lo_(lo), bucket_(bucket) {
    nx_ = std::max(1, int(std::ceil((hi.x() - lo.x()) / bucket)) + 1);
    ny_ = std::max(1, int(std::ceil((hi.y() - lo.y()) / bucket)) + 1);
    cells_.resize(std::size_t(nx_) * ny_);
    for (std::uint32_t s = 0; s < segments_.size(); ++s) {
      const Point smin = segments_[s].a.cwiseMin(segments_[s].b);
      const Point smax = segments_[s].a.cwiseMax(segments_[s].b);
      const int x0 = cell_x(smin.x()), x1 = cell_x(smax.x());
      const int y0 = cell_y(smin.y()), y1 = cell_y(smax.y());
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) cells_[std::size_t(y) * nx_ + x].push_back(s);
    }
  }

  double nearest(const Point& p) const {
    const int cx = cell_x(p.x());
    const int cy = cell_y(p.y());
    const int max_ring = std::max({cx, nx_ - 1 - cx, cy, ny_ - 1 - cy});
    double best2 = std::numeric_limits<double>::infinity();
    for (int ring = 0; ring <= max_ring; ++ring) {
      for (int y = cy - ring; y <= cy + ring; ++y) {
        if (y < 0 || y >= ny_) continue;
        const bool edge_row = (y == cy - ring || y == cy + ring);
        const int step = edge_row ? 1 : 2 * ring;
        for (int x = cx - ring; x <= cx + ring; x += std::max(step, 1)) {
          if (x < 0 || x >= nx_) continue;
          for (const std::uint32_t s : cells_[std::size_t(y) * nx_ + x]) {
            const double d = point_segment_distance(p, segments_[s].a, segments_[s].b);
            best2 = std::min(best2, d * d);
          }
        }
      }
      // Buckets in ring+1 are at least ring*bucket away.
      const double bound = double(ring) * bucket_;
      if (best2 <= bound * bound) break;
    }
    return std::sqrt(best2);
  }

 private:
  int cell_x(double x) const {
    return std::clamp(int(std::floor((x - lo_.x()) / bucket_)), 0, nx_ - 1);
  }
  int cell_y(double y) const {
    return std::clamp(int(std::floor((y - lo_.y()) / bucket_)), 0, ny_ - 1);
  }

  std::vector<Segment> segments_;
  Point lo_;
  double bucket_;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<std::vector<std::uint32_t>> cells_;
};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw LoadError("truncated SDF file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw LoadError("truncated SDF file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

}  // namespace

double default_sdf_margin(double resolution) { return std::max(3.0 * resolution, 0.05); }

double max_extrapolation(const SdfGrid& grid) { return std::max(20.0 * grid.resolution, 0.25); }

SdfGrid build_sdf(const Track& track, double resolution, std::optional<double> margin) {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw std::invalid_argument("SDF resolution must be positive");
  }
  const double pad = margin.value_or(default_sdf_margin(resolution));
  if (pad < 3.0 * resolution) throw std::invalid_argument("SDF margin must be >= 3 cells");

  const Region region = drivable_region(track);
  Point lo = Point::Constant(std::numeric_limits<double>::infinity());
  Point hi = -lo;
  std::vector<Segment> segments;
  for (const auto& wall : region.walls) {
    for (std::size_t i = 0; i + 1 < wall.size(); ++i) segments.push_back({wall[i], wall[i + 1]});
    for (const auto& p : wall) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }

  SdfGrid grid;
  grid.resolution = resolution;
  grid.origin = lo - Point::Constant(pad);
  const Point span = (hi + Point::Constant(pad)) - grid.origin;
  grid.width = static_cast<std::uint32_t>(std::ceil(span.x() / resolution)) + 1;
  grid.height = static_cast<std::uint32_t>(std::ceil(span.y() / resolution)) + 1;
  grid.values.assign(std::size_t(grid.width) * grid.height, 0.0);

  const double bucket = std::max(8.0 * resolution, 0.05);
  const SegmentIndex index(std::move(segments), grid.origin, grid.max_corner(), bucket);

  // Polygon edges for scanline parity.
  std::vector<Segment> edges;
  for (const auto& poly : region.polygons) {
    for (std::size_t i = 0; i < poly.size(); ++i) {
      edges.push_back({poly[i], poly[(i + 1) % poly.size()]});
    }
  }

  parallel_for(grid.height, [&](std::size_t j) {
    const double y = grid.origin.y() + double(j) * resolution;
    std::vector<double> crossings;
    for (const auto& e : edges) {
      if ((e.a.y() > y) != (e.b.y() > y)) {
        crossings.push_back(e.a.x() + (y - e.a.y()) / (e.b.y() - e.a.y()) * (e.b.x() - e.a.x()));
      }
    }
    std::sort(crossings.begin(), crossings.end());
    std::size_t passed = 0;
    for (std::uint32_t i = 0; i < grid.width; ++i) {
      const double x = grid.origin.x() + double(i) * resolution;
      while (passed < crossings.size() && crossings[passed] < x) ++passed;
      const bool inside = (passed % 2) == 1;
      const double d = index.nearest({x, y});
      grid.values[j * grid.width + i] = inside ? d : -d;
    }
  });
  return grid;
}

SdfQuery query_sdf(const SdfGrid& grid, const Point& p) {
  if (grid.width < 2 || grid.height < 2) throw SdfRangeError("SDF grid is empty");
  const Point hi = grid.max_corner();
  const Point q = p.cwiseMax(grid.origin).cwiseMin(hi);
  const double outside = (p - q).norm();
  if (outside > max_extrapolation(grid)) {
    throw SdfRangeError("SDF query (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) +
                        ") is outside the grid extent");
  }

  const double fx = (q.x() - grid.origin.x()) / grid.resolution;
  const double fy = (q.y() - grid.origin.y()) / grid.resolution;
  const auto i0 = static_cast<std::uint32_t>(std::clamp(std::floor(fx), 0.0, double(grid.width - 2)));
  const auto j0 = static_cast<std::uint32_t>(std::clamp(std::floor(fy), 0.0, double(grid.height - 2)));
  const double tx = fx - double(i0);
  const double ty = fy - double(j0);
  const double v00 = grid.at(i0, j0);
  const double v10 = grid.at(i0 + 1, j0);
  const double v01 = grid.at(i0, j0 + 1);
  const double v11 = grid.at(i0 + 1, j0 + 1);

  SdfQuery out;
  out.distance = (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 +
                 tx * ty * v11;
  out.gradient.x() = ((1 - ty) * (v10 - v00) + ty * (v11 - v01)) / grid.resolution;
  out.gradient.y() = ((1 - tx) * (v01 - v00) + tx * (v11 - v10)) / grid.resolution;
  if (outside > 0.0) {
    out.extrapolated = true;
    out.distance -= outside;
    out.gradient = -(p - q) / outside;
  }
  return out;
}

double hinge_cost(double distance, double epsilon) {
  return distance <= epsilon ? -distance + epsilon : 0.0;
}

void save_sdf(const SdfGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write SDF file " + path.string());
  out.write("SDF1", 4);
  put_u32(out, grid.width);
  put_u32(out, grid.height);
  put_f64(out, grid.origin.x());
  put_f64(out, grid.origin.y());
  put_f64(out, grid.resolution);
  for (const double v : grid.values) put_f64(out, v);
  if (!out) throw LoadError("failed writing SDF file " + path.string());
}

SdfGrid load_sdf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open SDF file " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SDF1", 4) != 0) {
    throw LoadError(path.string() + ": not an SDF1 file");
  }
  SdfGrid g;
  g.width = get_u32(in);
  g.height = get_u32(in);
  g.origin.x() = get_f64(in);
  g.origin.y() = get_f64(in);
  g.resolution = get_f64(in);
  if (g.width < 2 || g.height < 2 || !(g.resolution > 0.0) || !g.origin.allFinite()) {
    throw LoadError(path.string() + ": invalid SDF header");
  }
  g.values.resize(std::size_t(g.width) * g.height);
  for (auto& v : g.values) {
    v = get_f64(in);
    if (!std::isfinite(v)) throw LoadError(path.string() + ": non-finite SDF value");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw LoadError(path.string() + ": trailing bytes");
  return g;
}

}  // namespace mincurvfg::track
