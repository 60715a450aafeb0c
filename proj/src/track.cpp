#include "mincurvfg/track.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace mincurvfg::track {

namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

Point left_normal(const Point& t) { return {-t.y(), t.x()}; }

// Uniform arc-length resampling of a polyline and per-vertex scalar channels.
struct Resampled {
  Polyline points;
  std::vector<std::vector<double>> channels;
  double spacing = 0.0;
};

Resampled resample(const Polyline& pts, const std::vector<std::vector<double>>& channels,
                   bool closed, double spacing) {
  const std::size_t n = pts.size();
  const std::size_t segments = closed ? n : n - 1;
  std::vector<double> cum(segments + 1, 0.0);
  for (std::size_t i = 0; i < segments; ++i) {
    cum[i + 1] = cum[i] + (pts[(i + 1) % n] - pts[i]).norm();
  }
  const double total = cum.back();

  std::size_t count;
  double ds;
  if (closed) {
    count = std::max<std::size_t>(3, static_cast<std::size_t>(std::llround(total / spacing)));
    ds = total / double(count);
  } else {
    count = std::max<std::size_t>(3, static_cast<std::size_t>(std::llround(total / spacing)) + 1);
    ds = total / double(count - 1);
  }

  Resampled out;
  out.spacing = ds;
  out.points.reserve(count);
  out.channels.assign(channels.size(), {});
  std::size_t seg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double s = std::min(double(k) * ds, total);
    while (seg + 1 < segments && cum[seg + 1] < s) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double t = len > 0.0 ? std::clamp((s - cum[seg]) / len, 0.0, 1.0) : 0.0;
    const std::size_t a = seg;
    const std::size_t b = (seg + 1) % n;
    out.points.push_back((1.0 - t) * pts[a] + t * pts[b]);
    for (std::size_t c = 0; c < channels.size(); ++c) {
      out.channels[c].push_back((1.0 - t) * channels[c][a] + t * channels[c][b]);
    }
  }
  return out;
}

void check_no_duplicates(const Polyline& pts, const std::string& what) {
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if ((pts[i + 1] - pts[i]).norm() < 1e-9) {
      throw LoadError(what + ": duplicate consecutive waypoints at index " + std::to_string(i + 1));
    }
  }
}

std::size_t segment_count(const Polyline& p, bool closed) {
  return closed ? p.size() : p.size() - 1;
}

void check_simple(const Polyline& p, bool closed, const std::string& what) {
  const std::size_t n = p.size();
  const std::size_t m = segment_count(p, closed);
  for (std::size_t i = 0; i < m; ++i) {
    const Point& a = p[i];
    const Point& b = p[(i + 1) % n];
    for (std::size_t j = i + 2; j < m; ++j) {
      if (closed && i == 0 && j == m - 1) continue;  // adjacent through the closing segment
      const Point& c = p[j];
      const Point& d = p[(j + 1) % n];
      if (segments_intersect(a, b, c, d)) {
        std::ostringstream os;
        os << what << " self-intersects: segment " << i << " crosses segment " << j;
        throw LoadError(os.str());
      }
    }
  }
}

void check_disjoint(const Polyline& p, const Polyline& q, bool closed) {
  const std::size_t mp = segment_count(p, closed);
  const std::size_t mq = segment_count(q, closed);
  for (std::size_t i = 0; i < mp; ++i) {
    const Point& a = p[i];
    const Point& b = p[(i + 1) % p.size()];
    const Point lo = a.cwiseMin(b);
    const Point hi = a.cwiseMax(b);
    for (std::size_t j = 0; j < mq; ++j) {
      const Point& c = q[j];
      const Point& d = q[(j + 1) % q.size()];
      if (c.x() > hi.x() && d.x() > hi.x()) continue;
      if (c.x() < lo.x() && d.x() < lo.x()) continue;
      if (segments_intersect(a, b, c, d)) {
        throw LoadError("left and right boundaries intersect near left segment " +
                        std::to_string(i));
      }
    }
  }
}

double polyline_distance(const Polyline& poly, bool closed, const Point& p) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t m = segment_count(poly, closed);
  for (std::size_t i = 0; i < m; ++i) {
    best = std::min(best, point_segment_distance(p, poly[i], poly[(i + 1) % poly.size()]));
  }
  return best;
}

// Station tangents by central differences (one-sided at open ends).
Polyline station_tangents(const Polyline& c, bool closed) {
  const std::size_t n = c.size();
  Polyline t(n);
  for (std::size_t i = 0; i < n; ++i) {
    Point d;
    if (closed) {
      d = c[(i + 1) % n] - c[(i + n - 1) % n];
    } else if (i == 0) {
      d = c[1] - c[0];
    } else if (i == n - 1) {
      d = c[n - 1] - c[n - 2];
    } else {
      d = c[i + 1] - c[i - 1];
    }
    t[i] = d.normalized();
  }
  return t;
}

// Planar path builder: straights and constant-radius arcs sampled every step.
class PathBuilder {
 public:
  PathBuilder(Point start, double heading, double step)
      : pos_(std::move(start)), heading_(heading), step_(step) {}

  void straight(double length) {
    const int n = std::max(1, int(std::ceil(length / step_)));
    const Point dir(std::cos(heading_), std::sin(heading_));
    const Point origin = pos_;
    for (int k = 1; k <= n; ++k) emit(origin + dir * (length * k / n));
  }

  // Positive angle turns left.
  void arc(double radius, double angle) {
    const double sign = angle >= 0 ? 1.0 : -1.0;
    const Point center = pos_ + sign * radius * Point(-std::sin(heading_), std::cos(heading_));
    const double start = std::atan2(pos_.y() - center.y(), pos_.x() - center.x());
    const int n = std::max(1, int(std::ceil(radius * std::abs(angle) / step_)));
    for (int k = 1; k <= n; ++k) {
      const double a = start + angle * k / n;
      emit(center + radius * Point(std::cos(a), std::sin(a)));
    }
    heading_ += angle;
  }

  Polyline finish_closed() {
    // Drop the final sample if it coincides with the start.
    if (!points_.empty() && (points_.back() - points_.front()).norm() < 0.5 * step_) {
      points_.pop_back();
    }
    return points_;
  }

  void begin() { points_.push_back(pos_); }

 private:
  void emit(const Point& p) {
    pos_ = p;
    points_.push_back(p);
  }

  Point pos_;
  double heading_;
  double step_;
  Polyline points_;
};

constexpr double kBuildStep = 0.002;

}  // namespace

// ---------------------------------------------------------------- geometry helpers

double point_segment_distance(const Point& p, const Point& a, const Point& b) {
  const Point ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d) {
  const double d1 = cross(b - a, c - a);
  const double d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c);
  const double d4 = cross(d - c, b - c);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  auto on_segment = [](const Point& p, const Point& q, const Point& r) {
    return std::min(p.x(), q.x()) <= r.x() && r.x() <= std::max(p.x(), q.x()) &&
           std::min(p.y(), q.y()) <= r.y() && r.y() <= std::max(p.y(), q.y());
  };
  if (d1 == 0 && on_segment(a, b, c)) return true;
  if (d2 == 0 && on_segment(a, b, d)) return true;
  if (d3 == 0 && on_segment(c, d, a)) return true;
  if (d4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

// ---------------------------------------------------------------- Track

double Track::length() const {
  if (centerline.size() < 2) return 0.0;
  return spacing * double(closed ? centerline.size() : centerline.size() - 1);
}

Point Track::point_at(double s) const {
  const std::size_t n = centerline.size();
  const double total = length();
  if (closed) {
    s = std::fmod(s, total);
    if (s < 0) s += total;
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(s / spacing), n - 1);
    const double t = s / spacing - double(k);
    return (1.0 - t) * centerline[k] + t * centerline[(k + 1) % n];
  }
  if (s <= 0.0) return centerline.front() + s * (centerline[1] - centerline[0]).normalized();
  if (s >= total) {
    return centerline.back() + (s - total) * (centerline[n - 1] - centerline[n - 2]).normalized();
  }
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(s / spacing), n - 2);
  const double t = s / spacing - double(k);
  return (1.0 - t) * centerline[k] + t * centerline[k + 1];
}

Point Track::tangent_at(double s) const {
  const std::size_t n = centerline.size();
  const double total = length();
  std::size_t k;
  if (closed) {
    s = std::fmod(s, total);
    if (s < 0) s += total;
    k = std::min<std::size_t>(static_cast<std::size_t>(s / spacing), n - 1);
    return (centerline[(k + 1) % n] - centerline[k]).normalized();
  }
  const double clamped = std::clamp(s, 0.0, total);
  k = std::min<std::size_t>(static_cast<std::size_t>(clamped / spacing), n - 2);
  return (centerline[k + 1] - centerline[k]).normalized();
}

double Track::heading_at(double s) const {
  const Point t = tangent_at(s);
  return std::atan2(t.y(), t.x());
}

Track::Projection Track::project(const Point& p, std::optional<double> hint, double window) const {
  const std::size_t n = centerline.size();
  const std::size_t m = closed ? n : n - 1;
  const double total = length();

  auto consider = [&](std::size_t seg, Projection& best, double& best_d2) {
    const Point& a = centerline[seg];
    const Point& b = centerline[(seg + 1) % n];
    const Point ab = b - a;
    double t = (p - a).dot(ab) / ab.squaredNorm();
    const bool first = !closed && seg == 0;
    const bool last = !closed && seg == m - 1;
    if (!(first && t < 0.0) && !(last && t > 1.0)) t = std::clamp(t, 0.0, 1.0);
    const Point foot = a + t * ab;
    const double d2 = (p - foot).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best.segment = seg;
      best.s = (double(seg) + t) * spacing;
      best.lateral = cross(ab.normalized(), p - foot);
    }
  };

  Projection best;
  double best_d2 = std::numeric_limits<double>::infinity();
  if (!hint) {
    for (std::size_t seg = 0; seg < m; ++seg) consider(seg, best, best_d2);
    return best;
  }
  const auto half = static_cast<long long>(std::ceil(window / spacing));
  const auto center = static_cast<long long>(std::floor(*hint / spacing));
  for (long long k = center - half; k <= center + half; ++k) {
    long long seg = k;
    if (closed) {
      seg %= static_cast<long long>(m);
      if (seg < 0) seg += static_cast<long long>(m);
    } else if (seg < 0 || seg >= static_cast<long long>(m)) {
      continue;
    }
    consider(static_cast<std::size_t>(seg), best, best_d2);
  }
  if (!std::isfinite(best_d2)) return project(p, std::nullopt, window);
  if (closed && best.s >= total) best.s -= total;
  return best;
}

std::uint64_t Track::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& p : centerline) mix(p.data(), 2 * sizeof(double));
  for (const auto& p : left) mix(p.data(), 2 * sizeof(double));
  for (const auto& p : right) mix(p.data(), 2 * sizeof(double));
  const unsigned char c = closed ? 1 : 0;
  mix(&c, 1);
  return h;
}

Track make_track(const Polyline& centerline, const std::vector<double>& width_left,
                 const std::vector<double>& width_right, bool closed, double spacing) {
  if (centerline.size() < 3) throw LoadError("track needs at least 3 waypoints");
  if (width_left.size() != centerline.size() || width_right.size() != centerline.size()) {
    throw LoadError("width columns must match the number of waypoints");
  }
  if (!(spacing > 0.0)) throw LoadError("resampling spacing must be positive");
  for (std::size_t i = 0; i < centerline.size(); ++i) {
    if (!centerline[i].allFinite() || !std::isfinite(width_left[i]) ||
        !std::isfinite(width_right[i])) {
      throw LoadError("non-finite waypoint at index " + std::to_string(i));
    }
    if (!(width_left[i] > 0.0 && width_right[i] > 0.0)) {
      throw LoadError("track widths must be positive (index " + std::to_string(i) + ")");
    }
  }
  check_no_duplicates(centerline, "centerline");
  if (closed && (centerline.back() - centerline.front()).norm() < 1e-9) {
    throw LoadError("closed centerline repeats its first waypoint");
  }

  const Resampled rs = resample(centerline, {width_left, width_right}, closed, spacing);
  Track t;
  t.closed = closed;
  t.spacing = rs.spacing;
  t.centerline = rs.points;
  t.width_left = rs.channels[0];
  t.width_right = rs.channels[1];

  const Polyline tangents = station_tangents(t.centerline, closed);
  t.left.reserve(t.size());
  t.right.reserve(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Point n = left_normal(tangents[i]);
    t.left.push_back(t.centerline[i] + t.width_left[i] * n);
    t.right.push_back(t.centerline[i] - t.width_right[i] * n);
  }
  check_simple(t.left, closed, "left boundary");
  check_simple(t.right, closed, "right boundary");
  check_disjoint(t.left, t.right, closed);
  return t;
}

Track make_track_from_boundaries(const Polyline& left, const Polyline& right, bool closed,
                                 double spacing) {
  if (left.size() != right.size()) {
    throw LoadError("boundary files must have the same number of points (" +
                    std::to_string(left.size()) + " vs " + std::to_string(right.size()) + ")");
  }
  if (left.size() < 3) throw LoadError("track needs at least 3 waypoints");
  check_no_duplicates(left, "left boundary");
  check_no_duplicates(right, "right boundary");
  check_simple(left, closed, "left boundary");
  check_simple(right, closed, "right boundary");
  check_disjoint(left, right, closed);

  Polyline mid(left.size());
  for (std::size_t i = 0; i < left.size(); ++i) mid[i] = 0.5 * (left[i] + right[i]);
  check_no_duplicates(mid, "centerline");

  const Resampled rs = resample(mid, {}, closed, spacing);
  Track t;
  t.closed = closed;
  t.spacing = rs.spacing;
  t.centerline = rs.points;
  t.left = left;
  t.right = right;
  for (const auto& c : t.centerline) {
    t.width_left.push_back(polyline_distance(left, closed, c));
    t.width_right.push_back(polyline_distance(right, closed, c));
  }
  return t;
}

// ---------------------------------------------------------------- files

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<int> row_lines;
  std::optional<bool> closed;
};

std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open track file " + path.string());
  CsvTable table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      // Optional directive "# closed: true|false".
      const auto pos = t.find("closed:");
      if (pos != std::string::npos) {
        const std::string v = trim(t.substr(pos + 7));
        if (v == "true") table.closed = true;
        else if (v == "false") table.closed = false;
        else throw LoadError(path.string() + ":" + std::to_string(lineno) + ": bad closed directive");
      }
      continue;
    }
    if (table.header.empty()) {
      table.header = split(t);
      continue;
    }
    const auto cells = split(t);
    if (cells.size() != table.header.size()) {
      throw LoadError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(table.header.size()) + " columns, got " +
                      std::to_string(cells.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != c.size() || c.empty() || !std::isfinite(v)) {
        throw LoadError(path.string() + ":" + std::to_string(lineno) + ": invalid number '" + c +
                        "'");
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
    table.row_lines.push_back(lineno);
  }
  if (table.header.empty()) throw LoadError(path.string() + ": missing header line");
  return table;
}

void expect_header(const CsvTable& t, const std::vector<std::string>& names,
                   const std::filesystem::path& path) {
  if (t.header != names) {
    std::string want;
    for (const auto& n : names) want += (want.empty() ? "" : ",") + n;
    throw LoadError(path.string() + ": expected header '" + want + "'");
  }
}

void reject_duplicates(const CsvTable& t, const std::filesystem::path& path) {
  for (std::size_t i = 0; i + 1 < t.rows.size(); ++i) {
    if (t.rows[i][0] == t.rows[i + 1][0] && t.rows[i][1] == t.rows[i + 1][1]) {
      throw LoadError(path.string() + ":" + std::to_string(t.row_lines[i + 1]) +
                      ": duplicate consecutive waypoint");
    }
  }
}

// Closed when explicitly marked, when the last row repeats the first, or
// when the end gap is comparable to the waypoint spacing.
bool infer_closed(CsvTable& t) {
  auto& rows = t.rows;
  const bool repeats = rows.size() > 3 && rows.front()[0] == rows.back()[0] &&
                       rows.front()[1] == rows.back()[1];
  if (repeats) rows.pop_back(), t.row_lines.pop_back();
  if (t.closed) return *t.closed;
  if (repeats) return true;
  std::vector<double> gaps;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    gaps.push_back(std::hypot(rows[i + 1][0] - rows[i][0], rows[i + 1][1] - rows[i][1]));
  }
  if (gaps.empty()) return false;
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  const double median = gaps[gaps.size() / 2];
  const double end_gap =
      std::hypot(rows.back()[0] - rows.front()[0], rows.back()[1] - rows.front()[1]);
  return end_gap <= 2.0 * median;
}

}  // namespace

Track load_track(const std::filesystem::path& path, double spacing) {
  CsvTable t = read_csv(path);
  expect_header(t, {"x_c", "y_c", "w_left", "w_right"}, path);
  if (t.rows.size() < 3) {
    throw LoadError(path.string() + ": track needs at least 3 waypoints, got " +
                    std::to_string(t.rows.size()));
  }
  reject_duplicates(t, path);
  const bool closed = infer_closed(t);
  Polyline c;
  std::vector<double> wl, wr;
  for (const auto& r : t.rows) {
    c.emplace_back(r[0], r[1]);
    wl.push_back(r[2]);
    wr.push_back(r[3]);
  }
  return make_track(c, wl, wr, closed, spacing);
}

Track load_track(const std::filesystem::path& left_path, const std::filesystem::path& right_path,
                 double spacing) {
  CsvTable l = read_csv(left_path);
  CsvTable r = read_csv(right_path);
  expect_header(l, {"x_l", "y_l"}, left_path);
  expect_header(r, {"x_r", "y_r"}, right_path);
  reject_duplicates(l, left_path);
  reject_duplicates(r, right_path);
  const bool closed = infer_closed(l);
  infer_closed(r);
  Polyline lp, rp;
  for (const auto& row : l.rows) lp.emplace_back(row[0], row[1]);
  for (const auto& row : r.rows) rp.emplace_back(row[0], row[1]);
  return make_track_from_boundaries(lp, rp, closed, spacing);
}

void save_track(const Track& track, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write track file " + path.string());
  out << "# closed: " << (track.closed ? "true" : "false") << "\n";
  out << "x_c,y_c,w_left,w_right\n";
  out.precision(17);
  for (std::size_t i = 0; i < track.size(); ++i) {
    out << track.centerline[i].x() << ',' << track.centerline[i].y() << ','
        << track.width_left[i] << ',' << track.width_right[i] << '\n';
  }
}

// ---------------------------------------------------------------- generators

Track ring_track(double r_inner, double r_outer, double spacing) {
  if (!(r_inner > 0.0 && r_outer > r_inner)) throw LoadError("ring radii must satisfy 0 < r1 < r2");
  const double rc = 0.5 * (r_inner + r_outer);
  const auto n = static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi * rc / kBuildStep));
  Polyline c;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = -0.5 * std::numbers::pi + 2.0 * std::numbers::pi * double(k) / double(n);
    c.emplace_back(rc * std::cos(a), rc * std::sin(a));
  }
  // Counter-clockwise: the inner circle is on the left.
  return make_track(c, std::vector<double>(n, rc - r_inner), std::vector<double>(n, r_outer - rc),
                    true, spacing);
}

Track oval_track(double straight, double radius, double width, double spacing) {
  PathBuilder b({-0.5 * straight, -radius}, 0.0, kBuildStep);
  b.begin();
  b.straight(straight);
  b.arc(radius, std::numbers::pi);
  b.straight(straight);
  b.arc(radius, std::numbers::pi);
  const Polyline c = b.finish_closed();
  return make_track(c, std::vector<double>(c.size(), 0.5 * width),
                    std::vector<double>(c.size(), 0.5 * width), true, spacing);
}

Track chicane_track(double spacing) {
  // Stadium with a left-right-left dip on the back straight.
  constexpr double kHalfStraight = 1.5;
  constexpr double kRadius = 0.6;
  constexpr double kWidth = 0.37;
  constexpr double kDipRadius = 1.0;
  constexpr double kDipAngle = 0.5;
  const double dip_span = 4.0 * kDipRadius * std::sin(kDipAngle);
  const double lead = 0.5 * (2.0 * kHalfStraight - dip_span);

  PathBuilder b({-kHalfStraight, -kRadius}, 0.0, kBuildStep);
  b.begin();
  b.straight(2.0 * kHalfStraight);
  b.arc(kRadius, std::numbers::pi);
  b.straight(lead);
  b.arc(kDipRadius, kDipAngle);
  b.arc(kDipRadius, -2.0 * kDipAngle);
  b.arc(kDipRadius, kDipAngle);
  b.straight(lead);
  b.arc(kRadius, std::numbers::pi);
  const Polyline c = b.finish_closed();
  return make_track(c, std::vector<double>(c.size(), 0.5 * kWidth),
                    std::vector<double>(c.size(), 0.5 * kWidth), true, spacing);
}

Track straight_track(double length, double width, double spacing) {
  Polyline c;
  const auto n = static_cast<std::size_t>(std::ceil(length / kBuildStep));
  for (std::size_t k = 0; k <= n; ++k) c.emplace_back(length * double(k) / double(n), 0.0);
  return make_track(c, std::vector<double>(c.size(), 0.5 * width),
                    std::vector<double>(c.size(), 0.5 * width), false, spacing);
}

Track generate_track(const std::string& kind, double spacing) {
  if (kind == "ring") return ring_track(1.0, 1.4, spacing);
  if (kind == "oval") return oval_track(2.0, 0.5, 0.37, spacing);
  if (kind == "chicane") return chicane_track(spacing);
  if (kind == "straight") return straight_track(10.0, 0.37, spacing);
  throw LoadError("unknown track generator '" + kind + "' (expected ring, oval, chicane, straight)");
}

// ---------------------------------------------------------------- region

Region drivable_region(const Track& track) {
  Region r;
  if (track.closed) {
    Polyline l = track.left;
    Polyline rt = track.right;
    r.polygons = {l, rt};
    l.push_back(l.front());
    rt.push_back(rt.front());
    r.walls = {std::move(l), std::move(rt)};
    return r;
  }
  auto extend = [&](const Polyline& p) {
    const Point t0 = (p[1] - p[0]).normalized();
    const Point t1 = (p[p.size() - 1] - p[p.size() - 2]).normalized();
    Polyline out;
    out.push_back(p.front() - kOpenTrackExtension * t0);
    out.insert(out.end(), p.begin(), p.end());
    out.push_back(p.back() + kOpenTrackExtension * t1);
    return out;
  };
  const Polyline l = extend(track.left);
  const Polyline rt = extend(track.right);
  Polyline ring = l;
  ring.insert(ring.end(), rt.rbegin(), rt.rend());
  r.polygons = {ring};
  r.walls = {l, rt, Polyline{l.back(), rt.back()}, Polyline{rt.front(), l.front()}};
  return r;
}

}  // namespace mincurvfg::track
