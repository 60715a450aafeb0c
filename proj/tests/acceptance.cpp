// Acceptance checks: one PASS/FAIL line per criterion with the measured
// values. Exit status is 0 when every check ran, whatever its verdict, and
// non-zero only if a check could not run.

#include "mincurvfg/factors.hpp"
#include "mincurvfg/metrics.hpp"
#include "mincurvfg/planner.hpp"
#include "mincurvfg/run.hpp"

#include "support.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

using namespace mincurvfg;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kJacobianTol = 1e-5;
constexpr int kJacobianPoints = 100;
constexpr double kJacobianSeconds = 10.0;
constexpr double kSdfResolution = 0.005;
constexpr int kSdfPoints = 1000;
constexpr double kSdfSeconds = 30.0;
constexpr double kBruteForceTol = 1e-9;
constexpr double kRigidTol = 1e-12;
constexpr int kRigidMotions = 1000;
constexpr double kCircleTol = 0.01;
constexpr double kCurvatureReduction = 0.05;
constexpr double kLapSeconds = 120.0;
constexpr double kMeanSolveMs = 50.0;
constexpr double kMedianSolveMs = 20.0;
constexpr double kExactFraction = 0.99;
constexpr double kBoundBuffer = 0.05;
constexpr double kRosenbrockTol = 1e-6;

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double away_from(testing::Rng& rng, double lo, double hi, std::initializer_list<double> kinks, double gap) {
  for (;;) {
    const double v = rng.uniform(lo, hi);
    bool ok = true;
    for (double k : kinks) ok = ok && std::abs(v - k) > gap;
    if (ok) return v;
  }
}

vehicle::Vector6d random_state(testing::Rng& rng) {
  vehicle::Vector6d s;
  s << rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.3, 3.5), rng.uniform(-0.5, 0.5),
      rng.uniform(-3, 3), rng.uniform(-4, 4);
  return s;
}

Eigen::Vector2d random_control(testing::Rng& rng) {
  return {rng.uniform(-0.4, 0.4), rng.uniform(-0.1, 1.0)};
}

// ---------------------------------------------------------------- 1

void jacobian_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  using factors::FactorPtr;
  const fg::Key s0{0, 6}, u0{1, 2}, s1{2, 6}, s2{3, 6};
  const vehicle::VehicleParams p;
  const factors::StateBounds bounds;
  const auto ring = track::ring_track();
  const auto sdf = std::make_shared<const track::SdfGrid>(track::build_sdf(ring, 0.01));
  testing::Rng rng(101);
  double worst = 0.0;
  std::string worst_name;
  int types = 0;

  const auto audit = [&](const std::string& name, auto&& sample) {
    ++types;
    for (int i = 0; i < kJacobianPoints; ++i) {
      const auto [factor, values] = sample();
      const double e = testing::factor_jacobian_error(*factor, values);
      if (e > worst) {
        worst = e;
        worst_name = name;
      }
    }
  };
  const auto smooth_values = [&] {
    fg::Values v;
    v.insert(s0, random_state(rng));
    v.insert(u0, random_control(rng));
    v.insert(s1, random_state(rng));
    v.insert(s2, random_state(rng));
    return v;
  };

  audit("start_state", [&] {
    return std::pair{factors::start_state_factor(s0, random_state(rng), 1e-6), smooth_values()};
  });
  audit("prior_position", [&] {
    return std::pair{factors::prior_position_factor(s0, rng.uniform(2, -1, 1), 8e-4), smooth_values()};
  });
  audit("goal", [&] {
    return std::pair{factors::goal_factor(s0, rng.uniform(2, -1, 1), 8e-4), smooth_values()};
  });
  audit("reference", [&] {
    return std::pair{factors::reference_factor(s0, rng.uniform(2, -1, 1), 5.7e-2), smooth_values()};
  });
  audit("velocity", [&] {
    return std::pair{factors::velocity_factor(s0, {rng.uniform(0, 3), 0.0}, 5.5e-2), smooth_values()};
  });
  audit("rotation_limit", [&] {
    fg::Values v = smooth_values();
    vehicle::Vector6d s = v.at(s0);
    s[4] = away_from(rng, -12, 12, {-10, 10}, 1e-3);
    s[5] = away_from(rng, -9, 9, {-7, 7}, 1e-3);
    v.update(s0, s);
    return std::pair{factors::rotation_limit_factor(s0, bounds, 1e-3), v};
  });
  audit("control_limit", [&] {
    fg::Values v = smooth_values();
    v.update(u0, Eigen::Vector2d(away_from(rng, -0.8, 0.8, {-0.4, 0.4}, 1e-3),
                                 away_from(rng, -0.5, 1.5, {-0.1, 1.0}, 1e-3)));
    return std::pair{factors::control_limit_factor(u0, bounds, 5e-6), v};
  });
  audit("dynamics_affine", [&] {
    fg::Values v = smooth_values();
    const auto model = vehicle::linearize_substepped(vehicle::VehicleState::from_vector(v.at(s0)),
                                                     vehicle::ControlInput::from_vector(v.at(u0)),
                                                     p, 0.02, 10);
    return std::pair{factors::dynamics_factor(s0, u0, s1, model, 1e-5), v};
  });
  audit("dynamics_relinearized", [&] {
    return std::pair{factors::relinearized_dynamics_factor(s0, u0, s1, p, 0.02, 1e-5, 10), smooth_values()};
  });
  audit("obstacle", [&] {
    fg::Values v = smooth_values();
    for (;;) {
      const double rho = away_from(rng, 0.9, 1.1, {1.015}, 2e-3);
      const double a = rng.uniform(-3.0, 3.0);
      const Eigen::Vector2d q(rho * std::cos(a), rho * std::sin(a));
      const Eigen::Vector2d cell = (q - sdf->origin) / sdf->resolution;
      const Eigen::Vector2d frac = cell - cell.array().floor().matrix();
      if ((frac.array() < 0.01).any() || (frac.array() > 0.99).any()) continue;
      vehicle::Vector6d s = v.at(s0);
      s.head<2>() = q;
      v.update(s0, s);
      break;
    }
    return std::pair{factors::obstacle_factor(s0, sdf, 0.015, 1e-4), v};
  });
  audit("curvature", [&] {
    return std::pair{factors::curvature_factor(s0, s1, s2, 1e-2), smooth_values()};
  });

  // Vehicle linearization.
  ++types;
  for (int i = 0; i < kJacobianPoints; ++i) {
    const auto s = vehicle::VehicleState::from_vector(random_state(rng));
    const auto u = vehicle::ControlInput::from_vector(random_control(rng));
    const auto J = vehicle::dynamics_jacobian(s, u, p);
    const auto fs = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
      return vehicle::dynamics(vehicle::VehicleState::from_vector(x), u, p);
    };
    const auto fu = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
      return vehicle::dynamics(s, vehicle::ControlInput::from_vector(x), p);
    };
    for (const double e : {testing::relative_error(J.Ac, testing::numeric_jacobian(fs, s.vector())),
                           testing::relative_error(J.Bc, testing::numeric_jacobian(fu, u.vector()))}) {
      if (e > worst) {
        worst = e;
        worst_name = "vehicle";
      }
    }
  }
  const double elapsed = seconds_since(t0);
  report(1, worst <= kJacobianTol && elapsed < kJacobianSeconds,
         fmt("%d Jacobians x %d points, worst rel err %.2e (%s) <= %.0e, %.2f s < %.0f s", types,
             kJacobianPoints, worst, worst_name.c_str(), kJacobianTol, elapsed, kJacobianSeconds));
}

// ---------------------------------------------------------------- 2

void sdf_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ring = track::ring_track(1.0, 1.4, 0.01);
  const track::SdfGrid g = track::build_sdf(ring, kSdfResolution);
  const double build_s = seconds_since(t0);
  testing::Rng rng(102);
  double worst_analytic = 0.0;
  for (int i = 0; i < kSdfPoints; ++i) {
    const double rho = rng.uniform(0.9, 1.5);
    const double a = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double expected = std::min(rho - 1.0, 1.4 - rho);
    const double d = track::query_sdf(g, {rho * std::cos(a), rho * std::sin(a)}).distance;
    worst_analytic = std::max(worst_analytic, std::abs(d - expected));
  }
  const track::Region region = track::drivable_region(ring);
  double worst_brute = 0.0;
  for (int i = 0; i < kSdfPoints; ++i) {
    const auto ii = std::uint32_t(rng.uniform(0.0, double(g.width)));
    const auto jj = std::uint32_t(rng.uniform(0.0, double(g.height)));
    const Eigen::Vector2d q = g.sample_point(std::min(ii, g.width - 1), std::min(jj, g.height - 1));
    double d = std::numeric_limits<double>::infinity();
    for (const auto& wall : region.walls) {
      for (std::size_t k = 0; k + 1 < wall.size(); ++k) {
        d = std::min(d, track::point_segment_distance(q, wall[k], wall[k + 1]));
      }
    }
    worst_brute = std::max(worst_brute, std::abs(std::abs(g.at(std::min(ii, g.width - 1), std::min(jj, g.height - 1))) - d));
  }
  const double elapsed = seconds_since(t0);
  report(2, worst_analytic <= 0.5 * kSdfResolution && worst_brute <= kBruteForceTol && elapsed < kSdfSeconds,
         fmt("annulus max err %.2e <= %.4f at %d points; brute-force max err %.1e at %d samples; "
             "build %.2f s, total %.2f s < %.0f s",
             worst_analytic, 0.5 * kSdfResolution, kSdfPoints, worst_brute, kSdfPoints, build_s,
             elapsed, kSdfSeconds));
}

// ---------------------------------------------------------------- 3

void curvature_geometry() {
  testing::Rng rng(103);
  double worst_collinear = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector2d a = rng.uniform(2, -3, 3), dir = rng.uniform(2, -1, 1);
    const Eigen::Vector2d p0 = a + rng.uniform(-2, 2) * dir, p1 = a, p2 = a + rng.uniform(0.1, 2) * dir;
    worst_collinear = std::max(worst_collinear, factors::curvature_residual(p0, p1, p2).norm());
  }
  const double unit = factors::curvature_residual({0, 1}, {0, 0}, {1, 0}).norm();
  double worst_rigid = 0.0;
  for (int i = 0; i < kRigidMotions; ++i) {
    const Eigen::Vector2d a = rng.uniform(2, -3, 3), b = rng.uniform(2, -3, 3), c = rng.uniform(2, -3, 3);
    const double th = rng.uniform(-std::numbers::pi, std::numbers::pi);
    Eigen::Matrix2d R;
    R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    const Eigen::Vector2d t = rng.uniform(2, -5, 5);
    const Eigen::Vector2d r0 = factors::curvature_residual(a, b, c);
    const Eigen::Vector2d r1 = factors::curvature_residual(R * a + t, R * b + t, R * c + t);
    worst_rigid = std::max(worst_rigid, (r1 - R * r0).norm());
  }
  report(3, worst_collinear < 1e-12 && unit == 1.0 && worst_rigid <= kRigidTol,
         fmt("collinear max |a| %.1e; unit triple |a| = %.17g; rigid-motion max err %.1e <= %.0e over %d",
             worst_collinear, unit, worst_rigid, kRigidTol, kRigidMotions));
}

// ---------------------------------------------------------------- 4

void curvature_metric() {
  const int M = 200;
  const double r = 0.5;
  std::vector<Eigen::Vector2d> pts;
  for (int k = 0; k < M; ++k) {
    const double a = 2.0 * std::numbers::pi * k / M;
    pts.emplace_back(r * std::cos(a), r * std::sin(a));
  }
  const double total = metrics::cumulative_curvature(pts).total;
  const double expected = (M - 2) / r;
  const double rel = std::abs(total - expected) / expected;
  report(4, rel <= kCircleTol,
         fmt("sum %.6f vs %.1f, rel err %.2e <= %.2f", total, expected, rel, kCircleTol));
}

// ---------------------------------------------------------------- 5, 6, 7, 8

struct TimedLap {
  planner::LapResult lap;
  double seconds = 0.0;
};

TimedLap drive(const std::string& generator, bool curvature) {
  run::RunConfig c;
  c.track.generator = generator;
  c.planner.curvature = curvature;
  const auto t = run::resolve_track(c.track);
  const auto sdf = run::resolve_sdf(t, c.sdf);
  const auto t0 = std::chrono::steady_clock::now();
  TimedLap r;
  r.lap = planner::run_lap(c.planner, t, sdf);
  r.seconds = seconds_since(t0);
  return r;
}

struct BoundAudit {
  std::size_t steps = 0;
  std::size_t exact = 0;
  std::size_t buffered = 0;
};

// Every closed-loop step: plant state (vx, vy, phi, omega) and applied
// control (delta, d) against the configured bounds.
BoundAudit audit_bounds(const planner::LapResult& lap, const factors::StateBounds& b) {
  BoundAudit a;
  const auto within = [](double v, double lo, double hi, double pad) {
    const double w = pad * (hi - lo);
    return v >= lo - w && v <= hi + w;
  };
  for (const auto& s : lap.steps) {
    const auto check = [&](double pad) {
      return within(s.state.vx, b.vx_range[0], b.vx_range[1], pad) &&
             within(s.state.vy, b.vy_range[0], b.vy_range[1], pad) &&
             within(s.state.phi, b.r_min[0], b.r_max[0], pad) &&
             within(s.state.omega, b.r_min[1], b.r_max[1], pad) &&
             within(s.control.delta, b.u_min[0], b.u_max[0], pad) &&
             within(s.control.d, b.u_min[1], b.u_max[1], pad);
    };
    ++a.steps;
    if (check(0.0)) ++a.exact;
    if (check(kBoundBuffer)) ++a.buffered;
  }
  return a;
}

void closed_loop() {
  const TimedLap on = drive("chicane", true);
  const TimedLap off = drive("chicane", false);
  const auto& mon = on.lap.metrics;
  const auto& moff = off.lap.metrics;
  const double reduction = 1.0 - mon.cumulative_curvature / moff.cumulative_curvature;
  const bool both = on.lap.completed && off.lap.completed;
  report(5,
         both && reduction >= kCurvatureReduction && mon.mean_speed > moff.mean_speed &&
             on.seconds < kLapSeconds && off.seconds < kLapSeconds,
         fmt("chicane on/off: curvature %.2f vs %.2f (reduction %.2f%%, need >= %.0f%%); "
             "mean speed %.3f vs %.3f m/s (need higher); status %s/%s; lap %.1f/%.1f s < %.0f s",
             mon.cumulative_curvature, moff.cumulative_curvature, 100.0 * reduction,
             100.0 * kCurvatureReduction, mon.mean_speed, moff.mean_speed, on.lap.status.c_str(),
             off.lap.status.c_str(), on.seconds, off.seconds, kLapSeconds));

  report(6, mon.mean_solve_ms <= kMeanSolveMs && mon.median_solve_ms <= kMedianSolveMs,
         fmt("n = 40, Ts = 20 ms, chicane curvature on: mean %.2f ms <= %.0f, median %.2f ms <= %.0f, "
             "max %.2f ms over %zu steps",
             mon.mean_solve_ms, kMeanSolveMs, mon.median_solve_ms, kMedianSolveMs, mon.max_solve_ms,
             on.lap.steps.size()));

  const factors::StateBounds bounds = planner::PlannerConfig{}.bounds;
  BoundAudit total;
  std::string detail;
  bool all_laps = true;
  const auto add = [&](const std::string& name, const planner::LapResult& lap) {
    const BoundAudit a = audit_bounds(lap, bounds);
    total.steps += a.steps;
    total.exact += a.exact;
    total.buffered += a.buffered;
    all_laps = all_laps && lap.completed;
    detail += fmt("%s %zu/%zu exact, %zu/%zu buffered; ", name.c_str(), a.exact, a.steps,
                  a.buffered, a.steps);
  };
  add("chicane", on.lap);
  add("ring", drive("ring", true).lap);
  add("oval", drive("oval", true).lap);
  const double exact_fraction = double(total.exact) / double(std::max<std::size_t>(total.steps, 1));
  report(7, all_laps && exact_fraction >= kExactFraction && total.buffered == total.steps,
         detail + fmt("exact %.2f%% >= %.0f%%, within %.0f%% buffer %zu/%zu", 100.0 * exact_fraction,
                      100.0 * kExactFraction, 100.0 * kBoundBuffer, total.buffered, total.steps));

  std::size_t solves = 0, increases = 0;
  for (const auto* lap : {&on.lap, &off.lap}) {
    for (const auto& s : lap->steps) {
      for (const auto& trace : s.objective_traces) {
        ++solves;
        for (std::size_t i = 1; i < trace.size(); ++i) {
          if (trace[i] > trace[i - 1]) {
            ++increases;
            break;
          }
        }
      }
    }
  }
  fg::FactorGraph g;
  const fg::Key k = g.add_variable(2);
  g.add(std::make_shared<fg::FunctionFactor>(
      std::vector<fg::Key>{k}, 2, 1.0,
      [k](const fg::Values& v) -> Eigen::VectorXd {
        const auto& z = v.at(k);
        return Eigen::Vector2d(10.0 * (z[1] - z[0] * z[0]), 1.0 - z[0]);
      },
      [k](const fg::Values& v) {
        const auto& z = v.at(k);
        Eigen::MatrixXd j(2, 2);
        j << -20.0 * z[0], 10.0, -1.0, 0.0;
        return std::vector<Eigen::MatrixXd>{j};
      }));
  fg::Values init;
  init.insert(k, Eigen::Vector2d(-1.2, 1.0));
  fg::SolverConfig sc;
  sc.eta = 1e-10;
  sc.max_iterations = 500;
  const auto rb = fg::solve_lm(g, init, sc);
  const double rb_err = (rb.values.at(k) - Eigen::Vector2d(1.0, 1.0)).lpNorm<Eigen::Infinity>();
  report(8, solves > 0 && increases == 0 && rb_err <= kRosenbrockTol,
         fmt("%zu logged LM solves in the chicane runs, %zu with an objective increase; "
             "Rosenbrock |x - (1,1)|_inf = %.1e <= %.0e",
             solves, increases, rb_err, kRosenbrockTol));
}

// ---------------------------------------------------------------- 9

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void determinism() {
  const fs::path dir = fs::temp_directory_path() / "mincurvfg_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "chicane.json") << R"({"track": {"generator": "chicane"}})";
  int codes[2] = {0, 0};
  for (int i = 0; i < 2; ++i) {
    const std::string cmd = std::string("\"") + MINCURVFG_CLI + "\" bench --timing off --config \"" +
                            (dir / "chicane.json").string() + "\" --out \"" +
                            (dir / ("run" + std::to_string(i))).string() + "\" > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    codes[i] = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  bool identical = codes[0] == codes[1] && (codes[0] == 0 || codes[0] == 4);
  std::string detail = fmt("exit codes %d/%d; ", codes[0], codes[1]);
  for (const char* name : {"bench.csv", "bench.json", "curvature_on.csv", "curvature_off.csv"}) {
    const std::string a = read_bytes(dir / "run0" / name);
    const std::string b = read_bytes(dir / "run1" / name);
    const bool same = !a.empty() && a == b;
    identical = identical && same;
    detail += fmt("%s %s (%zu bytes); ", name, same ? "identical" : "DIFFERS", a.size());
  }
  report(9, identical, detail);
}

}  // namespace

int main() {
  try {
    jacobian_suite();
    sdf_oracle();
    curvature_geometry();
    curvature_metric();
    closed_loop();
    determinism();
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d of 9 criteria failed\n", failures);
  return 0;
}
