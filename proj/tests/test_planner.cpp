#include "mincurvfg/planner.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace mincurvfg;
using namespace mincurvfg::planner;

namespace {

std::shared_ptr<const track::SdfGrid> sdf_of(const track::Track& t) {
  return std::make_shared<const track::SdfGrid>(track::build_sdf(t, 0.005));
}

Trajectory numbered_trajectory(int n) {
  Trajectory t;
  for (int k = 0; k <= n; ++k) {
    VehicleState s;
    s.x = k;
    s.vx = 1.0;
    t.states.push_back(s);
  }
  for (int k = 0; k < n; ++k) t.controls.push_back({0.01 * k, 0.5});
  return t;
}

}  // namespace

TEST_CASE("default configuration is valid and rejects bad values") {
  PlannerConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.horizon == 40);
  CHECK(c.Ts == doctest::Approx(0.02));
  c.horizon = 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = PlannerConfig{};
  c.Ts = -0.1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = PlannerConfig{};
  c.constraint_buffer = 0.6;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  const auto b = PlannerConfig{}.buffered_bounds();
  CHECK(b.u_max[0] == doctest::Approx(0.4 - 0.01 * 0.8));
  CHECK(b.u_min[1] == doctest::Approx(-0.1 + 0.01 * 1.1));
}

TEST_CASE("window variables interleave states and controls") {
  const Window w = make_window(4);
  CHECK(w.keys.states.size() == 5);
  CHECK(w.keys.controls.size() == 4);
  CHECK(w.graph.variables().size() == 9);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(w.keys.states[k].id + 1 == w.keys.controls[k].id);
    CHECK(w.keys.controls[k].id + 1 == w.keys.states[k + 1].id);
    CHECK(w.keys.states[k].dim == 6);
    CHECK(w.keys.controls[k].dim == 2);
  }
}

TEST_CASE("launch ramp reaches the desired speed after one horizon") {
  const PlannerConfig c;
  CHECK(launch_speed(c, 0) == 0.0);
  CHECK(launch_speed(c, c.horizon / 2) == doctest::Approx(0.5 * c.v_des));
  CHECK(launch_speed(c, c.horizon) == doctest::Approx(c.v_des));
  CHECK(launch_speed(c, 10 * c.horizon) == doctest::Approx(c.v_des));
  CHECK(stop_distance(c) == doctest::Approx(0.5 * c.v_des * c.Ts * c.decel_steps));
}

TEST_CASE("speed profile is capped by grip and braking") {
  const PlannerConfig c;
  const auto straight = speed_profile(track::straight_track(), c);
  for (double v : straight.speed) CHECK(v == doctest::Approx(c.v_des));

  const track::Track ring = track::ring_track();
  const auto rp = speed_profile(ring, c);
  const double a_lat = c.grip_margin * (c.vehicle.Df + c.vehicle.Db) / c.vehicle.m;
  const double cap = std::min(c.v_des, std::sqrt(a_lat * 1.2));
  // Segment headings are piecewise constant, so the window can see one
  // extra segment of turn: the cap errs low by at most a few percent.
  for (double v : rp.speed) {
    CHECK(v <= cap + 1e-12);
    CHECK(v >= 0.97 * cap);
  }

  const track::Track chicane = track::chicane_track();
  const auto cp = speed_profile(chicane, c);
  const auto b = c.buffered_bounds();
  const double a_brake = c.grip_margin *
                         (c.vehicle.Cr0 + (c.vehicle.Cm1 - c.vehicle.Cm2 * c.v_des) * -b.u_min[1]) /
                         c.vehicle.m;
  double lo = c.v_des;
  for (std::size_t j = 0; j < cp.speed.size(); ++j) {
    const double v = cp.speed[j];
    const double next = cp.speed[(j + 1) % cp.speed.size()];
    CHECK(v > 0.0);
    CHECK(v <= c.v_des + 1e-12);
    // Never faster than braking to the next station allows.
    CHECK(v * v <= next * next + 2.0 * a_brake * chicane.spacing + 1e-9);
    lo = std::min(lo, v);
  }
  CHECK(lo < c.v_des);
  CHECK(cp.at(0.5 * cp.spacing) ==
        doctest::Approx(0.5 * (cp.speed[0] + cp.speed[1])));
}

TEST_CASE("reference window advances along the centerline") {
  const PlannerConfig c;
  const track::Track t = track::oval_track();
  const auto profile = speed_profile(t, c);
  VehicleState s = start_state(t);
  s.y += 0.05;
  for (const int step : {0, 20, 200}) {
    const auto ref = select_reference_window(t, s, c, step, std::nullopt, nullptr, &profile);
    REQUIRE(ref.positions.size() == std::size_t(c.horizon) + 1);
    REQUIRE(ref.speeds.size() == ref.positions.size());
    CHECK(ref.stations.front() == doctest::Approx(t.project({s.x, s.y}).s));
    for (std::size_t k = 0; k < ref.positions.size(); ++k) {
      CHECK((ref.positions[k] - t.point_at(ref.stations[k])).norm() < 1e-12);
      CHECK(ref.speeds[k] <= launch_speed(c, step + int(k)) + 1e-12);
      CHECK(ref.speeds[k] <= profile.at(ref.stations[k]) + 1e-12);
      if (k > 0) CHECK(ref.stations[k] >= ref.stations[k - 1]);
    }
  }
}

TEST_CASE("reference on an open track stops past the finish") {
  PlannerConfig c;
  const track::Track t = track::straight_track(2.0);
  VehicleState s = start_state(t);
  s.x = 1.99;
  const auto ref = select_reference_window(t, s, c, 1000);
  CHECK(ref.stations.back() <= t.length() + stop_distance(c) + 1e-12);
  // The trapezoidal advance approaches the stop point asymptotically.
  CHECK(ref.speeds.back() < 0.01);
}

TEST_CASE("shift moves the solution one slot forward") {
  const PlannerConfig c;
  const Trajectory prev = numbered_trajectory(5);
  VehicleState now;
  now.x = 0.9;
  const Trajectory next = shift_solution(c, prev, now);
  REQUIRE(next.states.size() == prev.states.size());
  REQUIRE(next.controls.size() == prev.controls.size());
  CHECK(next.states[0] == now);
  for (std::size_t k = 1; k + 1 < next.states.size(); ++k) CHECK(next.states[k] == prev.states[k + 1]);
  CHECK(next.states.back() == predict_transition(c, prev.states.back(), prev.controls.back()));
  for (std::size_t k = 0; k + 1 < next.controls.size(); ++k) CHECK(next.controls[k] == prev.controls[k + 1]);
  CHECK(next.controls.back() == prev.controls.back());
}

TEST_CASE("plant and prediction maps") {
  const PlannerConfig c;
  VehicleState s;
  s.vx = 1.0;
  s.omega = 0.5;
  const ControlInput u{0.1, 0.6};
  CHECK(advance_plant(s, u, c.vehicle, 0.02, 1) == vehicle::integrate(s, u, c.vehicle, 0.02));
  const auto p = predict_transition(c, s, u);
  CHECK((p.vector() - vehicle::euler_propagate(s, u, c.vehicle, c.Ts, c.dynamics_substeps)).norm() == 0.0);
  // Both maps discretize the same model: Euler converges to the plant at first order.
  const auto plant = advance_plant(s, u, c.vehicle, c.Ts, c.plant_substeps).vector();
  const auto euler_error = [&](int n) {
    return (vehicle::euler_propagate(s, u, c.vehicle, c.Ts, n) - plant).norm();
  };
  CHECK(euler_error(10) < 0.05);
  CHECK(euler_error(40) < 0.35 * euler_error(10));
  CHECK(euler_error(160) < 0.35 * euler_error(40));

  const track::Track t = track::oval_track();
  const VehicleState st = start_state(t);
  CHECK(st.x == t.centerline[0].x());
  CHECK(st.y == t.centerline[0].y());
  CHECK(st.vx == 0.0);
  CHECK(st.phi == doctest::Approx(t.heading_at(0.0)));
}

TEST_CASE("one planning step lowers the objective and respects the window") {
  PlannerConfig c;
  const track::Track t = track::ring_track();
  const auto sdf = sdf_of(t);
  VehicleState s = start_state(t);
  s.vx = 1.0;
  const auto profile = speed_profile(t, c);
  const auto ref = select_reference_window(t, s, c, c.horizon, std::nullopt, nullptr, &profile);
  const Window w = make_window(c.horizon);
  const auto warm = warm_start(c, w, std::nullopt, s, ref, t);
  const PlanStepResult r = plan_step(c, t, sdf, s, ref, warm);
  CHECK(r.passes >= 1);
  CHECK(r.passes <= c.linearization_passes);
  CHECK(r.predicted.size() == std::size_t(c.horizon) + 1);
  CHECK(r.solution.states.front().vector().isApprox(s.vector(), 1e-4));
  CHECK(r.factor_count == std::size_t(1 + 3 * 41 + 40 + 40 + 41 + 39));
  for (const auto& trace : r.objective_traces) {
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1]);
  }
  const auto b = c.buffered_bounds();
  CHECK(r.applied.delta >= b.u_min[0] - 1e-3);
  CHECK(r.applied.delta <= b.u_max[0] + 1e-3);
  CHECK(r.applied.d <= b.u_max[1] + 1e-3);
}

TEST_CASE("a lap on a short straight completes, stays on track and is deterministic") {
  PlannerConfig c;
  c.record_timing = false;
  const track::Track t = track::straight_track(3.0);
  const auto sdf = sdf_of(t);
  const LapResult a = run_lap(c, t, sdf);
  REQUIRE(a.completed);
  CHECK(a.status == "completed");
  CHECK(a.states.size() == a.steps.size() + 1);
  CHECK(a.track_hash == t.hash());
  for (const auto& s : a.states) CHECK(track::query_sdf(*sdf, {s.x, s.y}).distance > 0.0);
  CHECK(a.states.back().x > t.length());
  CHECK(a.metrics.max_speed > 1.0);
  CHECK(a.metrics.mean_solve_ms == 0.0);

  const LapResult b = run_lap(c, t, sdf);
  REQUIRE(b.states.size() == a.states.size());
  for (std::size_t i = 0; i < a.states.size(); ++i) CHECK(a.states[i] == b.states[i]);
  const auto m = lap_metrics(a);
  CHECK(m.cumulative_curvature == a.metrics.cumulative_curvature);
  CHECK(m.distance == a.metrics.distance);
}

TEST_CASE("a lap capped by the step limit reports it") {
  PlannerConfig c;
  c.record_timing = false;
  c.max_steps = 5;
  const track::Track t = track::straight_track(3.0);
  const LapResult r = run_lap(c, t, sdf_of(t));
  CHECK_FALSE(r.completed);
  CHECK(r.status == "step_limit");
  CHECK(r.steps.size() == 5);
  CHECK(r.states.size() == 6);
}
