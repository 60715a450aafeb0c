#include "mincurvfg/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mincurvfg::planner {

namespace {

double unwrap_near(double angle, double reference) {
  const double two_pi = 2.0 * std::numbers::pi;
  return angle + two_pi * std::round((reference - angle) / two_pi);
}

// Signed arc-length advance from a to b; closed tracks take the short way round.
double arc_delta(const track::Track& track, double a, double b) {
  double d = b - a;
  if (track.closed) {
    const double total = track.length();
    d = std::remainder(d, total);
  }
  return d;
}

}  // namespace

void PlannerConfig::validate() const {
  if (horizon < 2) throw std::invalid_argument("planner horizon must be at least 2");
  if (!(Ts > 0.0)) throw std::invalid_argument("sample time Ts must be positive");
  if (!(v_des > 0.0)) throw std::invalid_argument("desired speed must be positive");
  if (decel_steps < 0) throw std::invalid_argument("decel_steps must be non-negative");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be non-negative");
  if (!(constraint_buffer >= 0.0 && constraint_buffer < 0.5)) {
    throw std::invalid_argument("constraint_buffer must lie in [0, 0.5)");
  }
  if (plant_substeps < 1) throw std::invalid_argument("plant_substeps must be at least 1");
  if (dynamics_substeps < 1) throw std::invalid_argument("dynamics_substeps must be at least 1");
  if (max_steps < 0) throw std::invalid_argument("max_steps must be non-negative");
  if (linearization_passes < 0) throw std::invalid_argument("linearization_passes must be non-negative");
  if (!(pass_tolerance > 0.0)) throw std::invalid_argument("pass_tolerance must be positive");
  if (max_backtracks < 0) throw std::invalid_argument("max_backtracks must be non-negative");
  if (!(grip_margin > 0.0 && grip_margin <= 1.0)) throw std::invalid_argument("grip_margin must lie in (0, 1]");
  if (!(curvature_window > 0.0)) throw std::invalid_argument("curvature_window must be positive");
  weights.validate();
  bounds.validate();
  solver.validate();
  vehicle.validate();
}

factors::StateBounds PlannerConfig::buffered_bounds() const {
  factors::StateBounds b = bounds;
  const Eigen::Vector2d r_pad = constraint_buffer * (bounds.r_max - bounds.r_min);
  const Eigen::Vector2d u_pad = constraint_buffer * (bounds.u_max - bounds.u_min);
  b.r_min += r_pad;
  b.r_max -= r_pad;
  b.u_min += u_pad;
  b.u_max -= u_pad;
  return b;
}

Window make_window(int horizon) {
  if (horizon < 2) throw fg::StructuralError("window horizon must be at least 2");
  Window w;
  for (int k = 0; k <= horizon; ++k) {
    w.keys.states.push_back(w.graph.add_variable(6));
    if (k < horizon) w.keys.controls.push_back(w.graph.add_variable(2));
  }
  return w;
}

double launch_speed(const PlannerConfig& config, int lap_step) {
  const double ramp = double(std::max(lap_step, 0)) / double(config.horizon);
  return config.v_des * std::min(1.0, ramp);
}

double stop_distance(const PlannerConfig& config) {
  // Linear deceleration from v_des to rest over M steps.
  return 0.5 * config.v_des * config.Ts * double(config.decel_steps);
}

double SpeedProfile::at(double s) const {
  if (speed.empty()) return 0.0;
  const auto n = static_cast<double>(speed.size());
  double u = s / spacing;
  if (closed) {
    u = std::fmod(u, n);
    if (u < 0.0) u += n;
  } else {
    u = std::clamp(u, 0.0, n - 1.0);
  }
  const auto i = static_cast<std::size_t>(std::floor(u));
  const std::size_t j = closed ? (i + 1) % speed.size() : std::min(i + 1, speed.size() - 1);
  const double w = u - std::floor(u);
  return (1.0 - w) * speed[i % speed.size()] + w * speed[j];
}

SpeedProfile speed_profile(const track::Track& track, const PlannerConfig& config) {
  const auto& p = config.vehicle;
  const auto bounds = config.buffered_bounds();
  const double a_lat = config.grip_margin * (p.Df + p.Db) / p.m;
  const double duty = std::max(0.0, -bounds.u_min.y());
  const double a_brake =
      config.grip_margin * (p.Cr0 + std::max(0.0, p.Cm1 - p.Cm2 * config.v_des) * duty) / p.m;

  SpeedProfile profile;
  profile.spacing = track.spacing;
  profile.closed = track.closed;
  const std::size_t n = track.size();
  const double total = track.length();
  const double w = config.curvature_window;
  profile.speed.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = double(i) * track.spacing;
    double lo = s - w, hi = s + w;
    if (!track.closed) {
      lo = std::max(lo, 0.0);
      hi = std::min(hi, total);
    }
    double turn = track.heading_at(hi) - track.heading_at(lo);
    turn = std::remainder(turn, 2.0 * std::numbers::pi);
    const double kappa = hi > lo ? std::abs(turn) / (hi - lo) : 0.0;
    profile.speed[i] = kappa > 1e-9 ? std::min(config.v_des, std::sqrt(a_lat / kappa)) : config.v_des;
  }
  // Backward pass: every station must be able to brake down to the next caps.
  // Closed tracks go around twice so the cap before the start line propagates.
  const int sweeps = track.closed ? 2 : 1;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t j = n; j-- > 0;) {
      if (!track.closed && j + 1 == n) continue;
      const double v_next = profile.speed[(j + 1) % n];
      profile.speed[j] =
          std::min(profile.speed[j], std::sqrt(v_next * v_next + 2.0 * a_brake * track.spacing));
    }
  }
  return profile;
}

factors::ReferenceWindow select_reference_window(const track::Track& track,
                                                 const VehicleState& current,
                                                 const PlannerConfig& config, int lap_step,
                                                 std::optional<double> progress_hint,
                                                 const std::vector<VehicleState>* guide,
                                                 const SpeedProfile* profile) {
  const int n = config.horizon;
  const double total = track.length();
  const double stop = total + stop_distance(config);
  const double s0 = track.project({current.x, current.y}, progress_hint).s;
  const bool guided = guide && guide->size() == std::size_t(n) + 1;

  auto speed_at = [&](int k, double s) {
    double v = launch_speed(config, lap_step + k);
    if (profile) v = std::min(v, profile->at(s));
    if (!track.closed && s > total) {
      const double d = stop_distance(config);
      v = d > 0.0 ? std::min(v, config.v_des * std::clamp((stop - s) / d, 0.0, 1.0)) : 0.0;
    }
    return v;
  };

  factors::ReferenceWindow ref;
  ref.positions.reserve(std::size_t(n) + 1);
  double s = s0;
  double v = speed_at(0, s);
  for (int k = 0; k <= n; ++k) {
    if (k > 0) {
      if (guided) {
        const VehicleState& g = (*guide)[std::size_t(k)];
        const double foot = track.project({g.x, g.y}, s).s;
        s += std::max(0.0, arc_delta(track, s, foot));
      } else {
        // Trapezoidal advance, then the speed at the new station.
        const double v_next = speed_at(k, s + v * config.Ts);
        s += 0.5 * (v + v_next) * config.Ts;
      }
      if (!track.closed) s = std::min(s, stop);
      v = speed_at(k, s);
    }
    ref.stations.push_back(s);
    ref.positions.push_back(track.point_at(s));
    ref.speeds.push_back(v);
  }
  return ref;
}

VehicleState predict_transition(const PlannerConfig& config, const VehicleState& s,
                                const ControlInput& u) {
  return VehicleState::from_vector(
      vehicle::euler_propagate(s, u, config.vehicle, config.Ts, config.dynamics_substeps));
}

Trajectory shift_solution(const PlannerConfig& config, const Trajectory& previous,
                          const VehicleState& current) {
  Trajectory t;
  t.states.assign(previous.states.begin() + 1, previous.states.end());
  t.states.push_back(predict_transition(config, previous.states.back(), previous.controls.back()));
  t.states.front() = current;
  t.controls.assign(previous.controls.begin() + 1, previous.controls.end());
  t.controls.push_back(previous.controls.back());
  return t;
}

fg::Values warm_start(const PlannerConfig& config, const Window& window,
                      const std::optional<Trajectory>& previous, const VehicleState& current,
                      const factors::ReferenceWindow& reference, const track::Track& track) {
  const std::size_t states = window.keys.states.size();
  fg::Values values;
  if (previous && previous->states.size() == states &&
      previous->controls.size() == window.keys.controls.size()) {
    const Trajectory shifted = shift_solution(config, *previous, current);
    for (std::size_t k = 0; k < states; ++k) {
      values.insert(window.keys.states[k], shifted.states[k].vector());
    }
    for (std::size_t k = 0; k < shifted.controls.size(); ++k) {
      values.insert(window.keys.controls[k], shifted.controls[k].vector());
    }
    return values;
  }
  double phi = current.phi;
  for (std::size_t k = 0; k < states; ++k) {
    phi = unwrap_near(track.heading_at(reference.stations[k]), phi);
    VehicleState s;
    s.x = reference.positions[k].x();
    s.y = reference.positions[k].y();
    s.vx = reference.speeds[k];
    s.phi = phi;
    values.insert(window.keys.states[k], s.vector());
  }
  for (const fg::Key& u : window.keys.controls) values.insert(u, Eigen::Vector2d::Zero());
  values.update(window.keys.states[0], current.vector());
  return values;
}

Trajectory extract(const Window& window, const fg::Values& values) {
  Trajectory t;
  for (const fg::Key& k : window.keys.states) t.states.push_back(VehicleState::from_vector(values.at(k)));
  for (const fg::Key& k : window.keys.controls) {
    t.controls.push_back(ControlInput::from_vector(values.at(k)));
  }
  return t;
}

PlanStepResult plan_step(const PlannerConfig& config, const track::Track& track,
                         std::shared_ptr<const track::SdfGrid> sdf, const VehicleState& current,
                         const factors::ReferenceWindow& reference, const fg::Values& warm) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();

  factors::HorizonSpec spec;
  spec.start_state = current.vector();
  spec.curvature = config.curvature;
  spec.epsilon = config.epsilon;
  spec.Ts = config.Ts;
  spec.dynamics_substeps = config.dynamics_substeps;
  spec.params = config.vehicle;
  spec.sdf = std::move(sdf);
  const double stop = track.length() + stop_distance(config);
  if (!track.closed && reference.stations.back() >= stop - 1e-9) {
    spec.goal = track.point_at(stop);
  }
  const auto bounds = config.buffered_bounds();

  PlanStepResult out;
  out.goal_attached = spec.goal.has_value();

  // The window with dynamics relinearized on every evaluation: the true
  // objective, used directly when passes are off and as the merit otherwise.
  Window merit = make_window(config.horizon);
  for (auto& f : factors::assemble_horizon_factors(merit.keys, config.weights, bounds, reference,
                                                   spec)) {
    merit.graph.add(std::move(f));
  }
  out.factor_count = merit.graph.factors().size();

  fg::Values values = warm;
  int iterations = 0;
  if (config.linearization_passes == 0) {
    fg::SolveResult solved = fg::solve_lm(merit.graph, values, config.solver);
    iterations = solved.stats.iterations;
    out.objective_traces.push_back(solved.stats.objective_trace);
    out.stats = std::move(solved.stats);
    values = std::move(solved.values);
    out.passes = 1;
  } else {
    double merit_value = fg::map_objective(merit.graph, values);
    const double initial_merit = merit_value;
    for (int pass = 0; pass < config.linearization_passes; ++pass) {
      Window window = make_window(config.horizon);
      const Trajectory at = extract(window, values);
      spec.dynamics_models.clear();
      for (int k = 0; k < config.horizon; ++k) {
        spec.dynamics_models.push_back(vehicle::linearize_substepped(
            at.states[k], at.controls[k], config.vehicle, config.Ts, config.dynamics_substeps));
      }
      for (auto& f : factors::assemble_horizon_factors(window.keys, config.weights, bounds,
                                                       reference, spec)) {
        window.graph.add(std::move(f));
      }
      fg::SolveResult solved = fg::solve_lm(window.graph, values, config.solver);
      iterations += solved.stats.iterations;
      out.objective_traces.push_back(solved.stats.objective_trace);
      out.stats = std::move(solved.stats);
      out.passes = pass + 1;

      // Backtrack along the pass step until the true objective decreases.
      const Eigen::VectorXd x0 = fg::flatten(merit.graph, values);
      const Eigen::VectorXd step = fg::flatten(merit.graph, solved.values) - x0;
      double alpha = 1.0;
      bool accepted = false;
      for (int tries = 0; tries <= config.max_backtracks; ++tries, alpha *= 0.5) {
        fg::Values trial = fg::unflatten(merit.graph, x0 + alpha * step);
        double m = std::numeric_limits<double>::infinity();
        try {
          m = fg::map_objective(merit.graph, trial);
        } catch (const track::SdfRangeError&) {
        } catch (const fg::NumericalError&) {
        }
        if (m < merit_value) {
          merit_value = m;
          values = std::move(trial);
          accepted = true;
          break;
        }
      }
      if (!accepted || alpha * step.lpNorm<Eigen::Infinity>() < config.pass_tolerance) break;
    }
    if (config.polish) {
      fg::SolveResult solved = fg::solve_lm(merit.graph, values, config.solver);
      iterations += solved.stats.iterations;
      out.objective_traces.push_back(solved.stats.objective_trace);
      merit_value = solved.stats.final_objective;
      out.stats = std::move(solved.stats);
      values = std::move(solved.values);
    }
    out.stats.initial_objective = initial_merit;
    out.stats.final_objective = merit_value;
  }
  out.solution = extract(merit, values);
  out.stats.iterations = iterations;
  out.applied = out.solution.controls.front();
  out.predicted = out.solution.states;
  if (config.record_timing) {
    out.solve_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  } else {
    out.stats.wall_time = 0.0;
  }
  return out;
}

VehicleState start_state(const track::Track& track) {
  VehicleState s;
  s.x = track.centerline.front().x();
  s.y = track.centerline.front().y();
  s.phi = track.heading_at(0.0);
  return s;
}

VehicleState advance_plant(const VehicleState& s, const ControlInput& u,
                           const vehicle::VehicleParams& params, double Ts, int substeps) {
  VehicleState x = s;
  const double h = Ts / double(substeps);
  for (int i = 0; i < substeps; ++i) x = vehicle::integrate(x, u, params, h);
  return x;
}

LapResult run_lap(const PlannerConfig& config, const track::Track& track,
                  std::shared_ptr<const track::SdfGrid> sdf) {
  config.validate();
  if (!sdf) throw std::invalid_argument("run_lap needs an SDF");

  LapResult lap;
  lap.track_hash = track.hash();
  const SpeedProfile profile = speed_profile(track, config);
  const double total = track.length();
  const int max_steps = config.max_steps > 0
                            ? config.max_steps
                            : int(track.size()) + config.decel_steps;

  VehicleState state = start_state(track);
  lap.states.push_back(state);
  double station = 0.0;
  double progress = 0.0;
  int extra_steps = -1;  // counts steps after the finish line on open tracks
  std::optional<Trajectory> previous;

  for (int j = 0; j < max_steps; ++j) {
    StepRecord rec;
    rec.step = j;
    rec.t = double(j) * config.Ts;
    rec.state = state;
    rec.progress = progress;
    PlanStepResult step;
    try {
      std::optional<Trajectory> guide;
      if (previous && config.guided_reference) guide = shift_solution(config, *previous, state);
      const auto ref = select_reference_window(track, state, config, j, station,
                                               guide ? &guide->states : nullptr,
                                               config.speed_profile ? &profile : nullptr);
      Window window = make_window(config.horizon);
      const fg::Values warm = warm_start(config, window, previous, state, ref, track);
      step = plan_step(config, track, sdf, state, ref, warm);
    } catch (const track::SdfRangeError& e) {
      lap.status = "aborted at step " + std::to_string(j) + ": " + e.what();
      break;
    } catch (const fg::NumericalError& e) {
      lap.status = "aborted at step " + std::to_string(j) + ": " + e.what();
      break;
    }

    const VehicleState next =
        advance_plant(state, step.applied, config.vehicle, config.Ts, config.plant_substeps);

    const VehicleState& p1 = step.solution.states[1];
    rec.control = step.applied;
    rec.solve_ms = step.solve_ms;
    rec.iterations = step.stats.iterations;
    rec.converged = step.stats.converged;
    rec.prediction_error = (next.vector() - p1.vector()).norm();
    rec.dynamics_residual =
        (p1.vector() -
         predict_transition(config, step.solution.states[0], step.solution.controls[0]).vector())
            .norm();
    rec.passes = step.passes;
    rec.objective_traces = std::move(step.objective_traces);
    lap.steps.push_back(std::move(rec));

    if (!next.finite()) {
      lap.status = "aborted at step " + std::to_string(j) + ": plant state became non-finite";
      break;
    }
    try {
      (void)track::query_sdf(*sdf, {next.x, next.y});
    } catch (const track::SdfRangeError&) {
      lap.states.push_back(next);
      lap.status = "aborted at step " + std::to_string(j) + ": plant left the SDF extent";
      break;
    }

    const double s_next = track.project({next.x, next.y}, station).s;
    progress += arc_delta(track, station, s_next);
    station = s_next;
    state = next;
    lap.states.push_back(state);
    previous = std::move(step.solution);

    if (progress >= total) {
      if (track.closed) {
        lap.completed = true;
        break;
      }
      if (++extra_steps >= config.decel_steps) {
        lap.completed = true;
        break;
      }
    }
  }

  if (lap.status.empty()) lap.status = lap.completed ? "completed" : "step_limit";
  lap.metrics = lap_metrics(lap);
  return lap;
}

metrics::LapMetrics lap_metrics(const LapResult& lap) {
  std::vector<Eigen::Vector2d> positions;
  std::vector<double> speeds;
  positions.reserve(lap.states.size());
  speeds.reserve(lap.states.size());
  for (const auto& s : lap.states) {
    positions.emplace_back(s.x, s.y);
    speeds.push_back(std::hypot(s.vx, s.vy));
  }
  std::vector<double> solve_ms;
  solve_ms.reserve(lap.steps.size());
  for (const auto& r : lap.steps) solve_ms.push_back(r.solve_ms);
  return metrics::trace_metrics(positions, speeds, solve_ms);
}

}  // namespace mincurvfg::planner
