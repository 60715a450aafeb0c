#pragma once

// Receding-horizon planning: each step builds the window factor graph,
// solves it by LM from a warm start, applies the first control to the
// simulated plant and shifts the solution.

#include "mincurvfg/factors.hpp"
#include "mincurvfg/fg.hpp"
#include "mincurvfg/metrics.hpp"
#include "mincurvfg/track.hpp"
#include "mincurvfg/vehicle.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mincurvfg::planner {

using vehicle::ControlInput;
using vehicle::VehicleState;

struct PlannerConfig {
  int horizon = 40;    // n
  double Ts = 0.02;    // s
  double v_des = 3.0;  // m/s
  int decel_steps = 10;  // M, open tracks only
  double epsilon = 0.015;
  bool curvature = true;
  /// Fraction of each control/rotation range removed from both ends of the
  /// limits handed to the hinge factors.
  double constraint_buffer = 0.01;
  int plant_substeps = 10;
  int dynamics_substeps = 10;  // Euler substeps inside each dynamics factor
  /// Linearization passes per step. Each pass fixes the affine dynamics models
  /// at the current iterate, runs LM on that model and keeps the step only as
  /// far as it lowers the objective with the exact dynamics. 0 runs a single
  /// LM with the dynamics relinearized on every evaluation instead.
  int linearization_passes = 3;
  /// Passes stop early once a pass moves no variable by more than this.
  double pass_tolerance = 1e-3;
  /// Step halvings tried when a pass does not lower the true objective.
  int max_backtracks = 4;
  /// After the passes, run LM with the exact dynamics from their result.
  /// Off by default: it roughly triples the solve time for little gain.
  bool polish = false;
  int max_steps = 0;  // 0: number of centerline stations + M
  /// When false, solve times are recorded as 0 so lap results are a pure
  /// function of the configuration.
  bool record_timing = true;
  /// Cap the reference speed by what the tires and brakes can achieve along
  /// the centerline (see SpeedProfile); off leaves v_des everywhere.
  bool speed_profile = true;
  /// Place reference stations at the projections of the shifted previous
  /// plan instead of advancing them at the reference speed.
  bool guided_reference = false;
  double grip_margin = 0.8;       // fraction of the peak tire and brake forces used
  double curvature_window = 0.15; // m, half-width of the centerline heading difference
  factors::FactorWeights weights;
  factors::StateBounds bounds;
  fg::SolverConfig solver;
  vehicle::VehicleParams vehicle;

  void validate() const;
  /// Bounds actually used by the limit factors.
  factors::StateBounds buffered_bounds() const;
};

/// Window variables, interleaved theta_0, u_0, theta_1, ..., theta_n.
struct Window {
  fg::FactorGraph graph;
  factors::WindowKeys keys;
};

Window make_window(int horizon);

/// Reference speed at lap step k: linear ramp from rest to v_des over the
/// first n steps.
double launch_speed(const PlannerConfig& config, int lap_step);

/// Achievable speed per centerline station: v_des capped by the lateral grip
/// limit sqrt(a_lat / |kappa|) and by braking distance to every later cap.
/// a_lat uses the peak front plus rear tire forces, a_brake the drag plus the
/// motor at the lowest duty cycle, both scaled by grip_margin.
struct SpeedProfile {
  std::vector<double> speed;  // one per centerline station
  double spacing = 0.0;
  bool closed = true;

  double at(double s) const;
};

SpeedProfile speed_profile(const track::Track& track, const PlannerConfig& config);

/// Centerline references for the n+1 window states. The first station is the
/// projection of the current position (searched near `progress_hint` when
/// given). Without a guide the stations advance by the reference speed times
/// Ts; with a guide (the shifted previous plan) each station is the
/// projection of the corresponding guide state, so the reference pulls the
/// plan toward the centerline without dictating where along it each state is.
factors::ReferenceWindow select_reference_window(const track::Track& track,
                                                 const VehicleState& current,
                                                 const PlannerConfig& config, int lap_step,
                                                 std::optional<double> progress_hint = {},
                                                 const std::vector<VehicleState>* guide = nullptr,
                                                 const SpeedProfile* profile = nullptr);

/// Stopping distance past the finish line of an open track.
double stop_distance(const PlannerConfig& config);

struct Trajectory {
  std::vector<VehicleState> states;    // n+1
  std::vector<ControlInput> controls;  // n
};

/// The previous solution advanced by one step: states and controls move one
/// slot forward, the last control is repeated and the new terminal state is
/// propagated through the dynamics under it. theta_0 becomes `current`.
Trajectory shift_solution(const PlannerConfig& config, const Trajectory& previous,
                          const VehicleState& current);

/// Initial values for a window: from the reference on the first call, else
/// shift_solution of the previous plan.
fg::Values warm_start(const PlannerConfig& config, const Window& window,
                      const std::optional<Trajectory>& previous, const VehicleState& current,
                      const factors::ReferenceWindow& reference, const track::Track& track);

/// The discrete map of the planner's dynamics factor.
VehicleState predict_transition(const PlannerConfig& config, const VehicleState& s,
                                const ControlInput& u);

Trajectory extract(const Window& window, const fg::Values& values);

struct PlanStepResult {
  ControlInput applied;
  std::vector<VehicleState> predicted;
  Trajectory solution;
  fg::SolveStats stats;  // last pass; iterations summed over passes
  int passes = 0;
  std::vector<std::vector<double>> objective_traces;  // one per pass
  double solve_ms = 0.0;
  bool goal_attached = false;
  std::size_t factor_count = 0;
};

/// One receding-horizon solve.
PlanStepResult plan_step(const PlannerConfig& config, const track::Track& track,
                         std::shared_ptr<const track::SdfGrid> sdf, const VehicleState& current,
                         const factors::ReferenceWindow& reference, const fg::Values& warm);

struct StepRecord {
  int step = 0;
  double t = 0.0;
  VehicleState state;    // plant state when the step was planned
  ControlInput control;  // applied control
  double solve_ms = 0.0;
  int iterations = 0;
  bool converged = false;
  double progress = 0.0;          // arc length travelled along the centerline
  double prediction_error = 0.0;  // |theta_plant(j+1) - theta*(1)|
  double dynamics_residual = 0.0; // |theta*(1) - f(theta*(0), u*(0))| at the solution
  int passes = 0;
  std::vector<std::vector<double>> objective_traces;
};

struct LapResult {
  std::vector<StepRecord> steps;
  std::vector<VehicleState> states;  // steps.size() + 1 plant samples
  bool completed = false;
  std::string status;  // "completed", "step_limit" or an abort diagnostic
  metrics::LapMetrics metrics;
  std::uint64_t track_hash = 0;
};

/// Closed-loop lap: plan, apply the first control for Ts on the plant, repeat
/// until the finish line is crossed (plus M steps on open tracks) or the
/// step limit is reached. Never throws for planner failures; the result
/// carries the partial trace and status.
LapResult run_lap(const PlannerConfig& config, const track::Track& track,
                  std::shared_ptr<const track::SdfGrid> sdf);

/// Metrics recomputed from a lap's closed-loop samples.
metrics::LapMetrics lap_metrics(const LapResult& lap);

/// Initial plant state: at rest on the first centerline station, aligned with the track.
VehicleState start_state(const track::Track& track);

/// Plant step: RK4 with `substeps` equal sub-intervals under constant control.
VehicleState advance_plant(const VehicleState& s, const ControlInput& u,
                           const vehicle::VehicleParams& params, double Ts, int substeps);

}  // namespace mincurvfg::planner
