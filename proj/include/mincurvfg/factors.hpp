#pragma once

// Residual factors of the racing planner: priors, soft limits, dynamics,
// track-boundary (SDF hinge) and the three-point curvature factor.

#include "mincurvfg/fg.hpp"
#include "mincurvfg/track.hpp"
#include "mincurvfg/vehicle.hpp"

#include <atomic>
#include <memory>
#include <optional>
#include <vector>

namespace mincurvfg::factors {

using fg::Factor;
using fg::FactorPtr;
using fg::Key;
using fg::Values;

/// Noise sigmas per factor type.
struct FactorWeights {
  double sigma_start_goal = 8e-4;
  double sigma_ref = 5.7e-2;
  double sigma_vel = 5.5e-2;
  double sigma_rlim = 1e-3;
  double sigma_ulim = 5e-6;
  double sigma_obs = 1e-4;
  double sigma_sys = 1e-5;
  double sigma_curv = 1e-2;
  /// Anchor of theta_0 to the measured plant state. Much tighter than the
  /// start/goal position prior so the solver cannot move the initial state.
  double sigma_measured = 1e-6;

  void validate() const;
};

struct StateBounds {
  Eigen::Vector2d r_min{-10.0, -7.0};  // (phi, omega)
  Eigen::Vector2d r_max{10.0, 7.0};
  Eigen::Vector2d u_min{-0.4, -0.1};  // (delta, d)
  Eigen::Vector2d u_max{0.4, 1.0};
  Eigen::Vector2d vx_range{-0.1, 4.0};
  Eigen::Vector2d vy_range{-2.0, 2.0};

  void validate() const;
};

/// Per-step reference: centerline positions and desired longitudinal speeds.
struct ReferenceWindow {
  std::vector<Eigen::Vector2d> positions;
  std::vector<double> speeds;
  std::vector<double> stations;  // arc length of each reference position
};

// Offsets of the sub-blocks inside a 6-D state.
inline constexpr int kPosition = 0;
inline constexpr int kVelocity = 2;
inline constexpr int kRotation = 4;

/// Residual x[offset:offset+dim] - target on one variable.
class BlockPriorFactor final : public Factor {
 public:
  BlockPriorFactor(Key key, int offset, Eigen::VectorXd target, double sigma,
                   std::string_view name);
  std::string_view name() const override { return name_; }
  void evaluate(const Values& values, Eigen::Ref<Eigen::VectorXd> residual,
                std::vector<Eigen::MatrixXd>* jacobians) const override;

  const Eigen::VectorXd& target() const noexcept { return target_; }

 private:
  int offset_;
  Eigen::VectorXd target_;
  std::string_view name_;
};

/// Componentwise hinge on a 2-D block: (z - lo) below, (z - hi) above, else 0.
class LimitFactor final : public Factor {
 public:
  LimitFactor(Key key, int offset, Eigen::Vector2d lower, Eigen::Vector2d upper, double sigma,
              std::string_view name);
  std::string_view name() const override { return name_; }
  void evaluate(const Values& values, Eigen::Ref<Eigen::VectorXd> residual,
                std::vector<Eigen::MatrixXd>* jacobians) const override;

 private:
  int offset_;
  Eigen::Vector2d lower_;
  Eigen::Vector2d upper_;
  std::string_view name_;
};

/// theta_i - (A theta_{i-1} + B u_{i-1} + c) with a fixed affine model.
class DynamicsFactor final : public Factor {
 public:
  DynamicsFactor(Key prev_state, Key prev_control, Key state, vehicle::AffineDiscreteModel model,
                 double sigma);
  std::string_view name() const override { return "dynamics"; }
  void evaluate(const Values& values, Eigen::Ref<Eigen::VectorXd> residual,
                std::vector<Eigen::MatrixXd>* jacobians) const override;

 private:
  vehicle::AffineDiscreteModel model_;
};

/// theta_i - euler_propagate(theta_{i-1}, u_{i-1}): the exact discrete map,
/// so every LM linearization sees the model linearized at the current
/// iterate. Splitting the interval into substeps keeps the map stable at low
/// speed where the tire modes are stiff.
class RelinearizedDynamicsFactor final : public Factor {
 public:
  RelinearizedDynamicsFactor(Key prev_state, Key prev_control, Key state,
                             vehicle::VehicleParams params, double Ts, double sigma,
                             int substeps = 1);
  std::string_view name() const override { return "dynamics"; }
  void evaluate(const Values& values, Eigen::Ref<Eigen::VectorXd> residual,
                std::vector<Eigen::MatrixXd>* jacobians) const override;

 private:
  vehicle::VehicleParams params_;
  double Ts_;
  int substeps_;
};

/// Scalar hinge on the signed distance to the track boundary.
class ObstacleFactor final : public Factor {
 public:
  ObstacleFactor(Key key, std::shared_ptr<const track::SdfGrid> sdf, double epsilon, double sigma);
  std::string_view name() const override { return "obstacle"; }
  void evaluate(const Values& values, Eigen::Ref<Eigen::VectorXd> residual,
                std::vector<Eigen::MatrixXd>* jacobians) const override;

 private:
  std::shared_ptr<const track::SdfGrid> sdf_;
  double epsilon_;
};

/// Offset of p_i from the line through p_{i+1} and p_{i+2}, as a 2-vector.
/// Positions are the first two entries of each key's block.
class CurvatureFactor final : public Factor {
 public:
  CurvatureFactor(Key p_i, Key p_i1, Key p_i2, double sigma);
  std::string_view name() const override { return "curvature"; }
  void evaluate(const Values& values, Eigen::Ref<Eigen::VectorXd> residual,
                std::vector<Eigen::MatrixXd>* jacobians) const override;

  /// Set once an evaluation hit |p_{i+2} - p_{i+1}| < kDegenerate.
  bool degenerate() const noexcept { return degenerate_.load(std::memory_order_relaxed); }

  static constexpr double kDegenerate = 1e-9;

 private:
  mutable std::atomic<bool> degenerate_{false};
};

/// Geometry of the curvature residual; shared with the factor and tests.
Eigen::Vector2d curvature_residual(const Eigen::Vector2d& p_i, const Eigen::Vector2d& p_i1,
                                   const Eigen::Vector2d& p_i2);

// Constructors mirroring the factor catalogue.
FactorPtr prior_position_factor(Key key, const Eigen::Vector2d& mu, double sigma);
FactorPtr goal_factor(Key key, const Eigen::Vector2d& mu, double sigma);
FactorPtr start_state_factor(Key key, const vehicle::Vector6d& state, double sigma);
FactorPtr reference_factor(Key key, const Eigen::Vector2d& mu, double sigma_ref);
FactorPtr velocity_factor(Key key, const Eigen::Vector2d& v_des, double sigma_vel);
FactorPtr rotation_limit_factor(Key key, const StateBounds& bounds, double sigma);
FactorPtr control_limit_factor(Key key, const StateBounds& bounds, double sigma);
FactorPtr limit_factor(Key key, int offset, const Eigen::Vector2d& lower,
                       const Eigen::Vector2d& upper, double sigma);
FactorPtr dynamics_factor(Key prev_state, Key prev_control, Key state,
                          const vehicle::AffineDiscreteModel& model, double sigma_sys);
FactorPtr relinearized_dynamics_factor(Key prev_state, Key prev_control, Key state,
                                       const vehicle::VehicleParams& params, double Ts,
                                       double sigma_sys, int substeps = 1);
FactorPtr obstacle_factor(Key key, std::shared_ptr<const track::SdfGrid> sdf, double epsilon,
                          double sigma_obs);
FactorPtr curvature_factor(Key p_i, Key p_i1, Key p_i2, double sigma_curv);

struct WindowKeys {
  std::vector<Key> states;    // theta_0 .. theta_n
  std::vector<Key> controls;  // u_0 .. u_{n-1}
};

struct HorizonSpec {
  vehicle::Vector6d start_state = vehicle::Vector6d::Zero();
  std::optional<Eigen::Vector2d> goal;  // attached to theta_n when set
  bool curvature = true;
  double epsilon = 0.015;
  double Ts = 0.02;
  int dynamics_substeps = 1;
  /// When set (one model per transition), the dynamics factors use these
  /// fixed affine models instead of relinearizing on every evaluation.
  std::vector<vehicle::AffineDiscreteModel> dynamics_models;
  vehicle::VehicleParams params;
  std::shared_ptr<const track::SdfGrid> sdf;
};

/// All factors of one receding-horizon window, in a fixed order.
std::vector<FactorPtr> assemble_horizon_factors(const WindowKeys& keys,
                                                const FactorWeights& weights,
                                                const StateBounds& bounds,
                                                const ReferenceWindow& reference,
                                                const HorizonSpec& spec);

}  // namespace mincurvfg::factors
