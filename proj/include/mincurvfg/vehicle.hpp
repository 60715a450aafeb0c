#pragma once

// Dynamic bicycle model of a 1:43 racecar with simplified Pacejka tires.

#include <Eigen/Core>

namespace mincurvfg::vehicle {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Matrix62d = Eigen::Matrix<double, 6, 2>;

/// State layout [x, y, vx, vy, phi, omega].
struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double phi = 0.0;
  double omega = 0.0;

  Vector6d vector() const { return {x, y, vx, vy, phi, omega}; }
  static VehicleState from_vector(const Eigen::Ref<const Eigen::VectorXd>& v);
  bool finite() const;

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

/// Steering angle [rad] and PWM duty cycle.
struct ControlInput {
  double delta = 0.0;
  double d = 0.0;

  Eigen::Vector2d vector() const { return {delta, d}; }
  static ControlInput from_vector(const Eigen::Ref<const Eigen::VectorXd>& v);

  friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

struct VehicleParams {
  double m = 0.041;
  double Iz = 27.8e-6;
  double lf = 0.029;
  double lb = 0.033;
  double L = 0.12;
  double W = 0.06;
  double Cr0 = 0.0518;
  double Cm1 = 0.287;
  double Cm2 = 0.0545;
  double Cd = 0.00035;
  double Bf = 2.579;
  double Cf = 1.2;
  double Df = 0.192;
  double Bb = 3.3852;
  double Cb_tire = 1.2691;
  double Db = 0.1737;

  /// Throws std::invalid_argument when a physical constant is non-positive.
  void validate() const;
};

/// Lower bound applied to vx inside the slip-angle quotient only.
inline constexpr double kSlipMinVx = 0.1;

struct TireForces {
  double Ffy = 0.0;
  double Fby = 0.0;
  double Fbx = 0.0;
  double alpha_f = 0.0;
  double alpha_b = 0.0;
};

TireForces tire_forces(const VehicleState& s, const ControlInput& u, const VehicleParams& p);

/// Continuous-time state derivative g(theta, u).
Vector6d dynamics(const VehicleState& s, const ControlInput& u, const VehicleParams& p);

struct DynamicsJacobian {
  Matrix6d Ac;   // d g / d theta
  Matrix62d Bc;  // d g / d u
};

DynamicsJacobian dynamics_jacobian(const VehicleState& s, const ControlInput& u,
                                   const VehicleParams& p);

/// One classic RK4 step with the control held for Ts.
VehicleState integrate(const VehicleState& s, const ControlInput& u, const VehicleParams& p,
                       double Ts);

/// theta_{k+1} ~= A theta_k + B u_k + c, forward-Euler discretization of the
/// model linearized at (state, control).
struct AffineDiscreteModel {
  Matrix6d A;
  Matrix62d B;
  Vector6d c;
  double Ts = 0.0;

  Vector6d predict(const Vector6d& state, const Eigen::Vector2d& control) const {
    return A * state + B * control + c;
  }
};

AffineDiscreteModel linearize_discretize(const VehicleState& s, const ControlInput& u,
                                         const VehicleParams& p, double Ts);

/// `substeps` forward-Euler steps of Ts/substeps under constant control, with
/// the sensitivities of the end state to the start state and the control.
Vector6d euler_propagate(const VehicleState& s, const ControlInput& u, const VehicleParams& p,
                         double Ts, int substeps, Matrix6d* d_state = nullptr,
                         Matrix62d* d_control = nullptr);

/// Affine model of euler_propagate about (state, control); reduces to
/// linearize_discretize for one substep.
AffineDiscreteModel linearize_substepped(const VehicleState& s, const ControlInput& u,
                                         const VehicleParams& p, double Ts, int substeps);

}  // namespace mincurvfg::vehicle
