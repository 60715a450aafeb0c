#include "mincurvfg/vehicle.hpp"

#include <cmath>
#include <stdexcept>

namespace mincurvfg::vehicle {

VehicleState VehicleState::from_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != 6) throw std::invalid_argument("state vector must have 6 entries");
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

bool VehicleState::finite() const { return vector().allFinite(); }

ControlInput ControlInput::from_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != 2) throw std::invalid_argument("control vector must have 2 entries");
  return {v[0], v[1]};
}

void VehicleParams::validate() const {
  if (!(m > 0 && Iz > 0 && lf > 0 && lb > 0 && L > 0 && W > 0)) {
    throw std::invalid_argument("vehicle mass, inertia and geometry must be positive");
  }
  if (!(Df > 0 && Db > 0)) throw std::invalid_argument("Pacejka D constants must be positive");
}

namespace {

// Pacejka magic formula D sin(C atan(B a)) and its slope in a.
struct Pacejka {
  double force;
  double slope;
};

Pacejka pacejka(double B, double C, double D, double alpha) {
  const double ba = B * alpha;
  const double inner = C * std::atan(ba);
  return {D * std::sin(inner), D * std::cos(inner) * C * B / (1.0 + ba * ba)};
}

// Slip angles and their partial derivatives w.r.t. (vx, vy, omega, delta).
struct Slip {
  double alpha_f, alpha_b;
  double df_dvx, df_dvy, df_domega;  // d alpha_f
  double db_dvx, db_dvy, db_domega;  // d alpha_b
};

Slip slip(const VehicleState& s, const ControlInput& u, const VehicleParams& p) {
  const bool clamped = s.vx < kSlipMinVx;
  const double vx = clamped ? kSlipMinVx : s.vx;

  const double qf = (s.omega * p.lf + s.vy) / vx;
  const double qb = (s.omega * p.lb - s.vy) / vx;
  const double kf = -1.0 / (1.0 + qf * qf);
  const double kb = 1.0 / (1.0 + qb * qb);

  Slip out{};
  out.alpha_f = -std::atan(qf) + u.delta;
  // Rear slip follows the reference model, atan((omega lb - vy) / vx); the
  // leading minus sign printed in some derivations makes the yaw mode unstable.
  out.alpha_b = std::atan(qb);
  out.df_dvx = clamped ? 0.0 : kf * (-qf / vx);
  out.df_dvy = kf / vx;
  out.df_domega = kf * p.lf / vx;
  out.db_dvx = clamped ? 0.0 : kb * (-qb / vx);
  out.db_dvy = -kb / vx;
  out.db_domega = kb * p.lb / vx;
  return out;
}

}  // namespace

TireForces tire_forces(const VehicleState& s, const ControlInput& u, const VehicleParams& p) {
  const Slip sl = slip(s, u, p);
  TireForces f;
  f.alpha_f = sl.alpha_f;
  f.alpha_b = sl.alpha_b;
  f.Ffy = pacejka(p.Bf, p.Cf, p.Df, sl.alpha_f).force;
  f.Fby = pacejka(p.Bb, p.Cb_tire, p.Db, sl.alpha_b).force;
  f.Fbx = (p.Cm1 - p.Cm2 * s.vx) * u.d - p.Cr0 - p.Cd * s.vx * s.vx;
  return f;
}

Vector6d dynamics(const VehicleState& s, const ControlInput& u, const VehicleParams& p) {
  const TireForces f = tire_forces(s, u, p);
  const double c = std::cos(s.phi);
  const double sn = std::sin(s.phi);
  const double cd = std::cos(u.delta);
  const double sd = std::sin(u.delta);

  Vector6d g;
  g[0] = s.vx * c - s.vy * sn;
  g[1] = s.vx * sn + s.vy * c;
  g[2] = (f.Fbx - f.Ffy * sd + p.m * s.vy * s.omega) / p.m;
  g[3] = (f.Fby + f.Ffy * cd - p.m * s.vx * s.omega) / p.m;
  g[4] = s.omega;
  g[5] = (f.Ffy * p.lf * cd - f.Fby * p.lb) / p.Iz;
  return g;
}

DynamicsJacobian dynamics_jacobian(const VehicleState& s, const ControlInput& u,
                                   const VehicleParams& p) {
  const Slip sl = slip(s, u, p);
  const Pacejka front = pacejka(p.Bf, p.Cf, p.Df, sl.alpha_f);
  const Pacejka rear = pacejka(p.Bb, p.Cb_tire, p.Db, sl.alpha_b);
  const double Ffy = front.force;

  const double c = std::cos(s.phi);
  const double sn = std::sin(s.phi);
  const double cd = std::cos(u.delta);
  const double sd = std::sin(u.delta);

  // Tire force partials, ordered (vx, vy, omega); front also depends on delta.
  const double Ffy_vx = front.slope * sl.df_dvx;
  const double Ffy_vy = front.slope * sl.df_dvy;
  const double Ffy_om = front.slope * sl.df_domega;
  const double Ffy_de = front.slope;
  const double Fby_vx = rear.slope * sl.db_dvx;
  const double Fby_vy = rear.slope * sl.db_dvy;
  const double Fby_om = rear.slope * sl.db_domega;
  const double Fbx_vx = -p.Cm2 * u.d - 2.0 * p.Cd * s.vx;
  const double Fbx_d = p.Cm1 - p.Cm2 * s.vx;

  DynamicsJacobian J;
  J.Ac.setZero();
  J.Bc.setZero();

  // x, y rows
  J.Ac(0, 2) = c;
  J.Ac(0, 3) = -sn;
  J.Ac(0, 4) = -s.vx * sn - s.vy * c;
  J.Ac(1, 2) = sn;
  J.Ac(1, 3) = c;
  J.Ac(1, 4) = s.vx * c - s.vy * sn;

  // vx row: (Fbx - Ffy sin(delta) + m vy omega) / m
  J.Ac(2, 2) = (Fbx_vx - Ffy_vx * sd) / p.m;
  J.Ac(2, 3) = (-Ffy_vy * sd) / p.m + s.omega;
  J.Ac(2, 5) = (-Ffy_om * sd) / p.m + s.vy;
  J.Bc(2, 0) = (-Ffy_de * sd - Ffy * cd) / p.m;
  J.Bc(2, 1) = Fbx_d / p.m;

  // vy row: (Fby + Ffy cos(delta) - m vx omega) / m
  J.Ac(3, 2) = (Fby_vx + Ffy_vx * cd) / p.m - s.omega;
  J.Ac(3, 3) = (Fby_vy + Ffy_vy * cd) / p.m;
  J.Ac(3, 5) = (Fby_om + Ffy_om * cd) / p.m - s.vx;
  J.Bc(3, 0) = (Ffy_de * cd - Ffy * sd) / p.m;

  J.Ac(4, 5) = 1.0;

  // omega row: (Ffy lf cos(delta) - Fby lb) / Iz
  J.Ac(5, 2) = (Ffy_vx * p.lf * cd - Fby_vx * p.lb) / p.Iz;
  J.Ac(5, 3) = (Ffy_vy * p.lf * cd - Fby_vy * p.lb) / p.Iz;
  J.Ac(5, 5) = (Ffy_om * p.lf * cd - Fby_om * p.lb) / p.Iz;
  J.Bc(5, 0) = (Ffy_de * p.lf * cd - Ffy * p.lf * sd) / p.Iz;
  return J;
}

VehicleState integrate(const VehicleState& s, const ControlInput& u, const VehicleParams& p,
                       double Ts) {
  if (!(Ts > 0.0)) throw std::invalid_argument("integration step must be positive");
  const Vector6d x0 = s.vector();
  auto f = [&](const Vector6d& x) { return dynamics(VehicleState::from_vector(x), u, p); };
  const Vector6d k1 = f(x0);
  const Vector6d k2 = f(x0 + 0.5 * Ts * k1);
  const Vector6d k3 = f(x0 + 0.5 * Ts * k2);
  const Vector6d k4 = f(x0 + Ts * k3);
  return VehicleState::from_vector(x0 + Ts / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

AffineDiscreteModel linearize_discretize(const VehicleState& s, const ControlInput& u,
                                         const VehicleParams& p, double Ts) {
  if (!(Ts > 0.0)) throw std::invalid_argument("sample time must be positive");
  const DynamicsJacobian J = dynamics_jacobian(s, u, p);
  const Vector6d g = dynamics(s, u, p);

  AffineDiscreteModel model;
  model.Ts = Ts;
  model.A = Matrix6d::Identity() + Ts * J.Ac;
  model.B = Ts * J.Bc;
  model.c = Ts * (g - J.Ac * s.vector() - J.Bc * u.vector());
  return model;
}

Vector6d euler_propagate(const VehicleState& s, const ControlInput& u, const VehicleParams& p,
                         double Ts, int substeps, Matrix6d* d_state, Matrix62d* d_control) {
  if (!(Ts > 0.0)) throw std::invalid_argument("sample time must be positive");
  if (substeps < 1) throw std::invalid_argument("substeps must be at least 1");
  const double h = Ts / double(substeps);
  Vector6d x = s.vector();
  if (d_state) d_state->setIdentity();
  if (d_control) d_control->setZero();
  for (int i = 0; i < substeps; ++i) {
    const auto si = VehicleState::from_vector(x);
    if (d_state || d_control) {
      const DynamicsJacobian J = dynamics_jacobian(si, u, p);
      const Matrix6d A = Matrix6d::Identity() + h * J.Ac;
      if (d_control) *d_control = A * *d_control + h * J.Bc;
      if (d_state) *d_state = A * *d_state;
    }
    x += h * dynamics(si, u, p);
  }
  return x;
}

AffineDiscreteModel linearize_substepped(const VehicleState& s, const ControlInput& u,
                                         const VehicleParams& p, double Ts, int substeps) {
  AffineDiscreteModel model;
  model.Ts = Ts;
  const Vector6d next = euler_propagate(s, u, p, Ts, substeps, &model.A, &model.B);
  model.c = next - model.A * s.vector() - model.B * u.vector();
  return model;
}

}  // namespace mincurvfg::vehicle
