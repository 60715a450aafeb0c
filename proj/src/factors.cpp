#include "mincurvfg/factors.hpp"

#include <stdexcept>

namespace mincurvfg::factors {

void FactorWeights::validate() const {
  for (double s : {sigma_start_goal, sigma_ref, sigma_vel, sigma_rlim, sigma_ulim, sigma_obs,
                   sigma_sys, sigma_curv, sigma_measured}) {
    if (!(s > 0.0)) throw std::invalid_argument("factor sigmas must be positive");
  }
}

void StateBounds::validate() const {
  if (!((r_min.array() < r_max.array()).all() && (u_min.array() < u_max.array()).all() &&
        vx_range[0] < vx_range[1] && vy_range[0] < vy_range[1])) {
    throw std::invalid_argument("state/control bounds need min < max componentwise");
  }
}

// ---------------------------------------------------------------- priors

BlockPriorFactor::BlockPriorFactor(Key key, int offset, Eigen::VectorXd target, double sigma,
                                   std::string_view name)
    : Factor({key}, int(target.size()), sigma),
      offset_(offset),
      target_(std::move(target)),
      name_(name) {
  if (offset_ < 0 || offset_ + target_.size() > key.dim) {
    throw fg::StructuralError("prior block exceeds variable dimension");
  }
}

void BlockPriorFactor::evaluate(const Values& values, Eigen::Ref<Eigen::VectorXd> residual,
                                std::vector<Eigen::MatrixXd>* jacobians) const {
  const Key key = keys().front();
  const auto& x = values.at(key);
  residual = x.segment(offset_, target_.size()) - target_;
  if (jacobians) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(target_.size(), key.dim);
    J.block(0, offset_, target_.size(), target_.size()).setIdentity();
    jacobians->assign(1, std::move(J));
  }
}

LimitFactor::LimitFactor(Key key, int offset, Eigen::Vector2d lower, Eigen::Vector2d upper,
                         double sigma, std::string_view name)
    : Factor({key}, 2, sigma), offset_(offset), lower_(lower), upper_(upper), name_(name) {
  if (offset_ < 0 || offset_ + 2 > key.dim) throw fg::StructuralError("limit block out of range");
}

void LimitFactor::evaluate(const Values& values, Eigen::Ref<Eigen::VectorXd> residual,
                           std::vector<Eigen::MatrixXd>* jacobians) const {
  const Key key = keys().front();
  const auto z = values.at(key).segment<2>(offset_);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2, key.dim);
  for (int i = 0; i < 2; ++i) {
    if (z[i] < lower_[i]) {
      residual[i] = z[i] - lower_[i];
      J(i, offset_ + i) = 1.0;
    } else if (z[i] > upper_[i]) {
      residual[i] = z[i] - upper_[i];
      J(i, offset_ + i) = 1.0;
    } else {
      residual[i] = 0.0;
    }
  }
  if (jacobians) jacobians->assign(1, std::move(J));
}

// ---------------------------------------------------------------- dynamics

namespace {

void check_dynamics_keys(Key a, Key b, Key c) {
  if (a.dim != 6 || b.dim != 2 || c.dim != 6) {
    throw fg::StructuralError("dynamics factor expects (state, control, state) keys");
  }
}

}  // namespace

DynamicsFactor::DynamicsFactor(Key prev_state, Key prev_control, Key state,
                               vehicle::AffineDiscreteModel model, double sigma)
    : Factor({prev_state, prev_control, state}, 6, sigma), model_(std::move(model)) {
  check_dynamics_keys(prev_state, prev_control, state);
}

void DynamicsFactor::evaluate(const Values& values, Eigen::Ref<Eigen::VectorXd> residual,
                              std::vector<Eigen::MatrixXd>* jacobians) const {
  const vehicle::Vector6d prev = values.at(keys()[0]);
  const Eigen::Vector2d u = values.at(keys()[1]);
  const vehicle::Vector6d next = values.at(keys()[2]);
  residual = next - model_.predict(prev, u);
  if (jacobians) {
    jacobians->clear();
    jacobians->emplace_back(-model_.A);
    jacobians->emplace_back(-model_.B);
    jacobians->emplace_back(Eigen::MatrixXd::Identity(6, 6));
  }
}

RelinearizedDynamicsFactor::RelinearizedDynamicsFactor(Key prev_state, Key prev_control,
                                                       Key state, vehicle::VehicleParams params,
                                                       double Ts, double sigma, int substeps)
    : Factor({prev_state, prev_control, state}, 6, sigma),
      params_(params),
      Ts_(Ts),
      substeps_(substeps) {
  check_dynamics_keys(prev_state, prev_control, state);
  if (!(Ts_ > 0.0)) throw std::invalid_argument("sample time must be positive");
  if (substeps_ < 1) throw std::invalid_argument("dynamics substeps must be at least 1");
}

void RelinearizedDynamicsFactor::evaluate(const Values& values,
                                          Eigen::Ref<Eigen::VectorXd> residual,
                                          std::vector<Eigen::MatrixXd>* jacobians) const {
  const auto prev = vehicle::VehicleState::from_vector(values.at(keys()[0]));
  const auto u = vehicle::ControlInput::from_vector(values.at(keys()[1]));
  const vehicle::Vector6d next = values.at(keys()[2]);
  if (!jacobians) {
    residual = next - vehicle::euler_propagate(prev, u, params_, Ts_, substeps_);
    return;
  }
  vehicle::Matrix6d A;
  vehicle::Matrix62d B;
  residual = next - vehicle::euler_propagate(prev, u, params_, Ts_, substeps_, &A, &B);
  jacobians->clear();
  jacobians->emplace_back(-A);
  jacobians->emplace_back(-B);
  jacobians->emplace_back(Eigen::MatrixXd::Identity(6, 6));
}

// ---------------------------------------------------------------- obstacle

ObstacleFactor::ObstacleFactor(Key key, std::shared_ptr<const track::SdfGrid> sdf, double epsilon,
                               double sigma)
    : Factor({key}, 1, sigma), sdf_(std::move(sdf)), epsilon_(epsilon) {
  if (!sdf_) throw fg::StructuralError("obstacle factor needs an SDF");
  if (key.dim < 2) throw fg::StructuralError("obstacle factor needs a position block");
  if (!(epsilon_ >= 0.0)) throw std::invalid_argument("safety distance must be >= 0");
}

void ObstacleFactor::evaluate(const Values& values, Eigen::Ref<Eigen::VectorXd> residual,
                              std::vector<Eigen::MatrixXd>* jacobians) const {
  const Key key = keys().front();
  const Eigen::Vector2d p = values.at(key).head<2>();
  const track::SdfQuery q = track::query_sdf(*sdf_, p);
  residual[0] = track::hinge_cost(q.distance, epsilon_);
  if (jacobians) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(1, key.dim);
    if (q.distance <= epsilon_) J.block<1, 2>(0, 0) = -q.gradient.transpose();
    jacobians->assign(1, std::move(J));
  }
}

// ---------------------------------------------------------------- curvature

Eigen::Vector2d curvature_residual(const Eigen::Vector2d& p_i, const Eigen::Vector2d& p_i1,
                                   const Eigen::Vector2d& p_i2) {
  const Eigen::Vector2d w = p_i2 - p_i1;
  const double len = w.norm();
  if (len < CurvatureFactor::kDegenerate) return Eigen::Vector2d::Zero();
  const Eigen::Vector2d t = w / len;
  const Eigen::Vector2d u = p_i - p_i1;
  return u - u.dot(t) * t;
}

CurvatureFactor::CurvatureFactor(Key p_i, Key p_i1, Key p_i2, double sigma)
    : Factor({p_i, p_i1, p_i2}, 2, sigma) {
  for (const Key& k : keys()) {
    if (k.dim < 2) throw fg::StructuralError("curvature factor needs position blocks");
  }
}

void CurvatureFactor::evaluate(const Values& values, Eigen::Ref<Eigen::VectorXd> residual,
                               std::vector<Eigen::MatrixXd>* jacobians) const {
  const Eigen::Vector2d p0 = values.at(keys()[0]).head<2>();
  const Eigen::Vector2d p1 = values.at(keys()[1]).head<2>();
  const Eigen::Vector2d p2 = values.at(keys()[2]).head<2>();
  const Eigen::Vector2d w = p2 - p1;
  const double len = w.norm();

  std::vector<Eigen::MatrixXd> J;
  for (const Key& k : keys()) J.emplace_back(Eigen::MatrixXd::Zero(2, k.dim));

  if (len < kDegenerate) {
    degenerate_.store(true, std::memory_order_relaxed);
    residual.setZero();
    if (jacobians) *jacobians = std::move(J);
    return;
  }

  const Eigen::Vector2d t = w / len;
  const Eigen::Vector2d u = p0 - p1;
  const Eigen::Matrix2d P = Eigen::Matrix2d::Identity() - t * t.transpose();
  residual = P * u;
  if (!jacobians) return;

  const Eigen::Matrix2d da_dw =
      -(u.dot(t) * Eigen::Matrix2d::Identity() + t * u.transpose()) * P / len;
  J[0].leftCols<2>() = P;
  J[1].leftCols<2>() = -P - da_dw;
  J[2].leftCols<2>() = da_dw;
  *jacobians = std::move(J);
}

// ---------------------------------------------------------------- constructors

FactorPtr prior_position_factor(Key key, const Eigen::Vector2d& mu, double sigma) {
  return std::make_shared<BlockPriorFactor>(key, kPosition, mu, sigma, "prior_position");
}

FactorPtr goal_factor(Key key, const Eigen::Vector2d& mu, double sigma) {
  return std::make_shared<BlockPriorFactor>(key, kPosition, mu, sigma, "goal");
}

FactorPtr start_state_factor(Key key, const vehicle::Vector6d& state, double sigma) {
  return std::make_shared<BlockPriorFactor>(key, 0, state, sigma, "start");
}

FactorPtr reference_factor(Key key, const Eigen::Vector2d& mu, double sigma_ref) {
  return std::make_shared<BlockPriorFactor>(key, kPosition, mu, sigma_ref, "reference");
}

FactorPtr velocity_factor(Key key, const Eigen::Vector2d& v_des, double sigma_vel) {
  if (key.dim != 6) throw fg::StructuralError("velocity factor expects a state key");
  return std::make_shared<BlockPriorFactor>(key, kVelocity, v_des, sigma_vel, "velocity");
}

FactorPtr limit_factor(Key key, int offset, const Eigen::Vector2d& lower,
                       const Eigen::Vector2d& upper, double sigma) {
  return std::make_shared<LimitFactor>(key, offset, lower, upper, sigma, "limit");
}

FactorPtr rotation_limit_factor(Key key, const StateBounds& bounds, double sigma) {
  if (key.dim != 6) throw fg::StructuralError("rotation limit expects a state key");
  return std::make_shared<LimitFactor>(key, kRotation, bounds.r_min, bounds.r_max, sigma,
                                       "rotation_limit");
}

FactorPtr control_limit_factor(Key key, const StateBounds& bounds, double sigma) {
  if (key.dim != 2) throw fg::StructuralError("control limit expects a control key");
  return std::make_shared<LimitFactor>(key, 0, bounds.u_min, bounds.u_max, sigma,
                                       "control_limit");
}

FactorPtr dynamics_factor(Key prev_state, Key prev_control, Key state,
                          const vehicle::AffineDiscreteModel& model, double sigma_sys) {
  return std::make_shared<DynamicsFactor>(prev_state, prev_control, state, model, sigma_sys);
}

FactorPtr relinearized_dynamics_factor(Key prev_state, Key prev_control, Key state,
                                       const vehicle::VehicleParams& params, double Ts,
                                       double sigma_sys, int substeps) {
  return std::make_shared<RelinearizedDynamicsFactor>(prev_state, prev_control, state, params, Ts,
                                                      sigma_sys, substeps);
}

FactorPtr obstacle_factor(Key key, std::shared_ptr<const track::SdfGrid> sdf, double epsilon,
                          double sigma_obs) {
  return std::make_shared<ObstacleFactor>(key, std::move(sdf), epsilon, sigma_obs);
}

FactorPtr curvature_factor(Key p_i, Key p_i1, Key p_i2, double sigma_curv) {
  return std::make_shared<CurvatureFactor>(p_i, p_i1, p_i2, sigma_curv);
}

// ---------------------------------------------------------------- window

std::vector<FactorPtr> assemble_horizon_factors(const WindowKeys& keys,
                                                const FactorWeights& weights,
                                                const StateBounds& bounds,
                                                const ReferenceWindow& reference,
                                                const HorizonSpec& spec) {
  const std::size_t states = keys.states.size();
  if (states < 3) throw fg::StructuralError("horizon window needs at least 3 states");
  if (keys.controls.size() + 1 != states) {
    throw fg::StructuralError("window needs exactly one control fewer than states");
  }
  if (reference.positions.size() != states || reference.speeds.size() != states) {
    throw fg::StructuralError("reference window length does not match horizon");
  }
  if (!spec.sdf) throw fg::StructuralError("horizon assembly needs an SDF");

  std::vector<FactorPtr> out;
  out.push_back(start_state_factor(keys.states[0], spec.start_state, weights.sigma_measured));
  for (std::size_t k = 0; k < states; ++k) {
    out.push_back(reference_factor(keys.states[k], reference.positions[k], weights.sigma_ref));
    out.push_back(velocity_factor(keys.states[k], {reference.speeds[k], 0.0}, weights.sigma_vel));
    out.push_back(rotation_limit_factor(keys.states[k], bounds, weights.sigma_rlim));
  }
  for (const Key& u : keys.controls) {
    out.push_back(control_limit_factor(u, bounds, weights.sigma_ulim));
  }
  if (!spec.dynamics_models.empty() && spec.dynamics_models.size() + 1 != states) {
    throw fg::StructuralError("one dynamics model per transition required");
  }
  for (std::size_t k = 0; k + 1 < states; ++k) {
    if (spec.dynamics_models.empty()) {
      out.push_back(relinearized_dynamics_factor(keys.states[k], keys.controls[k],
                                                 keys.states[k + 1], spec.params, spec.Ts,
                                                 weights.sigma_sys, spec.dynamics_substeps));
    } else {
      out.push_back(dynamics_factor(keys.states[k], keys.controls[k], keys.states[k + 1],
                                    spec.dynamics_models[k], weights.sigma_sys));
    }
  }
  for (const Key& s : keys.states) {
    out.push_back(obstacle_factor(s, spec.sdf, spec.epsilon, weights.sigma_obs));
  }
  if (spec.curvature) {
    for (std::size_t k = 0; k + 2 < states; ++k) {
      out.push_back(curvature_factor(keys.states[k], keys.states[k + 1], keys.states[k + 2],
                                     weights.sigma_curv));
    }
  }
  if (spec.goal) out.push_back(goal_factor(keys.states.back(), *spec.goal, weights.sigma_start_goal));
  return out;
}

}  // namespace mincurvfg::factors
