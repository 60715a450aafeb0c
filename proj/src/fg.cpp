#include "mincurvfg/fg.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace mincurvfg::fg {

// ---------------------------------------------------------------- Values

void Values::insert(Key key, Eigen::VectorXd value) {
  if (key.dim <= 0) throw StructuralError("variable dimension must be positive");
  if (value.size() != key.dim) {
    std::ostringstream os;
    os << "value for key " << key.id << " has length " << value.size() << ", expected "
       << key.dim;
    throw StructuralError(os.str());
  }
  if (slots_.size() <= key.id) slots_.resize(key.id + 1);
  if (slots_[key.id].size() != 0) {
    throw StructuralError("key " + std::to_string(key.id) + " inserted twice");
  }
  slots_[key.id] = std::move(value);
  ++count_;
}

void Values::update(Key key, const Eigen::Ref<const Eigen::VectorXd>& value) {
  auto& slot = at(key);
  if (value.size() != slot.size()) throw StructuralError("update changes block dimension");
  slot = value;
}

bool Values::contains(Key key) const noexcept {
  return key.id < slots_.size() && slots_[key.id].size() == key.dim && key.dim > 0;
}

const Eigen::VectorXd& Values::at(Key key) const {
  if (!contains(key)) {
    throw StructuralError("missing value for key " + std::to_string(key.id));
  }
  return slots_[key.id];
}

Eigen::VectorXd& Values::at(Key key) {
  if (!contains(key)) {
    throw StructuralError("missing value for key " + std::to_string(key.id));
  }
  return slots_[key.id];
}

bool operator==(const Values& a, const Values& b) {
  if (a.count_ != b.count_) return false;
  const std::size_t n = std::max(a.slots_.size(), b.slots_.size());
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd empty;
    const auto& va = i < a.slots_.size() ? a.slots_[i] : empty;
    const auto& vb = i < b.slots_.size() ? b.slots_[i] : empty;
    if (va.size() != vb.size()) return false;
    for (Eigen::Index k = 0; k < va.size(); ++k) {
      if (va[k] != vb[k]) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------- Factor

Factor::Factor(std::vector<Key> keys, int residual_dim, double sigma)
    : keys_(std::move(keys)), residual_dim_(residual_dim), sigma_(sigma) {
  if (keys_.empty()) throw StructuralError("factor needs at least one key");
  if (residual_dim_ <= 0) throw StructuralError("factor residual dimension must be positive");
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) {
    throw StructuralError("factor noise sigma must be positive and finite");
  }
}

Eigen::VectorXd Factor::residual(const Values& values) const {
  Eigen::VectorXd r(residual_dim_);
  evaluate(values, r, nullptr);
  return r;
}

std::vector<Eigen::MatrixXd> Factor::jacobians(const Values& values) const {
  Eigen::VectorXd r(residual_dim_);
  std::vector<Eigen::MatrixXd> jac;
  evaluate(values, r, &jac);
  return jac;
}

double Factor::cost(const Values& values) const {
  return 0.5 * residual(values).squaredNorm() / (sigma_ * sigma_);
}

FunctionFactor::FunctionFactor(std::vector<Key> keys, int residual_dim, double sigma,
                               ResidualFn residual, JacobianFn jacobian, std::string name)
    : Factor(std::move(keys), residual_dim, sigma),
      residual_fn_(std::move(residual)),
      jacobian_fn_(std::move(jacobian)),
      name_(std::move(name)) {}

void FunctionFactor::evaluate(const Values& values, Eigen::Ref<Eigen::VectorXd> residual,
                              std::vector<Eigen::MatrixXd>* jacobians) const {
  residual = residual_fn_(values);
  if (jacobians != nullptr) *jacobians = jacobian_fn_(values);
}

// ---------------------------------------------------------------- FactorGraph

Key FactorGraph::add_variable(int dim) {
  if (dim <= 0) throw StructuralError("variable dimension must be positive");
  Key key{static_cast<std::uint32_t>(variables_.size()), dim};
  variables_.push_back(key);
  offsets_.push_back(num_scalars_);
  num_scalars_ += dim;
  return key;
}

bool FactorGraph::contains(Key key) const noexcept {
  return key.id < variables_.size() && variables_[key.id] == key;
}

void FactorGraph::add(FactorPtr factor) {
  if (!factor) throw StructuralError("null factor");
  for (const Key& k : factor->keys()) {
    if (!contains(k)) {
      throw StructuralError(std::string(factor->name()) + " references undeclared key " +
                            std::to_string(k.id));
    }
  }
  num_residuals_ += factor->residual_dim();
  factors_.push_back(std::move(factor));
}

Eigen::Index FactorGraph::offset(Key key) const {
  if (!contains(key)) throw StructuralError("unknown key " + std::to_string(key.id));
  return offsets_[key.id];
}

bool FactorGraph::connected() const {
  if (variables_.empty()) return true;
  // union-find over variable ids
  std::vector<std::uint32_t> parent(variables_.size());
  for (std::uint32_t i = 0; i < parent.size(); ++i) parent[i] = i;
  auto find = [&](std::uint32_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const auto& f : factors_) {
    const auto root = find(f->keys().front().id);
    for (const Key& k : f->keys()) parent[find(k.id)] = root;
  }
  const auto root = find(0);
  for (std::uint32_t i = 1; i < parent.size(); ++i) {
    if (find(i) != root) return false;
  }
  return true;
}

void FactorGraph::check_values(const Values& values) const {
  for (const Key& k : variables_) {
    if (!values.contains(k)) {
      throw StructuralError("values missing variable " + std::to_string(k.id));
    }
  }
}

std::vector<std::size_t> FactorGraph::adjacent_factors(Key key) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const auto& keys = factors_[i]->keys();
    if (std::find(keys.begin(), keys.end(), key) != keys.end()) out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------- objective / linearize

double map_objective(const FactorGraph& graph, const Values& values) {
  graph.check_values(values);
  double total = 0.0;
  Eigen::VectorXd r;
  for (std::size_t i = 0; i < graph.factors().size(); ++i) {
    const auto& f = *graph.factors()[i];
    r.resize(f.residual_dim());
    f.evaluate(values, r, nullptr);
    if (!r.allFinite()) {
      throw NumericalError(i, "non-finite residual in factor " + std::to_string(i) + " (" +
                                  std::string(f.name()) + ")");
    }
    total += 0.5 * r.squaredNorm() / (f.sigma() * f.sigma());
  }
  return total;
}

LinearSystem linearize(const FactorGraph& graph, const Values& values) {
  graph.check_values(values);
  LinearSystem sys;
  sys.rhs.resize(graph.num_residuals());

  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::Index row = 0;
  Eigen::VectorXd r;
  std::vector<Eigen::MatrixXd> jac;
  for (std::size_t i = 0; i < graph.factors().size(); ++i) {
    const auto& f = *graph.factors()[i];
    const int m = f.residual_dim();
    r.resize(m);
    jac.clear();
    f.evaluate(values, r, &jac);
    const double w = 1.0 / f.sigma();

    if (!r.allFinite()) {
      throw NumericalError(i, "non-finite residual in factor " + std::to_string(i) + " (" +
                                  std::string(f.name()) + ")");
    }
    if (jac.size() != f.keys().size()) {
      throw StructuralError(std::string(f.name()) + " returned " + std::to_string(jac.size()) +
                            " Jacobian blocks for " + std::to_string(f.keys().size()) + " keys");
    }
    sys.rhs.segment(row, m) = w * r;

    for (std::size_t k = 0; k < jac.size(); ++k) {
      const Key key = f.keys()[k];
      const auto& block = jac[k];
      if (block.rows() != m || block.cols() != key.dim) {
        throw StructuralError(std::string(f.name()) + " Jacobian block has wrong shape");
      }
      if (!block.allFinite()) {
        throw NumericalError(i, "non-finite Jacobian in factor " + std::to_string(i) + " (" +
                                    std::string(f.name()) + ")");
      }
      const Eigen::Index col = graph.offset(key);
      sys.blocks.push_back({i, key, row, col, m, key.dim});
      // Full blocks are stored, zeros included, so the pattern is fixed by adjacency.
      for (Eigen::Index c = 0; c < key.dim; ++c) {
        for (Eigen::Index rr = 0; rr < m; ++rr) {
          triplets.emplace_back(row + rr, col + c, w * block(rr, c));
        }
      }
    }
    row += m;
  }

  sys.jacobian.resize(graph.num_residuals(), graph.num_scalars());
  sys.jacobian.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

// ---------------------------------------------------------------- LM

void SolverConfig::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("solver eta must be positive");
  if (!(lambda_init > 0.0)) throw std::invalid_argument("solver lambda_init must be positive");
  if (!(lambda_factor > 1.0)) throw std::invalid_argument("solver lambda_factor must exceed 1");
  if (max_iterations < 1) throw std::invalid_argument("solver max_iterations must be >= 1");
  if (!(lambda_max > lambda_init)) throw std::invalid_argument("solver lambda_max too small");
}

Eigen::VectorXd flatten(const FactorGraph& graph, const Values& values) {
  Eigen::VectorXd x(graph.num_scalars());
  for (const Key& k : graph.variables()) x.segment(graph.offset(k), k.dim) = values.at(k);
  return x;
}

Values unflatten(const FactorGraph& graph, const Eigen::VectorXd& x) {
  Values v;
  for (const Key& k : graph.variables()) v.insert(k, x.segment(graph.offset(k), k.dim));
  return v;
}

namespace {

double objective_or_inf(const FactorGraph& graph, const Values& values) {
  try {
    return map_objective(graph, values);
  } catch (const StructuralError&) {
    throw;
  } catch (const std::exception&) {
    // Candidate left the domain of some factor (e.g. outside the SDF).
    return std::numeric_limits<double>::infinity();
  }
}

// Objective with the whitened-free residual of every factor kept for reuse;
// infinity when the point is outside some factor's domain.
double objective_with_residuals(const FactorGraph& graph, const Values& values,
                                std::vector<Eigen::VectorXd>& residuals) {
  residuals.resize(graph.factors().size());
  double total = 0.0;
  try {
    for (std::size_t i = 0; i < graph.factors().size(); ++i) {
      const auto& f = *graph.factors()[i];
      auto& r = residuals[i];
      r.resize(f.residual_dim());
      f.evaluate(values, r, nullptr);
      if (!r.allFinite()) return std::numeric_limits<double>::infinity();
      total += 0.5 * r.squaredNorm() / (f.sigma() * f.sigma());
    }
  } catch (const StructuralError&) {
    throw;
  } catch (const std::exception&) {
    return std::numeric_limits<double>::infinity();
  }
  return total;
}

// Half-bandwidth of J^T J in the stacked ordering.
Eigen::Index half_bandwidth(const FactorGraph& graph) {
  Eigen::Index b = 0;
  for (const auto& f : graph.factors()) {
    Eigen::Index lo = std::numeric_limits<Eigen::Index>::max(), hi = 0;
    for (const Key& k : f->keys()) {
      lo = std::min(lo, graph.offset(k));
      hi = std::max(hi, graph.offset(k) + k.dim - 1);
    }
    b = std::max(b, hi - lo);
  }
  return b;
}

// Symmetric band matrix, lower part stored column by column.
class BandMatrix {
 public:
  BandMatrix(Eigen::Index n, Eigen::Index b) : n_(n), b_(b), data_((b + 1) * n) { data_.setZero(); }

  double& at(Eigen::Index i, Eigen::Index j) { return data_[j * (b_ + 1) + (i - j)]; }
  double at(Eigen::Index i, Eigen::Index j) const { return data_[j * (b_ + 1) + (i - j)]; }
  void set_zero() { data_.setZero(); }
  Eigen::Index size() const { return n_; }

  // In-place Cholesky; false when a pivot is not positive.
  bool factorize() {
    for (Eigen::Index j = 0; j < n_; ++j) {
      double* cj = &data_[j * (b_ + 1)];
      const Eigen::Index kmin = std::max<Eigen::Index>(0, j - b_);
      for (Eigen::Index k = kmin; k < j; ++k) {
        const double* ck = &data_[k * (b_ + 1)];
        const double ljk = ck[j - k];
        if (ljk == 0.0) continue;
        const Eigen::Index iend = std::min(n_ - 1, k + b_);
        for (Eigen::Index i = j; i <= iend; ++i) cj[i - j] -= ck[i - k] * ljk;
      }
      const double d = cj[0];
      if (!(d > 0.0) || !std::isfinite(d)) return false;
      const double s = std::sqrt(d);
      const Eigen::Index iend = std::min(n_ - 1, j + b_);
      cj[0] = s;
      for (Eigen::Index i = j + 1; i <= iend; ++i) cj[i - j] /= s;
    }
    return true;
  }

  // Solves L L^T x = rhs after factorize().
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd x = rhs;
    for (Eigen::Index j = 0; j < n_; ++j) {
      const double* cj = &data_[j * (b_ + 1)];
      x[j] /= cj[0];
      const Eigen::Index iend = std::min(n_ - 1, j + b_);
      for (Eigen::Index i = j + 1; i <= iend; ++i) x[i] -= cj[i - j] * x[j];
    }
    for (Eigen::Index j = n_ - 1; j >= 0; --j) {
      const double* cj = &data_[j * (b_ + 1)];
      const Eigen::Index iend = std::min(n_ - 1, j + b_);
      double acc = x[j];
      for (Eigen::Index i = j + 1; i <= iend; ++i) acc -= cj[i - j] * x[i];
      x[j] = acc / cj[0];
    }
    return x;
  }

 private:
  Eigen::Index n_, b_;
  Eigen::VectorXd data_;
};

// Accumulates H = J^T J (lower band) and g = J^T r directly from the factor
// blocks, without forming J.
void accumulate_normal(const FactorGraph& graph, const Values& values, BandMatrix& hessian,
                       Eigen::VectorXd& gradient,
                       std::vector<std::vector<Eigen::MatrixXd>>& jacobians) {
  hessian.set_zero();
  gradient.setZero(graph.num_scalars());
  jacobians.resize(graph.factors().size());
  Eigen::VectorXd r;
  for (std::size_t i = 0; i < graph.factors().size(); ++i) {
    const auto& f = *graph.factors()[i];
    const int m = f.residual_dim();
    r.resize(m);
    auto& jac = jacobians[i];
    jac.clear();
    f.evaluate(values, r, &jac);
    if (!r.allFinite()) {
      throw NumericalError(i, "non-finite residual in factor " + std::to_string(i) + " (" +
                                  std::string(f.name()) + ")");
    }
    if (jac.size() != f.keys().size()) {
      throw StructuralError(std::string(f.name()) + " returned " + std::to_string(jac.size()) +
                            " Jacobian blocks for " + std::to_string(f.keys().size()) + " keys");
    }
    const double w2 = 1.0 / (f.sigma() * f.sigma());
    for (std::size_t a = 0; a < jac.size(); ++a) {
      const Key ka = f.keys()[a];
      if (jac[a].rows() != m || jac[a].cols() != ka.dim) {
        throw StructuralError(std::string(f.name()) + " Jacobian block has wrong shape");
      }
      if (!jac[a].allFinite()) {
        throw NumericalError(i, "non-finite Jacobian in factor " + std::to_string(i) + " (" +
                                    std::string(f.name()) + ")");
      }
    }
    for (std::size_t a = 0; a < jac.size(); ++a) {
      const Key ka = f.keys()[a];
      const Eigen::Index oa = graph.offset(ka);
      gradient.segment(oa, ka.dim).noalias() += w2 * (jac[a].transpose() * r);
      for (std::size_t c = 0; c < jac.size(); ++c) {
        const Key kc = f.keys()[c];
        const Eigen::Index oc = graph.offset(kc);
        if (oa < oc) continue;
        const Eigen::MatrixXd block = w2 * (jac[a].transpose() * jac[c]);
        for (Eigen::Index q = 0; q < kc.dim; ++q) {
          for (Eigen::Index p = 0; p < ka.dim; ++p) {
            if (oa + p >= oc + q) hessian.at(oa + p, oc + q) += block(p, q);
          }
        }
      }
    }
  }
}

// Sparse normal equations for graphs whose ordering is far from banded.
struct SparseNormal {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  Eigen::SparseMatrix<double> hessian;
  bool pattern_ready = false;
};

// J^T W r for stored Jacobians and residuals evaluated elsewhere.
Eigen::VectorXd project_residuals(const FactorGraph& graph,
                                  const std::vector<std::vector<Eigen::MatrixXd>>& jacobians,
                                  const std::vector<Eigen::VectorXd>& residuals) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(graph.num_scalars());
  for (std::size_t i = 0; i < graph.factors().size(); ++i) {
    const auto& f = *graph.factors()[i];
    const double w2 = 1.0 / (f.sigma() * f.sigma());
    for (std::size_t a = 0; a < jacobians[i].size(); ++a) {
      const Key k = f.keys()[a];
      g.segment(graph.offset(k), k.dim).noalias() += w2 * (jacobians[i][a].transpose() * residuals[i]);
    }
  }
  return g;
}

}  // namespace

SolveResult solve_lm(const FactorGraph& graph, const Values& initial, const SolverConfig& config) {
  config.validate();
  graph.check_values(initial);
  if (!graph.connected()) throw StructuralError("factor graph is not connected");

  const auto t0 = std::chrono::steady_clock::now();
  SolveResult result{initial, {}};
  auto& stats = result.stats;

  Values& current = result.values;
  double objective = map_objective(graph, current);
  stats.initial_objective = objective;
  stats.objective_trace.push_back(objective);

  const Eigen::Index n = graph.num_scalars();
  const Eigen::Index bandwidth = half_bandwidth(graph);
  // Banded Cholesky costs n b^2; beyond this the sparse factorization wins.
  const bool banded = bandwidth <= kMaxDenseBandwidth;
  BandMatrix band_h(n, banded ? bandwidth : 0);
  BandMatrix band_damped(n, banded ? bandwidth : 0);
  SparseNormal sparse;

  double lambda = config.lambda_init;
  Eigen::VectorXd gradient(n), scale(n);
  std::vector<std::vector<Eigen::MatrixXd>> jacobians;
  std::vector<Eigen::VectorXd> residuals;

  bool done = false;
  while (!done && stats.iterations < config.max_iterations) {
    ++stats.iterations;
    if (banded) {
      accumulate_normal(graph, current, band_h, gradient, jacobians);
      for (Eigen::Index i = 0; i < n; ++i) scale[i] = config.diagonal_damping ? std::max(band_h.at(i, i), 1e-6) : 1.0;
    } else {
      const LinearSystem sys = linearize(graph, current);
      const Eigen::SparseMatrix<double> jt = sys.jacobian.transpose();
      sparse.hessian = jt * sys.jacobian;
      gradient = jt * sys.rhs;
      scale = config.diagonal_damping ? Eigen::VectorXd(sparse.hessian.diagonal().cwiseMax(1e-6))
                                      : Eigen::VectorXd::Ones(n);
      if (!sparse.pattern_ready) {
        sparse.ldlt.analyzePattern(sparse.hessian);
        sparse.pattern_ready = true;
      }
    }

    const Eigen::VectorXd x = flatten(graph, current);
    while (true) {
      bool ok = false;
      if (banded) {
        band_damped = band_h;
        for (Eigen::Index i = 0; i < n; ++i) band_damped.at(i, i) += lambda * scale[i];
        ok = band_damped.factorize();
      } else {
        Eigen::SparseMatrix<double> damped = sparse.hessian;
        for (Eigen::Index i = 0; i < n; ++i) damped.coeffRef(i, i) += lambda * scale[i];
        sparse.ldlt.factorize(damped);
        ok = sparse.ldlt.info() == Eigen::Success && sparse.ldlt.vectorD().minCoeff() > 0.0;
      }
      if (!ok) {
        lambda *= config.lambda_factor;
        if (lambda > config.lambda_max) {
          stats.status = SolveStatus::kDampingCap;
          done = true;
          break;
        }
        continue;
      }

      const Eigen::VectorXd delta =
          banded ? band_damped.solve(-gradient) : Eigen::VectorXd(sparse.ldlt.solve(-gradient));
      stats.last_update_norm = delta.lpNorm<Eigen::Infinity>();
      Values candidate = unflatten(graph, x + delta);
      double candidate_objective = objective_with_residuals(graph, candidate, residuals);
      if (banded && config.second_order_correction && std::isfinite(candidate_objective)) {
        // Re-solve against the residuals at the trial point with the same
        // factorization: pulls the step back onto stiff factors bent by it.
        const Eigen::VectorXd correction =
            band_damped.solve(-project_residuals(graph, jacobians, residuals));
        Values corrected = unflatten(graph, x + delta + correction);
        const double corrected_objective = objective_or_inf(graph, corrected);
        if (corrected_objective < candidate_objective) {
          candidate = std::move(corrected);
          candidate_objective = corrected_objective;
        }
      }

      if (candidate_objective < objective) {
        current = std::move(candidate);
        objective = candidate_objective;
        stats.objective_trace.push_back(objective);
        ++stats.accepted;
        lambda = std::max(lambda / config.lambda_factor, 1e-12);
        if (stats.last_update_norm < config.eta) {
          stats.converged = true;
          stats.status = SolveStatus::kConverged;
          done = true;
        }
        break;
      }
      if (stats.last_update_norm < config.eta) {
        // No decrease available at this resolution: stationary point.
        stats.converged = true;
        stats.status = SolveStatus::kConverged;
        done = true;
        break;
      }
      lambda *= config.lambda_factor;
      if (lambda > config.lambda_max) {
        stats.status = SolveStatus::kDampingCap;
        done = true;
        break;
      }
    }
  }

  stats.final_objective = objective;
  stats.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace mincurvfg::fg
