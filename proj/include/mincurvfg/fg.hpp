#pragma once

// Factor-graph representation and a Levenberg-Marquardt MAP solver.
//
// Every factor carries an isotropic Gaussian noise model (Sigma = sigma^2 I),
// so the negative log posterior is sum_f 0.5 * |r_f|^2 / sigma_f^2.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mincurvfg::fg {

/// Thrown for malformed graphs: unknown keys, dimension mismatches, missing values.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a factor produces a non-finite residual or Jacobian entry.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::size_t factor_index, const std::string& what)
      : std::runtime_error(what), factor_index_(factor_index) {}
  std::size_t factor_index() const noexcept { return factor_index_; }

 private:
  std::size_t factor_index_;
};

struct Key {
  std::uint32_t id = 0;
  int dim = 0;

  friend auto operator<=>(const Key&, const Key&) = default;
};

/// Assignment of a vector to each variable. Ids index a dense table.
class Values {
 public:
  void insert(Key key, Eigen::VectorXd value);
  void update(Key key, const Eigen::Ref<const Eigen::VectorXd>& value);

  bool contains(Key key) const noexcept;
  const Eigen::VectorXd& at(Key key) const;
  Eigen::VectorXd& at(Key key);

  std::size_t size() const noexcept { return count_; }

  friend bool operator==(const Values& a, const Values& b);

 private:
  std::vector<Eigen::VectorXd> slots_;
  std::size_t count_ = 0;
};

/// A residual over an ordered list of variables with isotropic noise sigma.
///
/// Implementations write the raw (unwhitened) residual and, when requested,
/// one residual_dim x key.dim Jacobian block per key. Evaluation must depend
/// only on the blocks named by keys().
class Factor {
 public:
  Factor(std::vector<Key> keys, int residual_dim, double sigma);
  virtual ~Factor() = default;

  const std::vector<Key>& keys() const noexcept { return keys_; }
  int residual_dim() const noexcept { return residual_dim_; }
  double sigma() const noexcept { return sigma_; }

  virtual std::string_view name() const = 0;

  virtual void evaluate(const Values& values, Eigen::Ref<Eigen::VectorXd> residual,
                        std::vector<Eigen::MatrixXd>* jacobians) const = 0;

  Eigen::VectorXd residual(const Values& values) const;
  std::vector<Eigen::MatrixXd> jacobians(const Values& values) const;

  /// 0.5 * |r|^2 / sigma^2
  double cost(const Values& values) const;

 private:
  std::vector<Key> keys_;
  int residual_dim_;
  double sigma_;
};

using FactorPtr = std::shared_ptr<const Factor>;

/// Factor defined by callables; used for ad-hoc problems and tests.
class FunctionFactor final : public Factor {
 public:
  using ResidualFn = std::function<Eigen::VectorXd(const Values&)>;
  using JacobianFn = std::function<std::vector<Eigen::MatrixXd>(const Values&)>;

  FunctionFactor(std::vector<Key> keys, int residual_dim, double sigma, ResidualFn residual,
                 JacobianFn jacobian, std::string name = "function");

  std::string_view name() const override { return name_; }
  void evaluate(const Values& values, Eigen::Ref<Eigen::VectorXd> residual,
                std::vector<Eigen::MatrixXd>* jacobians) const override;

 private:
  ResidualFn residual_fn_;
  JacobianFn jacobian_fn_;
  std::string name_;
};

class FactorGraph {
 public:
  Key add_variable(int dim);
  void add(FactorPtr factor);

  const std::vector<Key>& variables() const noexcept { return variables_; }
  const std::vector<FactorPtr>& factors() const noexcept { return factors_; }

  /// Column offset of a variable in the stacked scalar vector (variables in id order).
  Eigen::Index offset(Key key) const;
  Eigen::Index num_scalars() const noexcept { return num_scalars_; }
  Eigen::Index num_residuals() const noexcept { return num_residuals_; }

  bool contains(Key key) const noexcept;
  /// True when every variable is reachable from the first through shared factors.
  bool connected() const;
  /// Throws StructuralError when values does not cover the variables with matching dims.
  void check_values(const Values& values) const;

  /// Indices of the factors attached to key.
  std::vector<std::size_t> adjacent_factors(Key key) const;

 private:
  std::vector<Key> variables_;
  std::vector<Eigen::Index> offsets_;
  std::vector<FactorPtr> factors_;
  Eigen::Index num_scalars_ = 0;
  Eigen::Index num_residuals_ = 0;
};

/// Sum over factors of 0.5 * |r_f|^2 / sigma_f^2.
double map_objective(const FactorGraph& graph, const Values& values);

struct JacobianBlock {
  std::size_t factor;
  Key key;
  Eigen::Index row;
  Eigen::Index col;
  Eigen::Index rows;
  Eigen::Index cols;
};

/// Whitened linearization: the Gauss-Newton step solves min |J d + b|^2.
struct LinearSystem {
  Eigen::SparseMatrix<double> jacobian;
  Eigen::VectorXd rhs;
  std::vector<JacobianBlock> blocks;
};

LinearSystem linearize(const FactorGraph& graph, const Values& values);

struct SolverConfig {
  double eta = 1e-4;
  double lambda_init = 1e-4;
  double lambda_factor = 10.0;
  int max_iterations = 100;
  double lambda_max = 1e12;
  /// Corrects each trial step with one extra solve against the residuals at
  /// the trial point (reusing the factorization).
  bool second_order_correction = false;
  /// Damping lambda * diag(H) (Marquardt) instead of lambda * I (Levenberg).
  /// Marquardt scaling lets tight factors swamp the damping of every
  /// variable they touch, so the loose directions barely move.
  bool diagonal_damping = false;

  void validate() const;
};

enum class SolveStatus { kConverged, kMaxIterations, kDampingCap };

struct SolveStats {
  int iterations = 0;
  int accepted = 0;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  bool converged = false;
  SolveStatus status = SolveStatus::kMaxIterations;
  double last_update_norm = 0.0;
  double wall_time = 0.0;  // seconds
  std::vector<double> objective_trace;  // objective after each accepted step, initial first
};

struct SolveResult {
  Values values;
  SolveStats stats;
};

/// Normal equations with a half-bandwidth up to this use a banded Cholesky;
/// wider ones use a sparse LDL^T with fill-reducing ordering.
inline constexpr Eigen::Index kMaxDenseBandwidth = 96;

SolveResult solve_lm(const FactorGraph& graph, const Values& initial, const SolverConfig& config);

// Stacked-vector helpers (variables in id order).
Eigen::VectorXd flatten(const FactorGraph& graph, const Values& values);
Values unflatten(const FactorGraph& graph, const Eigen::VectorXd& x);

}  // namespace mincurvfg::fg
