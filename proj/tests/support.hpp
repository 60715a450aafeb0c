#pragma once

// Shared helpers for the unit tests: frozen oracle data, seeded randomness
// and central finite differences.

#include "mincurvfg/fg.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <string>

namespace testing {

inline const nlohmann::json& oracles() {
  static const nlohmann::json data = [] {
    std::ifstream in(std::string(MINCURVFG_TEST_DATA) + "/oracles.json");
    return nlohmann::json::parse(in);
  }();
  return data;
}

inline Eigen::VectorXd vec(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[Eigen::Index(i)] = j[i].get<double>();
  return v;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  Eigen::VectorXd uniform(int n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

 private:
  std::mt19937_64 engine_;
};

/// Central-difference Jacobian of f at x.
inline Eigen::MatrixXd numeric_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    double rel_step = 1e-6) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd J(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    J.col(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

/// |A - B|_F / max(|A|_F, floor).
inline double relative_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& numeric,
                             double floor = 1e-6) {
  return (analytic - numeric).norm() / std::max(analytic.norm(), floor);
}

/// Worst relative error between a factor's analytic Jacobian blocks and
/// central differences of its residual, at `values`.
inline double factor_jacobian_error(const mincurvfg::fg::Factor& factor,
                                    const mincurvfg::fg::Values& values) {
  double worst = 0.0;
  const auto analytic = factor.jacobians(values);
  for (std::size_t k = 0; k < factor.keys().size(); ++k) {
    const auto key = factor.keys()[k];
    auto f = [&](const Eigen::VectorXd& x) {
      mincurvfg::fg::Values v = values;
      v.update(key, x);
      return factor.residual(v);
    };
    const Eigen::MatrixXd numeric = numeric_jacobian(f, values.at(key));
    worst = std::max(worst, relative_error(analytic[k], numeric));
  }
  return worst;
}

}  // namespace testing
