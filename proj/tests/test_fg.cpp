#include "mincurvfg/fg.hpp"

#include "support.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numeric>

using namespace mincurvfg::fg;

namespace {

FactorPtr prior(Key k, Eigen::VectorXd target, double sigma) {
  return std::make_shared<FunctionFactor>(
      std::vector<Key>{k}, int(target.size()), sigma,
      [k, target](const Values& v) -> Eigen::VectorXd { return v.at(k) - target; },
      [k](const Values&) {
        return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Identity(k.dim, k.dim)};
      },
      "prior");
}

// r = a - b - delta on two blocks of equal dimension.
FactorPtr between(Key a, Key b, Eigen::VectorXd delta, double sigma) {
  return std::make_shared<FunctionFactor>(
      std::vector<Key>{a, b}, int(delta.size()), sigma,
      [a, b, delta](const Values& v) -> Eigen::VectorXd { return v.at(a) - v.at(b) - delta; },
      [a](const Values&) {
        return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Identity(a.dim, a.dim),
                                            -Eigen::MatrixXd::Identity(a.dim, a.dim)};
      },
      "between");
}

// Smooth nonlinear coupling r = sin(a0) * b1 + a1^2 - c.
FactorPtr nonlinear(Key a, Key b, double c, double sigma) {
  return std::make_shared<FunctionFactor>(
      std::vector<Key>{a, b}, 1, sigma,
      [a, b, c](const Values& v) -> Eigen::VectorXd {
        const auto& x = v.at(a);
        const auto& y = v.at(b);
        return Eigen::VectorXd::Constant(1, std::sin(x[0]) * y[1] + x[1] * x[1] - c);
      },
      [a, b](const Values& v) {
        const auto& x = v.at(a);
        const auto& y = v.at(b);
        Eigen::MatrixXd ja(1, 2), jb(1, 2);
        ja << std::cos(x[0]) * y[1], 2.0 * x[1];
        jb << 0.0, std::sin(x[0]);
        return std::vector<Eigen::MatrixXd>{ja, jb};
      },
      "nonlinear");
}

FactorPtr rosenbrock(Key k) {
  return std::make_shared<FunctionFactor>(
      std::vector<Key>{k}, 2, 1.0,
      [k](const Values& v) -> Eigen::VectorXd {
        const auto& z = v.at(k);
        return Eigen::Vector2d(10.0 * (z[1] - z[0] * z[0]), 1.0 - z[0]);
      },
      [k](const Values& v) {
        const auto& z = v.at(k);
        Eigen::MatrixXd j(2, 2);
        j << -20.0 * z[0], 10.0, -1.0, 0.0;
        return std::vector<Eigen::MatrixXd>{j};
      },
      "rosenbrock");
}

// Chain of n 2-D variables with priors, between factors and nonlinear
// couplings. `order` maps chain position to creation order, so a scrambled
// order spreads neighbours far apart in the stacked vector.
struct Chain {
  FactorGraph graph;
  std::vector<Key> keys;
  Values initial;
};

Chain make_chain(int n, const std::vector<int>& order) {
  Chain c;
  c.keys.resize(n);
  std::vector<Key> created(n);
  for (int i = 0; i < n; ++i) created[i] = c.graph.add_variable(2);
  for (int i = 0; i < n; ++i) c.keys[i] = created[order[i]];
  testing::Rng rng(7);
  for (int i = 0; i < n; ++i) {
    c.graph.add(prior(c.keys[i], rng.uniform(2, -1.0, 1.0), 2.0));
    c.initial.insert(c.keys[i], rng.uniform(2, -0.5, 0.5));
  }
  for (int i = 0; i + 1 < n; ++i) {
    c.graph.add(between(c.keys[i + 1], c.keys[i], rng.uniform(2, -0.2, 0.2), 0.1));
    c.graph.add(nonlinear(c.keys[i], c.keys[i + 1], rng.uniform(-0.3, 0.3), 0.5));
  }
  return c;
}

}  // namespace

TEST_CASE("values reject duplicate keys, wrong sizes and missing lookups") {
  Values v;
  const Key k{0, 2};
  v.insert(k, Eigen::Vector2d(1, 2));
  CHECK(v.contains(k));
  CHECK_FALSE(v.contains(Key{0, 3}));
  CHECK_THROWS_AS(v.insert(k, Eigen::Vector2d(0, 0)), StructuralError);
  CHECK_THROWS_AS(v.insert(Key{1, 2}, Eigen::Vector3d(0, 0, 0)), StructuralError);
  CHECK_THROWS_AS(v.at(Key{5, 2}), StructuralError);
  CHECK_THROWS_AS(v.update(k, Eigen::Vector3d(0, 0, 0)), StructuralError);
  v.update(k, Eigen::Vector2d(3, 4));
  CHECK(v.at(k)[1] == 4.0);
}

TEST_CASE("graph validates keys, offsets and connectivity") {
  FactorGraph g;
  const Key a = g.add_variable(2);
  const Key b = g.add_variable(3);
  CHECK(g.offset(a) == 0);
  CHECK(g.offset(b) == 2);
  CHECK(g.num_scalars() == 5);
  CHECK_THROWS_AS(g.add_variable(0), StructuralError);
  CHECK_THROWS_AS(g.add(prior(Key{9, 2}, Eigen::Vector2d::Zero(), 1.0)), StructuralError);
  g.add(prior(a, Eigen::Vector2d::Zero(), 1.0));
  CHECK_FALSE(g.connected());
  g.add(std::make_shared<FunctionFactor>(
      std::vector<Key>{a, b}, 1, 1.0,
      [](const Values&) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(1); },
      [](const Values&) {
        return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Zero(1, 2), Eigen::MatrixXd::Zero(1, 3)};
      }));
  CHECK(g.connected());
  CHECK(g.adjacent_factors(a).size() == 2);
  CHECK(g.adjacent_factors(b).size() == 1);
}

TEST_CASE("map objective is half the whitened squared residual") {
  FactorGraph g;
  const Key a = g.add_variable(2);
  g.add(prior(a, Eigen::Vector2d(1.0, -1.0), 0.5));
  Values v;
  v.insert(a, Eigen::Vector2d(2.0, 1.0));
  // r = (1, 2), |r|^2 = 5, sigma^2 = 0.25
  CHECK(map_objective(g, v) == doctest::Approx(0.5 * 5.0 / 0.25));
  CHECK(g.factors()[0]->cost(v) == doctest::Approx(10.0));
}

TEST_CASE("linearization whitens Jacobian blocks and residuals") {
  FactorGraph g;
  const Key a = g.add_variable(2);
  const Key b = g.add_variable(2);
  g.add(between(a, b, Eigen::Vector2d(0.5, 0.0), 0.25));
  Values v;
  v.insert(a, Eigen::Vector2d(1.0, 2.0));
  v.insert(b, Eigen::Vector2d(0.0, 1.0));
  const LinearSystem sys = linearize(g, v);
  const Eigen::MatrixXd J(sys.jacobian);
  CHECK(J.rows() == 2);
  CHECK(J.cols() == 4);
  CHECK(J(0, 0) == doctest::Approx(4.0));
  CHECK(J(0, 2) == doctest::Approx(-4.0));
  CHECK(sys.rhs[0] == doctest::Approx(4.0 * 0.5));
  CHECK(sys.rhs[1] == doctest::Approx(4.0 * 1.0));
  CHECK(sys.blocks.size() == 2);
}

TEST_CASE("LM solves a linear least-squares problem to the normal-equation solution") {
  Chain c;
  const int n = 12;
  FactorGraph& g = c.graph;
  for (int i = 0; i < n; ++i) c.keys.push_back(g.add_variable(2));
  testing::Rng rng(3);
  for (int i = 0; i < n; ++i) {
    g.add(prior(c.keys[i], rng.uniform(2, -1, 1), 1.0));
    c.initial.insert(c.keys[i], Eigen::Vector2d::Zero());
  }
  for (int i = 0; i + 1 < n; ++i) g.add(between(c.keys[i + 1], c.keys[i], rng.uniform(2, -1, 1), 0.3));

  const LinearSystem sys = linearize(g, c.initial);
  const Eigen::MatrixXd J(sys.jacobian);
  const Eigen::VectorXd expected = -(J.transpose() * J).ldlt().solve(J.transpose() * sys.rhs);

  SolverConfig cfg;
  cfg.eta = 1e-12;
  const SolveResult r = solve_lm(g, c.initial, cfg);
  CHECK((flatten(g, r.values) - expected).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK(r.stats.converged);
}

TEST_CASE("Rosenbrock converges to (1, 1) from the classic start") {
  const auto& o = testing::oracles()["rosenbrock"];
  FactorGraph g;
  const Key k = g.add_variable(2);
  g.add(rosenbrock(k));
  Values v;
  v.insert(k, testing::vec(o["start"]));
  SolverConfig cfg;
  cfg.eta = 1e-10;
  cfg.max_iterations = 500;
  const SolveResult r = solve_lm(g, v, cfg);
  CHECK(r.stats.converged);
  CHECK((r.values.at(k) - testing::vec(o["x"])).lpNorm<Eigen::Infinity>() < 1e-6);
  for (std::size_t i = 1; i < r.stats.objective_trace.size(); ++i) {
    CHECK(r.stats.objective_trace[i] <= r.stats.objective_trace[i - 1]);
  }
}

TEST_CASE("objective trace never increases on a nonlinear chain") {
  std::vector<int> order(30);
  std::iota(order.begin(), order.end(), 0);
  Chain c = make_chain(30, order);
  for (const bool diagonal : {false, true}) {
    SolverConfig cfg;
    cfg.diagonal_damping = diagonal;
    const SolveResult r = solve_lm(c.graph, c.initial, cfg);
    REQUIRE(r.stats.objective_trace.size() >= 2);
    for (std::size_t i = 1; i < r.stats.objective_trace.size(); ++i) {
      CHECK(r.stats.objective_trace[i] <= r.stats.objective_trace[i - 1]);
    }
    CHECK(r.stats.final_objective <= r.stats.initial_objective);
  }
}

TEST_CASE("banded and sparse normal-equation paths agree") {
  const int n = 120;
  std::vector<int> ordered(n), scrambled(n);
  std::iota(ordered.begin(), ordered.end(), 0);
  // Interleave the two halves so chain neighbours sit n/2 variables apart,
  // pushing the bandwidth past the banded limit.
  for (int i = 0; i < n; ++i) scrambled[i] = (i % 2 == 0) ? i / 2 : n / 2 + i / 2;
  Chain banded = make_chain(n, ordered);
  Chain sparse = make_chain(n, scrambled);
  SolverConfig cfg;
  cfg.eta = 1e-12;
  cfg.max_iterations = 200;
  const SolveResult rb = solve_lm(banded.graph, banded.initial, cfg);
  const SolveResult rs = solve_lm(sparse.graph, sparse.initial, cfg);
  REQUIRE(rb.stats.converged);
  REQUIRE(rs.stats.converged);
  for (int i = 0; i < n; ++i) {
    CHECK((rb.values.at(banded.keys[i]) - rs.values.at(sparse.keys[i])).norm() < 1e-8);
  }
  CHECK(rb.stats.final_objective == doctest::Approx(rs.stats.final_objective).epsilon(1e-10));
}

TEST_CASE("second-order correction reaches the same optimum") {
  std::vector<int> order(20);
  std::iota(order.begin(), order.end(), 0);
  Chain c = make_chain(20, order);
  SolverConfig plain, soc;
  plain.eta = soc.eta = 1e-12;
  plain.max_iterations = soc.max_iterations = 300;
  soc.second_order_correction = true;
  const SolveResult a = solve_lm(c.graph, c.initial, plain);
  const SolveResult b = solve_lm(c.graph, c.initial, soc);
  CHECK((flatten(c.graph, a.values) - flatten(c.graph, b.values)).lpNorm<Eigen::Infinity>() < 1e-7);
}

TEST_CASE("non-finite residuals and missing values are reported") {
  FactorGraph g;
  const Key a = g.add_variable(1);
  g.add(std::make_shared<FunctionFactor>(
      std::vector<Key>{a}, 1, 1.0,
      [a](const Values& v) -> Eigen::VectorXd {
        return Eigen::VectorXd::Constant(1, std::log(v.at(a)[0]));
      },
      [a](const Values& v) {
        return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Constant(1, 1, 1.0 / v.at(a)[0])};
      }));
  Values bad;
  bad.insert(a, Eigen::VectorXd::Constant(1, -1.0));
  CHECK_THROWS_AS(solve_lm(g, bad, SolverConfig{}), NumericalError);
  try {
    map_objective(g, bad);
  } catch (const NumericalError& e) {
    CHECK(e.factor_index() == 0);
  }
  CHECK_THROWS_AS(solve_lm(g, Values{}, SolverConfig{}), StructuralError);
}

TEST_CASE("solver configuration is validated") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.eta = 0.0;
  CHECK_THROWS(c.validate());
  c = SolverConfig{};
  c.lambda_factor = 1.0;
  CHECK_THROWS(c.validate());
  c = SolverConfig{};
  c.max_iterations = 0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("flatten and unflatten round trip") {
  FactorGraph g;
  const Key a = g.add_variable(2);
  const Key b = g.add_variable(3);
  Values v;
  v.insert(b, Eigen::Vector3d(3, 4, 5));
  v.insert(a, Eigen::Vector2d(1, 2));
  const Eigen::VectorXd x = flatten(g, v);
  CHECK(x.size() == 5);
  CHECK(x[2] == 3.0);
  CHECK(unflatten(g, x) == v);
}
