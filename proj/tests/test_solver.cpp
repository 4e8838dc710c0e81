#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "subsel/oracle.hpp"
#include "subsel/solver.hpp"

using namespace subsel;
using L = LossSpec<double>;

namespace {

SelectionProblem<double> ols_problem(Index m, Index k, double gamma) {
  SelectionProblem<double> pr;
  pr.losses = broadcast_losses<double>({L::ols()}, m);
  pr.k = k;
  pr.gamma = gamma;
  return pr;
}

// Orthogonal columns: scaled identity blocks stacked.
Matrix<double> orthogonal_design(Index n, Index p) {
  Matrix<double> x = Matrix<double>::Zero(n, p);
  for (Index i = 0; i < n; ++i) x(i, i % p) = (i / p) % 2 ? 1.0 : -1.0;
  return x;
}

}  // namespace

TEST_CASE("single relevant column on an orthogonal design") {
  const Matrix<double> xv = orthogonal_design(20, 4);
  const DesignMatrix<double> x(xv);
  const ResponseBlock<double> y(Matrix<double>(xv.col(0)));
  const auto r = fit(x, y, ols_problem(1, 1, 10.0), SolverConfig<double>{});
  CHECK(r.support.indices() == std::vector<Index>{0});
  CHECK(r.tight);
}

TEST_CASE("tightness certificate") {
  const auto cert = [](std::vector<double> v, Index k) {
    return tightness_certificate(FeatureScores<double>{Eigen::Map<Vector<double>>(v.data(), Index(v.size()))}, k);
  };
  CHECK(cert({5, 3, 2, 1}, 2).tight);
  CHECK(cert({5, 3, 2, 1}, 2).gap == doctest::Approx(1.0));
  CHECK_FALSE(cert({5, 3, 3, 1}, 2).tight);
  CHECK(cert({5, 3, 3, 1}, 2).gap == 0.0);
  CHECK(cert({7}, 1).tight);
  CHECK(std::isinf(cert({7}, 1).gap));
}

TEST_CASE("recover_beta examples") {
  const DesignMatrix<double> x(Matrix<double>::Constant(1, 1, 1.0));
  const Matrix<double> alpha = Matrix<double>::Constant(1, 1, -0.5);
  CHECK(recover_beta(x, alpha, Support::from_indices(1, {0}), 1.0)(0, 0) == doctest::Approx(0.5));
  CHECK(recover_beta(x, alpha, Support(1), 1.0)(0, 0) == 0.0);
}

TEST_CASE("recover_beta at the exact OLS dual is the ridge solution") {
  std::mt19937_64 gen(40);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix<double> xv = oracle::random_matrix(gen, 25, 6);
    const Matrix<double> yv = oracle::random_matrix(gen, 25, 3);
    const DesignMatrix<double> x(xv);
    const ResponseBlock<double> y(yv);
    const double gamma = oracle::uniform(gen, 0.05, 2);
    const std::vector<Index> idx{0, 2, 5};
    const Support s = Support::from_indices(6, idx);
    const Matrix<double> beta = recover_beta(x, ols_alpha_closed_form(x, y, s, gamma), s, gamma);
    Matrix<double> ref;
    oracle::ridge_primal(xv, yv, {0, 2, 5}, gamma, &ref);
    for (std::size_t r = 0; r < idx.size(); ++r)
      CHECK((beta.row(idx[r]) - ref.row(static_cast<Index>(r))).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("exact duals for pinball and logistic close the duality gap") {
  std::mt19937_64 gen(41);
  for (int rep = 0; rep < 6; ++rep) {
    const Index n = 30, p = 5;
    Matrix<double> yv = oracle::random_matrix(gen, n, 3);
    for (Index i = 0; i < n; ++i) yv(i, 2) = yv(i, 2) > 0 ? 1.0 : -1.0;
    const DesignMatrix<double> x(oracle::random_matrix(gen, n, p));
    const ResponseBlock<double> y(yv);
    SelectionProblem<double> pr;
    pr.losses = {L::ols(), L::pinball(0.3), L::logistic()};
    pr.k = 2;
    pr.gamma = oracle::uniform(gen, 0.1, 1);
    const Support s = Support::from_indices(p, {1, 3});
    const Matrix<double> alpha = maximize_dual(x, y, s, pr);
    const Matrix<double> beta = recover_beta(x, alpha, s, pr.gamma);
    const double primal = primal_objective(x, y, beta, pr);
    const double dual = eval_f(x, y, alpha, s, pr);
    CHECK(std::abs(primal - dual) < 1e-6 * std::max(1.0, std::abs(primal)));
  }
}

TEST_CASE("fit results respect the budget and zero rows") {
  std::mt19937_64 gen(42);
  for (int rep = 0; rep < 10; ++rep) {
    const Index n = 40, p = 8;
    Matrix<double> yv = oracle::random_matrix(gen, n, 2);
    for (Index i = 0; i < n; ++i) yv(i, 1) = yv(i, 1) > 0 ? 1.0 : -1.0;
    const DesignMatrix<double> x(oracle::random_matrix(gen, n, p));
    const ResponseBlock<double> y(yv);
    SelectionProblem<double> pr;
    pr.losses = {L::pinball(0.5), L::logistic()};
    pr.k = 3;
    pr.gamma = 0.2;
    for (bool refit : {true, false}) {
      SolverConfig<double> cfg;
      cfg.refit = refit;
      const auto r = fit(x, y, pr, cfg);
      CHECK(r.support.count() == 3);
      for (Index j = 0; j < p; ++j)
        if (!r.support[j]) CHECK(r.beta.row(j).cwiseAbs().maxCoeff() == 0.0);
      CHECK(std::isfinite(r.objective));
    }
  }
}

TEST_CASE("noisy OLS fits match enumeration when certified") {
  std::mt19937_64 gen(43);
  int tight = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const Index n = 30, p = 8, m = 2, k = 1 + rep % 3;
    const Matrix<double> xv = oracle::random_matrix(gen, n, p);
    Matrix<double> beta = Matrix<double>::Zero(p, m);
    beta.topRows(k).setConstant(1.0);
    const Matrix<double> yv = xv * beta + oracle::random_matrix(gen, n, m);
    const DesignMatrix<double> x(xv);
    const ResponseBlock<double> y(yv);
    const auto r = fit(x, y, ols_problem(m, k, 0.1), SolverConfig<double>{});
    if (!r.tight) continue;
    ++tight;
    const auto best = exhaustive_best_subset(x, y, k, 0.1);
    CHECK(r.support == best.best_support);
    CHECK(std::abs(r.objective - best.best_objective) < 1e-6);
  }
  CHECK(tight > 10);
}

TEST_CASE("the reported objective is the primal value at beta") {
  std::mt19937_64 gen(44);
  const Matrix<double> xv = oracle::random_matrix(gen, 20, 5);
  const Matrix<double> yv = oracle::random_matrix(gen, 20, 2);
  const DesignMatrix<double> x(xv);
  const ResponseBlock<double> y(yv);
  const auto pr = ols_problem(2, 2, 0.5);
  const auto r = fit(x, y, pr, SolverConfig<double>{});
  CHECK(r.objective == doctest::Approx(ols_objective(x, y, r.support, 0.5)).epsilon(1e-9));
  CHECK(r.objective == doctest::Approx(primal_objective(x, y, r.beta, pr)).epsilon(1e-12));
}

TEST_CASE("Gram-space and explicit OLS iterations agree") {
  std::mt19937_64 gen(45);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix<double> xv = oracle::random_matrix(gen, 30, 6);
    Matrix<double> beta = Matrix<double>::Zero(6, 3);
    beta.row(rep % 6).setConstant(1.5);
    beta.row((rep + 2) % 6).setConstant(-1.0);
    const DesignMatrix<double> x(xv);
    const ResponseBlock<double> y(Matrix<double>(xv * beta + 0.5 * oracle::random_matrix(gen, 30, 3)));
    SolverConfig<double> gram, explicit_cfg;
    explicit_cfg.ols_gram = false;
    const auto a = fit(x, y, ols_problem(3, 2, 0.2), gram);
    const auto b = fit(x, y, ols_problem(3, 2, 0.2), explicit_cfg);
    CHECK(a.support == b.support);
    CHECK(a.iterations == b.iterations);
    CHECK(std::abs(a.objective - b.objective) < 1e-9 * std::max(1.0, std::abs(a.objective)));
  }
}

TEST_CASE("ols_alternating finds the planted support") {
  std::mt19937_64 gen(46);
  const Matrix<double> xv = oracle::random_matrix(gen, 60, 7);
  Matrix<double> beta = Matrix<double>::Zero(7, 2);
  beta.row(4).setConstant(2.0);
  beta.row(6).setConstant(-2.0);
  const DesignMatrix<double> x(xv);
  const ResponseBlock<double> y(Matrix<double>(xv * beta + 0.3 * oracle::random_matrix(gen, 60, 2)));
  SolverConfig<double> cfg;
  cfg.mode = SolverMode::OlsAlternating;
  const auto r = fit(x, y, ols_problem(2, 2, 0.1), cfg);
  CHECK(r.support.indices() == std::vector<Index>{4, 6});
  SelectionProblem<double> bad = ols_problem(2, 2, 0.1);
  bad.losses[1] = L::pinball(0.5);
  CHECK_THROWS_AS(fit(x, y, bad, cfg), NotOLS);
}

TEST_CASE("group fits") {
  std::mt19937_64 gen(47);
  const Matrix<double> xv = oracle::random_matrix(gen, 40, 4);
  const DesignMatrix<double> x(xv);
  const ResponseBlock<double> y(Matrix<double>(2 * xv.col(2) + 0.1 * oracle::random_matrix(gen, 40, 1)));
  auto pr = ols_problem(1, 1, 0.5);
  pr.groups = GroupStructure({0, 0, 1, 1});
  const auto r = fit_group(x, y, pr, SolverConfig<double>{});
  CHECK(r.support.indices() == std::vector<Index>{1});
  CHECK(r.beta.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.beta.row(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.beta.row(2).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("one-hot factor is kept or dropped as a block") {
  std::mt19937_64 gen(48);
  const Index n = 60;
  Matrix<double> xv = Matrix<double>::Zero(n, 5);
  for (Index i = 0; i < n; ++i) xv(i, i % 3) = 1.0;
  xv.rightCols(2) = oracle::random_matrix(gen, n, 2);
  Vector<double> yv(n);
  for (Index i = 0; i < n; ++i) yv(i) = (i % 3 == 0 ? 2.0 : i % 3 == 1 ? -1.0 : 0.5) + 0.1 * xv(i, 4);
  const DesignMatrix<double> x(xv);
  const ResponseBlock<double> y{Matrix<double>(yv)};
  auto pr = ols_problem(1, 1, 1.0);
  pr.groups = GroupStructure({0, 0, 0, 1, 2});
  const auto r = fit_group(x, y, pr, SolverConfig<double>{});
  CHECK(r.support.indices() == std::vector<Index>{0});
  for (Index j = 0; j < 3; ++j) CHECK(r.beta.row(j).cwiseAbs().maxCoeff() > 0.0);
  CHECK(r.beta.bottomRows(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("singleton groups reproduce fit exactly") {
  std::mt19937_64 gen(49);
  for (int rep = 0; rep < 5; ++rep) {
    const DesignMatrix<double> x(oracle::random_matrix(gen, 30, 6));
    Matrix<double> yv = oracle::random_matrix(gen, 30, 2);
    for (Index i = 0; i < 30; ++i) yv(i, 1) = yv(i, 1) > 0 ? 1.0 : -1.0;
    const ResponseBlock<double> y(yv);
    SelectionProblem<double> pr;
    pr.losses = {rep % 2 ? L::ols() : L::pinball(0.7), L::logistic()};
    pr.k = 2;
    pr.gamma = 0.3;
    const auto a = fit(x, y, pr, SolverConfig<double>{});
    pr.groups = GroupStructure::singletons(6);
    const auto b = fit_group(x, y, pr, SolverConfig<double>{});
    CHECK(a.support == b.support);
    CHECK(a.beta == b.beta);
    CHECK(a.objective == b.objective);
    CHECK(a.iterations == b.iterations);
  }
}

TEST_CASE("results do not depend on the thread count") {
  std::mt19937_64 gen(50);
  const DesignMatrix<double> x(oracle::random_matrix(gen, 50, 6));
  Matrix<double> yv = oracle::random_matrix(gen, 50, 70);
  for (Index i = 0; i < 50; ++i) yv(i, 69) = yv(i, 69) > 0 ? 1.0 : -1.0;
  const ResponseBlock<double> y(yv);
  SelectionProblem<double> pr;
  pr.losses = broadcast_losses<double>({L::ols()}, 70);
  pr.losses[40] = L::pinball(0.2);
  pr.losses[69] = L::logistic();
  pr.k = 2;
  pr.gamma = 0.1;
  SolverConfig<double> one, many;
  many.threads = 3;
  const auto a = fit(x, y, pr, one);
  const auto b = fit(x, y, pr, many);
  CHECK(a.support == b.support);
  CHECK(a.beta == b.beta);
  CHECK(a.objective == b.objective);
}

TEST_CASE("sweep runs one fit per budget") {
  std::mt19937_64 gen(51);
  const Matrix<double> xv = oracle::random_matrix(gen, 30, 5);
  const DesignMatrix<double> x(xv);
  const ResponseBlock<double> y(Matrix<double>(3 * xv.col(1)));
  const auto rows = sweep_k(x, y, ols_problem(1, 1, 1.0), SolverConfig<double>{}, {1, 2, 3});
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    CHECK(row.result.support.count() == row.k);
    CHECK(row.result.support[1]);
  }
  const auto full = sweep_k(x, y, ols_problem(1, 1, 1.0), SolverConfig<double>{}, {5});
  Matrix<double> ridge;
  oracle::ridge_primal(xv, y.values(), {0, 1, 2, 3, 4}, 1.0, &ridge);
  CHECK((full[0].result.beta - ridge).cwiseAbs().maxCoeff() < 1e-8);
  CHECK_THROWS_AS(sweep_k(x, y, ols_problem(1, 1, 1.0), SolverConfig<double>{}, {}), ConfigError);
}

TEST_CASE("solver input guards") {
  const DesignMatrix<double> x(Matrix<double>::Ones(4, 3));
  const ResponseBlock<double> y(Matrix<double>::Ones(5, 1));
  CHECK_THROWS_AS(fit(x, y, ols_problem(1, 1, 1.0), SolverConfig<double>{}), DimensionMismatch);
  const ResponseBlock<double> y4(Matrix<double>::Ones(4, 1));
  CHECK_THROWS_AS(fit(x, y4, ols_problem(1, 4, 1.0), SolverConfig<double>{}), InfeasibleBudget);
  SolverConfig<double> bad;
  bad.max_iters = 0;
  CHECK_THROWS_AS(fit(x, y4, ols_problem(1, 1, 1.0), bad), ConfigError);
  SelectionProblem<double> logit = ols_problem(1, 1, 1.0);
  logit.losses = {L::logistic()};
  const ResponseBlock<double> y2(Matrix<double>::Constant(4, 1, 2.0));
  CHECK_THROWS_AS(fit(x, y2, logit, SolverConfig<double>{}), InvalidLabel);
}

TEST_CASE("auto step size") {
  Matrix<double> xv(2, 2);
  xv << 1, 0, 1, 3;
  const DesignMatrix<double> x(xv);
  CHECK(auto_step_size(x, GroupStructure::singletons(2), 2, 0.5) == doctest::Approx(1.0 / (1 + 0.5 * 2 * 9)));
  CHECK(auto_step_size(x, GroupStructure({0, 0}), 1, 0.5) == doctest::Approx(1.0 / (1 + 0.5 * 11)));
}
