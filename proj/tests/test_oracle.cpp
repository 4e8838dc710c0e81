#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "subsel/oracle.hpp"
#include "subsel/solver.hpp"

using namespace subsel;

TEST_CASE("noise-free response picks its own column") {
  std::mt19937_64 gen(60);
  const Matrix<double> xv = oracle::random_matrix(gen, 15, 4);
  const DesignMatrix<double> x(xv);
  const ResponseBlock<double> y(Matrix<double>(xv.col(1)));
  for (double gamma : {0.01, 1.0, 100.0}) CHECK(exhaustive_best_subset(x, y, 1, gamma).best_support.indices() == std::vector<Index>{1});
}

TEST_CASE("single-feature enumeration") {
  std::mt19937_64 gen(61);
  const DesignMatrix<double> x(oracle::random_matrix(gen, 10, 1));
  const ResponseBlock<double> y(oracle::random_matrix(gen, 10, 2));
  const auto r = exhaustive_best_subset(x, y, 1, 0.4);
  CHECK(r.best_support.indices() == std::vector<Index>{0});
  CHECK(r.best_objective == ols_objective(x, y, Support::from_indices(1, {0}), 0.4));
}

TEST_CASE("enumeration visits every subset and takes the minimum") {
  std::mt19937_64 gen(62);
  const Matrix<double> xv = oracle::random_matrix(gen, 12, 6);
  const Matrix<double> yv = oracle::random_matrix(gen, 12, 2);
  const DesignMatrix<double> x(xv);
  const ResponseBlock<double> y(yv);
  const auto r = exhaustive_best_subset(x, y, 3, 0.5, true);
  const auto all = oracle::subsets(6, 3);
  CHECK(r.all_objectives.size() == all.size());
  double best = 1e300;
  std::vector<long> arg;
  for (const auto& s : all) {
    const double v = oracle::ridge_primal(xv, yv, s, 0.5);
    if (v < best) {
      best = v;
      arg = s;
    }
  }
  CHECK(r.best_objective == doctest::Approx(best).epsilon(1e-9));
  CHECK(r.best_support.indices() == std::vector<Index>(arg.begin(), arg.end()));
}

TEST_CASE("ties go to the lexicographically first support") {
  Matrix<double> xv(4, 3);
  xv << 1, 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 0;
  const DesignMatrix<double> x(xv);
  const ResponseBlock<double> y(Matrix<double>(Matrix<double>::Zero(4, 1)));
  CHECK(exhaustive_best_subset(x, y, 2, 1.0).best_support.indices() == std::vector<Index>{0, 1});
}

TEST_CASE("more candidate columns never raise the optimum") {
  std::mt19937_64 gen(63);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix<double> xv = oracle::random_matrix(gen, 20, 7);
    const ResponseBlock<double> y(oracle::random_matrix(gen, 20, 2));
    const DesignMatrix<double> small(Matrix<double>(xv.leftCols(5)));
    const DesignMatrix<double> large(xv);
    CHECK(exhaustive_best_subset(large, y, 2, 0.3).best_objective <=
          exhaustive_best_subset(small, y, 2, 0.3).best_objective + 1e-12);
  }
}

TEST_CASE("enumeration guards") {
  const DesignMatrix<double> x(Matrix<double>::Identity(3, 3));
  const ResponseBlock<double> y(Matrix<double>::Ones(3, 1));
  CHECK_THROWS_AS(exhaustive_best_subset(x, y, 4, 1.0), InfeasibleBudget);
  CHECK(binomial(40, 20) > kEnumerationLimit);
  CHECK(binomial(5, 2) == 10.0);
  const DesignMatrix<double> wide(Matrix<double>::Ones(2, 40));
  const ResponseBlock<double> y2(Matrix<double>::Ones(2, 1));
  CHECK_THROWS_AS(exhaustive_best_subset(wide, y2, 20, 1.0), TooLarge);
}

TEST_CASE("solver matches enumeration on a 30x8x2 instance when certified") {
  std::mt19937_64 gen(64);
  int certified = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix<double> xv = oracle::random_matrix(gen, 30, 8);
    Matrix<double> beta = Matrix<double>::Zero(8, 2);
    beta.row(rep % 8).setConstant(1.0);
    beta.row((rep + 3) % 8).setConstant(0.8);
    beta.row((rep + 5) % 8).setConstant(-0.6);
    const DesignMatrix<double> x(xv);
    const ResponseBlock<double> y(Matrix<double>(xv * beta + 0.5 * oracle::random_matrix(gen, 30, 2)));
    SelectionProblem<double> pr;
    pr.losses = broadcast_losses<double>({LossSpec<double>::ols()}, 2);
    pr.k = 3;
    pr.gamma = 0.2;
    const auto r = fit(x, y, pr, SolverConfig<double>{});
    if (!r.tight) continue;
    ++certified;
    CHECK(std::abs(r.objective - exhaustive_best_subset(x, y, 3, 0.2).best_objective) < 1e-6);
  }
  CHECK(certified > 0);
}
