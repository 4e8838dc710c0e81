#pragma once

// Data generators and metrics for the two simulation studies: multivariate
// Gaussian responses with equicorrelated covariances, and quantile-curve
// responses under the 2-Wasserstein geometry.

#include <cstdint>
#include <string>
#include <vector>

#include "subsel/core.hpp"
#include "subsel/rng.hpp"
#include "subsel/solver.hpp"

namespace subsel {

struct MultivariateScenario {
  Index n = 200;
  Index p = 5;
  Index m = 3;
  double rho_x = 0;
  double rho_y = 0;
  double effect = 1;
  std::vector<Index> s_true{0, 1};  // 0-based feature indices
  std::uint64_t seed = 1;

  void validate() const;
};

struct WassersteinScenario {
  Index n = 200;
  Index p = 10;
  Index m = 50;
  double rho = 0.5;
  double mu0 = 0;
  double sigma0 = 3;
  double beta = 3;
  double gamma_slope = 0.5;
  double v1 = 1;
  double v2 = 2;
  std::uint64_t seed = 1;

  static constexpr Index kTrueIndex = 3;  // X_4

  void validate() const;
};

struct SimulatedData {
  Matrix<double> x;
  Matrix<double> y;
  Matrix<double> beta_true;  // p x m
  std::vector<Index> s_true;
};

struct SimMetrics {
  double e_max = 0;
  double e_avg = 0;
  int correct = 0;
  double wall_time_s = 0;
};

/// Equicorrelation matrix: 1 on the diagonal, rho elsewhere.
Matrix<double> equicorrelation(Index size, double rho);
/// AR(1)-type matrix rho^|i-j|.
Matrix<double> power_correlation(Index size, double rho);
/// n rows of N(0, cov) via the Cholesky factor; draws row by row.
Matrix<double> sample_gaussian_rows(Index n, const Matrix<double>& cov, Rng& rng);

SimulatedData gen_multivariate(const MultivariateScenario& sc, Rng& rng);
SimulatedData gen_wasserstein(const WassersteinScenario& sc, Rng& rng, const Vector<double>& levels);

SimMetrics eval_metrics(const Matrix<double>& beta_true, const Matrix<double>& beta_hat,
                        const std::vector<Index>& s_true);

/// Unpenalized least squares with intercept on the selected columns; p x m, zero off the support.
Matrix<double> refit_least_squares(const Matrix<double>& x, const Matrix<double>& y, const Support& s);

enum class StudyKind { Multivariate, Wasserstein };

struct StudyCell {
  StudyKind kind = StudyKind::Multivariate;
  MultivariateScenario multivariate;
  WassersteinScenario wasserstein;
  Index k = 2;
  double gamma = 0;  // <= 0: default_gamma(n)
};

struct StudySettings {
  Index repetitions = 1;
  SolverConfig<double> solver;
  int threads = 1;  // across repetitions
};

struct StudyRow {
  StudyCell cell;
  Index repetitions = 0;
  double eaverage_mean = 0, eaverage_sd = 0;
  double emax_mean = 0, emax_sd = 0;
  double time_mean = 0;
  double correct_prop = 0;
};

/// Ridge weight used by the studies when none is given: 1/n on standardized predictors.
double default_gamma(Index n);

/// One repetition: generate, standardize, select, refit, score. Repetition b of
/// a cell draws from Rng(scenario seed).split(b).
SimMetrics run_repetition(const StudyCell& cell, Rng rng, const SolverConfig<double>& solver);

std::vector<StudyRow> run_study(const std::vector<StudyCell>& grid, const StudySettings& settings);

}  // namespace subsel
