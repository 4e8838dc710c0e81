#include "subsel/simulation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cmath>

#include "subsel/embeddings.hpp"
#include "subsel/parallel.hpp"

namespace subsel {

void MultivariateScenario::validate() const {
  if (n < 2 || p < 1 || m < 1) throw ConfigError("multivariate scenario needs n >= 2, p >= 1, m >= 1");
  if (!(rho_x >= 0 && rho_x < 1) || !(rho_y >= 0 && rho_y < 1))
    throw ConfigError("rho_x and rho_y must lie in [0,1)");
  if (s_true.empty()) throw ConfigError("s_true must contain at least one feature");
  for (Index j : s_true)
    if (j < 0 || j >= p) throw ConfigError("s_true index " + std::to_string(j + 1) + " exceeds p");
}

void WassersteinScenario::validate() const {
  if (n < 2 || m < 1) throw ConfigError("wasserstein scenario needs n >= 2 and m >= 1");
  if (p <= kTrueIndex) throw ConfigError("wasserstein scenario needs p >= 4");
  if (!(rho >= 0 && rho < 1)) throw ConfigError("rho must lie in [0,1)");
  if (!(sigma0 - std::abs(gamma_slope) > 0)) throw ConfigError("sigma0 + gamma x must stay positive on (-1,1)");
  if (!(v1 > 0 && v2 > 0)) throw ConfigError("v1 and v2 must be positive");
}

Matrix<double> equicorrelation(Index size, double rho) {
  Matrix<double> c = Matrix<double>::Constant(size, size, rho);
  c.diagonal().setOnes();
  return c;
}

Matrix<double> power_correlation(Index size, double rho) {
  Matrix<double> c(size, size);
  for (Index i = 0; i < size; ++i)
    for (Index j = 0; j < size; ++j) c(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  return c;
}

Matrix<double> sample_gaussian_rows(Index n, const Matrix<double>& cov, Rng& rng) {
  const Eigen::LLT<Matrix<double>> llt(cov);
  if (llt.info() != Eigen::Success) throw ConfigError("covariance matrix is not positive definite");
  const Index d = cov.rows();
  Matrix<double> e(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) e(i, j) = rng.normal();
  return e * llt.matrixL().transpose();
}

SimulatedData gen_multivariate(const MultivariateScenario& sc, Rng& rng) {
  sc.validate();
  SimulatedData out;
  out.x = sample_gaussian_rows(sc.n, equicorrelation(sc.p, sc.rho_x), rng);
  out.beta_true = Matrix<double>::Zero(sc.p, sc.m);
  for (Index j : sc.s_true) out.beta_true.row(j).setConstant(sc.effect);
  out.y = out.x * out.beta_true + sample_gaussian_rows(sc.n, equicorrelation(sc.m, sc.rho_y), rng);
  out.s_true = sc.s_true;
  return out;
}

SimulatedData gen_wasserstein(const WassersteinScenario& sc, Rng& rng, const Vector<double>& levels) {
  sc.validate();
  check_levels(levels);
  const Index m = levels.size();
  SimulatedData out;
  const Matrix<double> z = sample_gaussian_rows(sc.n, power_correlation(sc.p, sc.rho), rng);
  out.x = z.unaryExpr([](double v) { return 2.0 * normal_cdf(v) - 1.0; });

  Vector<double> probit(m);
  for (Index r = 0; r < m; ++r) probit(r) = normal_quantile(levels(r));

  out.y.resize(sc.n, m);
  const Index t = WassersteinScenario::kTrueIndex;
  for (Index i = 0; i < sc.n; ++i) {
    const double x4 = out.x(i, t);
    const double mu = sc.mu0 + sc.beta * x4 + std::sqrt(sc.v1) * rng.normal();
    const double centre = sc.sigma0 + sc.gamma_slope * x4;
    const double sigma = rng.gamma(centre * centre / sc.v2, sc.v2 / centre);
    out.y.row(i) = (mu + sigma * probit.array()).matrix().transpose();
  }
  out.beta_true = Matrix<double>::Zero(sc.p, m);
  out.beta_true.row(t) = (sc.beta + sc.gamma_slope * probit.array()).matrix().transpose();
  out.s_true = {t};
  return out;
}

SimMetrics eval_metrics(const Matrix<double>& beta_true, const Matrix<double>& beta_hat,
                        const std::vector<Index>& s_true) {
  if (beta_true.rows() != beta_hat.rows() || beta_true.cols() != beta_hat.cols())
    throw ShapeMismatch("true and estimated coefficient matrices differ in shape");
  if (s_true.empty()) throw ShapeMismatch("s_true is empty");
  const Matrix<double> diff = (beta_true - beta_hat).cwiseAbs();
  SimMetrics out;
  out.e_max = diff.size() ? diff.maxCoeff() : 0.0;
  out.e_avg = diff.sum() / (static_cast<double>(s_true.size()) * static_cast<double>(beta_true.cols()));
  Index hits = 0;
  for (Index r : s_true) {
    if (r < 0 || r >= beta_hat.rows()) throw ShapeMismatch("s_true index out of range");
    if ((beta_hat.row(r).array() != 0).any()) ++hits;
  }
  out.correct = hits == static_cast<Index>(s_true.size()) ? 1 : 0;
  return out;
}

Matrix<double> refit_least_squares(const Matrix<double>& x, const Matrix<double>& y, const Support& s) {
  check_rows(x.rows(), y.rows());
  Matrix<double> beta = Matrix<double>::Zero(x.cols(), y.cols());
  const auto idx = s.indices();
  if (idx.empty()) return beta;
  Matrix<double> xs = x(Eigen::all, idx);
  xs.rowwise() -= xs.colwise().mean();
  const Matrix<double> yc = y.rowwise() - y.colwise().mean();
  const Matrix<double> coef = xs.colPivHouseholderQr().solve(yc);
  for (std::size_t r = 0; r < idx.size(); ++r) beta.row(idx[r]) = coef.row(static_cast<Index>(r));
  return beta;
}

double default_gamma(Index n) { return 1.0 / static_cast<double>(n); }

SimMetrics run_repetition(const StudyCell& cell, Rng rng, const SolverConfig<double>& solver) {
  SimulatedData data;
  Index n = 0;
  if (cell.kind == StudyKind::Multivariate) {
    data = gen_multivariate(cell.multivariate, rng);
    n = cell.multivariate.n;
  } else {
    data = gen_wasserstein(cell.wasserstein, rng, interior_levels<double>(cell.wasserstein.m));
    n = cell.wasserstein.n;
  }
  const auto [x, record] = standardize(DesignMatrix<double>(data.x));
  const auto [y, means] = center_responses(ResponseBlock<double>(data.y));

  SelectionProblem<double> problem;
  problem.losses.assign(static_cast<std::size_t>(y.cols()), LossSpec<double>::ols());
  problem.k = cell.k;
  problem.gamma = cell.gamma > 0 ? cell.gamma : default_gamma(n);
  const auto result = fit(x, y, problem, solver);

  const Matrix<double> beta_hat = refit_least_squares(data.x, data.y, result.support);
  SimMetrics metrics = eval_metrics(data.beta_true, beta_hat, data.s_true);
  metrics.wall_time_s = result.wall_time_s;
  return metrics;
}

namespace {

void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  sd = 0;
  if (v.size() < 2) return;
  for (double x : v) sd += (x - mean) * (x - mean);
  sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
}

std::uint64_t cell_seed(const StudyCell& cell) {
  return cell.kind == StudyKind::Multivariate ? cell.multivariate.seed : cell.wasserstein.seed;
}

}  // namespace

std::vector<StudyRow> run_study(const std::vector<StudyCell>& grid, const StudySettings& settings) {
  if (settings.repetitions < 1) throw ConfigError("a study needs at least one repetition");
  settings.solver.validate();
  SolverConfig<double> solver = settings.solver;
  solver.threads = 1;

  std::vector<StudyRow> rows;
  rows.reserve(grid.size());
  for (const StudyCell& cell : grid) {
    const Rng base(cell_seed(cell));
    std::vector<SimMetrics> reps(static_cast<std::size_t>(settings.repetitions));
    parallel_for(static_cast<long>(settings.repetitions), settings.threads, [&](long b) {
      reps[static_cast<std::size_t>(b)] = run_repetition(cell, base.split(static_cast<std::uint64_t>(b)), solver);
    });

    StudyRow row;
    row.cell = cell;
    row.repetitions = settings.repetitions;
    std::vector<double> eavg, emax;
    double time = 0, correct = 0;
    for (const SimMetrics& r : reps) {
      eavg.push_back(r.e_avg);
      emax.push_back(r.e_max);
      time += r.wall_time_s;
      correct += r.correct;
    }
    mean_sd(eavg, row.eaverage_mean, row.eaverage_sd);
    mean_sd(emax, row.emax_mean, row.emax_sd);
    row.time_mean = time / static_cast<double>(reps.size());
    row.correct_prop = correct / static_cast<double>(reps.size());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace subsel
