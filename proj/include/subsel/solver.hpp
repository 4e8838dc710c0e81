#pragma once

// Dual projected sub-gradient solver for best-subset selection with a ridge
// term, its group variant, primal recovery and the relaxation certificate.
//
// One iteration at dual point alpha^T with current support s^T:
//   s^{T+1}     = top-k units by score at alpha^T
//   alpha^{T+1} = P(alpha^T + delta * grad_alpha f(alpha^T, s^T))
// The returned support is the top-k at the averaged dual.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "subsel/core.hpp"
#include "subsel/losses.hpp"
#include "subsel/parallel.hpp"
#include "subsel/saddle.hpp"

namespace subsel {

enum class SolverMode { Subgradient, OlsAlternating };

inline constexpr Index kGramLimit = 4096;

template <typename Scalar = double>
struct SolverConfig {
  std::optional<Scalar> step_size;  // empty = auto
  Index max_iters = 500;
  Index stall_window = 25;
  std::uint64_t seed = 0;  // recorded in run manifests; the solver itself draws nothing
  SolverMode mode = SolverMode::Subgradient;
  bool refit = true;  // exact dual solve on the final support for non-OLS losses
  int threads = 1;
  bool ols_gram = true;  // all-OLS ascent through X'X when p <= kGramLimit

  void validate() const {
    if (max_iters < 1) throw ConfigError("max_iters must be at least 1");
    if (stall_window < 1) throw ConfigError("stall_window must be at least 1");
    if (step_size && !(*step_size > 0)) throw ConfigError("step size must be positive");
  }
};

struct TightnessCertificate {
  bool tight = false;
  double gap = 0;
};

/// Tight iff the k-th largest score strictly exceeds the (k+1)-th.
template <typename Scalar>
TightnessCertificate tightness_certificate(const FeatureScores<Scalar>& scores, Index k) {
  if (k >= scores.size()) return {true, std::numeric_limits<double>::infinity()};
  if (k < 1) throw InfeasibleBudget("k must be positive");
  const auto order = rank_by_score(scores);
  const double gap = static_cast<double>(scores.scores(order[static_cast<std::size_t>(k - 1)]) -
                                         scores.scores(order[static_cast<std::size_t>(k)]));
  return {gap > 0, gap};
}

/// beta_j. = -gamma X_j' alpha on the support, exactly zero elsewhere.
template <typename Scalar>
Matrix<Scalar> recover_beta(const DesignMatrix<Scalar>& x, const Matrix<Scalar>& alpha, const Support& s,
                            Scalar gamma) {
  check_dual_shape(x, alpha);
  check_support(x, s);
  Matrix<Scalar> beta = Matrix<Scalar>::Zero(x.cols(), alpha.cols());
  for (Index j : s.indices()) beta.row(j).noalias() = -gamma * (x.col(j).transpose() * alpha);
  return beta;
}

/// sum_t sum_i l_t(Y_it, (X beta)_it) + ||beta||^2 / (2 gamma).
template <typename Scalar>
Scalar primal_objective(const DesignMatrix<Scalar>& x, const ResponseBlock<Scalar>& y, const Matrix<Scalar>& beta,
                        const SelectionProblem<Scalar>& problem) {
  const Matrix<Scalar> fitted = x.values() * beta;
  Scalar total = 0;
  for (Index t = 0; t < y.cols(); ++t) {
    const auto& loss = problem.losses[static_cast<std::size_t>(t)];
    if (loss.kind == LossKind::OLS) {
      total += Scalar(0.5) * (y.values().col(t) - fitted.col(t)).squaredNorm();
      continue;
    }
    for (Index i = 0; i < y.rows(); ++i) total += loss_eval(loss, y.values()(i, t), fitted(i, t));
  }
  return total + beta.squaredNorm() / (2 * problem.gamma);
}

namespace detail {

// Box-constrained dual of the pinball ridge fit on a fixed support, by FISTA:
//   max -y'a - gamma/2 ||Xs' a||^2  s.t.  -q <= a_i <= 1-q.
template <typename Scalar>
Vector<Scalar> pinball_dual(const Matrix<Scalar>& xs, const Vector<Scalar>& y, Scalar q, Scalar gamma,
                            Vector<Scalar> start) {
  const Index n = y.size();
  auto project = [&](Vector<Scalar> a) { return Vector<Scalar>(a.cwiseMax(-q).cwiseMin(1 - q)); };
  if (xs.cols() == 0) {
    // Linear objective: each coordinate sits at the bound opposite to sign(y).
    Vector<Scalar> a(n);
    for (Index i = 0; i < n; ++i) a(i) = y(i) > 0 ? -q : (y(i) < 0 ? 1 - q : Scalar(0));
    return a;
  }
  const Matrix<Scalar> gram = xs.transpose() * xs;
  const Scalar lipschitz = gamma * Eigen::SelfAdjointEigenSolver<Matrix<Scalar>>(gram, Eigen::EigenvaluesOnly)
                                       .eigenvalues()
                                       .maxCoeff();
  const Scalar step = Scalar(1) / std::max(lipschitz, Scalar(1e-300));

  auto primal_gap = [&](const Vector<Scalar>& a) {
    const Vector<Scalar> b = -gamma * (xs.transpose() * a);
    const Vector<Scalar> r = y - xs * b;
    Scalar primal = b.squaredNorm() / (2 * gamma);
    for (Index i = 0; i < n; ++i) primal += std::max(q * r(i), (q - 1) * r(i));
    const Scalar dual = -y.dot(a) - gamma / 2 * (xs.transpose() * a).squaredNorm();
    return std::pair{primal - dual, std::abs(primal)};
  };

  Vector<Scalar> a = project(std::move(start));
  Vector<Scalar> z = a;
  Scalar momentum = 1;
  constexpr Index kMaxIters = 100000;
  for (Index it = 0; it < kMaxIters; ++it) {
    const Vector<Scalar> grad = -y - gamma * (xs * (xs.transpose() * z));
    Vector<Scalar> next = project(z + step * grad);
    const Scalar next_momentum = (1 + std::sqrt(1 + 4 * momentum * momentum)) / 2;
    z = next + ((momentum - 1) / next_momentum) * (next - a);
    momentum = next_momentum;
    a = std::move(next);
    if (it % 50 == 49) {
      const auto [gap, scale] = primal_gap(a);
      if (gap <= Scalar(1e-10) * std::max(Scalar(1), scale)) break;
    }
  }
  return a;
}

// Logistic ridge fit on a fixed support by damped Newton; returns the dual
// alpha_i = dl/du at the fitted values.
template <typename Scalar>
Vector<Scalar> logistic_dual(const Matrix<Scalar>& xs, const Vector<Scalar>& y, Scalar gamma) {
  const Index n = y.size();
  const Index d = xs.cols();
  const LossSpec<Scalar> loss = LossSpec<Scalar>::logistic();
  Vector<Scalar> beta = Vector<Scalar>::Zero(d);
  auto objective = [&](const Vector<Scalar>& b) {
    const Vector<Scalar> u = xs * b;
    Scalar v = b.squaredNorm() / (2 * gamma);
    for (Index i = 0; i < n; ++i) v += detail::log1pexp(-y(i) * u(i));
    return v;
  };
  if (d > 0) {
    Scalar current = objective(beta);
    for (int it = 0; it < 200; ++it) {
      const Vector<Scalar> u = xs * beta;
      Vector<Scalar> first(n), second(n);
      for (Index i = 0; i < n; ++i) {
        const Scalar e = std::exp(-std::abs(u(i)));
        const Scalar p = u(i) * y(i) >= 0 ? 1 / (1 + e) : e / (1 + e);  // sigma(y u)
        first(i) = -y(i) * (1 - p);
        second(i) = p * (1 - p);
      }
      const Vector<Scalar> grad = xs.transpose() * first + beta / gamma;
      if (grad.template lpNorm<Eigen::Infinity>() <= Scalar(1e-12) * std::max(Scalar(1), Scalar(n))) break;
      Matrix<Scalar> hess = xs.transpose() * second.asDiagonal() * xs;
      hess.diagonal().array() += 1 / gamma;
      const Vector<Scalar> dir = hess.llt().solve(grad);
      Scalar t = 1;
      Scalar trial = objective(beta - dir);
      while (trial > current - Scalar(1e-4) * t * grad.dot(dir) && t > Scalar(1e-10)) {
        t /= 2;
        trial = objective(beta - t * dir);
      }
      if (!(trial < current)) break;
      beta -= t * dir;
      current = trial;
    }
  }
  const Vector<Scalar> u = xs * beta;
  Vector<Scalar> alpha(n);
  for (Index i = 0; i < n; ++i) alpha(i) = loss_derivative(loss, y(i), u(i));
  return alpha;
}

}  // namespace detail

/// Exact maximizer of f(., s) on a fixed feature support, per response coordinate.
/// `warm_start` seeds the iterative pinball solve.
template <typename Scalar>
Matrix<Scalar> maximize_dual(const DesignMatrix<Scalar>& x, const ResponseBlock<Scalar>& y, const Support& s,
                             const SelectionProblem<Scalar>& problem, const Matrix<Scalar>* warm_start = nullptr,
                             int threads = 1) {
  check_rows(x.rows(), y.rows());
  check_support(x, s);
  const Index m = y.cols();
  Matrix<Scalar> alpha(y.rows(), m);

  std::vector<Index> ols_cols, other_cols;
  for (Index t = 0; t < m; ++t)
    (problem.losses[static_cast<std::size_t>(t)].kind == LossKind::OLS ? ols_cols : other_cols).push_back(t);

  if (!ols_cols.empty()) {
    if (static_cast<Index>(ols_cols.size()) == m) {
      alpha = detail::ols_dual(x, y.values(), s, problem.gamma, OlsSolvePath::Auto);
    } else {
      const Matrix<Scalar> sub = y.values()(Eigen::all, ols_cols);
      alpha(Eigen::all, ols_cols) = detail::ols_dual(x, sub, s, problem.gamma, OlsSolvePath::Auto);
    }
  }
  if (!other_cols.empty()) {
    const Matrix<Scalar> xs = selected_columns(x, s);
    parallel_for(static_cast<long>(other_cols.size()), threads, [&](long c) {
      const Index t = other_cols[static_cast<std::size_t>(c)];
      const auto& loss = problem.losses[static_cast<std::size_t>(t)];
      const Vector<Scalar> yt = y.values().col(t);
      if (loss.kind == LossKind::Pinball) {
        Vector<Scalar> start = warm_start ? Vector<Scalar>(warm_start->col(t)) : Vector<Scalar>(-yt);
        alpha.col(t) = detail::pinball_dual(xs, yt, loss.quantile, problem.gamma, std::move(start));
      } else {
        alpha.col(t) = detail::logistic_dual(xs, yt, problem.gamma);
      }
    });
  }
  return alpha;
}

/// Default constant step 1 / (1 + gamma k max_u ||X_{S_u}||_F^2).
template <typename Scalar>
Scalar auto_step_size(const DesignMatrix<Scalar>& x, const GroupStructure& groups, Index k, Scalar gamma) {
  Scalar widest = 0;
  for (Index u = 0; u < groups.groups(); ++u) {
    Scalar norm = 0;
    for (Index j : groups.members(u)) norm += x.column_norms_sq()(j);
    widest = std::max(widest, norm);
  }
  return Scalar(1) / (1 + gamma * Scalar(k) * widest);
}

namespace detail {

template <typename Scalar>
void validate_inputs(const DesignMatrix<Scalar>& x, const ResponseBlock<Scalar>& y,
                     const SelectionProblem<Scalar>& problem, const SolverConfig<Scalar>& config) {
  check_rows(x.rows(), y.rows());
  problem.validate(x.cols(), y.cols());
  config.validate();
  for (Index t = 0; t < y.cols(); ++t) {
    const auto& loss = problem.losses[static_cast<std::size_t>(t)];
    if (loss.kind != LossKind::Logistic) continue;
    for (Index i = 0; i < y.rows(); ++i) check_label(loss, y.values()(i, t));
  }
}

// One ascent step on columns [first, first + width): writes X' alpha for those
// columns into g (at the pre-step alpha), then updates alpha in place.
template <typename Scalar>
void ascent_step_chunk(const DesignMatrix<Scalar>& x, const Matrix<Scalar>& y, const Matrix<Scalar>& xs,
                       const std::vector<Index>& selected, const SelectionProblem<Scalar>& problem, Scalar step,
                       Index first, Index width, Matrix<Scalar>& alpha, Matrix<Scalar>& g) {
  auto a = alpha.middleCols(first, width);
  g.middleCols(first, width).noalias() = x.values().transpose() * a;
  Matrix<Scalar> coupling;  // gamma Xs Xs' alpha
  if (!selected.empty()) {
    const Matrix<Scalar> gs = g.middleCols(first, width)(selected, Eigen::all);
    coupling.noalias() = problem.gamma * (xs * gs);
  } else {
    coupling.setZero(x.rows(), width);
  }
  for (Index c = 0; c < width; ++c) {
    const Index t = first + c;
    const auto& loss = problem.losses[static_cast<std::size_t>(t)];
    auto at = a.col(c);
    switch (loss.kind) {
      case LossKind::OLS:
        at = (1 - step) * at - step * (y.col(t) + coupling.col(c));
        break;
      case LossKind::Pinball:
        at = (at - step * (y.col(t) + coupling.col(c))).cwiseMax(-loss.quantile).cwiseMin(1 - loss.quantile);
        break;
      case LossKind::Logistic:
        for (Index i = 0; i < at.size(); ++i) {
          const Scalar yi = y(i, t);
          const Scalar grad = -conjugate_grad(loss, yi, at(i)) - coupling(i, c);
          at(i) = conjugate_project(loss, yi, at(i) + step * grad);
        }
        break;
    }
  }
}

template <typename Scalar>
Matrix<Scalar> project_dual(const ResponseBlock<Scalar>& y, const SelectionProblem<Scalar>& problem,
                            Matrix<Scalar> alpha) {
  for (Index t = 0; t < y.cols(); ++t) {
    const auto& loss = problem.losses[static_cast<std::size_t>(t)];
    if (loss.kind == LossKind::OLS) continue;
    for (Index i = 0; i < y.rows(); ++i) alpha(i, t) = conjugate_project(loss, y.values()(i, t), alpha(i, t));
  }
  return alpha;
}

template <typename Scalar>
FeatureScores<Scalar> unit_scores(const Matrix<Scalar>& g, const GroupStructure& groups) {
  return group_scores(scores_from_inner_products(g), groups);
}

// Shared tail: final dual, coefficients, certificate, objective.
template <typename Scalar>
void finish(const DesignMatrix<Scalar>& x, const ResponseBlock<Scalar>& y, const SelectionProblem<Scalar>& problem,
            const SolverConfig<Scalar>& config, const GroupStructure& groups, const Matrix<Scalar>& averaged,
            SelectionResult<Scalar>& result) {
  const Support features = result.support.expand(groups);
  const bool exact = problem.all_ols() || config.refit;
  const Matrix<Scalar> dual =
      exact ? maximize_dual(x, y, features, problem, &averaged, config.threads) : averaged;
  result.beta = recover_beta(x, dual, features, problem.gamma);
  result.scores = unit_scores(inner_products(x, dual, config.threads), groups).scores;
  const FeatureScores<Scalar> final_scores{result.scores};
  const auto cert = tightness_certificate(final_scores, problem.k);
  result.tight = cert.tight && min_s(final_scores, problem.k) == result.support;
  result.gap = static_cast<Scalar>(cert.gap);
  result.objective = primal_objective(x, y, result.beta, problem);
}

// The OLS step is affine in alpha, so G = X' alpha follows
//   G^{T+1} = (1 - delta) G^T - delta (X'Y + gamma X'X_s G^T_s)
// and the n x m dual never has to be formed: O(p |s| m) per iteration.
template <typename Scalar>
SelectionResult<Scalar> run_subgradient_gram(const DesignMatrix<Scalar>& x, const ResponseBlock<Scalar>& y,
                                             const SelectionProblem<Scalar>& problem,
                                             const SolverConfig<Scalar>& config, const GroupStructure& groups) {
  const Index m = y.cols();
  const int threads = config.threads;
  const Scalar step = config.step_size ? *config.step_size : auto_step_size(x, groups, problem.k, problem.gamma);

  const Matrix<Scalar> gram = x.values().transpose() * x.values();
  const Matrix<Scalar> xty = inner_products(x, y.values(), threads);
  Matrix<Scalar> g = -xty;
  Matrix<Scalar> g_avg = Matrix<Scalar>::Zero(x.cols(), m);
  Support current = min_s(unit_scores(xty, groups), problem.k);

  Index iteration = 0;
  Index stall = 0;
  for (Index it = 0; it < config.max_iters; ++it) {
    const std::vector<Index> selected = current.expand(groups).indices();
    const Matrix<Scalar> gram_s = gram(Eigen::all, selected);
    Support next = min_s(unit_scores(g, groups), problem.k);
    parallel_for(column_chunks(m), threads, [&](long c) {
      const Index first = c * kColumnChunk;
      const Index width = std::min(kColumnChunk, m - first);
      auto gc = g.middleCols(first, width);
      Matrix<Scalar> coupling = Matrix<Scalar>::Zero(x.cols(), width);
      if (!selected.empty()) {
        const Matrix<Scalar> gs = gc(selected, Eigen::all);
        coupling.noalias() = problem.gamma * (gram_s * gs);
      }
      gc = (1 - step) * gc - step * (xty.middleCols(first, width) + coupling);
    });
    ++iteration;
    g_avg += (g - g_avg) / Scalar(iteration);
    stall = next == current ? stall + 1 : 0;
    current = std::move(next);
    if (stall >= config.stall_window) break;
  }

  SelectionResult<Scalar> result;
  result.iterations = iteration;
  result.support = min_s(unit_scores(g_avg, groups), problem.k);
  finish(x, y, problem, config, groups, Matrix<Scalar>(), result);
  return result;
}

template <typename Scalar>
SelectionResult<Scalar> run_subgradient(const DesignMatrix<Scalar>& x, const ResponseBlock<Scalar>& y,
                                        const SelectionProblem<Scalar>& problem, const SolverConfig<Scalar>& config,
                                        const GroupStructure& groups) {
  if (config.ols_gram && problem.all_ols() && x.cols() <= kGramLimit)
    return run_subgradient_gram(x, y, problem, config, groups);
  const Index m = y.cols();
  const int threads = config.threads;
  const Scalar step = config.step_size ? *config.step_size : auto_step_size(x, groups, problem.k, problem.gamma);

  DualState<Scalar> state(project_dual(y, problem, Matrix<Scalar>(-y.values())));
  // Initial support: top-k marginal scores sum_t (X_j' Y_t)^2.
  Support current = min_s(unit_scores(inner_products(x, y.values(), threads), groups), problem.k);

  Matrix<Scalar> g(x.cols(), m);
  Index stall = 0;
  for (Index it = 0; it < config.max_iters; ++it) {
    const Support features = current.expand(groups);
    const std::vector<Index> selected = features.indices();
    const Matrix<Scalar> xs = x.values()(Eigen::all, selected);
    parallel_for(column_chunks(m), threads, [&](long c) {
      const Index first = c * kColumnChunk;
      ascent_step_chunk(x, y.values(), xs, selected, problem, step, first, std::min(kColumnChunk, m - first),
                        state.alpha, g);
    });
    state.accumulate();
    Support next = min_s(unit_scores(g, groups), problem.k);
    stall = next == current ? stall + 1 : 0;
    current = std::move(next);
    if (stall >= config.stall_window) break;
  }

  SelectionResult<Scalar> result;
  result.iterations = state.iteration;
  result.support = min_s(unit_scores(inner_products(x, state.alpha_avg, threads), groups), problem.k);
  finish(x, y, problem, config, groups, state.alpha_avg, result);
  return result;
}

// Alternates the closed-form OLS dual with the support update; stops on a
// repeated support and keeps the best objective seen.
template <typename Scalar>
SelectionResult<Scalar> run_ols_alternating(const DesignMatrix<Scalar>& x, const ResponseBlock<Scalar>& y,
                                            const SelectionProblem<Scalar>& problem,
                                            const SolverConfig<Scalar>& config, const GroupStructure& groups) {
  if (!problem.all_ols()) throw NotOLS();
  Support current = min_s(unit_scores(inner_products(x, y.values(), config.threads), groups), problem.k);
  std::vector<Support> visited;
  Support best = current;
  Scalar best_objective = std::numeric_limits<Scalar>::infinity();
  Index iterations = 0;
  while (iterations < config.max_iters) {
    ++iterations;
    visited.push_back(current);
    const Matrix<Scalar> alpha = ols_alpha_closed_form(x, y, current.expand(groups), problem.gamma);
    const Scalar value = -Scalar(0.5) * (y.values().array() * alpha.array()).sum();
    if (value < best_objective) {
      best_objective = value;
      best = current;
    }
    Support next = min_s(unit_scores(inner_products(x, alpha, config.threads), groups), problem.k);
    if (std::find(visited.begin(), visited.end(), next) != visited.end()) break;
    current = std::move(next);
  }
  SelectionResult<Scalar> result;
  result.iterations = iterations;
  result.support = best;
  finish(x, y, problem, config, groups, Matrix<Scalar>(-y.values()), result);
  return result;
}

template <typename Scalar>
SelectionResult<Scalar> run(const DesignMatrix<Scalar>& x, const ResponseBlock<Scalar>& y,
                            const SelectionProblem<Scalar>& problem, const SolverConfig<Scalar>& config,
                            const GroupStructure& groups) {
  const auto start = std::chrono::steady_clock::now();
  SelectionResult<Scalar> result = config.mode == SolverMode::OlsAlternating
                                       ? run_ols_alternating(x, y, problem, config, groups)
                                       : run_subgradient(x, y, problem, config, groups);
  result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace detail

/// Best-subset selection over individual features (ignores problem.groups).
template <typename Scalar>
SelectionResult<Scalar> fit(const DesignMatrix<Scalar>& x, const ResponseBlock<Scalar>& y,
                            SelectionProblem<Scalar> problem, const SolverConfig<Scalar>& config) {
  problem.groups.reset();
  detail::validate_inputs(x, y, problem, config);
  return detail::run(x, y, problem, config, GroupStructure::singletons(x.cols()));
}

/// Best-subset selection over groups of columns; support is indexed by group.
template <typename Scalar>
SelectionResult<Scalar> fit_group(const DesignMatrix<Scalar>& x, const ResponseBlock<Scalar>& y,
                                  const SelectionProblem<Scalar>& problem, const SolverConfig<Scalar>& config) {
  if (!problem.groups) throw ConfigError("fit_group requires a group structure");
  detail::validate_inputs(x, y, problem, config);
  return detail::run(x, y, problem, config, *problem.groups);
}

template <typename Scalar = double>
struct SweepRow {
  Index k = 0;
  SelectionResult<Scalar> result;
};

/// One independent fit per budget; supports need not be nested.
template <typename Scalar>
std::vector<SweepRow<Scalar>> sweep_k(const DesignMatrix<Scalar>& x, const ResponseBlock<Scalar>& y,
                                      SelectionProblem<Scalar> problem, const SolverConfig<Scalar>& config,
                                      const std::vector<Index>& k_list) {
  if (k_list.empty()) throw ConfigError("k list is empty");
  std::vector<SweepRow<Scalar>> rows;
  for (Index k : k_list) {
    problem.k = k;
    rows.push_back({k, problem.groups ? fit_group(x, y, problem, config) : fit(x, y, problem, config)});
  }
  return rows;
}

}  // namespace subsel
