#pragma once

// The saddle function
//
//   f(alpha, s) = - sum_t sum_i l^_t(Y_it, alpha_it)
//                 - gamma/2 sum_t sum_j s_j (X_j' alpha_t)^2
//
// whose min over supports s and max over duals alpha is the best-subset
// problem with ridge weight 1/(2 gamma). Feature scores are stored as
// sum_t (X_j' alpha_t)^2, so minimizing f over s keeps the k LARGEST scores.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "subsel/core.hpp"
#include "subsel/losses.hpp"
#include "subsel/parallel.hpp"

namespace subsel {

// Column chunk width for the response-parallel kernels. Fixed so every chunk
// product has the same shape whatever the thread count.
inline constexpr Index kColumnChunk = 32;

inline Index column_chunks(Index m) { return (m + kColumnChunk - 1) / kColumnChunk; }

template <typename Scalar = double>
struct DualState {
  Matrix<Scalar> alpha;
  Matrix<Scalar> alpha_avg;  // mean of alpha^1 .. alpha^iteration
  Index iteration = 0;

  DualState() = default;
  explicit DualState(Matrix<Scalar> start)
      : alpha(std::move(start)), alpha_avg(Matrix<Scalar>::Zero(alpha.rows(), alpha.cols())) {}

  // Folds the current alpha into the running mean.
  void accumulate() {
    ++iteration;
    alpha_avg += (alpha - alpha_avg) / Scalar(iteration);
  }
};

template <typename Scalar = double>
struct FeatureScores {
  Vector<Scalar> scores;
  Index size() const { return scores.size(); }
};

template <typename Scalar>
void check_dual_shape(const DesignMatrix<Scalar>& x, const Matrix<Scalar>& alpha) {
  if (alpha.rows() != x.rows())
    throw DimensionMismatch("dual has " + std::to_string(alpha.rows()) + " rows, design has " +
                            std::to_string(x.rows()));
}

template <typename Scalar>
Scalar feature_score(const DesignMatrix<Scalar>& x, const Matrix<Scalar>& alpha, Index j) {
  check_dual_shape(x, alpha);
  if (j < 0 || j >= x.cols()) throw IndexOutOfRange("feature index " + std::to_string(j) + " out of range");
  return (alpha.transpose() * x.col(j)).squaredNorm();
}

/// X' alpha (p x m), computed in fixed-width column chunks.
template <typename Scalar>
Matrix<Scalar> inner_products(const DesignMatrix<Scalar>& x, const Matrix<Scalar>& alpha, int threads = 1) {
  check_dual_shape(x, alpha);
  const Index m = alpha.cols();
  Matrix<Scalar> g(x.cols(), m);
  parallel_for(column_chunks(m), threads, [&](long c) {
    const Index first = c * kColumnChunk;
    const Index width = std::min(kColumnChunk, m - first);
    g.middleCols(first, width).noalias() = x.values().transpose() * alpha.middleCols(first, width);
  });
  return g;
}

template <typename Scalar>
FeatureScores<Scalar> scores_from_inner_products(const Matrix<Scalar>& g) {
  return {g.rowwise().squaredNorm()};
}

template <typename Scalar>
FeatureScores<Scalar> feature_scores(const DesignMatrix<Scalar>& x, const Matrix<Scalar>& alpha, int threads = 1) {
  return scores_from_inner_products(inner_products(x, alpha, threads));
}

/// Group score = sum of member feature scores, accumulated in column order.
template <typename Scalar>
FeatureScores<Scalar> group_scores(const FeatureScores<Scalar>& features, const GroupStructure& groups) {
  Vector<Scalar> out = Vector<Scalar>::Zero(groups.groups());
  for (Index u = 0; u < groups.groups(); ++u)
    for (Index j : groups.members(u)) out(u) += features.scores(j);
  return {std::move(out)};
}

/// Indices ordered by decreasing score, ties by increasing index.
template <typename Scalar>
std::vector<Index> rank_by_score(const FeatureScores<Scalar>& scores) {
  std::vector<Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return scores.scores(a) > scores.scores(b); });
  return order;
}

/// Minimizer of f(alpha, .) over binary supports with at most k entries: the top-k scores.
template <typename Scalar>
Support min_s(const FeatureScores<Scalar>& scores, Index k) {
  if (k < 0 || k > scores.size())
    throw InfeasibleBudget("k=" + std::to_string(k) + " exceeds the " + std::to_string(scores.size()) +
                           " available scores");
  const auto order = rank_by_score(scores);
  Support s(scores.size());
  for (Index r = 0; r < k; ++r) s.set(order[static_cast<std::size_t>(r)]);
  return s;
}

template <typename Scalar>
void check_problem_shapes(const DesignMatrix<Scalar>& x, const ResponseBlock<Scalar>& y, const Matrix<Scalar>& alpha,
                          const SelectionProblem<Scalar>& problem) {
  check_rows(x.rows(), y.rows());
  if (alpha.rows() != y.rows() || alpha.cols() != y.cols())
    throw DimensionMismatch("dual shape does not match the response block");
  if (static_cast<Index>(problem.losses.size()) != y.cols())
    throw DimensionMismatch("one loss per response coordinate is required");
}

template <typename Scalar>
void check_support(const DesignMatrix<Scalar>& x, const Support& s) {
  if (s.size() != x.cols())
    throw DimensionMismatch("feature support has length " + std::to_string(s.size()) + ", expected " +
                            std::to_string(x.cols()));
}

/// X_s as a dense n x |s| copy.
template <typename Scalar>
Matrix<Scalar> selected_columns(const DesignMatrix<Scalar>& x, const Support& s) {
  const auto idx = s.indices();
  return x.values()(Eigen::all, idx);
}

/// f(alpha, s) for a feature-level support; -inf when alpha leaves a conjugate domain.
template <typename Scalar>
Scalar eval_f(const DesignMatrix<Scalar>& x, const ResponseBlock<Scalar>& y, const Matrix<Scalar>& alpha,
              const Support& s, const SelectionProblem<Scalar>& problem) {
  check_problem_shapes(x, y, alpha, problem);
  check_support(x, s);
  Scalar conj = 0;
  for (Index t = 0; t < y.cols(); ++t) {
    const auto& loss = problem.losses[static_cast<std::size_t>(t)];
    for (Index i = 0; i < y.rows(); ++i) conj += conjugate_eval(loss, y.values()(i, t), alpha(i, t));
  }
  if (!std::isfinite(static_cast<double>(conj))) return -std::numeric_limits<Scalar>::infinity();
  Scalar quad = 0;
  if (s.count() > 0) quad = (selected_columns(x, s).transpose() * alpha).squaredNorm();
  return -conj - problem.gamma / 2 * quad;
}

/// Gradient of f in alpha (n x m).
template <typename Scalar>
Matrix<Scalar> grad_alpha_f(const DesignMatrix<Scalar>& x, const ResponseBlock<Scalar>& y, const Matrix<Scalar>& alpha,
                            const Support& s, const SelectionProblem<Scalar>& problem) {
  check_problem_shapes(x, y, alpha, problem);
  check_support(x, s);
  Matrix<Scalar> grad(y.rows(), y.cols());
  for (Index t = 0; t < y.cols(); ++t) {
    const auto& loss = problem.losses[static_cast<std::size_t>(t)];
    for (Index i = 0; i < y.rows(); ++i) grad(i, t) = -conjugate_grad(loss, y.values()(i, t), alpha(i, t));
  }
  if (s.count() > 0) {
    const Matrix<Scalar> xs = selected_columns(x, s);
    grad.noalias() -= problem.gamma * (xs * (xs.transpose() * alpha));
  }
  return grad;
}

enum class OlsSolvePath { Auto, Woodbury, Dense };

namespace detail {

template <typename Scalar>
Matrix<Scalar> ols_dual(const DesignMatrix<Scalar>& x, const Matrix<Scalar>& y, const Support& s, Scalar gamma,
                        OlsSolvePath path) {
  check_rows(x.rows(), y.rows());
  check_support(x, s);
  const Index n = x.rows();
  const Index size = s.count();
  if (size == 0) return -y;
  const Matrix<Scalar> xs = selected_columns(x, s);
  if (path == OlsSolvePath::Auto) path = 2 * size <= n ? OlsSolvePath::Woodbury : OlsSolvePath::Dense;
  if (path == OlsSolvePath::Woodbury) {
    // (I + g Xs Xs')^-1 = I - g Xs (I + g Xs'Xs)^-1 Xs'
    Matrix<Scalar> small = gamma * (xs.transpose() * xs);
    small.diagonal().array() += 1;
    const Matrix<Scalar> rhs = xs.transpose() * y;
    Matrix<Scalar> alpha = -y;
    alpha.noalias() += gamma * (xs * small.llt().solve(rhs));
    return alpha;
  }
  Matrix<Scalar> big = gamma * (xs * xs.transpose());
  big.diagonal().array() += 1;
  return -big.llt().solve(y);
}

}  // namespace detail

/// alpha*(s) = -(I + gamma Xs Xs')^-1 Y, the exact inner maximizer for OLS losses.
template <typename Scalar>
Matrix<Scalar> ols_alpha_closed_form(const DesignMatrix<Scalar>& x, const ResponseBlock<Scalar>& y, const Support& s,
                                     Scalar gamma, OlsSolvePath path = OlsSolvePath::Auto) {
  return detail::ols_dual(x, y.values(), s, gamma, path);
}

template <typename Scalar>
Matrix<Scalar> ols_alpha_closed_form(const DesignMatrix<Scalar>& x, const ResponseBlock<Scalar>& y, const Support& s,
                                     const SelectionProblem<Scalar>& problem,
                                     OlsSolvePath path = OlsSolvePath::Auto) {
  if (!problem.all_ols()) throw NotOLS();
  return detail::ols_dual(x, y.values(), s, problem.gamma, path);
}

/// 1/2 sum_t Y_t' (I + gamma Xs Xs')^-1 Y_t = max_alpha f(alpha, s) for OLS losses.
template <typename Scalar>
Scalar ols_objective(const DesignMatrix<Scalar>& x, const ResponseBlock<Scalar>& y, const Support& s, Scalar gamma) {
  const Matrix<Scalar> alpha = ols_alpha_closed_form(x, y, s, gamma);
  return -Scalar(0.5) * (y.values().array() * alpha.array()).sum();
}

template <typename Scalar>
Scalar ols_objective(const DesignMatrix<Scalar>& x, const ResponseBlock<Scalar>& y, const Support& s,
                     const SelectionProblem<Scalar>& problem) {
  if (!problem.all_ols()) throw NotOLS();
  return ols_objective(x, y, s, problem.gamma);
}

}  // namespace subsel
