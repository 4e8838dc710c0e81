#pragma once

// Reference computations for the tests. Each one takes the long way round
// (dense inverses, finite differences, brute-force search) so it shares no
// code path with the library.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline Mat random_matrix(std::mt19937_64& gen, long rows, long cols, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Mat m(rows, cols);
  for (long j = 0; j < cols; ++j)
    for (long i = 0; i < rows; ++i) m(i, j) = nd(gen);
  return m;
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(gen);
}

inline Mat columns(const Mat& x, const std::vector<long>& idx) {
  Mat out(x.rows(), static_cast<long>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) out.col(static_cast<long>(c)) = x.col(idx[c]);
  return out;
}

// -(I + gamma Xs Xs')^-1 Y through an explicit n x n inverse.
inline Mat dense_ols_dual(const Mat& x, const Mat& y, const std::vector<long>& idx, double gamma) {
  const Mat xs = columns(x, idx);
  Mat a = Mat::Identity(x.rows(), x.rows()) + gamma * xs * xs.transpose();
  return -a.inverse() * y;
}

// min_beta sum_t 1/2 ||Y_t - Xs beta_t||^2 + ||beta||^2 / (2 gamma), solved directly.
inline double ridge_primal(const Mat& x, const Mat& y, const std::vector<long>& idx, double gamma, Mat* beta = nullptr) {
  const Mat xs = columns(x, idx);
  Mat normal = xs.transpose() * xs;
  normal.diagonal().array() += 1.0 / gamma;
  const Mat b = normal.fullPivLu().solve(xs.transpose() * y);
  if (beta) *beta = b;
  return 0.5 * (y - xs * b).squaredNorm() + 0.5 / gamma * b.squaredNorm();
}

// Central difference of a scalar function of a matrix in every entry.
inline Mat finite_difference(const std::function<double(const Mat&)>& f, const Mat& at, double h = 1e-6) {
  Mat grad(at.rows(), at.cols());
  for (long j = 0; j < at.cols(); ++j)
    for (long i = 0; i < at.rows(); ++i) {
      Mat plus = at, minus = at;
      plus(i, j) += h;
      minus(i, j) -= h;
      grad(i, j) = (f(plus) - f(minus)) / (2 * h);
    }
  return grad;
}

inline double derivative(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

// Maximizer of a unimodal function on [lo, hi] by golden-section search.
inline double golden_max(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  const double r = (std::sqrt(5.0) - 1) / 2;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters && b - a > 1e-14 * (1 + std::abs(a) + std::abs(b)); ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return (a + b) / 2;
}

// sup_u {u a - loss(u)} by bracketing and golden section (loss convex).
inline double conjugate_by_search(const std::function<double(double)>& loss, double a, double lo, double hi) {
  const auto obj = [&](double u) { return u * a - loss(u); };
  const double u = golden_max(obj, lo, hi);
  return obj(u);
}

// Closed-form 2-Wasserstein distance between two univariate normals.
inline double gaussian_w2(double mu1, double sd1, double mu2, double sd2) {
  return std::sqrt((mu1 - mu2) * (mu1 - mu2) + (sd1 - sd2) * (sd1 - sd2));
}

// Every size-k subset of {0..p-1} in lexicographic order.
inline std::vector<std::vector<long>> subsets(long p, long k) {
  std::vector<std::vector<long>> out;
  std::vector<long> cur;
  std::function<void(long)> rec = [&](long start) {
    if (static_cast<long>(cur.size()) == k) {
      out.push_back(cur);
      return;
    }
    for (long j = start; j < p; ++j) {
      cur.push_back(j);
      rec(j + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

}  // namespace oracle
