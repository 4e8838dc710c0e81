#pragma once

// Coordinate embeddings for responses living in negative-type metric spaces:
// quantile curves (2-Wasserstein geometry), kernel density estimates and
// vectorized graph Laplacians.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "subsel/core.hpp"

namespace subsel {

template <typename Scalar = double>
struct QuantileCurve {
  Vector<Scalar> levels;  // strictly increasing, inside (0,1)
  Vector<Scalar> values;  // non-decreasing
};

template <typename Scalar = double>
struct DensityCurve {
  Vector<Scalar> grid;
  Vector<Scalar> values;
};

template <typename Scalar = double>
struct GraphSpec {
  Matrix<Scalar> adjacency;  // symmetric, non-negative, zero diagonal
};

/// Equispaced interior levels (r - 0.5) / m, r = 1..m.
template <typename Scalar = double>
Vector<Scalar> interior_levels(Index m) {
  if (m < 1) throw ConfigError("level grid needs at least one point");
  Vector<Scalar> t(m);
  for (Index r = 0; r < m; ++r) t(r) = (Scalar(r) + Scalar(0.5)) / Scalar(m);
  return t;
}

template <typename Scalar>
void check_levels(const Vector<Scalar>& levels) {
  if (levels.size() < 1) throw ConfigError("level grid is empty");
  for (Index r = 0; r < levels.size(); ++r) {
    if (!(levels(r) > 0 && levels(r) < 1)) throw ConfigError("quantile levels must lie strictly inside (0,1)");
    if (r > 0 && !(levels(r) > levels(r - 1))) throw ConfigError("quantile levels must be strictly increasing");
  }
}

/// Linear interpolation of the order statistics placed at (i - 0.5)/n,
/// flat beyond the first and last plotting positions.
template <typename Scalar>
QuantileCurve<Scalar> empirical_quantiles(std::span<const Scalar> samples, const Vector<Scalar>& levels) {
  if (samples.size() < 2) throw TooFewSamples("empirical quantiles need at least two samples");
  check_levels(levels);
  std::vector<Scalar> sorted(samples.begin(), samples.end());
  for (Scalar v : sorted)
    if (!std::isfinite(static_cast<double>(v))) throw NonFiniteValue("sample contains NaN or Inf");
  std::sort(sorted.begin(), sorted.end());
  const Scalar n = Scalar(sorted.size());
  QuantileCurve<Scalar> out{levels, Vector<Scalar>(levels.size())};
  for (Index r = 0; r < levels.size(); ++r) {
    const Scalar h = levels(r) * n - Scalar(0.5);  // fractional 0-based order statistic
    if (h <= 0) {
      out.values(r) = sorted.front();
    } else if (h >= n - 1) {
      out.values(r) = sorted.back();
    } else {
      const auto lo = static_cast<std::size_t>(std::floor(h));
      const Scalar w = h - Scalar(lo);
      out.values(r) = sorted[lo] + w * (sorted[lo + 1] - sorted[lo]);
    }
  }
  // Guard against rounding breaking monotonicity.
  for (Index r = 1; r < out.values.size(); ++r) out.values(r) = std::max(out.values(r), out.values(r - 1));
  return out;
}

/// Gaussian-kernel density estimate (1/(n h)) sum_j K((Y_j - y)/h) on a grid.
template <typename Scalar>
DensityCurve<Scalar> kde_density(std::span<const Scalar> samples, Scalar bandwidth, const Vector<Scalar>& grid) {
  if (!(bandwidth > 0)) throw NonPositiveBandwidth();
  if (samples.empty()) throw TooFewSamples("kde needs at least one sample");
  for (Index r = 1; r < grid.size(); ++r)
    if (!(grid(r) > grid(r - 1))) throw ConfigError("kde grid must be strictly increasing");
  const Scalar norm = Scalar(1) / (Scalar(samples.size()) * bandwidth * std::sqrt(2 * std::numbers::pi_v<Scalar>));
  DensityCurve<Scalar> out{grid, Vector<Scalar>::Zero(grid.size())};
  for (Index r = 0; r < grid.size(); ++r) {
    Scalar acc = 0;
    for (Scalar v : samples) {
      const Scalar z = (v - grid(r)) / bandwidth;
      acc += std::exp(Scalar(-0.5) * z * z);
    }
    out.values(r) = acc * norm;
  }
  return out;
}

enum class QuadratureRule { Trapezoid, Uniform };

/// Quadrature weights on [0,1] for a level grid. Trapezoid between grid points
/// with the values held flat out to 0 and 1; Uniform is 1/m each.
template <typename Scalar>
Vector<Scalar> level_weights(const Vector<Scalar>& levels, QuadratureRule rule = QuadratureRule::Trapezoid) {
  const Index m = levels.size();
  if (rule == QuadratureRule::Uniform || m == 1) return Vector<Scalar>::Constant(m, Scalar(1) / Scalar(m));
  Vector<Scalar> w = Vector<Scalar>::Zero(m);
  for (Index r = 0; r + 1 < m; ++r) {
    const Scalar half = (levels(r + 1) - levels(r)) / 2;
    w(r) += half;
    w(r + 1) += half;
  }
  w(0) += levels(0);
  w(m - 1) += 1 - levels(m - 1);
  return w;
}

/// Discretized 2-Wasserstein distance: the weighted L2 distance between quantile curves.
template <typename Scalar>
Scalar wasserstein2(const QuantileCurve<Scalar>& a, const QuantileCurve<Scalar>& b,
                    QuadratureRule rule = QuadratureRule::Trapezoid) {
  if (a.levels.size() != b.levels.size() || a.levels != b.levels) throw GridMismatch();
  if (a.values.size() != a.levels.size() || b.values.size() != b.levels.size())
    throw DimensionMismatch("quantile curve values do not match its level grid");
  const Vector<Scalar> w = level_weights(a.levels, rule);
  return std::sqrt((w.array() * (a.values - b.values).array().square()).sum());
}

/// Row-major vectorization of L = D - A.
template <typename Scalar>
Vector<Scalar> laplacian_embed(const GraphSpec<Scalar>& g) {
  const Matrix<Scalar>& a = g.adjacency;
  if (a.rows() != a.cols()) throw AsymmetricAdjacency("adjacency matrix is not square");
  if (!all_finite(a)) throw NonFiniteValue("adjacency matrix contains NaN or Inf");
  if (a != a.transpose()) throw AsymmetricAdjacency("adjacency matrix is not symmetric");
  if ((a.array() < 0).any()) throw AsymmetricAdjacency("adjacency weights must be non-negative");
  if ((a.diagonal().array() != 0).any()) throw AsymmetricAdjacency("adjacency diagonal must be zero");
  Matrix<Scalar> lap = Matrix<Scalar>::Zero(a.rows(), a.cols()) - a;  // avoids -0 entries
  lap.diagonal() = a.rowwise().sum();
  const Index v = a.rows();
  Vector<Scalar> out(v * v);
  for (Index i = 0; i < v; ++i)
    for (Index j = 0; j < v; ++j) out(i * v + j) = lap(i, j);
  return out;
}

}  // namespace subsel
