#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "subsel/embeddings.hpp"
#include "subsel/rng.hpp"

using namespace subsel;

namespace {

QuantileCurve<double> quantiles_of(std::vector<double> v, const Vector<double>& levels) {
  return empirical_quantiles(std::span<const double>(v), levels);
}

Vector<double> single(double t) { return Vector<double>::Constant(1, t); }

QuantileCurve<double> normal_curve(double mu, double sd, Index m) {
  QuantileCurve<double> c{interior_levels<double>(m), Vector<double>(m)};
  for (Index r = 0; r < m; ++r) c.values(r) = mu + sd * normal_quantile(c.levels(r));
  return c;
}

}  // namespace

TEST_CASE("empirical quantile examples") {
  CHECK(quantiles_of({1, 2, 3}, single(0.5)).values(0) == doctest::Approx(2.0));
  CHECK(quantiles_of({4, 1, 3, 2}, single(0.5)).values(0) == doctest::Approx(2.5));
  const auto c = quantiles_of({7, 7, 7}, interior_levels<double>(9));
  CHECK((c.values.array() == 7.0).all());
  // interpolation between plotting positions 0.125 and 0.375
  CHECK(quantiles_of({1, 2, 3, 4}, single(0.25)).values(0) == doctest::Approx(1.5));
  // clamped beyond the extreme plotting positions
  CHECK(quantiles_of({1, 2, 3, 4}, single(0.05)).values(0) == 1.0);
  CHECK(quantiles_of({1, 2, 3, 4}, single(0.95)).values(0) == 4.0);
}

TEST_CASE("empirical quantile guards") {
  CHECK_THROWS_AS(quantiles_of({1}, single(0.5)), TooFewSamples);
  CHECK_THROWS_AS(quantiles_of({1, 2}, single(0.0)), ConfigError);
  Vector<double> bad(2);
  bad << 0.6, 0.4;
  CHECK_THROWS_AS(quantiles_of({1, 2}, bad), ConfigError);
}

TEST_CASE("empirical quantiles are monotone") {
  std::mt19937_64 gen(70);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> v(2 + gen() % 30);
    for (double& x : v) x = oracle::uniform(gen, -10, 10) * (gen() % 3 == 0 ? 1e6 : 1.0);
    const auto c = quantiles_of(v, interior_levels<double>(1 + static_cast<Index>(gen() % 60)));
    for (Index r = 1; r < c.values.size(); ++r) CHECK(c.values(r) >= c.values(r - 1));
  }
}

TEST_CASE("kde examples") {
  const std::vector<double> at_zero{0.0};
  const auto d = kde_density(std::span<const double>(at_zero), 1.0, single(0.0));
  CHECK(d.values(0) == doctest::Approx(1 / std::sqrt(2 * std::numbers::pi)).epsilon(1e-12));
  CHECK(d.values(0) == doctest::Approx(0.398942).epsilon(1e-6));

  const std::vector<double> pm{-1.0, 1.0};
  Vector<double> grid = Vector<double>::LinSpaced(21, -3, 3);
  for (double h : {0.2, 1.0, 3.0}) {
    const auto f = kde_density(std::span<const double>(pm), h, grid);
    for (Index r = 0; r < 21; ++r) CHECK(f.values(r) == doctest::Approx(f.values(20 - r)).epsilon(1e-14));
  }

  const auto far = kde_density(std::span<const double>(pm), 0.1, single(5.0));
  CHECK(far.values(0) < 1e-20);
  CHECK_THROWS_AS(kde_density(std::span<const double>(pm), 0.0, grid), NonPositiveBandwidth);
}

TEST_CASE("kde integrates to about one over a covering grid") {
  std::mt19937_64 gen(71);
  std::vector<double> v(50);
  for (double& x : v) x = oracle::uniform(gen, -2, 2);
  const double h = 0.4;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const Vector<double> grid = Vector<double>::LinSpaced(400, *lo - 4 * h, *hi + 4 * h);
  const auto f = kde_density(std::span<const double>(v), h, grid);
  double integral = 0;
  for (Index r = 0; r + 1 < grid.size(); ++r) integral += (grid(r + 1) - grid(r)) * (f.values(r) + f.values(r + 1)) / 2;
  CHECK(std::abs(integral - 1) < 0.05);
  CHECK((f.values.array() >= 0).all());
}

TEST_CASE("wasserstein examples") {
  const auto a = normal_curve(0, 1, 200);
  CHECK(wasserstein2(a, a) == 0.0);
  QuantileCurve<double> shifted = a;
  shifted.values.array() += 0.7;
  CHECK(wasserstein2(a, shifted) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(wasserstein2(a, shifted, QuadratureRule::Uniform) == doctest::Approx(0.7).epsilon(1e-12));
  const double d = wasserstein2(normal_curve(0, 1, 2000), normal_curve(1, 2, 2000));
  CHECK(std::abs(d - oracle::gaussian_w2(0, 1, 1, 2)) < 2e-2);
  const auto other = normal_curve(0, 1, 10);
  CHECK_THROWS_AS(wasserstein2(a, other), GridMismatch);
}

TEST_CASE("quadrature weights") {
  const Vector<double> t = interior_levels<double>(8);
  const Vector<double> w = level_weights(t);
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((w.array() - 1.0 / 8).abs().maxCoeff() < 1e-15);
  Vector<double> uneven(3);
  uneven << 0.1, 0.2, 0.6;
  const Vector<double> wu = level_weights(uneven);
  CHECK(wu(0) == doctest::Approx(0.15));
  CHECK(wu(1) == doctest::Approx(0.25));
  CHECK(wu(2) == doctest::Approx(0.6));
}

TEST_CASE("wasserstein is a metric on random curves") {
  std::mt19937_64 gen(72);
  const Vector<double> levels = interior_levels<double>(25);
  const auto random_curve = [&] {
    std::vector<double> v(40);
    for (double& x : v) x = oracle::uniform(gen, -3, 3) + oracle::uniform(gen, -1, 1);
    return quantiles_of(v, levels);
  };
  for (int rep = 0; rep < 200; ++rep) {
    const auto a = random_curve(), b = random_curve(), c = random_curve();
    CHECK(wasserstein2(a, b) == wasserstein2(b, a));
    CHECK(wasserstein2(a, a) == 0.0);
    CHECK(wasserstein2(a, c) <= wasserstein2(a, b) + wasserstein2(b, c) + 1e-10);
  }
}

TEST_CASE("laplacian examples") {
  Matrix<double> edge(2, 2);
  edge << 0, 1, 1, 0;
  const Vector<double> l = laplacian_embed(GraphSpec<double>{edge});
  CHECK(l(0) == 1.0);
  CHECK(l(1) == -1.0);
  CHECK(l(2) == -1.0);
  CHECK(l(3) == 1.0);

  Matrix<double> k3 = Matrix<double>::Ones(3, 3) - Matrix<double>::Identity(3, 3);
  const Vector<double> lk = laplacian_embed(GraphSpec<double>{k3});
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) CHECK(lk(i * 3 + j) == (i == j ? 2.0 : -1.0));

  const Vector<double> empty = laplacian_embed(GraphSpec<double>{Matrix<double>::Zero(4, 4)});
  CHECK((empty.array() == 0.0).all());
  CHECK_FALSE(std::signbit(empty(1)));
}

TEST_CASE("laplacian guards") {
  Matrix<double> asym(2, 2);
  asym << 0, 1, 2, 0;
  CHECK_THROWS_AS(laplacian_embed(GraphSpec<double>{asym}), AsymmetricAdjacency);
  Matrix<double> loop = Matrix<double>::Identity(2, 2);
  CHECK_THROWS_AS(laplacian_embed(GraphSpec<double>{loop}), AsymmetricAdjacency);
  Matrix<double> neg(2, 2);
  neg << 0, -1, -1, 0;
  CHECK_THROWS_AS(laplacian_embed(GraphSpec<double>{neg}), AsymmetricAdjacency);
}

TEST_CASE("laplacians of random graphs are symmetric PSD with zero row sums") {
  std::mt19937_64 gen(73);
  for (int rep = 0; rep < 30; ++rep) {
    const Index v = 2 + static_cast<Index>(gen() % 9);
    Matrix<double> a = Matrix<double>::Zero(v, v);
    for (Index i = 0; i < v; ++i)
      for (Index j = i + 1; j < v; ++j)
        if (gen() % 2) a(i, j) = a(j, i) = oracle::uniform(gen, 0, 3);
    const Vector<double> flat = laplacian_embed(GraphSpec<double>{a});
    const Matrix<double> l = Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(flat.data(), v, v);
    CHECK(l.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
    CHECK(l == l.transpose());
    CHECK(Eigen::SelfAdjointEigenSolver<Matrix<double>>(l).eigenvalues().minCoeff() >= -1e-10);
  }
}
