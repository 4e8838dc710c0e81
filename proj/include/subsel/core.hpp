#pragma once

// Shared data model: design matrix, response block, selection problem and
// result, group partitions and column standardization.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "subsel/errors.hpp"
#include "subsel/losses.hpp"

namespace subsel {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.derived().array().isFinite().all();
}

/// n x p predictors with cached squared column norms.
template <typename Scalar = double>
class DesignMatrix {
 public:
  DesignMatrix() = default;
  explicit DesignMatrix(Matrix<Scalar> values, std::vector<std::string> names = {})
      : values_(std::move(values)), names_(std::move(names)) {
    if (values_.rows() < 1 || values_.cols() < 1)
      throw DimensionMismatch("design matrix needs at least one row and one column");
    if (!all_finite(values_)) throw NonFiniteValue("design matrix contains NaN or Inf");
    if (names_.empty()) {
      names_.reserve(values_.cols());
      for (Index j = 0; j < values_.cols(); ++j) names_.push_back("x" + std::to_string(j + 1));
    } else if (static_cast<Index>(names_.size()) != values_.cols()) {
      throw DimensionMismatch("feature name count does not match column count");
    }
    norms_sq_ = values_.colwise().squaredNorm().transpose();
  }

  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }
  const Matrix<Scalar>& values() const { return values_; }
  auto col(Index j) const { return values_.col(j); }
  const Vector<Scalar>& column_norms_sq() const { return norms_sq_; }
  const std::vector<std::string>& names() const { return names_; }

 private:
  Matrix<Scalar> values_;
  Vector<Scalar> norms_sq_;
  std::vector<std::string> names_;
};

/// n x m responses; one label per coordinate (quantile level, time point, ...).
template <typename Scalar = double>
class ResponseBlock {
 public:
  ResponseBlock() = default;
  explicit ResponseBlock(Matrix<Scalar> values, std::vector<std::string> labels = {})
      : values_(std::move(values)), labels_(std::move(labels)) {
    if (values_.rows() < 1 || values_.cols() < 1)
      throw DimensionMismatch("response block needs at least one row and one column");
    if (!all_finite(values_)) throw NonFiniteValue("response block contains NaN or Inf");
    if (labels_.empty()) {
      labels_.reserve(values_.cols());
      for (Index t = 0; t < values_.cols(); ++t) labels_.push_back("y" + std::to_string(t + 1));
    } else if (static_cast<Index>(labels_.size()) != values_.cols()) {
      throw DimensionMismatch("coordinate label count does not match column count");
    }
  }

  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }
  const Matrix<Scalar>& values() const { return values_; }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  Matrix<Scalar> values_;
  std::vector<std::string> labels_;
};

/// Partition of the p columns into q groups (0-based group ids).
class GroupStructure {
 public:
  GroupStructure() = default;
  explicit GroupStructure(std::vector<Index> assignment) : assignment_(std::move(assignment)) {
    if (assignment_.empty()) throw ConfigError("group assignment is empty");
    Index q = 0;
    for (Index g : assignment_) {
      if (g < 0) throw ConfigError("group ids must be non-negative");
      q = std::max(q, g + 1);
    }
    members_.assign(static_cast<std::size_t>(q), {});
    for (std::size_t j = 0; j < assignment_.size(); ++j)
      members_[static_cast<std::size_t>(assignment_[j])].push_back(static_cast<Index>(j));
    for (Index u = 0; u < q; ++u)
      if (members_[static_cast<std::size_t>(u)].empty())
        throw ConfigError("group " + std::to_string(u + 1) + " has no member columns");
  }

  static GroupStructure singletons(Index p) {
    std::vector<Index> a(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) a[static_cast<std::size_t>(j)] = j;
    return GroupStructure(std::move(a));
  }

  Index features() const { return static_cast<Index>(assignment_.size()); }
  Index groups() const { return static_cast<Index>(members_.size()); }
  const std::vector<Index>& assignment() const { return assignment_; }
  const std::vector<Index>& members(Index u) const { return members_[static_cast<std::size_t>(u)]; }

 private:
  std::vector<Index> assignment_;
  std::vector<std::vector<Index>> members_;
};

/// Binary selection vector over features or groups.
class Support {
 public:
  Support() = default;
  explicit Support(Index size) : mask_(static_cast<std::size_t>(size), 0) {}

  static Support from_indices(Index size, const std::vector<Index>& idx) {
    Support s(size);
    for (Index j : idx) s.set(j);
    return s;
  }

  Index size() const { return static_cast<Index>(mask_.size()); }
  bool operator[](Index j) const { return mask_[static_cast<std::size_t>(j)] != 0; }
  void set(Index j, bool on = true) {
    if (j < 0 || j >= size()) throw IndexOutOfRange("support index " + std::to_string(j) + " out of range");
    mask_[static_cast<std::size_t>(j)] = on ? 1 : 0;
  }
  Index count() const { return static_cast<Index>(std::count(mask_.begin(), mask_.end(), 1)); }
  std::vector<Index> indices() const {
    std::vector<Index> out;
    for (Index j = 0; j < size(); ++j)
      if ((*this)[j]) out.push_back(j);
    return out;
  }

  // Feature-level support of a group-level one.
  Support expand(const GroupStructure& groups) const {
    Support out(groups.features());
    for (Index u = 0; u < size(); ++u)
      if ((*this)[u])
        for (Index j : groups.members(u)) out.set(j);
    return out;
  }

  friend bool operator==(const Support&, const Support&) = default;

 private:
  std::vector<unsigned char> mask_;
};

template <typename Scalar = double>
struct SelectionProblem {
  std::vector<LossSpec<Scalar>> losses;  // one per response coordinate
  Index k = 1;
  Scalar gamma = 1;
  std::optional<GroupStructure> groups;

  Index units(Index p) const { return groups ? groups->groups() : p; }

  bool all_ols() const {
    return std::all_of(losses.begin(), losses.end(),
                       [](const LossSpec<Scalar>& l) { return l.kind == LossKind::OLS; });
  }

  void validate(Index p, Index m) const {
    if (static_cast<Index>(losses.size()) != m)
      throw DimensionMismatch("loss list has " + std::to_string(losses.size()) + " entries but responses have " +
                              std::to_string(m) + " coordinates");
    if (!(gamma > 0) || !std::isfinite(static_cast<double>(gamma)))
      throw ConfigError("gamma must be a positive finite number");
    if (groups && groups->features() != p)
      throw DimensionMismatch("group assignment covers " + std::to_string(groups->features()) +
                              " columns but the design has " + std::to_string(p));
    const Index limit = units(p);
    if (k < 1 || k > limit)
      throw InfeasibleBudget("sparsity budget k=" + std::to_string(k) + " must satisfy 1 <= k <= " +
                             std::to_string(limit) + (groups ? " (number of groups)" : " (number of features)"));
  }
};

// Same loss for every coordinate; a shorter list broadcasts its last entry.
template <typename Scalar>
std::vector<LossSpec<Scalar>> broadcast_losses(std::vector<LossSpec<Scalar>> losses, Index m) {
  if (losses.empty()) losses.push_back(LossSpec<Scalar>::ols());
  if (static_cast<Index>(losses.size()) > m)
    throw ConfigError("more loss specifications (" + std::to_string(losses.size()) + ") than response coordinates (" +
                      std::to_string(m) + ")");
  while (static_cast<Index>(losses.size()) < m) losses.push_back(losses.back());
  return losses;
}

template <typename Scalar = double>
struct SelectionResult {
  Support support;      // over features, or over groups in group mode
  Matrix<Scalar> beta;  // p x m; rows off the support are exactly zero
  Scalar objective = 0;
  bool tight = false;
  Scalar gap = 0;
  Index iterations = 0;
  double wall_time_s = 0;
  Vector<Scalar> scores;  // at the returned dual point
};

template <typename Scalar = double>
struct StandardizationRecord {
  Vector<Scalar> column_means;
  Vector<Scalar> column_scales;

  Matrix<Scalar> apply(const Matrix<Scalar>& x) const {
    return (x.rowwise() - column_means.transpose()).array().rowwise() / column_scales.transpose().array();
  }
  Matrix<Scalar> invert(const Matrix<Scalar>& z) const {
    return (z.array().rowwise() * column_scales.transpose().array()).matrix().rowwise() +
           column_means.transpose();
  }
};

/// Centres each column and scales it to unit sample standard deviation (n-1 divisor).
template <typename Scalar>
std::pair<DesignMatrix<Scalar>, StandardizationRecord<Scalar>> standardize(const DesignMatrix<Scalar>& x) {
  const Index n = x.rows();
  if (n < 2) throw DimensionMismatch("standardization needs at least two observations");
  StandardizationRecord<Scalar> rec;
  rec.column_means = x.values().colwise().mean().transpose();
  rec.column_scales.resize(x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const Scalar ss = (x.col(j).array() - rec.column_means(j)).square().sum();
    const Scalar sd = std::sqrt(ss / Scalar(n - 1));
    if (!(sd > 0)) throw ConstantColumn(j + 1);
    rec.column_scales(j) = sd;
  }
  return {DesignMatrix<Scalar>(rec.apply(x.values()), x.names()), std::move(rec)};
}

/// Subtracts per-coordinate means; returns the centred block and the means.
template <typename Scalar>
std::pair<ResponseBlock<Scalar>, Vector<Scalar>> center_responses(const ResponseBlock<Scalar>& y) {
  Vector<Scalar> means = y.values().colwise().mean().transpose();
  Matrix<Scalar> centred = y.values().rowwise() - means.transpose();
  return {ResponseBlock<Scalar>(std::move(centred), y.labels()), std::move(means)};
}

inline void check_rows(Index x_rows, Index y_rows) {
  if (x_rows != y_rows)
    throw DimensionMismatch("design has " + std::to_string(x_rows) + " rows but responses have " +
                            std::to_string(y_rows));
}

}  // namespace subsel
