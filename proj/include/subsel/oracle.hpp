#pragma once

// Exhaustive best-subset reference for small OLS instances. Used by the test
// suites to check solver optimality; not part of the CLI.

#include <map>
#include <vector>

#include "subsel/core.hpp"
#include "subsel/saddle.hpp"

namespace subsel {

inline constexpr double kEnumerationLimit = 1e6;

template <typename Scalar = double>
struct EnumerationResult {
  Support best_support;
  Scalar best_objective = 0;
  std::map<std::vector<Index>, Scalar> all_objectives;  // only when requested
};

inline double binomial(Index n, Index k) {
  if (k < 0 || k > n) return 0;
  double c = 1;
  for (Index i = 1; i <= k; ++i) c = c * double(n - k + i) / double(i);
  return c;
}

/// Minimizes the OLS dual objective over every support of size exactly k.
/// Supports are visited in lexicographic order; the first minimizer wins ties.
template <typename Scalar>
EnumerationResult<Scalar> exhaustive_best_subset(const DesignMatrix<Scalar>& x, const ResponseBlock<Scalar>& y,
                                                 Index k, Scalar gamma, bool keep_all = false) {
  check_rows(x.rows(), y.rows());
  const Index p = x.cols();
  if (k < 1 || k > p) throw InfeasibleBudget("k must satisfy 1 <= k <= p");
  if (!(gamma > 0)) throw ConfigError("gamma must be positive");
  if (binomial(p, k) > kEnumerationLimit)
    throw TooLarge("C(" + std::to_string(p) + "," + std::to_string(k) + ") supports exceed the enumeration limit");

  EnumerationResult<Scalar> out;
  bool first = true;
  std::vector<Index> combo(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) combo[static_cast<std::size_t>(i)] = i;
  while (true) {
    const Support s = Support::from_indices(p, combo);
    const Scalar value = ols_objective(x, y, s, gamma);
    if (keep_all) out.all_objectives.emplace(combo, value);
    if (first || value < out.best_objective) {
      out.best_objective = value;
      out.best_support = s;
      first = false;
    }
    // next combination in lexicographic order
    Index i = k - 1;
    while (i >= 0 && combo[static_cast<std::size_t>(i)] == p - k + i) --i;
    if (i < 0) break;
    ++combo[static_cast<std::size_t>(i)];
    for (Index r = i + 1; r < k; ++r) combo[static_cast<std::size_t>(r)] = combo[static_cast<std::size_t>(r - 1)] + 1;
  }
  return out;
}

}  // namespace subsel
