#pragma once

// Per-coordinate losses, their Fenchel conjugates and the conjugate-domain
// projection used by the dual ascent.
//
//   kind      loss l(y,u)                       conjugate l^(y,a)
//   ols       (y-u)^2 / 2                       y a + a^2 / 2
//   pinball   max{q(y-u), (1-q)(u-y)}           y a             on -q <= a <= 1-q
//   logistic  log(1 + exp(-y u)),  y = +-1      -H(-y a)        on -1 <= y a <= 0
//
// with H(x) = -x log x - (1-x) log(1-x) and 0 log 0 = 0.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "subsel/errors.hpp"

namespace subsel {

enum class LossKind { OLS, Pinball, Logistic };

// Interior margin kept by conjugate_project for the logistic conjugate.
inline constexpr double kLogisticMargin = 1e-9;
// conjugate_grad refuses points closer than this to the logistic domain boundary.
inline constexpr double kLogisticBoundary = 1e-12;

template <typename Scalar = double>
struct LossSpec {
  LossKind kind = LossKind::OLS;
  Scalar quantile = Scalar(0.5);  // pinball only

  static LossSpec ols() { return {LossKind::OLS, Scalar(0.5)}; }
  static LossSpec logistic() { return {LossKind::Logistic, Scalar(0.5)}; }
  static LossSpec pinball(Scalar q) {
    if (!(q > 0 && q < 1)) throw ConfigError("pinball quantile level must lie in (0,1)");
    return {LossKind::Pinball, q};
  }

  // "ols", "logistic" or "pinball:<q>".
  static LossSpec parse(std::string_view text) {
    if (text == "ols") return ols();
    if (text == "logistic") return logistic();
    constexpr std::string_view prefix = "pinball:";
    if (text.substr(0, prefix.size()) == prefix) {
      std::string level(text.substr(prefix.size()));
      std::size_t used = 0;
      double q = 0;
      try {
        q = std::stod(level, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != level.size())
        throw ConfigError("cannot parse pinball level in '" + std::string(text) + "'");
      return pinball(static_cast<Scalar>(q));
    }
    throw ConfigError("unknown loss '" + std::string(text) + "' (expected ols, logistic or pinball:<q>)");
  }

  std::string name() const {
    switch (kind) {
      case LossKind::OLS: return "ols";
      case LossKind::Logistic: return "logistic";
      case LossKind::Pinball: {
        std::string s = std::to_string(static_cast<double>(quantile));
        while (s.size() > 1 && s.back() == '0') s.pop_back();
        return "pinball:" + s;
      }
    }
    return "ols";
  }

  friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

template <typename Scalar>
void check_label(const LossSpec<Scalar>& spec, Scalar y) {
  if (spec.kind == LossKind::Logistic && y != Scalar(1) && y != Scalar(-1))
    throw InvalidLabel("logistic responses must be -1 or +1, got " + std::to_string(static_cast<double>(y)));
}

namespace detail {

// x log x with the 0 log 0 = 0 closure.
template <typename Scalar>
Scalar xlogx(Scalar x) {
  return x == Scalar(0) ? Scalar(0) : x * std::log(x);
}

// log(1 + exp(z)) without overflow.
template <typename Scalar>
Scalar log1pexp(Scalar z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace detail

template <typename Scalar>
Scalar loss_eval(const LossSpec<Scalar>& spec, Scalar y, Scalar u) {
  check_label(spec, y);
  switch (spec.kind) {
    case LossKind::OLS: return Scalar(0.5) * (y - u) * (y - u);
    case LossKind::Pinball: return std::max(spec.quantile * (y - u), (1 - spec.quantile) * (u - y));
    case LossKind::Logistic: return detail::log1pexp(-y * u);
  }
  return Scalar(0);
}

// dl/du; pinball uses the right derivative at the kink.
template <typename Scalar>
Scalar loss_derivative(const LossSpec<Scalar>& spec, Scalar y, Scalar u) {
  switch (spec.kind) {
    case LossKind::OLS: return u - y;
    case LossKind::Pinball: return u >= y ? 1 - spec.quantile : -spec.quantile;
    case LossKind::Logistic: return -y / (1 + std::exp(y * u));
  }
  return Scalar(0);
}

// Returns +inf outside the conjugate domain.
template <typename Scalar>
Scalar conjugate_eval(const LossSpec<Scalar>& spec, Scalar y, Scalar a) {
  constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
  switch (spec.kind) {
    case LossKind::OLS: return y * a + Scalar(0.5) * a * a;
    case LossKind::Pinball:
      return (a >= -spec.quantile && a <= 1 - spec.quantile) ? y * a : inf;
    case LossKind::Logistic: {
      const Scalar b = -y * a;
      if (b < 0 || b > 1) return inf;
      return detail::xlogx(b) + detail::xlogx(1 - b);  // -H(b)
    }
  }
  return inf;
}

template <typename Scalar>
Scalar conjugate_grad(const LossSpec<Scalar>& spec, Scalar y, Scalar a) {
  switch (spec.kind) {
    case LossKind::OLS: return y + a;
    case LossKind::Pinball:
      if (!(a >= -spec.quantile && a <= 1 - spec.quantile))
        throw DomainBoundary("pinball dual variable outside [-q, 1-q]");
      return y;
    case LossKind::Logistic: {
      const Scalar b = -y * a;
      if (!(b > Scalar(kLogisticBoundary) && b < 1 - Scalar(kLogisticBoundary)))
        throw DomainBoundary("logistic dual variable at or beyond the conjugate domain boundary");
      return y * std::log((1 - b) / b);
    }
  }
  return Scalar(0);
}

// Nearest point of the (closed, for logistic: margin-shrunk) conjugate domain.
template <typename Scalar>
Scalar conjugate_project(const LossSpec<Scalar>& spec, Scalar y, Scalar a) {
  switch (spec.kind) {
    case LossKind::OLS: return a;
    case LossKind::Pinball: return std::clamp(a, -spec.quantile, 1 - spec.quantile);
    case LossKind::Logistic: {
      const Scalar eps = Scalar(kLogisticMargin);
      const Scalar b = std::clamp(-y * a, eps, 1 - eps);
      return -y * b;  // y = +-1, so a = -b / y = -y b
    }
  }
  return a;
}

}  // namespace subsel
