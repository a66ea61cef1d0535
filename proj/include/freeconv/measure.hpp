#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "freeconv/chebyshev.hpp"
#include "freeconv/errors.hpp"
#include "freeconv/quadrature.hpp"

namespace freeconv {

using complex = std::complex<double>;

/// Default minimal distance to the support for off-support evaluation.
inline constexpr double kDistanceFloor = 1e-12;

namespace detail {

inline constexpr int kBaseNodes = 64;
inline constexpr int kLevels = 7;  // 64, 128, ..., 4096 nodes

/// Nodes with dmu-weights (Jacobi weight, smooth factor and 1/Z folded in).
struct WeightedNodes {
  std::vector<double> x;
  std::vector<double> w;
};

struct NodeCache {
  std::array<std::once_flag, kLevels> flags;
  std::array<WeightedNodes, kLevels> levels;
};

}  // namespace detail

/// Probability measure with density
///   (x - lower)^t_minus (upper - x)^t_plus h(x) / norm_const  on [lower, upper],
/// where h = sum_k smooth_coeffs[k] T_k(s) in the interval variable s in [-1, 1].
/// Built only through make_jacobi, which normalizes and centers it.
class JacobiMeasure {
 public:
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }
  double t_minus() const noexcept { return t_minus_; }
  double t_plus() const noexcept { return t_plus_; }
  const std::vector<double>& smooth_coeffs() const noexcept { return smooth_coeffs_; }
  double norm_const() const noexcept { return norm_const_; }
  /// Offset added to the user's support to center the measure.
  double shift() const noexcept { return shift_; }
  /// Support as passed to make_jacobi, before centering.
  double input_lower() const noexcept { return input_lower_; }
  double input_upper() const noexcept { return input_upper_; }
  /// Node count of the base rule that resolves the normalization integral.
  int base_nodes() const noexcept { return detail::kBaseNodes << base_level_; }

  double interval_variable(double x) const noexcept {
    return (2.0 * x - lower_ - upper_) / (upper_ - lower_);
  }

  double smooth_factor(double x) const noexcept {
    return chebyshev_eval(smooth_coeffs_, std::clamp(interval_variable(x), -1.0, 1.0));
  }

  /// Density with respect to Lebesgue measure; zero outside the support.
  double density(double x) const noexcept {
    if (x <= lower_ || x >= upper_) return 0.0;
    return std::pow(x - lower_, t_minus_) * std::pow(upper_ - x, t_plus_) * smooth_factor(x) /
           norm_const_;
  }

  /// Weighted nodes of the global Gauss-Jacobi rule at the given level
  /// (64 << level nodes), built on first use.
  const detail::WeightedNodes& nodes(int level) const {
    level = std::clamp(level, 0, detail::kLevels - 1);
    std::call_once(cache_->flags[level], [&] { cache_->levels[level] = build_nodes(level); });
    return cache_->levels[level];
  }

  int base_level() const noexcept { return base_level_; }

  friend bool operator==(const JacobiMeasure& a, const JacobiMeasure& b) {
    return a.lower_ == b.lower_ && a.upper_ == b.upper_ && a.t_minus_ == b.t_minus_ &&
           a.t_plus_ == b.t_plus_ && a.smooth_coeffs_ == b.smooth_coeffs_;
  }

 private:
  friend JacobiMeasure make_jacobi(double, double, double, double, std::vector<double>);

  JacobiMeasure() : cache_(std::make_shared<detail::NodeCache>()) {}

  detail::WeightedNodes build_nodes(int level) const {
    const auto rule =
        jacobi_rule(lower_, upper_, t_minus_, t_plus_, detail::kBaseNodes << level);
    detail::WeightedNodes out;
    out.x = rule.nodes;
    out.w.resize(rule.nodes.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      out.w[i] = rule.weights[i] * smooth_factor(rule.nodes[i]) / norm_const_;
    }
    return out;
  }

  double lower_ = 0.0;
  double upper_ = 0.0;
  double t_minus_ = 0.0;
  double t_plus_ = 0.0;
  std::vector<double> smooth_coeffs_;
  double norm_const_ = 1.0;
  double shift_ = 0.0;
  double input_lower_ = 0.0;
  double input_upper_ = 0.0;
  int base_level_ = 0;
  std::shared_ptr<detail::NodeCache> cache_;
};

/// Normalizes and centers a Jacobi-type measure. The returned support is the
/// input support shifted by shift(); smooth_coeffs are relative to the interval
/// and therefore unaffected by the shift.
inline JacobiMeasure make_jacobi(double lower, double upper, double t_minus, double t_plus,
                                 std::vector<double> smooth_coeffs) {
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper)) {
    throw InvalidArgument("make_jacobi: support must be a non-empty finite interval");
  }
  for (double t : {t_minus, t_plus}) {
    if (!(t > -1.0 && t < 1.0)) {
      throw ExponentOutOfRange("make_jacobi: edge exponent " + std::to_string(t) +
                               " outside (-1, 1)");
    }
  }
  if (smooth_coeffs.empty()) smooth_coeffs = {1.0};
  for (double c : smooth_coeffs) {
    if (!std::isfinite(c)) throw InvalidArgument("make_jacobi: non-finite smooth coefficient");
  }

  // Positivity of h on the closed interval, sampled densely relative to its degree.
  const int samples = std::max<int>(2049, 64 * static_cast<int>(smooth_coeffs.size()));
  double h_min = chebyshev_eval(smooth_coeffs, -1.0);
  for (int j = 0; j <= samples; ++j) {
    const double s = -std::cos(std::numbers::pi * j / samples);
    h_min = std::min(h_min, chebyshev_eval(smooth_coeffs, s));
  }
  h_min = std::min(h_min, chebyshev_eval(smooth_coeffs, 1.0));
  if (!(h_min > 0.0)) {
    throw NonPositiveSmoothFactor("make_jacobi: smooth factor attains " + std::to_string(h_min) +
                                  " on the support");
  }

  JacobiMeasure mu;
  mu.lower_ = lower;
  mu.upper_ = upper;
  mu.input_lower_ = lower;
  mu.input_upper_ = upper;
  mu.t_minus_ = t_minus;
  mu.t_plus_ = t_plus;
  mu.smooth_coeffs_ = std::move(smooth_coeffs);

  // Double the node count until two successive masses agree.
  auto mass_at = [&](int level) {
    const auto rule = jacobi_rule(lower, upper, t_minus, t_plus, detail::kBaseNodes << level);
    return rule.integrate([&](double x) { return mu.smooth_factor(x); });
  };
  int level = 0;
  double mass = mass_at(0);
  while (level + 1 < detail::kLevels) {
    const double next = mass_at(level + 1);
    if (std::abs(next - mass) <= 1e-12 * std::abs(next)) break;
    mass = next;
    ++level;
  }
  mu.base_level_ = level;
  mu.norm_const_ = mass;

  const auto rule = jacobi_rule(lower, upper, t_minus, t_plus, mu.base_nodes());
  const double mean =
      rule.integrate([&](double x) { return x * mu.smooth_factor(x); }) / mu.norm_const_;
  mu.shift_ = -mean;
  mu.lower_ = lower - mean;
  mu.upper_ = upper - mean;
  return mu;
}

/// Stieltjes-analytic quantities at one point w:
///   m = int dmu/(x-w), dm = int dmu/(x-w)^2, d2m = 2 int dmu/(x-w)^3,
///   i = int dmu/|x-w|^2.
struct Transforms {
  complex m;
  complex dm;
  complex d2m;
  double i = 0.0;
};

/// Distance from w to the closed support.
inline double support_distance(const JacobiMeasure& mu, complex w) {
  const double p = std::clamp(w.real(), mu.lower(), mu.upper());
  return std::abs(w - p);
}

namespace detail {

inline void accumulate(Transforms& acc, double x, double weight, complex w) {
  const complex diff = x - w;
  const double norm2 = std::norm(diff);
  const complex u = std::conj(diff) / norm2;
  const complex wu = weight * u;
  acc.m += wu;
  acc.dm += wu * u;
  acc.d2m += wu * u * u;
  acc.i += weight / norm2;
}

/// Smallest global level resolving 1/(x-w)^k to double precision, from the
/// Bernstein ellipse through w; -1 when even 4096 nodes do not suffice.
inline int required_level(const JacobiMeasure& mu, complex w) {
  const double half = 0.5 * (mu.upper() - mu.lower());
  const complex s = (w - 0.5 * (mu.lower() + mu.upper())) / half;
  double rho = std::abs(s + std::sqrt(s - 1.0) * std::sqrt(s + 1.0));
  rho = std::max(rho, 1.0 / std::abs(s - std::sqrt(s - 1.0) * std::sqrt(s + 1.0)));
  const double log_rho = std::log(rho);
  if (!(log_rho > 0.0)) return -1;
  const double needed = 19.0 / log_rho;
  for (int level = mu.base_level(); level < kLevels; ++level) {
    if ((kBaseNodes << level) >= needed) return level;
  }
  return -1;
}

/// Geometrically graded panels around the projection of w onto the support,
/// Gauss-Jacobi on the two end panels and Gauss-Legendre inside.
inline Transforms composite_transforms(const JacobiMeasure& mu, complex w) {
  const double a = mu.lower(), b = mu.upper();
  const double p = std::clamp(w.real(), a, b);
  const double d = std::max(std::abs(w - p), 1e-300);

  std::vector<double> breaks;
  for (double step = d; p - step > a; step *= 2.0) breaks.push_back(p - step);
  std::reverse(breaks.begin(), breaks.end());
  breaks.insert(breaks.begin(), a);
  for (double step = d; p + step < b; step *= 2.0) breaks.push_back(p + step);
  breaks.push_back(b);

  const int panel_nodes = 32 + static_cast<int>(mu.smooth_coeffs().size());
  Transforms acc;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double lo = breaks[k], hi = breaks[k + 1];
    if (!(hi > lo)) continue;
    const bool at_lower = (k == 0);
    const bool at_upper = (k + 2 == breaks.size());
    if (at_lower && at_upper) {
      const auto& nodes = mu.nodes(kLevels - 1);
      for (std::size_t i = 0; i < nodes.x.size(); ++i) accumulate(acc, nodes.x[i], nodes.w[i], w);
      continue;
    }
    const double tm = at_lower ? mu.t_minus() : 0.0;
    const double tp = at_upper ? mu.t_plus() : 0.0;
    const auto rule = jacobi_rule(lo, hi, tm, tp, panel_nodes);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double x = rule.nodes[i];
      double weight = rule.weights[i] * mu.smooth_factor(x) / mu.norm_const();
      if (!at_lower) weight *= std::pow(x - a, mu.t_minus());
      if (!at_upper) weight *= std::pow(b - x, mu.t_plus());
      accumulate(acc, x, weight, w);
    }
  }
  return acc;
}

}  // namespace detail

/// Evaluates m, m', m'' and I at w in one pass. The rule is chosen from the
/// distance of w to the support: a global Gauss-Jacobi rule when one of at
/// most 4096 nodes resolves the pole, otherwise graded composite panels.
inline Transforms evaluate_transforms(const JacobiMeasure& mu, complex w,
                                      double distance_floor = kDistanceFloor) {
  const double dist = support_distance(mu, w);
  if (dist == 0.0) {
    throw EvaluationOnSupport("evaluation at " + std::to_string(w.real()) +
                              " inside the support [" + std::to_string(mu.lower()) + ", " +
                              std::to_string(mu.upper()) + "]");
  }
  if (dist < distance_floor) {
    throw TooCloseToSupport("evaluation point at distance " + std::to_string(dist) +
                            " from the support");
  }
  Transforms acc;
  const int level = detail::required_level(mu, w);
  if (level < 0) {
    acc = detail::composite_transforms(mu, w);
  } else {
    const auto& nodes = mu.nodes(level);
    for (std::size_t i = 0; i < nodes.x.size(); ++i) {
      detail::accumulate(acc, nodes.x[i], nodes.w[i], w);
    }
  }
  acc.d2m *= 2.0;
  return acc;
}

/// m(z) = int dmu(x)/(x - z).
inline complex stieltjes(const JacobiMeasure& mu, complex z) {
  return evaluate_transforms(mu, z).m;
}

/// F(z) = -1/m(z).
inline complex reciprocal_f(const JacobiMeasure& mu, complex z) {
  return -1.0 / stieltjes(mu, z);
}

struct FDerivatives {
  complex f;
  complex f1;
  complex f2;
};

inline FDerivatives f_derivatives_from(const Transforms& t) {
  const complex m2 = t.m * t.m;
  return {-1.0 / t.m, t.dm / m2, t.d2m / m2 - 2.0 * t.dm * t.dm / (m2 * t.m)};
}

/// F, F' and F'' at w, via F' = m'/m^2 and F'' = m''/m^2 - 2 m'^2/m^3.
inline FDerivatives f_derivatives(const JacobiMeasure& mu, complex w,
                                  double distance_floor = kDistanceFloor) {
  return f_derivatives_from(evaluate_transforms(mu, w, distance_floor));
}

/// I(w) = int dmu/|x - w|^2.
inline double i_integral(const JacobiMeasure& mu, complex w,
                         double distance_floor = kDistanceFloor) {
  return evaluate_transforms(mu, w, distance_floor).i;
}

/// I-hat from the transforms at w: I/|m|^2 - 1. Equals Im m/(|m|^2 Im w) - 1
/// in the upper half-plane and F'(w) - 1 on the real axis.
inline double i_hat_from(const Transforms& t) { return t.i / std::norm(t.m) - 1.0; }

inline double i_hat(const JacobiMeasure& mu, complex w, double distance_floor = kDistanceFloor) {
  return i_hat_from(evaluate_transforms(mu, w, distance_floor));
}

/// int x^k dmu(x), exact for polynomial smooth factors.
inline double moment(const JacobiMeasure& mu, int k) {
  if (k < 0) throw InvalidArgument("moment: order must be non-negative");
  const double needed = 0.5 * (k + static_cast<double>(mu.smooth_coeffs().size())) + 1.0;
  int level = mu.base_level();
  while (level + 1 < detail::kLevels && (detail::kBaseNodes << level) < needed) ++level;
  const auto& nodes = mu.nodes(level);
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.x.size(); ++i) sum += nodes.w[i] * std::pow(nodes.x[i], k);
  return sum;
}

inline double variance(const JacobiMeasure& mu) { return moment(mu, 2); }

/// mu((-inf, x]).
inline double cdf(const JacobiMeasure& mu, double x) {
  const double a = mu.lower(), b = mu.upper();
  if (x <= a) return 0.0;
  if (x >= b) return 1.0;
  const int n = 64 + static_cast<int>(mu.smooth_coeffs().size());
  if (x - a <= b - x) {
    const auto rule = jacobi_rule(a, x, mu.t_minus(), 0.0, n);
    return rule.integrate([&](double y) {
      return std::pow(b - y, mu.t_plus()) * mu.smooth_factor(y) / mu.norm_const();
    });
  }
  const auto rule = jacobi_rule(x, b, 0.0, mu.t_plus(), n);
  return 1.0 - rule.integrate([&](double y) {
           return std::pow(y - a, mu.t_minus()) * mu.smooth_factor(y) / mu.norm_const();
         });
}

/// Inverse of cdf by bisection.
inline double quantile(const JacobiMeasure& mu, double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw QuantileFailure("quantile: level " + std::to_string(q) + " outside (0, 1)");
  }
  double lo = mu.lower(), hi = mu.upper();
  if (!(cdf(mu, lo) <= q && cdf(mu, hi) >= q)) {
    throw QuantileFailure("quantile: cdf does not bracket level " + std::to_string(q));
  }
  for (int it = 0; it < 200 && hi - lo > 4e-16 * std::max(std::abs(lo), std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (cdf(mu, mid) < q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Named families, expressed as Jacobi-type measures.

/// Semicircle law of variance t.
inline JacobiMeasure semicircle(double variance) {
  if (!(variance > 0.0)) throw InvalidArgument("semicircle: variance must be positive");
  const double r = 2.0 * std::sqrt(variance);
  return make_jacobi(-r, r, 0.5, 0.5, {1.0});
}

/// Arcsine law on (-r, r).
inline JacobiMeasure arcsine(double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("arcsine: radius must be positive");
  return make_jacobi(-radius, radius, -0.5, -0.5, {1.0});
}

/// Marchenko-Pastur law with ratio in (0, 1) and unit scale, centered.
inline JacobiMeasure marchenko_pastur(double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw InvalidArgument("marchenko_pastur: ratio must lie in (0, 1)");
  }
  const double a = std::pow(1.0 - std::sqrt(ratio), 2), b = std::pow(1.0 + std::sqrt(ratio), 2);
  auto coeffs = chebyshev_fit([](double x) { return 1.0 / x; }, a, b);
  return make_jacobi(a, b, 0.5, 0.5, std::move(coeffs));
}

}  // namespace freeconv
