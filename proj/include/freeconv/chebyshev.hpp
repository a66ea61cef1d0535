#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "freeconv/errors.hpp"

namespace freeconv {

/// Clenshaw evaluation of sum_k c_k T_k(s), s in [-1, 1].
inline double chebyshev_eval(std::span<const double> coeffs, double s) {
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 1;) {
    const double b0 = 2.0 * s * b1 - b2 + coeffs[k];
    b2 = b1;
    b1 = b0;
  }
  const double c0 = coeffs.empty() ? 0.0 : coeffs[0];
  return s * b1 - b2 + c0;
}

/// Chebyshev coefficients of f on [lower, upper], from samples at n
/// first-kind points.
template <class F>
std::vector<double> chebyshev_coefficients(F&& f, double lower, double upper, int n) {
  std::vector<double> values(n);
  const double mid = 0.5 * (lower + upper), half = 0.5 * (upper - lower);
  for (int j = 0; j < n; ++j) {
    const double theta = std::numbers::pi * (j + 0.5) / n;
    values[j] = f(mid + half * std::cos(theta));
  }
  std::vector<double> coeffs(n);
  for (int k = 0; k < n; ++k) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      sum += values[j] * std::cos(std::numbers::pi * k * (j + 0.5) / n);
    }
    coeffs[k] = (k == 0 ? 1.0 : 2.0) * sum / n;
  }
  return coeffs;
}

/// Adaptive Chebyshev fit: doubles the sample count until the trailing
/// coefficients fall below `tol` relative to the largest (or below the
/// roundoff level of the transform), then trims.
template <class F>
std::vector<double> chebyshev_fit(F&& f, double lower, double upper, double tol = 1e-15,
                                  int max_points = 4096) {
  for (int n = 16; n <= max_points; n *= 2) {
    auto coeffs = chebyshev_coefficients(f, lower, upper, n);
    double scale = 0.0;
    for (double c : coeffs) scale = std::max(scale, std::abs(c));
    double fmax = 0.0;
    for (int j = 0; j < n; ++j) {
      fmax = std::max(fmax, std::abs(f(0.5 * (lower + upper) +
                                       0.5 * (upper - lower) * std::cos(std::numbers::pi * (j + 0.5) / n))));
    }
    const double floor = std::max(tol * scale, 8.0 * std::numeric_limits<double>::epsilon() *
                                                   std::sqrt(static_cast<double>(n)) * fmax);
    const std::size_t tail = std::max<std::size_t>(4, coeffs.size() / 8);
    bool resolved = true;
    for (std::size_t k = coeffs.size() - tail; k < coeffs.size(); ++k) {
      if (std::abs(coeffs[k]) > floor) resolved = false;
    }
    if (resolved) {
      while (coeffs.size() > 1 && std::abs(coeffs.back()) <= floor) coeffs.pop_back();
      return coeffs;
    }
  }
  throw NoConvergence("chebyshev_fit: function not resolved at the maximum sample count");
}

}  // namespace freeconv
