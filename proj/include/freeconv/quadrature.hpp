#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <tuple>
#include <vector>

#include "freeconv/errors.hpp"

namespace freeconv {

/// Nodes and positive weights of an interpolatory rule. Reference rules live
/// on (-1, 1); mapped rules live on the interval they were built for.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order = 0;

  template <class F>
  auto integrate(F&& f) const {
    using R = decltype(f(0.0));
    R sum{};
    for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * f(nodes[i]);
    return sum;
  }
};

namespace detail {

// Implicit QL on a symmetric tridiagonal matrix, tracking only the first row
// of the eigenvector matrix (Golub-Welsch). diag/offdiag are overwritten;
// first_row returns the first component of each normalized eigenvector.
inline void tridiagonal_ql_first_row(std::vector<double>& diag, std::vector<double>& offdiag,
                                     std::vector<double>& first_row) {
  const int n = static_cast<int>(diag.size());
  offdiag.resize(n, 0.0);
  offdiag[n - 1] = 0.0;
  first_row.assign(n, 0.0);
  first_row[0] = 1.0;
  constexpr double eps = 2.220446049250313e-16;

  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(diag[m]) + std::abs(diag[m + 1]);
        if (std::abs(offdiag[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (++iter > 100) throw NoConvergence("Golub-Welsch: QL iteration did not converge");
        double g = (diag[l + 1] - diag[l]) / (2.0 * offdiag[l]);
        double r = std::hypot(g, 1.0);
        g = diag[m] - diag[l] + offdiag[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i;
        bool underflow = false;
        for (i = m - 1; i >= l; --i) {
          double f = s * offdiag[i];
          const double b = c * offdiag[i];
          r = std::hypot(f, g);
          offdiag[i + 1] = r;
          if (r == 0.0) {
            diag[i + 1] -= p;
            offdiag[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = diag[i + 1] - p;
          r = (diag[i] - g) * s + 2.0 * c * b;
          p = s * r;
          diag[i + 1] = g + p;
          g = c * r - b;
          f = first_row[i + 1];
          first_row[i + 1] = s * first_row[i] + c * f;
          first_row[i] = c * first_row[i] - s * f;
        }
        if (underflow) continue;
        diag[l] -= p;
        offdiag[l] = g;
        offdiag[m] = 0.0;
      }
    } while (m != l);
  }
}

}  // namespace detail

/// Gauss-Jacobi rule on (-1, 1) for the weight (1 - s)^alpha (1 + s)^beta,
/// exact for polynomials of degree <= 2n - 1.
inline QuadratureRule gauss_jacobi(int n, double alpha, double beta) {
  if (n < 1) throw InvalidArgument("gauss_jacobi: node count must be positive");
  if (!(alpha > -1.0) || !(beta > -1.0)) {
    throw ExponentOutOfRange("gauss_jacobi: exponents must exceed -1");
  }
  const double ab = alpha + beta;
  std::vector<double> diag(n), offdiag(n, 0.0);
  diag[0] = (beta - alpha) / (ab + 2.0);
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + ab;
    diag[k] = (beta * beta - alpha * alpha) / (s * (s + 2.0));
  }
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + ab;
    double b;
    if (k == 1) {
      b = 4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
    } else {
      b = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
    }
    offdiag[k - 1] = std::sqrt(b);
  }
  const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(alpha + 1.0) +
                              std::lgamma(beta + 1.0) - std::lgamma(ab + 2.0));

  std::vector<double> first_row;
  detail::tridiagonal_ql_first_row(diag, offdiag, first_row);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return diag[i] < diag[j]; });

  QuadratureRule rule;
  rule.order = n;
  rule.nodes.reserve(n);
  rule.weights.reserve(n);
  for (auto i : order) {
    rule.nodes.push_back(diag[i]);
    rule.weights.push_back(mu0 * first_row[i] * first_row[i]);
  }
  return rule;
}

/// Process-wide cache of reference Gauss-Jacobi rules, keyed by (n, alpha, beta).
inline std::shared_ptr<const QuadratureRule> cached_gauss_jacobi(int n, double alpha, double beta) {
  static std::mutex mutex;
  static std::map<std::tuple<int, double, double>, std::shared_ptr<const QuadratureRule>> cache;
  const auto key = std::make_tuple(n, alpha, beta);
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto rule = std::make_shared<const QuadratureRule>(gauss_jacobi(n, alpha, beta));
  std::lock_guard lock(mutex);
  return cache.emplace(key, std::move(rule)).first->second;
}

/// Maps a reference rule onto [lower, upper] so that it integrates
/// f(x) (x - lower)^t_minus (upper - x)^t_plus dx.
inline QuadratureRule map_jacobi_rule(const QuadratureRule& reference, double lower, double upper,
                                      double t_minus, double t_plus) {
  const double half = 0.5 * (upper - lower);
  const double scale = std::pow(half, t_minus + t_plus + 1.0);
  QuadratureRule out;
  out.order = reference.order;
  out.nodes.resize(reference.nodes.size());
  out.weights.resize(reference.nodes.size());
  for (std::size_t i = 0; i < reference.nodes.size(); ++i) {
    out.nodes[i] = lower + half * (1.0 + reference.nodes[i]);
    out.weights[i] = scale * reference.weights[i];
  }
  return out;
}

/// Gauss-Jacobi rule on [lower, upper] for the weight (x - lower)^t_minus (upper - x)^t_plus.
inline QuadratureRule jacobi_rule(double lower, double upper, double t_minus, double t_plus, int n) {
  if (!(lower < upper)) throw InvalidArgument("jacobi_rule: empty interval");
  return map_jacobi_rule(*cached_gauss_jacobi(n, t_plus, t_minus), lower, upper, t_minus, t_plus);
}

}  // namespace freeconv
