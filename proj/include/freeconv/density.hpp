#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "freeconv/errors.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/subordination.hpp"
#include "freeconv/support.hpp"

namespace freeconv {

/// Density of the free convolution sampled on Chebyshev-clustered points
///   x_j = c - r cos(pi j / (n - 1)),  j = 0..n-1,
/// which include both edges (where rho is exactly zero).
struct DensityGrid {
  std::vector<double> xs;
  std::vector<double> rho;
  std::vector<double> cdf;
  /// Subordination solutions per grid point; edge entries are the real edge solutions.
  std::vector<SubordinationPoint> points;
  double eta_used = 0.0;
  double e_minus = 0.0;
  double e_plus = 0.0;
  double mass = 0.0;
  double mean = 0.0;
  double variance = 0.0;

  double center() const noexcept { return 0.5 * (e_minus + e_plus); }
  double radius() const noexcept { return 0.5 * (e_plus - e_minus); }
};

struct DensityOptions {
  double eta_min = 1e-8;
  /// Linear extrapolation to eta = 0 from eta = 1e-4 and 1e-5 instead of a
  /// single solve at eta_min.
  bool richardson = false;
  SolverOptions solver{};
};

struct GridMoments {
  double mass = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

/// Moments of the sampled density. With x = c - r cos(theta) the integrand
/// rho(x) r sin(theta) is smooth and even in theta, and the edge square roots
/// are absorbed by the substitution, so the trapezoid rule in theta converges
/// spectrally.
inline GridMoments integrate(const DensityGrid& grid) {
  const std::size_t n = grid.xs.size();
  if (n < 2) return {};
  const double h = std::numbers::pi / static_cast<double>(n - 1);
  const double r = grid.radius();
  double mass = 0.0, first = 0.0;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double g = grid.rho[j] * r * std::sin(h * j);
    mass += g;
    first += grid.xs[j] * g;
  }
  mass *= h;
  first *= h;
  const double mean = first / mass;
  double second = 0.0;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double d = grid.xs[j] - mean;
    second += d * d * grid.rho[j] * r * std::sin(h * j);
  }
  second *= h;
  return {mass, mean, second / mass};
}

namespace detail {

/// Cumulative integral of rho at the grid points from the cosine series of
/// G(theta) = rho(x(theta)) r sin(theta).
inline std::vector<double> cumulative_from_cosine_series(const std::vector<double>& rho, double r) {
  const std::size_t n = rho.size();
  const std::size_t big_n = n - 1;
  const double h = std::numbers::pi / static_cast<double>(big_n);
  std::vector<double> g(n);
  for (std::size_t j = 0; j < n; ++j) g[j] = rho[j] * r * std::sin(h * j);

  std::vector<double> a(n, 0.0);
  for (std::size_t k = 0; k <= big_n; ++k) {
    double sum = 0.0;
    for (std::size_t j = 0; j <= big_n; ++j) {
      const double wj = (j == 0 || j == big_n) ? 0.5 : 1.0;
      sum += wj * g[j] * std::cos(h * static_cast<double>(k * j % (2 * big_n)));
    }
    a[k] = 2.0 * sum / static_cast<double>(big_n);
  }
  a[big_n] *= 0.5;

  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double theta = h * j;
    double acc = 0.5 * a[0] * theta;
    for (std::size_t k = 1; k <= big_n; ++k) {
      acc += a[k] * std::sin(h * static_cast<double>(k * j % (2 * big_n))) / static_cast<double>(k);
    }
    out[j] = acc;
  }
  out[0] = 0.0;
  // Monotone by construction of a non-negative density; clean up roundoff.
  for (std::size_t j = 1; j < n; ++j) out[j] = std::max(out[j], out[j - 1]);
  return out;
}

}  // namespace detail

/// Samples rho(x) = Im m(x + i eta)/pi on the support-adapted grid with a
/// warm-started sweep.
inline DensityGrid density_grid(const JacobiMeasure& mu_a, const JacobiMeasure& mu_b,
                                const SupportResult& support, int n,
                                const DensityOptions& opts = {}) {
  if (n < 16) throw InvalidArgument("density_grid: needs at least 16 grid points");
  if (!(opts.eta_min > 0.0)) throw InvalidArgument("density_grid: eta_min must be positive");

  DensityGrid grid;
  grid.e_minus = support.e_minus;
  grid.e_plus = support.e_plus;
  grid.eta_used = opts.richardson ? 0.0 : opts.eta_min;
  const double c = grid.center(), r = grid.radius();
  const double h = std::numbers::pi / (n - 1);

  grid.xs.resize(n);
  for (int j = 0; j < n; ++j) grid.xs[j] = c - r * std::cos(h * j);
  grid.xs.front() = support.e_minus;
  grid.xs.back() = support.e_plus;

  auto solve_row = [&](double eta) {
    std::vector<complex> zs;
    zs.reserve(n - 2);
    for (int j = 1; j + 1 < n; ++j) zs.emplace_back(grid.xs[j], eta);
    return solve_grid(mu_a, mu_b, zs, opts.solver);
  };

  std::vector<SubordinationPoint> interior;
  grid.rho.assign(n, 0.0);
  if (opts.richardson) {
    const double eta1 = 1e-4, eta2 = 1e-5;
    const auto row1 = solve_row(eta1);
    interior = solve_row(eta2);
    for (int j = 1; j + 1 < n; ++j) {
      const double r1 = row1[j - 1].m_value.imag() / std::numbers::pi;
      const double r2 = interior[j - 1].m_value.imag() / std::numbers::pi;
      grid.rho[j] = std::max(0.0, r2 + (r2 - r1) * eta2 / (eta1 - eta2));
    }
  } else {
    interior = solve_row(opts.eta_min);
    for (int j = 1; j + 1 < n; ++j) {
      grid.rho[j] = interior[j - 1].m_value.imag() / std::numbers::pi;
    }
  }

  grid.points.reserve(n);
  grid.points.push_back(edge_point(mu_a, support, Edge::lower));
  grid.points.insert(grid.points.end(), interior.begin(), interior.end());
  grid.points.push_back(edge_point(mu_a, support, Edge::upper));

  grid.cdf = detail::cumulative_from_cosine_series(grid.rho, r);
  const auto moments = integrate(grid);
  grid.mass = moments.mass;
  grid.mean = moments.mean;
  grid.variance = moments.variance;
  return grid;
}

/// Distribution function of the sampled density at x in [E_-, E_+], linear
/// in theta = arccos((c - x)/r) between grid points.
inline double cdf_at(const DensityGrid& grid, double x) {
  if (!(x >= grid.e_minus && x <= grid.e_plus)) {
    throw OutOfSupport("cdf_at: x = " + std::to_string(x) + " outside [" +
                       std::to_string(grid.e_minus) + ", " + std::to_string(grid.e_plus) + "]");
  }
  const std::size_t n = grid.xs.size();
  const double h = std::numbers::pi / static_cast<double>(n - 1);
  const double theta = std::acos(std::clamp((grid.center() - x) / grid.radius(), -1.0, 1.0));
  const double pos = theta / h;
  const auto j = std::min(static_cast<std::size_t>(pos), n - 2);
  const double t = pos - static_cast<double>(j);
  return (1.0 - t) * grid.cdf[j] + t * grid.cdf[j + 1];
}

/// rho at a single real point, solved at x + i eta.
inline double density_at(const JacobiMeasure& mu_a, const JacobiMeasure& mu_b, double x,
                         double eta = 1e-8, std::optional<complex> init = std::nullopt,
                         const SolverOptions& opts = {}) {
  return solve_point(mu_a, mu_b, complex(x, eta), init, opts).m_value.imag() / std::numbers::pi;
}

}  // namespace freeconv
