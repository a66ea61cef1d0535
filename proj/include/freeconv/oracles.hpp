#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "freeconv/density.hpp"
#include "freeconv/errors.hpp"
#include "freeconv/measure.hpp"

namespace freeconv {

// ---------------------------------------------------------------------------
// Closed-form families
// ---------------------------------------------------------------------------

enum class FamilyKind { semicircle, arcsine, marchenko_pastur };

/// A law with explicit Stieltjes transform and density. `parameter` is the
/// variance (semicircle), radius (arcsine) or ratio (Marchenko-Pastur, which
/// is centered by subtracting its mean 1).
struct ClosedFormFamily {
  FamilyKind kind = FamilyKind::semicircle;
  double parameter = 1.0;

  static ClosedFormFamily semicircle(double variance) {
    return {FamilyKind::semicircle, variance};
  }
  static ClosedFormFamily arcsine(double radius) { return {FamilyKind::arcsine, radius}; }
  static ClosedFormFamily marchenko_pastur(double ratio) {
    return {FamilyKind::marchenko_pastur, ratio};
  }

  std::pair<double, double> support() const {
    switch (kind) {
      case FamilyKind::semicircle: {
        const double r = 2.0 * std::sqrt(parameter);
        return {-r, r};
      }
      case FamilyKind::arcsine:
        return {-parameter, parameter};
      case FamilyKind::marchenko_pastur: {
        const double s = std::sqrt(parameter);
        return {(1.0 - s) * (1.0 - s) - 1.0, (1.0 + s) * (1.0 + s) - 1.0};
      }
    }
    return {0.0, 0.0};
  }

  double variance() const {
    switch (kind) {
      case FamilyKind::semicircle:
        return parameter;
      case FamilyKind::arcsine:
        return 0.5 * parameter * parameter;
      case FamilyKind::marchenko_pastur:
        return parameter;
    }
    return 0.0;
  }
};

/// sqrt(z - lo) sqrt(z - hi) with principal roots: analytic off [lo, hi] and
/// asymptotic to z at infinity.
inline complex edge_root(complex z, double lo, double hi) {
  return std::sqrt(z - lo) * std::sqrt(z - hi);
}

inline complex closed_form_m(const ClosedFormFamily& fam, complex z) {
  const auto [lo, hi] = fam.support();
  if (z.imag() == 0.0 && z.real() >= lo && z.real() <= hi) {
    throw EvaluationOnSupport("closed_form_m: z on the support");
  }
  switch (fam.kind) {
    // rationalized quadratic roots
    case FamilyKind::semicircle:
      // (-z + s)/(2t)
      return -2.0 / (z + edge_root(z, lo, hi));
    case FamilyKind::arcsine:
      return -1.0 / edge_root(z, lo, hi);
    case FamilyKind::marchenko_pastur: {
      // (1 - lambda - w + s)/(2 lambda w), w = z + 1
      const double lam = fam.parameter;
      return 2.0 / (1.0 - lam - (z + 1.0) - edge_root(z, lo, hi));
    }
  }
  return {};
}

inline double closed_form_density(const ClosedFormFamily& fam, double x) {
  const auto [lo, hi] = fam.support();
  if (x <= lo || x >= hi) return 0.0;
  switch (fam.kind) {
    case FamilyKind::semicircle:
      return std::sqrt((x - lo) * (hi - x)) / (2.0 * std::numbers::pi * fam.parameter);
    case FamilyKind::arcsine:
      return 1.0 / (std::numbers::pi * std::sqrt((x - lo) * (hi - x)));
    case FamilyKind::marchenko_pastur:
      return std::sqrt((x - lo) * (hi - x)) /
             (2.0 * std::numbers::pi * fam.parameter * (x + 1.0));
  }
  return 0.0;
}

/// The family as a Jacobi-type measure.
inline JacobiMeasure to_measure(const ClosedFormFamily& fam) {
  switch (fam.kind) {
    case FamilyKind::semicircle:
      return semicircle(fam.parameter);
    case FamilyKind::arcsine:
      return arcsine(fam.parameter);
    case FamilyKind::marchenko_pastur:
      return marchenko_pastur(fam.parameter);
  }
  throw InvalidArgument("to_measure: unknown family");
}

// ---------------------------------------------------------------------------
// Random-matrix sampling
// ---------------------------------------------------------------------------

/// Eigenvalues of A + U B U* pooled over samples, sorted ascending.
struct EmpiricalSpectrum {
  std::vector<double> eigenvalues;
  int n_matrix = 0;
  int n_samples = 0;
  std::uint64_t seed = 0;

  double ecdf(double x) const {
    const auto it = std::upper_bound(eigenvalues.begin(), eigenvalues.end(), x);
    return static_cast<double>(it - eigenvalues.begin()) / static_cast<double>(eigenvalues.size());
  }
};

/// Worker count: FREECONV_THREADS when set and positive, otherwise the
/// hardware concurrency.
inline unsigned worker_threads() {
  if (const char* env = std::getenv("FREECONV_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Generator for one sample: mt19937_64 seeded from (seed, sample index), so
/// every sample stream is independent of scheduling.
inline std::mt19937_64 sample_generator(std::uint64_t seed, std::uint64_t sample) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(sample), static_cast<std::uint32_t>(sample >> 32)};
  return std::mt19937_64(seq);
}

/// Haar unitary: QR of a complex Ginibre matrix with the phases of R's
/// diagonal moved into Q.
template <class Rng>
Eigen::MatrixXcd haar_unitary(int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  Eigen::MatrixXcd g(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) g(i, j) = complex(normal(rng), normal(rng));
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ();
  const auto& r = qr.matrixQR();
  for (int j = 0; j < n; ++j) {
    const complex d = r(j, j);
    const double mag = std::abs(d);
    q.col(j) *= mag > 0.0 ? d / mag : complex(1.0, 0.0);
  }
  return q;
}

/// Midpoint quantiles (j - 1/2)/n of a measure.
inline std::vector<double> midpoint_quantiles(const JacobiMeasure& mu, int n) {
  std::vector<double> out(n);
  for (int j = 0; j < n; ++j) out[j] = quantile(mu, (j + 0.5) / n);
  return out;
}

inline EmpiricalSpectrum rmt_sample(const JacobiMeasure& mu_a, const JacobiMeasure& mu_b,
                                    int n_matrix, int n_samples, std::uint64_t seed) {
  if (n_matrix < 2) throw InvalidArgument("rmt_sample: n_matrix must be at least 2");
  if (n_samples < 1) throw InvalidArgument("rmt_sample: n_samples must be at least 1");

  const auto a = midpoint_quantiles(mu_a, n_matrix);
  const auto b = midpoint_quantiles(mu_b, n_matrix);
  const Eigen::Map<const Eigen::VectorXd> bvec(b.data(), n_matrix);

  std::vector<std::vector<double>> per_sample(n_samples);
  auto run = [&](int s) {
    auto rng = sample_generator(seed, static_cast<std::uint64_t>(s));
    const Eigen::MatrixXcd u = haar_unitary(n_matrix, rng);
    Eigen::MatrixXcd h = (u * bvec.cast<complex>().asDiagonal()) * u.adjoint();
    for (int i = 0; i < n_matrix; ++i) h(i, i) += a[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h, Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    per_sample[s].assign(ev.data(), ev.data() + ev.size());
  };

  const unsigned threads = std::min<unsigned>(worker_threads(), static_cast<unsigned>(n_samples));
  if (threads <= 1) {
    for (int s = 0; s < n_samples; ++s) run(s);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (int s = static_cast<int>(t); s < n_samples; s += static_cast<int>(threads)) run(s);
      });
    }
    for (auto& th : pool) th.join();
  }

  EmpiricalSpectrum out;
  out.n_matrix = n_matrix;
  out.n_samples = n_samples;
  out.seed = seed;
  out.eigenvalues.reserve(static_cast<std::size_t>(n_matrix) * n_samples);
  for (const auto& v : per_sample) out.eigenvalues.insert(out.eigenvalues.end(), v.begin(), v.end());
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end());
  return out;
}

/// Kolmogorov-Smirnov statistic between the empirical distribution and the
/// grid CDF (extended by 0 and 1 outside the support).
inline double distance_ks(const EmpiricalSpectrum& spectrum, const DensityGrid& grid) {
  const auto& ev = spectrum.eigenvalues;
  const double n = static_cast<double>(ev.size());
  if (ev.empty()) return 0.0;
  auto model = [&](double x) {
    if (x <= grid.e_minus) return 0.0;
    if (x >= grid.e_plus) return 1.0;
    return cdf_at(grid, x);
  };
  double sup = 0.0;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const double f = model(ev[i]);
    sup = std::max({sup, std::abs(f - static_cast<double>(i) / n),
                    std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return sup;
}

/// Inverse-transform draws from the grid CDF, sorted; used to calibrate the
/// KS statistic.
inline EmpiricalSpectrum sample_from_grid(const DensityGrid& grid, int draws, std::uint64_t seed) {
  auto rng = sample_generator(seed, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double total = grid.cdf.back();
  EmpiricalSpectrum out;
  out.n_matrix = 1;
  out.n_samples = draws;
  out.seed = seed;
  out.eigenvalues.reserve(draws);
  for (int k = 0; k < draws; ++k) {
    const double u = unif(rng) * total;
    double lo = grid.e_minus, hi = grid.e_plus;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (cdf_at(grid, mid) < u ? lo : hi) = mid;
    }
    out.eigenvalues.push_back(0.5 * (lo + hi));
  }
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end());
  return out;
}

}  // namespace freeconv
