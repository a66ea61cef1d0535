#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "freeconv/density.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/oracles.hpp"
#include "freeconv/subordination.hpp"
#include "freeconv/support.hpp"

namespace freeconv {

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;

  bool passed() const { return std::isfinite(measured) && measured <= tolerance; }
};

struct ValidationOptions {
  double tol = 1e-12;
  double eta_min = 1e-8;
  int grid_n = 513;
};

namespace detail {

inline std::string pair_label(double t, double s) {
  auto fmt = [](double v) {
    std::string out = std::to_string(v);
    out.erase(out.find_last_not_of('0') + 1);
    if (out.back() == '.') out.pop_back();
    return out;
  };
  return "sc" + fmt(t) + "+sc" + fmt(s);
}

inline double edge_certificate(const JacobiMeasure& mu_a, const JacobiMeasure& mu_b,
                               const SupportResult& s, int k) {
  const auto fa = f_derivatives(mu_a, s.omega_beta_at[k]);
  const auto fb = f_derivatives(mu_b, s.omega_alpha_at[k]);
  return std::abs(((fa.f1 - 1.0) * (fb.f1 - 1.0)).real() - 1.0);
}

}  // namespace detail

/// Transforms of the shipped families against their closed forms, then the
/// semicircle closure pairs end to end: support, certificate, density and
/// conservation.
inline std::vector<CheckResult> run_closed_form_suite(const ValidationOptions& opts = {}) {
  std::vector<CheckResult> out;

  const ClosedFormFamily families[] = {ClosedFormFamily::semicircle(1.0),
                                       ClosedFormFamily::arcsine(2.0),
                                       ClosedFormFamily::marchenko_pastur(0.5)};
  const char* names[] = {"semicircle:1", "arcsine:2", "mp:0.5"};
  const complex probes[] = {{0.0, 1.0}, {0.3, 0.1}, {-1.7, 0.05}, {3.5, 0.0}, {-4.0, 0.0}};
  for (std::size_t f = 0; f < 3; ++f) {
    const auto mu = to_measure(families[f]);
    double err = 0.0;
    for (const auto z : probes) {
      const complex exact = closed_form_m(families[f], z);
      err = std::max(err, std::abs(stieltjes(mu, z) - exact) / std::abs(exact));
    }
    out.push_back({std::string("transform ") + names[f] + " vs closed form (rel)", err, 1e-10});
  }

  const double pairs[][2] = {{1.0, 1.0}, {1.0, 4.0}, {0.5, 0.5}};
  SolverOptions solver;
  solver.tol = opts.tol;
  DensityOptions dopts;
  dopts.eta_min = opts.eta_min;
  dopts.solver = solver;
  for (const auto& pr : pairs) {
    const double t = pr[0], s = pr[1];
    const auto label = detail::pair_label(t, s);
    const auto mu_a = semicircle(t), mu_b = semicircle(s);
    const double edge = 2.0 * std::sqrt(t + s);

    const auto sup = find_support(mu_a, mu_b, 1e-10, solver);
    out.push_back({label + " E_minus", std::abs(sup.e_minus + edge), 1e-8});
    out.push_back({label + " E_plus", std::abs(sup.e_plus - edge), 1e-8});
    out.push_back({label + " edge certificate",
                   std::max(detail::edge_certificate(mu_a, mu_b, sup, 0),
                            detail::edge_certificate(mu_a, mu_b, sup, 1)),
                   1e-8});

    const auto grid = density_grid(mu_a, mu_b, sup, opts.grid_n, dopts);
    const auto exact = ClosedFormFamily::semicircle(t + s);
    double sup_err = 0.0;
    for (std::size_t j = 1; j + 1 < grid.xs.size(); ++j) {
      const double x = grid.xs[j];
      if (x - sup.e_minus < 1e-2 || sup.e_plus - x < 1e-2) continue;
      sup_err = std::max(sup_err, std::abs(grid.rho[j] - closed_form_density(exact, x)));
    }
    out.push_back({label + " interior density sup error", sup_err, 1e-6});
    out.push_back({label + " mass", std::abs(grid.mass - 1.0), 1e-6});
    out.push_back({label + " mean", std::abs(grid.mean), 1e-8});
    out.push_back({label + " variance (rel)", std::abs(grid.variance - (t + s)) / (t + s), 1e-5});
  }
  return out;
}

}  // namespace freeconv
