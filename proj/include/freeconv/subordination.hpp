#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "freeconv/errors.hpp"
#include "freeconv/measure.hpp"

namespace freeconv {

/// Solved subordination pair at one spectral parameter z, with
///   F_a(omega_beta) = F_b(omega_alpha),  omega_alpha + omega_beta - z = F_a(omega_beta),
/// and m_value = m_a(omega_beta) the Stieltjes transform of the free convolution.
struct SubordinationPoint {
  complex z;
  complex omega_alpha;
  complex omega_beta;
  complex m_value;
  int iterations = 0;
  double residual = 0.0;
};

/// Rectangle [e_lo, e_hi] x [0, eta_max] containing the support of the
/// convolution.
struct Domain {
  double e_lo = 0.0;
  double e_hi = 0.0;
  double eta_max = 1.0;
};

inline Domain make_domain(const JacobiMeasure& mu_a, const JacobiMeasure& mu_b) {
  Domain d{mu_a.lower() + mu_b.lower() - 1.0, mu_a.upper() + mu_b.upper() + 1.0, 1.0};
  const double va = variance(mu_a), vb = variance(mu_b);
  if (std::max(va, vb) > 1e6 * std::min(va, vb)) {
    const double widen = std::sqrt(std::max(va, vb));
    d.e_lo -= widen;
    d.e_hi += widen;
  }
  return d;
}

struct SolverOptions {
  /// Residual tolerance; raised to the roundoff level 8 eps max(1, |z|) far from the origin.
  double tol = 1e-12;
  int max_iterations = 100000;
  /// Consecutive non-decreasing residuals before the damping factor is halved.
  int stagnation_window = 20;
  /// Residual below which safeguarded Newton steps are attempted.
  double newton_threshold = 1e-2;
};

namespace detail {

inline double effective_tolerance(double tol, double scale) {
  return std::max(tol, 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, scale));
}

/// Everything the iteration needs at one candidate omega_beta.
struct SubordinationState {
  complex omega_beta;
  complex omega_alpha;
  Transforms at_beta;   // transforms of mu_a at omega_beta
  Transforms at_alpha;  // transforms of mu_b at omega_alpha
  complex f_a;
  complex f_b;
  complex mapped;  // z + H_b(omega_alpha), the next omega_beta
  complex defect;  // mapped - omega_beta = F_b(omega_alpha) - F_a(omega_beta)
  double slope = 0.0;  // (F_a' - 1)(F_b' - 1) at the pair, real part on the real axis
  complex dmap;        // derivative of the composed map
  double residual = 0.0;
};

inline SubordinationState evaluate_state(const JacobiMeasure& mu_a, const JacobiMeasure& mu_b,
                                         complex z, complex omega_beta) {
  SubordinationState s;
  s.omega_beta = omega_beta;
  s.at_beta = evaluate_transforms(mu_a, omega_beta);
  const auto da = f_derivatives_from(s.at_beta);
  s.f_a = da.f;
  s.omega_alpha = z + s.f_a - omega_beta;
  s.at_alpha = evaluate_transforms(mu_b, s.omega_alpha);
  const auto db = f_derivatives_from(s.at_alpha);
  s.f_b = db.f;
  s.mapped = z + s.f_b - s.omega_alpha;
  s.defect = s.mapped - omega_beta;
  s.dmap = (db.f1 - 1.0) * (da.f1 - 1.0);
  s.slope = s.dmap.real();
  const double second = std::abs(s.omega_alpha + s.omega_beta - z - s.f_a);
  const double cross = std::abs(s.at_beta.m - s.at_alpha.m);
  s.residual = std::max({std::abs(s.defect), second, cross});
  return s;
}

inline SubordinationPoint to_point(complex z, const SubordinationState& s, int iterations) {
  return {z, s.omega_alpha, s.omega_beta, s.at_beta.m, iterations, s.residual};
}

}  // namespace detail

/// Solves the subordination system at Im z > 0 by iterating
///   omega_beta <- z + H_b(z + H_a(omega_beta)),  H(w) = F(w) - w,
/// damped on stagnation, with backtracking Newton steps once the residual is small.
inline SubordinationPoint solve_point(const JacobiMeasure& mu_a, const JacobiMeasure& mu_b,
                                      complex z, std::optional<complex> init = std::nullopt,
                                      const SolverOptions& opts = {}) {
  if (!(z.imag() > 0.0)) throw InvalidArgument("solve_point: requires Im z > 0");
  if (!(opts.tol > 0.0)) throw InvalidArgument("solve_point: tolerance must be positive");

  complex start = z + complex(0.0, 1.0);
  if (init && init->imag() >= z.imag()) start = *init;
  auto state = detail::evaluate_state(mu_a, mu_b, z, start);
  const double tol = detail::effective_tolerance(opts.tol, std::abs(z));

  double theta = 1.0;
  int stagnant = 0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (state.residual <= tol) return detail::to_point(z, state, it);

    if (state.residual < opts.newton_threshold) {
      const complex denom = state.dmap - 1.0;
      if (std::abs(denom) > 0.0) {
        // Backtracking Newton: near an edge the full step can overshoot far
        // into the half-plane even though the direction is right.
        const complex step = -state.defect / denom;
        bool accepted = false;
        for (double lambda = 1.0; lambda >= 1.0 / 64.0 && !accepted; lambda *= 0.5) {
          const complex candidate = state.omega_beta + lambda * step;
          if (!(candidate.imag() >= z.imag())) continue;
          try {
            auto trial = detail::evaluate_state(mu_a, mu_b, z, candidate);
            if (trial.residual < state.residual && trial.omega_alpha.imag() >= z.imag()) {
              state = std::move(trial);
              accepted = true;
            }
          } catch (const TooCloseToSupport&) {
          } catch (const EvaluationOnSupport&) {
          }
        }
        if (accepted) {
          stagnant = 0;
          continue;
        }
      }
    }

    const complex next = (1.0 - theta) * state.omega_beta + theta * state.mapped;
    auto updated = detail::evaluate_state(mu_a, mu_b, z, next);
    if (updated.residual < state.residual) {
      stagnant = 0;
    } else if (++stagnant >= opts.stagnation_window) {
      theta *= 0.5;
      stagnant = 0;
    }
    state = std::move(updated);
  }
  if (state.residual <= tol) return detail::to_point(z, state, opts.max_iterations);
  throw NoConvergence("solve_point: residual " + std::to_string(state.residual) + " after " +
                      std::to_string(opts.max_iterations) + " iterations at z = (" +
                      std::to_string(z.real()) + ", " + std::to_string(z.imag()) + ")");
}

/// Real solution at an energy E outside the support. Left of zero the
/// subordination functions live left of the input supports, right of zero to
/// their right; the composed map is increasing there and is iterated
/// monotonically from omega_beta = E. Exiting the exterior gaps, or reaching
/// the repelling branch (map slope >= 1) without crossing a fixed point,
/// raises LeftRealAxis.
inline SubordinationPoint solve_real_outside(const JacobiMeasure& mu_a, const JacobiMeasure& mu_b,
                                             double energy,
                                             std::optional<double> init = std::nullopt,
                                             const SolverOptions& opts = {}) {
  if (!std::isfinite(energy)) throw InvalidArgument("solve_real_outside: non-finite energy");
  const bool left = energy <= 0.0;
  const complex z(energy, 0.0);
  const double tol = detail::effective_tolerance(opts.tol, std::abs(energy));
  // +1 when the iteration moves right toward the fixed point.
  const double dir = left ? 1.0 : -1.0;

  auto in_gap = [&](double w, const JacobiMeasure& mu) {
    return left ? w < mu.lower() : w > mu.upper();
  };
  auto fail = [&](const std::string& why) -> LeftRealAxis {
    return LeftRealAxis("solve_real_outside: E = " + std::to_string(energy) + " " + why);
  };
  auto evaluate = [&](double w) {
    if (!in_gap(w, mu_a)) throw fail("drove omega_beta into the support of mu_a");
    detail::SubordinationState s;
    try {
      s = detail::evaluate_state(mu_a, mu_b, z, complex(w, 0.0));
    } catch (const EvaluationOnSupport&) {
      throw fail("drove omega_alpha into the support of mu_b");
    } catch (const TooCloseToSupport&) {
      throw fail("drove omega_alpha onto the edge of mu_b");
    }
    if (!in_gap(s.omega_alpha.real(), mu_b)) throw fail("drove omega_alpha into the support of mu_b");
    return s;
  };
  // Beyond the critical point with the defect still pointing outward: no
  // fixed point remains ahead.
  auto past_critical = [&](const detail::SubordinationState& s) {
    return s.slope >= 1.0 && dir * s.defect.real() > 0.0;
  };

  detail::SubordinationState state;
  bool warm = false;
  if (init && in_gap(*init, mu_a)) {
    try {
      state = evaluate(*init);
      warm = !past_critical(state);
    } catch (const Error&) {
      warm = false;
    }
  }
  if (!warm) state = evaluate(energy);

  for (int it = 0; it < opts.max_iterations; ++it) {
    if (state.residual <= tol) {
      if (state.slope >= 1.0) throw fail("converged to the repelling branch");
      auto p = detail::to_point(z, state, it);
      p.omega_alpha.imag(0.0);
      p.omega_beta.imag(0.0);
      p.m_value.imag(0.0);
      return p;
    }
    if (past_critical(state)) throw fail("has no exterior fixed point");

    if (state.residual < opts.newton_threshold && state.slope < 1.0) {
      const double candidate = state.omega_beta.real() - state.defect.real() / (state.slope - 1.0);
      if (in_gap(candidate, mu_a)) {
        try {
          auto trial = evaluate(candidate);
          if (trial.residual < state.residual && trial.slope < 1.0) {
            state = std::move(trial);
            continue;
          }
        } catch (const Error&) {
        }
      }
    }
    state = evaluate(state.mapped.real());
  }
  throw NoConvergence("solve_real_outside: residual " + std::to_string(state.residual) +
                      " after " + std::to_string(opts.max_iterations) + " iterations at E = " +
                      std::to_string(energy));
}

/// Solves a batch of points along a continuation path sorted by descending
/// Im z, then ascending Re z; each point is warm-started from its predecessor.
/// Results come back in input order.
inline std::vector<SubordinationPoint> solve_grid(const JacobiMeasure& mu_a,
                                                  const JacobiMeasure& mu_b,
                                                  std::span<const complex> grid,
                                                  const SolverOptions& opts = {}) {
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) {
    if (grid[i].imag() != grid[j].imag()) return grid[i].imag() > grid[j].imag();
    return grid[i].real() < grid[j].real();
  });

  std::vector<SubordinationPoint> out(grid.size());
  std::vector<GridFailure::Entry> failures;
  std::optional<complex> warm;
  for (auto idx : order) {
    try {
      out[idx] = solve_point(mu_a, mu_b, grid[idx], warm, opts);
      warm = out[idx].omega_beta;
    } catch (const Error& e) {
      failures.push_back({idx, e.what()});
      warm.reset();
    }
  }
  if (!failures.empty()) {
    std::sort(failures.begin(), failures.end(),
              [](const auto& a, const auto& b) { return a.index < b.index; });
    throw GridFailure(std::move(failures));
  }
  return out;
}

/// I_a(omega_beta) / I_b(omega_alpha) at a solved point: the limit of
/// Im omega_alpha / Im omega_beta as the point approaches the real axis.
inline double imag_ratio_limit(const JacobiMeasure& mu_a, const JacobiMeasure& mu_b,
                               const SubordinationPoint& point) {
  return i_integral(mu_a, point.omega_beta) / i_integral(mu_b, point.omega_alpha);
}

}  // namespace freeconv
