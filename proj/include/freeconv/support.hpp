#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

#include "freeconv/errors.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/subordination.hpp"

namespace freeconv {

/// Support [e_minus, e_plus] of the free convolution, the real subordination
/// values at both edges (index 0: lower edge, 1: upper edge) and the
/// square-root coefficients
///   omega_beta(z) ~ omega_beta(E_-) + gamma_beta[0] sqrt(E_- - z),
///   omega_beta(z) ~ omega_beta(E_+) + gamma_beta[1] sqrt(z - E_+).
struct SupportResult {
  double e_minus = 0.0;
  double e_plus = 0.0;
  std::array<double, 2> omega_alpha_at{};
  std::array<double, 2> omega_beta_at{};
  std::array<double, 2> gamma_beta{};
  std::array<double, 2> gamma_alpha{};
  std::array<double, 2> edge_residuals{};
};

enum class Edge { lower = 0, upper = 1 };

/// f(E) = I-hat_a(omega_beta(E)) I-hat_b(omega_alpha(E)) at a real exterior
/// energy; in (0, 1) outside the support and 1 at the edges.
inline double edge_function(const JacobiMeasure& mu_a, const JacobiMeasure& mu_b, double energy) {
  const auto p = solve_real_outside(mu_a, mu_b, energy);
  return i_hat(mu_a, p.omega_beta) * i_hat(mu_b, p.omega_alpha);
}

/// Second derivative of the local inverse map
///   z~(w) = -F_a(w) + w + F_b^{-1}(F_a(w))
/// at w = omega_beta of a real solved point.
inline double ztilde_second(const JacobiMeasure& mu_a, const JacobiMeasure& mu_b,
                            const SubordinationPoint& point) {
  const auto fa = f_derivatives(mu_a, point.omega_beta);
  const auto fb = f_derivatives(mu_b, point.omega_alpha);
  const complex value = -fa.f2 / fb.f1 * (fb.f1 - 1.0) - fb.f2 / (fb.f1 * fb.f1 * fb.f1) * fa.f1 * fa.f1;
  return value.real();
}

/// First derivative of z~ at omega_beta; vanishes at the edges.
inline double ztilde_first(const JacobiMeasure& mu_a, const JacobiMeasure& mu_b,
                           const SubordinationPoint& point) {
  const auto fa = f_derivatives(mu_a, point.omega_beta);
  const auto fb = f_derivatives(mu_b, point.omega_alpha);
  return (1.0 - fa.f1 + fa.f1 / fb.f1).real();
}

/// The real subordination point at one edge of a support result.
inline SubordinationPoint edge_point(const JacobiMeasure& mu_a, const SupportResult& s, Edge edge) {
  const auto k = static_cast<std::size_t>(edge);
  SubordinationPoint p;
  p.z = edge == Edge::lower ? s.e_minus : s.e_plus;
  p.omega_alpha = s.omega_alpha_at[k];
  p.omega_beta = s.omega_beta_at[k];
  p.m_value = stieltjes(mu_a, p.omega_beta);
  p.residual = s.edge_residuals[k];
  return p;
}

/// Fills gamma_beta and gamma_alpha from z~'' at both edges. At the lower
/// edge z~'' < 0 and gamma = sqrt(-2/z~''); at the upper edge the orientation
/// flips, z~'' > 0 and gamma = sqrt(2/z~'').
inline SupportResult edge_coefficients(const JacobiMeasure& mu_a, const JacobiMeasure& mu_b,
                                       SupportResult support) {
  for (auto edge : {Edge::lower, Edge::upper}) {
    const auto k = static_cast<std::size_t>(edge);
    const double orientation = edge == Edge::lower ? -1.0 : 1.0;
    const auto p = edge_point(mu_a, support, edge);
    SubordinationPoint swapped = p;
    std::swap(swapped.omega_alpha, swapped.omega_beta);

    const double zb = orientation * ztilde_second(mu_a, mu_b, p);
    const double za = orientation * ztilde_second(mu_b, mu_a, swapped);
    if (!(zb > 0.0) || !(za > 0.0)) {
      throw NonNegativeSecondDerivative(
          std::string("edge_coefficients: z~'' has the wrong sign at the ") +
          (edge == Edge::lower ? "lower" : "upper") + " edge; endpoint not converged");
    }
    support.gamma_beta[k] = std::sqrt(2.0 / zb);
    support.gamma_alpha[k] = std::sqrt(2.0 / za);
  }
  return support;
}

/// Predicted edge behavior rho(x) ~ prefactor * sqrt(|x - E|) near an edge:
/// prefactor = gamma_beta I_a(omega_beta(E)) / pi.
inline double edge_density_prefactor(const JacobiMeasure& mu_a, const SupportResult& s, Edge edge) {
  const auto k = static_cast<std::size_t>(edge);
  return s.gamma_beta[k] * i_integral(mu_a, s.omega_beta_at[k]) / std::numbers::pi;
}

namespace detail {

/// Solves F_mu(v) = y for real v in the exterior gap on one side of the
/// support; F is increasing there with F(v) - v of fixed sign. Returns
/// nullopt when y has no preimage in the gap.
inline std::optional<double> invert_f_real(const JacobiMeasure& mu, double y, bool left) {
  const double span = mu.upper() - mu.lower();
  const double edge = left ? mu.lower() : mu.upper();
  const double inner = left ? edge - 1e-11 * span : edge + 1e-11 * span;
  const double sgn = left ? 1.0 : -1.0;

  auto f_at = [&](double v) { return reciprocal_f(mu, v).real(); };
  // Near side of the bracket: the preimage lies between y and the edge.
  double near = left ? std::min(y, inner) : std::max(y, inner);
  const double f_near = f_at(near);
  if (sgn * (f_near - y) < 0.0) return std::nullopt;
  // F(v) - v is monotone in the gap, so the preimage sits within |H(near)| of y.
  double far = y - (f_near - near);
  if (sgn * (f_at(far) - y) > 0.0) return std::nullopt;

  double v = near;
  for (int it = 0; it < 200; ++it) {
    const auto d = f_derivatives(mu, v);
    const double r = d.f.real() - y;
    if (std::abs(r) <= 4e-16 * std::max(1.0, std::abs(y))) return v;
    if (sgn * r > 0.0) {
      near = v;
    } else {
      far = v;
    }
    double next = v - r / d.f1.real();
    const bool inside = left ? (next > far && next < near) : (next < far && next > near);
    if (!inside) next = 0.5 * (near + far);
    if (next == v) return v;
    v = next;
  }
  return v;
}

struct EdgeProbe {
  double omega_beta = 0.0;
  double omega_alpha = 0.0;
  double phi = 0.0;  // f - 1
  double energy = 0.0;
};

/// Edge equation in the omega_beta parametrization: omega_alpha solves
/// F_b(omega_alpha) = F_a(omega_beta) and E = omega_alpha + omega_beta - F_a(omega_beta).
/// phi is increasing in omega_beta toward the support of mu_a.
inline std::optional<EdgeProbe> probe_edge(const JacobiMeasure& mu_a, const JacobiMeasure& mu_b,
                                           double omega_beta, bool left) {
  const bool in_gap = left ? omega_beta < mu_a.lower() : omega_beta > mu_a.upper();
  if (!in_gap || support_distance(mu_a, omega_beta) < 1e-11 * (mu_a.upper() - mu_a.lower())) {
    return std::nullopt;
  }
  const auto ta = evaluate_transforms(mu_a, omega_beta);
  const auto fa = f_derivatives_from(ta);
  const auto v = invert_f_real(mu_b, fa.f.real(), left);
  if (!v) return std::nullopt;
  const auto fb = f_derivatives(mu_b, *v);
  EdgeProbe p;
  p.omega_beta = omega_beta;
  p.omega_alpha = *v;
  p.phi = (fa.f1.real() - 1.0) * (fb.f1.real() - 1.0) - 1.0;
  p.energy = *v + omega_beta - fa.f.real();
  return p;
}

/// Brackets the edge in energy by marching and bisection, then polishes the
/// root of f - 1 in the omega_beta parametrization, where it is simple.
inline EdgeProbe locate_edge(const JacobiMeasure& mu_a, const JacobiMeasure& mu_b,
                             const Domain& domain, bool left, double tol_e,
                             const SolverOptions& opts) {
  const double start = left ? domain.e_lo : domain.e_hi;
  const double step = (left ? 1.0 : -1.0) * (domain.e_hi - domain.e_lo) / 64.0;
  const char* side = left ? "lower" : "upper";

  struct Sample {
    SubordinationPoint point;
    double f;
  };
  auto sample = [&](double e, std::optional<double> warm) -> std::optional<Sample> {
    try {
      auto p = solve_real_outside(mu_a, mu_b, e, warm, opts);
      const double f = i_hat(mu_a, p.omega_beta) * i_hat(mu_b, p.omega_alpha);
      if (!(f < 1.0)) return std::nullopt;
      return Sample{p, f};
    } catch (const LeftRealAxis&) {
      return std::nullopt;
    } catch (const NoConvergence&) {
      return std::nullopt;
    }
  };

  auto outside = sample(start, std::nullopt);
  if (!outside) {
    throw BracketFailure(std::string("find_support: f >= 1 at the ") + side +
                         " end of the domain rectangle");
  }
  double e_out = start;
  double e_in = start;
  bool found = false;
  for (int k = 1; k <= 64; ++k) {
    const double e = start + k * step;
    auto s = sample(e, outside->point.omega_beta.real());
    if (!s) {
      e_in = e;
      found = true;
      break;
    }
    outside = s;
    e_out = e;
  }
  if (!found) {
    throw BracketFailure(std::string("find_support: no ") + side + " edge inside the domain");
  }
  while (std::abs(e_in - e_out) > 1e-6) {
    const double mid = 0.5 * (e_in + e_out);
    if (auto s = sample(mid, outside->point.omega_beta.real())) {
      outside = s;
      e_out = mid;
    } else {
      e_in = mid;
    }
  }

  // Polish: phi(omega_beta) = f - 1 has a simple root at the edge.
  auto lo = probe_edge(mu_a, mu_b, outside->point.omega_beta.real(), left);
  if (!lo || lo->phi >= 0.0) {
    throw NoConvergence(std::string("find_support: cannot start the ") + side + " edge polish");
  }
  const double dir = left ? 1.0 : -1.0;
  const double gap_edge = left ? mu_a.lower() : mu_a.upper();
  double delta = 1e-6 * (mu_a.upper() - mu_a.lower());
  std::optional<EdgeProbe> hi;
  double w_hi = lo->omega_beta;
  for (int k = 0; k < 200; ++k) {
    w_hi = lo->omega_beta + dir * delta;
    if (dir * (w_hi - gap_edge) >= 0.0) {
      w_hi = 0.5 * (lo->omega_beta + gap_edge);
    }
    hi = probe_edge(mu_a, mu_b, w_hi, left);
    if (!hi || hi->phi > 0.0) break;
    lo = hi;
    delta *= 2.0;
  }
  // An invalid probe stands for phi = +inf (past the admissible range).
  double a = lo->omega_beta, fa_val = lo->phi;
  double b = w_hi;
  double fb_val = hi ? hi->phi : std::numeric_limits<double>::infinity();
  EdgeProbe best = *lo;
  int side_count = 0;
  const double target = std::min(tol_e, 1e-13);
  for (int it = 0; it < 300; ++it) {
    if (std::abs(best.phi) <= target) break;
    double w;
    if (std::isfinite(fb_val)) {
      w = (a * fb_val - b * fa_val) / (fb_val - fa_val);
    } else {
      w = 0.5 * (a + b);
    }
    if (!(dir * (w - a) > 0.0 && dir * (b - w) > 0.0)) w = 0.5 * (a + b);
    if (w == a || w == b) break;
    auto p = probe_edge(mu_a, mu_b, w, left);
    if (!p || p->phi > 0.0) {
      b = w;
      fb_val = p ? p->phi : std::numeric_limits<double>::infinity();
      if (p && std::abs(p->phi) < std::abs(best.phi)) best = *p;
      if (side_count == -1 && std::isfinite(fa_val)) fa_val *= 0.5;  // Illinois
      side_count = -1;
    } else {
      a = w;
      fa_val = p->phi;
      if (std::abs(p->phi) < std::abs(best.phi)) best = *p;
      if (side_count == 1 && std::isfinite(fb_val)) fb_val *= 0.5;
      side_count = 1;
    }
  }
  if (!(std::abs(best.phi) <= 10.0 * tol_e)) {
    throw NoConvergence(std::string("find_support: ") + side + " edge residual " +
                        std::to_string(best.phi));
  }
  return best;
}

}  // namespace detail

/// Locates the single-interval support [E_-, E_+] of mu_a boxplus mu_b and
/// its edge coefficients.
inline SupportResult find_support(const JacobiMeasure& mu_a, const JacobiMeasure& mu_b,
                                  double tol_e = 1e-10, const SolverOptions& opts = {}) {
  const Domain domain = make_domain(mu_a, mu_b);
  const auto lower = detail::locate_edge(mu_a, mu_b, domain, true, tol_e, opts);
  const auto upper = detail::locate_edge(mu_a, mu_b, domain, false, tol_e, opts);
  SupportResult s;
  s.e_minus = lower.energy;
  s.e_plus = upper.energy;
  s.omega_alpha_at = {lower.omega_alpha, upper.omega_alpha};
  s.omega_beta_at = {lower.omega_beta, upper.omega_beta};
  s.edge_residuals = {std::abs(lower.phi), std::abs(upper.phi)};
  if (!(s.e_minus < 0.0 && s.e_plus > 0.0)) {
    throw NoConvergence("find_support: endpoints do not straddle the origin");
  }
  return edge_coefficients(mu_a, mu_b, s);
}

}  // namespace freeconv
