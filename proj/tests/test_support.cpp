#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "freeconv/support.hpp"
#include "random_pairs.hpp"

using namespace freeconv;
using freeconv::testing::kPairSeeds;
using freeconv::testing::random_pair;

namespace {

complex sc_m(double t, complex z) {
  const double r = 2.0 * std::sqrt(t);
  return (-z + std::sqrt(z - r) * std::sqrt(z + r)) / (2.0 * t);
}

double certificate(const JacobiMeasure& a, const JacobiMeasure& b, const SupportResult& s, int k) {
  const auto fa = f_derivatives(a, s.omega_beta_at[k]);
  const auto fb = f_derivatives(b, s.omega_alpha_at[k]);
  return ((fa.f1 - 1.0) * (fb.f1 - 1.0)).real();
}

const double kGamma = std::pow(2.0, 1.25) / 4.0;

}  // namespace

TEST(EdgeFunction, SemicirclePair) {
  const auto s1 = semicircle(1.0);
  const double w = -(3.0 + 1.0 / std::sqrt(2.0));
  const complex m = sc_m(1.0, w);
  const double ihat = (-m / (2.0 * m + w)).real();
  EXPECT_NEAR(edge_function(s1, s1, -4.0), ihat * ihat, 1e-12);
  EXPECT_NEAR(edge_function(s1, s1, -4.0), 0.00882, 2e-5);
  EXPECT_NEAR(edge_function(s1, s1, -2.0 * std::sqrt(2.0) - 1e-12), 1.0, 1e-5);
  EXPECT_LT(edge_function(s1, s1, -1e3), 1e-5);
  EXPECT_THROW(edge_function(s1, s1, 0.5), LeftRealAxis);
}

TEST(FindSupport, SemicircleVarianceAdditivity) {
  for (auto [t, s] : {std::pair{1.0, 1.0}, std::pair{1.0, 4.0}, std::pair{0.5, 0.5}}) {
    const auto sup = find_support(semicircle(t), semicircle(s));
    const double edge = 2.0 * std::sqrt(t + s);
    EXPECT_NEAR(sup.e_minus, -edge, 1e-10);
    EXPECT_NEAR(sup.e_plus, edge, 1e-10);
    EXPECT_LE(sup.edge_residuals[0], 1e-9);
    EXPECT_LE(sup.edge_residuals[1], 1e-9);
  }
  const auto sup = find_support(semicircle(1.0), semicircle(1.0));
  EXPECT_NEAR(sup.e_minus, -2.82843, 1e-5);
  EXPECT_NEAR(sup.e_minus, -sup.e_plus, 1e-10);
  EXPECT_NEAR(sup.omega_beta_at[0], -3.0 / std::sqrt(2.0), 1e-8);
}

TEST(ZtildeSecond, SemicirclePair) {
  const auto s1 = semicircle(1.0);
  const auto sup = find_support(s1, s1);
  const auto lower = edge_point(s1, sup, Edge::lower);
  const auto upper = edge_point(s1, sup, Edge::upper);
  EXPECT_NEAR(ztilde_second(s1, s1, lower), -2.0 / (kGamma * kGamma), 1e-7);
  EXPECT_NEAR(ztilde_second(s1, s1, lower), -5.65685, 1e-5);
  // Orientation flips at the upper edge.
  EXPECT_NEAR(ztilde_second(s1, s1, upper), 2.0 / (kGamma * kGamma), 1e-7);
  EXPECT_NEAR(ztilde_first(s1, s1, lower), 0.0, 1e-9);
  EXPECT_NEAR(ztilde_first(s1, s1, upper), 0.0, 1e-9);
}

TEST(EdgeCoefficients, SemicirclePair) {
  const auto s1 = semicircle(1.0);
  const auto sup = find_support(s1, s1);
  for (int k : {0, 1}) {
    EXPECT_NEAR(sup.gamma_beta[k], kGamma, 1e-8);
    EXPECT_NEAR(sup.gamma_alpha[k], sup.gamma_beta[k], 1e-12);
  }
  EXPECT_NEAR(sup.gamma_beta[0], 0.594604, 1e-6);
  EXPECT_NEAR(edge_density_prefactor(s1, sup, Edge::lower), 0.189268, 1e-6);
  EXPECT_NEAR(edge_density_prefactor(s1, sup, Edge::lower), kGamma / std::numbers::pi, 1e-9);
}

TEST(EdgeCoefficients, SemicircleOneFourMatchesClosedFormSlope) {
  // rho_5(x) = sqrt(20 - x^2)/(10 pi) ~ sqrt(4 sqrt 5)/(10 pi) sqrt(x - E_-)
  const auto a = semicircle(1.0), b = semicircle(4.0);
  const auto sup = find_support(a, b);
  const double slope = std::sqrt(4.0 * std::sqrt(5.0)) / (10.0 * std::numbers::pi);
  EXPECT_NEAR(edge_density_prefactor(a, sup, Edge::lower), slope, 1e-6);
  EXPECT_NEAR(edge_density_prefactor(a, sup, Edge::upper), slope, 1e-6);
  // Swapping the roles gives the same edge prefactor through gamma_alpha.
  const double swapped = sup.gamma_alpha[0] * i_integral(b, sup.omega_alpha_at[0]) / std::numbers::pi;
  EXPECT_NEAR(swapped, slope, 1e-6);
}

TEST(EdgeCoefficients, WrongOrientationRaises) {
  const auto s1 = semicircle(1.0);
  auto sup = find_support(s1, s1);
  sup.omega_alpha_at[0] = sup.omega_alpha_at[1];
  sup.omega_beta_at[0] = sup.omega_beta_at[1];
  EXPECT_THROW(edge_coefficients(s1, s1, sup), NonNegativeSecondDerivative);
}

class RandomPairSupport : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(RandomPairSupport, StructuralInvariants) {
  const auto pair = random_pair(GetParam());
  const auto& a = pair.a;
  const auto& b = pair.b;
  const auto sup = find_support(a, b);
  const auto dom = make_domain(a, b);

  EXPECT_LT(sup.e_minus, 0.0);
  EXPECT_GT(sup.e_plus, 0.0);
  EXPECT_GT(sup.e_minus, dom.e_lo);
  EXPECT_LT(sup.e_plus, dom.e_hi);
  EXPECT_LT(sup.omega_beta_at[0], a.lower());
  EXPECT_LT(sup.omega_alpha_at[0], b.lower());
  EXPECT_GT(sup.omega_beta_at[1], a.upper());
  EXPECT_GT(sup.omega_alpha_at[1], b.upper());
  for (int k : {0, 1}) {
    EXPECT_NEAR(certificate(a, b, sup, k), 1.0, 1e-8) << k;
    EXPECT_GT(sup.gamma_alpha[k], 0.0);
    EXPECT_GT(sup.gamma_beta[k], 0.0);
  }
  EXPECT_LT(ztilde_second(a, b, edge_point(a, sup, Edge::lower)), 0.0);
  EXPECT_GT(ztilde_second(a, b, edge_point(a, sup, Edge::upper)), 0.0);
  EXPECT_NEAR(ztilde_first(a, b, edge_point(a, sup, Edge::lower)), 0.0, 1e-8);
  EXPECT_NEAR(ztilde_first(a, b, edge_point(a, sup, Edge::upper)), 0.0, 1e-8);
}

TEST_P(RandomPairSupport, ExteriorScanHasOneCrossingPerSide) {
  const auto pair = random_pair(GetParam());
  const auto& a = pair.a;
  const auto& b = pair.b;
  const auto sup = find_support(a, b);
  const auto dom = make_domain(a, b);
  const int n = 200;
  for (int side = 0; side < 2; ++side) {
    double prev = 0.0;
    for (int k = 0; k < n; ++k) {
      // From the far end of the domain up to the edge.
      const double frac = static_cast<double>(k) / (n - 1);
      const double e = side == 0 ? dom.e_lo + frac * (sup.e_minus - 1e-9 - dom.e_lo)
                                 : dom.e_hi - frac * (dom.e_hi - sup.e_plus - 1e-9);
      const double f = edge_function(a, b, e);
      EXPECT_GT(f, prev) << e;
      EXPECT_LT(f, 1.0) << e;
      prev = f;
    }
    EXPECT_GT(prev, 1.0 - 1e-3);
    // f reaches 1 only at the edge: just inside there is no real solution.
    const double inside = side == 0 ? sup.e_minus + 1e-4 : sup.e_plus - 1e-4;
    EXPECT_THROW(edge_function(a, b, inside), LeftRealAxis) << inside;
  }
}

TEST_P(RandomPairSupport, InteriorProductStaysBelowOne) {
  const auto pair = random_pair(GetParam());
  const auto sup = find_support(pair.a, pair.b);
  double delta = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double e = sup.e_minus + (sup.e_plus - sup.e_minus) * k / 101.0;
    const auto p = solve_point(pair.a, pair.b, complex(e, 1e-8));
    delta = std::min(delta, 1.0 - i_hat(pair.a, p.omega_beta) * i_hat(pair.b, p.omega_alpha));
  }
  RecordProperty("delta", std::to_string(delta));
  EXPECT_GT(delta, 0.0);
}

TEST_P(RandomPairSupport, SquareRootExpansionOfOmega) {
  const auto pair = random_pair(GetParam());
  const auto sup = find_support(pair.a, pair.b);
  double k_fit = 0.0;
  for (double s : {1e-6, 1e-5, 1e-4, 1e-3}) {
    const auto p = solve_real_outside(pair.a, pair.b, sup.e_minus - s);
    const double err = std::abs(p.omega_beta.real() - sup.omega_beta_at[0] + sup.gamma_beta[0] * std::sqrt(s));
    k_fit = std::max(k_fit, err / s);
  }
  RecordProperty("K", std::to_string(k_fit));
  EXPECT_LT(k_fit, 1e3);
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomPairSupport, ::testing::ValuesIn(kPairSeeds));
