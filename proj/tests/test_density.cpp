#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "edge_fit.hpp"
#include "freeconv/density.hpp"
#include "random_pairs.hpp"

using namespace freeconv;
using freeconv::testing::fit_edge;
using freeconv::testing::kPairSeeds;
using freeconv::testing::random_pair;
using std::numbers::pi;

namespace {

double sc_density(double t, double x) {
  const double r2 = 4.0 * t;
  return x * x >= r2 ? 0.0 : std::sqrt(r2 - x * x) / (2.0 * pi * t);
}

double sc_cdf(double t, double x) {
  const double r = 2.0 * std::sqrt(t);
  const double u = std::clamp(x / r, -1.0, 1.0);
  return 0.5 + (u * std::sqrt(1.0 - u * u) + std::asin(u)) / pi;
}

const DensityGrid& sigma2_grid() {
  static const DensityGrid grid = [] {
    const auto s1 = semicircle(1.0);
    return density_grid(s1, s1, find_support(s1, s1), 513);
  }();
  return grid;
}

}  // namespace

TEST(DensityGrid, SemicirclePairAgainstSigmaTwo) {
  const auto& g = sigma2_grid();
  ASSERT_EQ(g.xs.size(), 513u);
  ASSERT_EQ(g.rho.size(), 513u);
  ASSERT_EQ(g.points.size(), 513u);
  EXPECT_EQ(g.eta_used, 1e-8);
  EXPECT_NEAR(g.rho[256], 1.0 / (pi * std::sqrt(2.0)), 1e-8);
  EXPECT_NEAR(g.rho[256], 0.225079, 1e-6);
  double err = 0.0;
  for (std::size_t j = 0; j < g.xs.size(); ++j) {
    EXPECT_GE(g.rho[j], 0.0);
    if (g.xs[j] - g.e_minus < 1e-2 || g.e_plus - g.xs[j] < 1e-2) continue;
    err = std::max(err, std::abs(g.rho[j] - sc_density(2.0, g.xs[j])));
  }
  EXPECT_LE(err, 1e-6);
  EXPECT_EQ(g.rho.front(), 0.0);
  EXPECT_EQ(g.rho.back(), 0.0);
  EXPECT_EQ(g.xs.front(), g.e_minus);
  EXPECT_EQ(g.xs.back(), g.e_plus);
}

TEST(DensityGrid, GridIsChebyshevClustered) {
  const auto& g = sigma2_grid();
  for (std::size_t j = 1; j < g.xs.size(); ++j) EXPECT_LT(g.xs[j - 1], g.xs[j]);
  EXPECT_LT(g.xs[1] - g.xs[0], 1e-2 * (g.xs[257] - g.xs[256]));
}

TEST(Integrate, SemicirclePairMoments) {
  const auto& g = sigma2_grid();
  const auto mom = integrate(g);
  EXPECT_NEAR(mom.mass, 1.0, 1e-6);
  EXPECT_NEAR(mom.mean, 0.0, 1e-8);
  EXPECT_NEAR(mom.variance, 2.0, 1e-5);
  EXPECT_EQ(mom.mass, g.mass);
  EXPECT_NEAR(g.mean, 0.0, 1e-12);
}

TEST(Integrate, SemicircleOneFourVariance) {
  const auto a = semicircle(1.0), b = semicircle(4.0);
  const auto g = density_grid(a, b, find_support(a, b), 513);
  EXPECT_NEAR(g.variance, 5.0, 1e-5);
  EXPECT_NEAR(g.mass, 1.0, 1e-6);
  EXPECT_NEAR(g.mean, 0.0, 1e-8);
}

TEST(CdfAt, EndpointsSymmetryAndClosedForm) {
  const auto& g = sigma2_grid();
  EXPECT_EQ(cdf_at(g, g.e_minus), 0.0);
  EXPECT_NEAR(cdf_at(g, g.e_plus), 1.0, 1e-6);
  EXPECT_NEAR(cdf_at(g, 0.0), 0.5, 1e-6);
  for (std::size_t j = 0; j < g.xs.size(); j += 16) {
    EXPECT_NEAR(cdf_at(g, g.xs[j]), sc_cdf(2.0, g.xs[j]), 1e-8) << j;
  }
  // Between nodes: linear interpolation in theta, h^2/8 max|F''(theta)| = h^2/(4 pi).
  const double h = pi / 512.0;
  for (double x : {-2.8, -2.0, -0.7, 0.33, 1.9, 2.82}) {
    EXPECT_NEAR(cdf_at(g, x), sc_cdf(2.0, x), h * h / (4.0 * pi)) << x;
  }
  double prev = 0.0;
  for (int k = 0; k <= 1000; ++k) {
    const double x = g.e_minus + (g.e_plus - g.e_minus) * k / 1000.0;
    const double c = cdf_at(g, x);
    EXPECT_GE(c, prev);
    prev = c;
  }
  EXPECT_THROW(cdf_at(g, g.e_minus - 1e-9), OutOfSupport);
  EXPECT_THROW(cdf_at(g, 3.0), OutOfSupport);
}

TEST(DensityAt, SinglePoint) {
  const auto s1 = semicircle(1.0);
  EXPECT_NEAR(density_at(s1, s1, 0.0), 1.0 / (pi * std::sqrt(2.0)), 1e-8);
  EXPECT_NEAR(density_at(s1, s1, 1.5), sc_density(2.0, 1.5), 1e-8);
}

TEST(DensityGrid, EtaRobustness) {
  const auto s1 = semicircle(1.0), s2 = semicircle(0.5);
  const auto sup = find_support(s1, s2);
  DensityOptions finer;
  finer.eta_min = 1e-7;
  const auto g8 = density_grid(s1, s2, sup, 257);
  const auto g7 = density_grid(s1, s2, sup, 257, finer);
  double diff = 0.0;
  for (std::size_t j = 0; j < g8.rho.size(); ++j) diff = std::max(diff, std::abs(g8.rho[j] - g7.rho[j]));
  EXPECT_LE(diff, 1e-6);
}

TEST(DensityGrid, RichardsonOption) {
  const auto s1 = semicircle(1.0);
  DensityOptions opts;
  opts.richardson = true;
  const auto g = density_grid(s1, s1, find_support(s1, s1), 129, opts);
  EXPECT_EQ(g.eta_used, 0.0);
  double err = 0.0;
  for (std::size_t j = 0; j < g.xs.size(); ++j) {
    if (g.xs[j] - g.e_minus < 1e-1 || g.e_plus - g.xs[j] < 1e-1) continue;
    err = std::max(err, std::abs(g.rho[j] - sc_density(2.0, g.xs[j])));
  }
  EXPECT_LE(err, 1e-6);
}

TEST(DensityGrid, RejectsBadArguments) {
  const auto s1 = semicircle(1.0);
  const auto sup = find_support(s1, s1);
  EXPECT_THROW(density_grid(s1, s1, sup, 15), InvalidArgument);
  DensityOptions bad;
  bad.eta_min = 0.0;
  EXPECT_THROW(density_grid(s1, s1, sup, 64, bad), InvalidArgument);
}

class RandomPairDensity : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(RandomPairDensity, PositivityConservationAndChains) {
  const auto pair = random_pair(GetParam());
  const auto& a = pair.a;
  const auto& b = pair.b;
  const auto sup = find_support(a, b);
  const auto g = density_grid(a, b, sup, 513);

  double c_ratio = 1.0, c_min = INFINITY, c_max = 0.0;
  for (std::size_t j = 1; j + 1 < g.xs.size(); ++j) {
    EXPECT_GT(g.rho[j], 0.0) << j;
    const auto& p = g.points[j];
    EXPECT_LE(std::abs(p.m_value.imag() - p.omega_beta.imag() * i_integral(a, p.omega_beta)), 1e-10) << j;
    EXPECT_LE(std::abs(stieltjes(a, p.omega_beta) - stieltjes(b, p.omega_alpha)), 1e-10) << j;
    const double q = g.rho[j] / std::sqrt((g.xs[j] - g.e_minus) * (g.e_plus - g.xs[j]));
    c_min = std::min(c_min, q);
    c_max = std::max(c_max, q);
  }
  c_ratio = std::max(c_max, 1.0 / c_min);
  RecordProperty("sqrt_comparability_C", std::to_string(c_ratio));
  EXPECT_LT(c_ratio, 1e3);

  EXPECT_NEAR(g.mass, 1.0, 1e-6);
  EXPECT_NEAR(g.mean, 0.0, 1e-8);
  const double var = variance(a) + variance(b);
  EXPECT_NEAR(g.variance / var, 1.0, 1e-5);
  EXPECT_NEAR(cdf_at(g, g.e_plus), 1.0, 1e-6);
}

TEST_P(RandomPairDensity, SquareRootEdges) {
  const auto pair = random_pair(GetParam());
  const auto sup = find_support(pair.a, pair.b);
  for (auto edge : {Edge::lower, Edge::upper}) {
    const auto fit = fit_edge(pair.a, pair.b, sup, edge);
    const double predicted = edge_density_prefactor(pair.a, sup, edge);
    EXPECT_NEAR(fit.slope, 0.5, 0.02);
    EXPECT_NEAR(fit.prefactor / predicted, 1.0, 0.02);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomPairDensity, ::testing::ValuesIn(kPairSeeds));
