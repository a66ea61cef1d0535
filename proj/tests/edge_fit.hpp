#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "freeconv/density.hpp"

namespace freeconv::testing {

struct EdgeFit {
  double slope = 0.0;      // least-squares slope of log rho against log distance
  double prefactor = 0.0;  // exp of the mean of log rho - log distance / 2
};

// Samples rho at distances 1e-6 .. 1e-3 inside the given edge.
inline EdgeFit fit_edge(const JacobiMeasure& a, const JacobiMeasure& b, const SupportResult& sup,
                        Edge edge, int samples = 13) {
  std::vector<double> lx, ly;
  std::optional<complex> warm;
  for (int k = samples - 1; k >= 0; --k) {
    const double d = std::pow(10.0, -6.0 + 3.0 * k / (samples - 1));
    const double x = edge == Edge::lower ? sup.e_minus + d : sup.e_plus - d;
    const auto p = solve_point(a, b, complex(x, 1e-8), warm);
    warm = p.omega_beta;
    lx.push_back(std::log(d));
    ly.push_back(std::log(p.m_value.imag() / std::numbers::pi));
  }
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, sc = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
    sc += ly[i] - 0.5 * lx[i];
  }
  return {(n * sxy - sx * sy) / (n * sxx - sx * sx), std::exp(sc / n)};
}

}  // namespace freeconv::testing
