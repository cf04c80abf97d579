#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <utility>
#include <vector>

#include "jmmd/family.hpp"

namespace oracle {

/// [int_a^b sqrt(1 + phi^2 V'(t)^2) dt]^2 by adaptive Gauss-Kronrod quadrature.
inline double arc_length_quadrature(double a, double b, const jmmd::Family& family, double phi) {
  if (a == b) return 0.0;
  const auto integrand = [&](double t) {
    const double dv = family.variance_derivative(t);
    return std::sqrt(1.0 + phi * phi * dv * dv);
  };
  const double len =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, a, b, 15, 1e-15);
  return len * len;
}

/// Twenty (a, b) pairs inside the family's domain.
inline std::vector<std::pair<double, double>> arc_grid(const jmmd::Family& family) {
  std::vector<std::pair<double, double>> out;
  double lo = -5.0, hi = 5.0;
  switch (family.kind()) {
    case jmmd::FamilyKind::Normal: break;
    case jmmd::FamilyKind::Poisson: lo = 0.0; hi = 12.0; break;
    case jmmd::FamilyKind::Binomial: lo = 0.0; hi = family.binomial_index(); break;
    case jmmd::FamilyKind::GammaDisp: lo = 0.01; hi = 6.0; break;
  }
  for (int i = 0; i < 20; ++i) {
    const double a = lo + (hi - lo) * ((i * 7) % 20) / 19.0;
    const double b = lo + (hi - lo) * ((i * 13 + 5) % 20) / 19.0;
    out.emplace_back(a, b == a ? (a + hi) / 2.0 : b);
  }
  return out;
}

}  // namespace oracle
