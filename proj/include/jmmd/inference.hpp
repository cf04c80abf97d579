#pragma once

#include <string>
#include <vector>

#include "jmmd/glm.hpp"

namespace jmmd {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Nested F test on S = sum d*_i / phi_i for mean models of dimension c < d.
TestResult f_test_nested(double s_small, double s_big, long c, long d, long n);

/// Nested chi-square test on half the drop in Gamma deviance, dimensions a < b.
TestResult chisq_test_nested(double deviance_small, double deviance_big, long a, long b);

/// Tolerance below which a worse nested fit still counts as "no change".
inline constexpr double kNestingTolerance = 1e-8;

/// sum w_i (y_i - mu_i)^2 / V(mu_i) / (n - p).
double pearson_dispersion(const FittedGlm<double>& fit, const Family& family);

struct CoefficientRow {
  std::string term;
  double estimate = 0.0;
  double std_error = 0.0;
  double t_value = 0.0;
  double p_value = 1.0;
};

/// Wald table: standard errors from the Pearson-scaled (X'WX)^{-1}, t tests on
/// n - p residual degrees of freedom.
std::vector<CoefficientRow> coefficient_table(const FittedGlm<double>& fit, const Family& family);

}  // namespace jmmd
