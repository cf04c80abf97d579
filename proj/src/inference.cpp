#include "jmmd/inference.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

namespace jmmd {

namespace {

double clamp_improvement(double small, double big) {
  const double drop = small - big;
  if (drop < -kNestingTolerance * std::max(1.0, std::abs(small)))
    throw Error(ErrorCode::NegativeImprovement,
                "larger model fits worse (" + std::to_string(big) + " > " + std::to_string(small) + ")");
  return std::max(drop, 0.0);
}

}  // namespace

TestResult f_test_nested(double s_small, double s_big, long c, long d, long n) {
  if (d <= c || n <= d)
    throw Error(ErrorCode::InvalidArgument, "F test needs c < d < n");
  if (!(s_big > 0.0)) throw Error(ErrorCode::DegenerateResponse, "larger model has zero residual");
  const double drop = clamp_improvement(s_small, s_big);
  TestResult out;
  out.statistic = (drop / double(d - c)) / (s_big / double(n - d));
  if (out.statistic > 0.0) {
    boost::math::fisher_f dist(double(d - c), double(n - d));
    out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  }
  return out;
}

TestResult chisq_test_nested(double deviance_small, double deviance_big, long a, long b) {
  if (b <= a) throw Error(ErrorCode::InvalidArgument, "chi-square test needs a < b");
  TestResult out;
  out.statistic = 0.5 * clamp_improvement(deviance_small, deviance_big);
  if (out.statistic > 0.0) {
    boost::math::chi_squared dist(double(b - a));
    out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  }
  return out;
}

double pearson_dispersion(const FittedGlm<double>& fit, const Family& family) {
  const Eigen::Index n = fit.fitted_means.size();
  const Eigen::Index p = fit.parameters();
  if (n <= p) throw Error(ErrorCode::PenaltyOverflow, "no residual degrees of freedom");
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = fit.response(i) - fit.fitted_means(i);
    total += fit.prior_weights(i) * r * r / family.variance(fit.fitted_means(i));
  }
  return total / double(n - p);
}

std::vector<CoefficientRow> coefficient_table(const FittedGlm<double>& fit, const Family& family) {
  const double scale = pearson_dispersion(fit, family);
  const double df = double(fit.fitted_means.size() - fit.parameters());
  boost::math::students_t dist(df);
  std::vector<CoefficientRow> rows;
  for (Eigen::Index j = 0; j < fit.parameters(); ++j) {
    CoefficientRow row;
    row.term = fit.labels[static_cast<std::size_t>(j)];
    row.estimate = fit.coefficients(j);
    row.std_error = std::sqrt(scale * fit.unscaled_covariance(j, j));
    row.t_value = row.estimate / row.std_error;
    row.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(row.t_value)));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace jmmd
