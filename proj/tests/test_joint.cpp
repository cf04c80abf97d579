#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "jmmd/dataset.hpp"
#include "jmmd/joint.hpp"
#include "jmmd/simulation.hpp"
#include "test_util.hpp"

using namespace jmmd;

TEST_CASE("standardized deviance divides by one minus leverage") {
  const auto a = standardized_deviance<double>(Eigen::Vector2d(1, 2), Eigen::Vector2d(0, 0));
  CHECK(a(0) == 1.0);
  CHECK(a(1) == 2.0);
  Eigen::VectorXd one(1), half(1);
  one << 1.0;
  half << 0.5;
  CHECK(standardized_deviance<double>(one, half)(0) == doctest::Approx(2.0));
  const auto b = standardized_deviance<double>(Eigen::Vector3d(0.3, 0.3, 0.3),
                                               Eigen::Vector3d(0.1, 0.2, 0.7));
  CHECK(b(0) == doctest::Approx(0.3 / 0.9));
  CHECK(b(1) == doctest::Approx(0.375));
  CHECK(b(2) == doctest::Approx(1.0));
  CHECK_THROWS_AS(standardized_deviance<double>(one, Eigen::VectorXd::Ones(1)), Error);
  CHECK_THROWS_AS(standardized_deviance<double>(one, Eigen::VectorXd::Constant(1, -0.1)), Error);
}

TEST_CASE("extended quasi-likelihood") {
  const Eigen::Vector4d y(1, 2, 3, 4);
  const Eigen::Vector4d zero = Eigen::Vector4d::Zero();
  const Eigen::Vector4d ones = Eigen::Vector4d::Ones();
  const double q = extended_quasi_likelihood<double>(y, y, ones, zero, Family::normal());
  CHECK(q == doctest::Approx(-2.0 * std::log(2.0 * std::numbers::pi)));
  const double q2 = extended_quasi_likelihood<double>(y, y, (2.0 * ones).eval(), zero,
                                                      Family::normal());
  CHECK(q2 - q == doctest::Approx(-2.0 * std::log(2.0)));

  // Poisson y=2, mu=1: d = 2(2 log 2 - 1), V(y) = 2.
  Eigen::VectorXd y1(1), mu1(1), phi1(1), d1(1);
  y1 << 2.0;
  mu1 << 1.0;
  phi1 << 1.0;
  d1 << 2.0 * (2.0 * std::log(2.0) - 1.0);
  const double expected = -0.5 * (d1(0) + std::log(2.0 * std::numbers::pi * 2.0));
  CHECK(extended_quasi_likelihood<double>(y1, mu1, phi1, d1, Family::poisson()) ==
        doctest::Approx(expected));

  // Larger deviance lowers Q+.
  Eigen::Vector4d bigger = zero;
  bigger(2) = 0.5;
  CHECK(extended_quasi_likelihood<double>(y, y, ones, bigger, Family::normal()) < q);
}

TEST_CASE("variance guard at the boundary of the sample space") {
  CHECK(guarded_variance(Family::poisson(), 0.0) == doctest::Approx(1.0 / 6.0));
  CHECK(guarded_variance(Family::binomial(5), 0.0) ==
        doctest::Approx((1.0 / 6.0) * (1.0 - 1.0 / 30.0)));
  CHECK(guarded_variance(Family::binomial(5), 5.0) ==
        doctest::Approx((5.0 - 1.0 / 6.0) * (1.0 / 30.0)));
  CHECK(guarded_variance(Family::poisson(), 3.0) == doctest::Approx(3.0));
}

namespace {

Dataset normal_scenario(int n, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.distribution = Distribution::Normal;
  spec.beta = {4, 15, 13, 0};
  spec.gamma = {0.3, 0, 3, 0};
  spec.n = n;
  Rng rng(seed);
  return gen_normal(spec, rng);
}

}  // namespace

TEST_CASE("constant dispersion reproduces the ordinary fit") {
  const Dataset data = normal_scenario(60, 3);
  JointSpec spec;
  spec.mean_terms = {"1", "x1", "x2"};
  const auto fit = fit_joint(data, spec);
  const Eigen::MatrixXd x = build_design(data, spec.mean_terms).values;
  const Eigen::VectorXd ols = x.colPivHouseholderQr().solve(data.response());
  CHECK((fit.mean_fit.coefficients - ols).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(fit.phi_hat.maxCoeff() - fit.phi_hat.minCoeff() < 1e-10);
  CHECK(fit.converged);
}

TEST_CASE("joint fit invariants") {
  const Dataset data = normal_scenario(200, 4);
  JointSpec spec;
  spec.mean_terms = {"1", "x1", "x2"};
  spec.disp_terms = {"1", "z2"};
  JointControl tight;
  tight.tolerance = 1e-14;
  const auto fit = fit_joint(data, spec, tight);
  REQUIRE(fit.converged);
  CHECK((fit.phi_hat.array() > 0.0).all());
  CHECK((fit.std_deviance.array() >= fit.mean_fit.deviance_components.array()).all());
  CHECK((fit.mean_fit.prior_weights - fit.phi_hat.cwiseInverse()).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::VectorXd half_lev = (1.0 - fit.mean_fit.hat_values.array()) / 2.0;
  CHECK((fit.disp_fit.prior_weights - half_lev).cwiseAbs().maxCoeff() < 1e-6);
  const Eigen::MatrixXd z = build_design(data, spec.disp_terms).values;
  const Eigen::VectorXd phi = (z * fit.disp_fit.coefficients).array().exp();
  CHECK((phi - fit.disp_fit.fitted_means).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(fit.eql == doctest::Approx(extended_quasi_likelihood<double>(
                       data.response(), fit.mean_fit.fitted_means, fit.phi_hat, fit.std_deviance,
                       Family::normal())));

  // The default tolerance lands within ten tolerances of the fixed point.
  const auto loose = fit_joint(data, spec);
  CHECK(std::abs(loose.eql - fit.eql) < 10.0 * 1e-8 * (std::abs(fit.eql) + 1.0));
}

TEST_CASE("large-sample estimates are consistent") {
  const Dataset data = normal_scenario(10000, 5);
  JointSpec spec;
  spec.mean_terms = {"1", "x1", "x2", "x3"};
  spec.disp_terms = {"1", "z1", "z2", "z3"};
  const auto fit = fit_joint(data, spec);
  const Eigen::Vector4d beta(4, 15, 13, 0), gamma(0.3, 0, 3, 0);
  const Eigen::VectorXd se_mean = fit.mean_fit.unscaled_covariance.diagonal().cwiseSqrt();
  // Gamma log-link with prior weights (1-h)/2 has dispersion 2.
  const Eigen::VectorXd se_disp = (2.0 * fit.disp_fit.unscaled_covariance.diagonal()).cwiseSqrt();
  for (int j = 0; j < 4; ++j) {
    CHECK(std::abs(fit.mean_fit.coefficients(j) - beta(j)) < 3.0 * se_mean(j));
    CHECK(std::abs(fit.disp_fit.coefficients(j) - gamma(j)) < 3.0 * se_disp(j));
  }
}

TEST_CASE("iteration cap keeps the last state") {
  const Dataset data = normal_scenario(80, 6);
  JointSpec spec;
  spec.mean_terms = {"1", "x1", "x2"};
  spec.disp_terms = {"1", "z2"};
  JointControl control;
  control.max_outer = 1;
  control.tolerance = 1e-300;
  try {
    fit_joint(data, spec, control);
    FAIL("expected the seesaw to stop at its cap");
  } catch (const JointNonConvergence<double>& e) {
    CHECK(e.code() == ErrorCode::NonConvergence);
    CHECK(e.last().outer_iterations == 1);
    CHECK(e.last().phi_hat.size() == 80);
  }
}

TEST_CASE("joint specification checks") {
  JointSpec spec;
  spec.mean_terms = {"x1"};
  CHECK_THROWS_AS(spec.validate(), Error);
  const Dataset data = normal_scenario(5, 7);
  JointSpec wide;
  wide.mean_terms = {"1", "x1", "x2", "x3", "z1"};
  CHECK_THROWS_AS(fit_joint(data, wide), Error);
}
