#include <doctest.h>

#include <random>

#include "jmmd/glm.hpp"
#include "test_util.hpp"

using namespace jmmd;
using testutil::leading;
using testutil::random_design;

TEST_CASE("normal identity IRLS equals ordinary least squares") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int rep = 0; rep < 5; ++rep) {
    const auto d = random_design(40, 3, rng);
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) y(i) = 1.0 + 2.0 * d.values(i, 1) + z(rng);
    const auto fit = irls_fit<double>(d, y, Family::normal(), Eigen::VectorXd::Ones(40));
    const Eigen::VectorXd ols = d.values.colPivHouseholderQr().solve(y);
    CHECK((fit.coefficients - ols).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(fit.converged);
  }
}

TEST_CASE("weighted normal fit equals weighted least squares") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  const auto d = random_design(30, 2, rng);
  Eigen::VectorXd y(30), w(30);
  for (int i = 0; i < 30; ++i) {
    y(i) = d.values(i, 1) - d.values(i, 2) + u(rng);
    w(i) = u(rng);
  }
  const auto fit = irls_fit<double>(d, y, Family::normal(), w);
  const Eigen::MatrixXd xtw = d.values.transpose() * w.asDiagonal();
  const Eigen::VectorXd wls = (xtw * d.values).ldlt().solve(xtw * y);
  CHECK((fit.coefficients - wls).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("hat values sum to the number of parameters") {
  std::mt19937_64 rng(13);
  std::poisson_distribution<int> pois(4.0);
  for (Eigen::Index p : {1, 2, 4}) {
    const auto d = random_design(25, p - 1, rng);
    Eigen::VectorXd y(25);
    for (int i = 0; i < 25; ++i) y(i) = pois(rng);
    const auto fit = irls_fit<double>(d, y, Family::poisson(), Eigen::VectorXd::Ones(25));
    CHECK(fit.hat_values.sum() == doctest::Approx(double(p)).epsilon(1e-9));
    CHECK((fit.hat_values.array() >= 0.0).all());
    CHECK((fit.hat_values.array() <= 1.0).all());
    const auto h = hat_values<double>(d, fit.working_weights);
    CHECK((h - fit.hat_values).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("deviance does not increase when terms are added") {
  std::mt19937_64 rng(14);
  std::binomial_distribution<int> bin(10, 0.4);
  std::poisson_distribution<int> pois(3.0);
  std::normal_distribution<double> z(0.0, 1.0);
  const auto d = random_design(50, 4, rng);
  Eigen::VectorXd yb(50), yp(50), yn(50);
  for (int i = 0; i < 50; ++i) {
    yb(i) = bin(rng);
    yp(i) = pois(rng);
    yn(i) = z(rng);
  }
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(50);
  const std::vector<std::pair<Family, Eigen::VectorXd>> cases{
      {Family::binomial(10), yb}, {Family::poisson(), yp}, {Family::normal(), yn}};
  for (const auto& [family, y] : cases) {
    double previous = std::numeric_limits<double>::infinity();
    for (Eigen::Index cols = 1; cols <= 5; ++cols) {
      const double dev = irls_fit<double>(leading(d, cols), y, family, ones).deviance();
      CHECK(dev <= previous + 1e-9);
      previous = dev;
    }
  }
}

TEST_CASE("intercept-only fits recover the sample mean") {
  Eigen::VectorXd y(6);
  y << 0, 2, 3, 5, 1, 7;
  DesignMatrix<double> d{{kIntercept}, Eigen::MatrixXd::Ones(6, 1)};
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(6);
  for (const Family& f : {Family::normal(), Family::poisson(), Family::binomial(8)}) {
    const auto fit = irls_fit<double>(d, y, f, ones);
    CHECK(fit.fitted_means(0) == doctest::Approx(y.mean()).epsilon(1e-10));
  }
}

TEST_CASE("deviance components match their closed forms") {
  Eigen::VectorXd y(3), mu(3);
  y << 0.0, 2.0, 5.0;
  mu << 1.0, 2.5, 4.0;
  const auto dn = deviance_components<double>(y, mu, Family::normal());
  CHECK(dn(2) == doctest::Approx(1.0));
  const auto dp = deviance_components<double>(y, mu, Family::poisson());
  CHECK(dp(0) == doctest::Approx(2.0));
  CHECK(dp(1) == doctest::Approx(2.0 * (2.0 * std::log(2.0 / 2.5) + 0.5)));
  const auto dg = deviance_components<double>(Eigen::Vector2d(2.0, 1.0), Eigen::Vector2d(1.0, 1.0),
                                              Family::gamma_dispersion());
  CHECK(dg(0) == doctest::Approx(2.0 * (-std::log(2.0) + 1.0)));
  CHECK(dg(1) == doctest::Approx(0.0));
  const auto db = deviance_components<double>(Eigen::Vector2d(0.0, 4.0), Eigen::Vector2d(2.0, 2.0),
                                              Family::binomial(4));
  CHECK(db(0) == doctest::Approx(2.0 * 4.0 * std::log(2.0)));
  CHECK(db(1) == doctest::Approx(2.0 * 4.0 * std::log(2.0)));
}

TEST_CASE("aliased columns are reported") {
  Eigen::MatrixXd x(5, 3);
  x << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8, 1, 5, 10;
  DesignMatrix<double> d{{kIntercept, "a", "b"}, x};
  Eigen::VectorXd y(5);
  y << 1, 2, 3, 5, 4;
  CHECK_THROWS_AS(irls_fit<double>(d, y, Family::normal(), Eigen::VectorXd::Ones(5)), Error);
  try {
    irls_fit<double>(d, y, Family::normal(), Eigen::VectorXd::Ones(5));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularDesign);
  }
}

TEST_CASE("responses outside the family domain are rejected") {
  DesignMatrix<double> d{{kIntercept}, Eigen::MatrixXd::Ones(3, 1)};
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(irls_fit<double>(d, Eigen::Vector3d(1, -1, 2), Family::poisson(), ones), Error);
  CHECK_THROWS_AS(irls_fit<double>(d, Eigen::Vector3d(1, 11, 2), Family::binomial(10), ones),
                  Error);
  CHECK_THROWS_AS(irls_fit<double>(d, Eigen::Vector3d(1, 2, 3), Family::normal(),
                                   Eigen::Vector3d(1, 0, 1)),
                  Error);
}

TEST_CASE("long double instantiation agrees with double") {
  std::mt19937_64 rng(15);
  std::poisson_distribution<int> pois(5.0);
  const auto d = random_design(20, 2, rng);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) y(i) = pois(rng);
  const auto fd = irls_fit<double>(d, y, Family::poisson(), Eigen::VectorXd::Ones(20));
  DesignMatrix<long double> dl{d.labels, d.values.cast<long double>()};
  const auto fl = irls_fit<long double>(dl, y.cast<long double>(), Family::poisson(),
                                        Vec<long double>::Ones(20));
  CHECK((fd.coefficients - fl.coefficients.cast<double>()).cwiseAbs().maxCoeff() < 1e-9);
}
