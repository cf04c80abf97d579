#pragma once

#include "jmmd/simulation.hpp"

namespace scenarios {

inline jmmd::ScenarioSpec normal(int n) {
  jmmd::ScenarioSpec s;
  s.distribution = jmmd::Distribution::Normal;
  s.beta = {4, 15, 13, 0};
  s.gamma = {0.3, 0, 3, 0};
  s.n = n;
  return s;
}

inline jmmd::ScenarioSpec binomial(int n) {
  jmmd::ScenarioSpec s;
  s.distribution = jmmd::Distribution::Binomial;
  s.beta = {0.2, 0.6, 0, 0.8};
  s.gamma = {1, 0, 0, 2.5};
  s.binomial_index = 10;
  s.n = n;
  return s;
}

inline jmmd::ScenarioSpec poisson(int n) {
  jmmd::ScenarioSpec s;
  s.distribution = jmmd::Distribution::Poisson;
  s.beta = {1.5, 3, 2, 0};
  s.gamma = {0.2, 0, 3, 0};
  s.n = n;
  return s;
}

/// Every row at the same covariate point.
inline jmmd::Covariates constant_covariates(int n) {
  jmmd::Covariates c{Eigen::MatrixXd(n, 3), Eigen::MatrixXd(n, 3)};
  c.x.rowwise() = Eigen::RowVector3d(0.3, -0.2, 0.5);
  c.z.rowwise() = Eigen::RowVector3d(0.1, 0.2, 0.1);
  return c;
}

}  // namespace scenarios
