#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "jmmd/glm.hpp"

namespace testutil {

inline jmmd::DesignMatrix<double> random_design(Eigen::Index n, Eigen::Index extra,
                                                std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  jmmd::DesignMatrix<double> d;
  d.values.resize(n, extra + 1);
  d.labels.push_back(jmmd::kIntercept);
  for (Eigen::Index j = 0; j < extra; ++j) d.labels.push_back("x" + std::to_string(j + 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    d.values(i, 0) = 1.0;
    for (Eigen::Index j = 1; j <= extra; ++j) d.values(i, j) = u(rng);
  }
  return d;
}

/// First `cols` columns of a design.
inline jmmd::DesignMatrix<double> leading(const jmmd::DesignMatrix<double>& d, Eigen::Index cols) {
  jmmd::DesignMatrix<double> out;
  out.labels.assign(d.labels.begin(), d.labels.begin() + cols);
  out.values = d.values.leftCols(cols);
  return out;
}

}  // namespace testutil
