#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "jmmd/error.hpp"
#include "jmmd/family.hpp"

namespace jmmd {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr const char* kIntercept = "1";

/// Labelled model matrix; one column per term of the linear predictor.
template <typename Scalar = double>
struct DesignMatrix {
  std::vector<std::string> labels;
  Mat<Scalar> values;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  void validate() const {
    if (static_cast<Eigen::Index>(labels.size()) != values.cols())
      throw Error(ErrorCode::InvalidArgument, "design has " + std::to_string(values.cols()) +
                                                  " columns but " + std::to_string(labels.size()) +
                                                  " labels");
    std::set<std::string> seen;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (!seen.insert(labels[j]).second)
        throw Error(ErrorCode::InvalidArgument, "duplicate column label '" + labels[j] + "'");
      if (labels[j] == kIntercept) {
        if (j != 0) throw Error(ErrorCode::InvalidArgument, "intercept must be the first column");
        if (((values.col(0).array() - Scalar(1)).abs() > Scalar(0)).any())
          throw Error(ErrorCode::InvalidArgument, "intercept column must be all ones");
      }
    }
  }
};

template <typename Scalar = double>
struct FittedGlm {
  std::vector<std::string> labels;
  Vec<Scalar> response;
  Vec<Scalar> coefficients;
  Vec<Scalar> fitted_means;
  Vec<Scalar> linear_predictor;
  Vec<Scalar> deviance_components;  // unit deviances, prior weights not applied
  Vec<Scalar> hat_values;
  Vec<Scalar> prior_weights;
  Vec<Scalar> working_weights;
  Mat<Scalar> unscaled_covariance;  // (X'WX)^{-1}
  bool converged = false;
  int iterations = 0;

  Scalar deviance() const { return deviance_components.sum(); }
  Scalar weighted_deviance() const { return prior_weights.dot(deviance_components); }
  Eigen::Index parameters() const { return coefficients.size(); }
};

struct IrlsControl {
  double tolerance = 1e-10;
  int max_iterations = 100;
  /// Column pivots of X'WX below this fraction of its largest diagonal count as aliased.
  double rank_tolerance = 1e-10;
};

namespace detail {

template <typename Scalar>
struct WeightedSolution {
  Vec<Scalar> coefficients;
  Vec<Scalar> hat_values;
  Mat<Scalar> unscaled_covariance;
};

/// Weighted least squares through a column-pivoted QR of W^{1/2} X.
template <typename Scalar>
WeightedSolution<Scalar> weighted_least_squares(const Mat<Scalar>& x, const Vec<Scalar>& z,
                                                const Vec<Scalar>& w, double rank_tolerance,
                                                bool want_solution = true) {
  using std::sqrt;
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if ((w.array() <= Scalar(0)).any() || !w.allFinite())
    throw Error(ErrorCode::DomainError, "working weights must be positive and finite");
  const Vec<Scalar> sw = w.array().sqrt().matrix();
  const Mat<Scalar> a = sw.asDiagonal() * x;
  Eigen::ColPivHouseholderQR<Mat<Scalar>> qr(a);
  const Scalar largest = a.colwise().squaredNorm().maxCoeff();
  const auto& r = qr.matrixQR();
  for (Eigen::Index i = 0; i < p; ++i) {
    const Scalar rii = r(i, i);
    if (!(rii * rii > Scalar(rank_tolerance) * largest))
      throw Error(ErrorCode::SingularDesign,
                  "design is rank deficient (pivot " + std::to_string(i) + " of " +
                      std::to_string(p) + ")");
  }
  WeightedSolution<Scalar> out;
  if (want_solution) out.coefficients = qr.solve(Vec<Scalar>(sw.cwiseProduct(z)));
  const Mat<Scalar> q = qr.householderQ() * Mat<Scalar>::Identity(n, p);
  out.hat_values = q.rowwise().squaredNorm();
  const Mat<Scalar> rinv = r.topLeftCorner(p, p)
                               .template triangularView<Eigen::Upper>()
                               .solve(Mat<Scalar>::Identity(p, p));
  const Mat<Scalar> inner = rinv * rinv.transpose();
  const auto& perm = qr.colsPermutation();
  out.unscaled_covariance = perm * inner * perm.transpose();
  return out;
}

template <typename Scalar>
Scalar weighted_total(const Family& family, const Vec<Scalar>& y, const Vec<Scalar>& mu,
                      const Vec<Scalar>& prior) {
  Scalar total(0);
  for (Eigen::Index i = 0; i < y.size(); ++i)
    total += prior(i) * family.unit_deviance(y(i), mu(i));
  return total;
}

}  // namespace detail

/// Per-observation unit deviances d_i of a fitted mean vector.
template <typename Scalar>
Vec<Scalar> deviance_components(const Vec<Scalar>& response, const Vec<Scalar>& fitted_means,
                                const Family& family) {
  if (response.size() != fitted_means.size())
    throw Error(ErrorCode::InvalidArgument, "response and fitted means differ in length");
  Vec<Scalar> d(response.size());
  for (Eigen::Index i = 0; i < response.size(); ++i) {
    if (!family.in_observation_domain(response(i)))
      throw Error(ErrorCode::DomainError, "response " + std::to_string(double(response(i))) +
                                              " outside the " + family.name() + " domain");
    if (!family.in_mean_domain(fitted_means(i)))
      throw Error(ErrorCode::DomainError, "mean " + std::to_string(double(fitted_means(i))) +
                                              " outside the " + family.name() + " domain");
    using std::max;
    d(i) = max(Scalar(0), family.unit_deviance(response(i), fitted_means(i)));
  }
  return d;
}

/// Leverages: diagonal of W^{1/2} X (X'WX)^{-1} X' W^{1/2}.
template <typename Scalar>
Vec<Scalar> hat_values(const DesignMatrix<Scalar>& design, const Vec<Scalar>& working_weights,
                       double rank_tolerance = IrlsControl{}.rank_tolerance) {
  if (working_weights.size() != design.rows())
    throw Error(ErrorCode::InvalidArgument, "weights and design differ in length");
  return detail::weighted_least_squares<Scalar>(design.values, Vec<Scalar>(), working_weights,
                                                rank_tolerance, false)
      .hat_values;
}

/// Iteratively reweighted least squares for a quasi-likelihood GLM with prior weights.
template <typename Scalar>
FittedGlm<Scalar> irls_fit(const DesignMatrix<Scalar>& design, const Vec<Scalar>& response,
                           const Family& family, const Vec<Scalar>& prior_weights,
                           const IrlsControl& control = {}) {
  using std::abs;
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  design.validate();
  if (response.size() != n || prior_weights.size() != n)
    throw Error(ErrorCode::InvalidArgument, "response, weights and design differ in length");
  if (n < p)
    throw Error(ErrorCode::InvalidArgument,
                "need at least as many observations (" + std::to_string(n) + ") as parameters (" +
                    std::to_string(p) + ")");
  if ((prior_weights.array() <= Scalar(0)).any() || !prior_weights.allFinite())
    throw Error(ErrorCode::DomainError, "prior weights must be positive");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!family.in_observation_domain(response(i)))
      throw Error(ErrorCode::DomainError, "response " + std::to_string(double(response(i))) +
                                              " at row " + std::to_string(i) + " outside the " +
                                              family.name() + " domain");

  const Mat<Scalar>& x = design.values;
  Vec<Scalar> mu(n), eta(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    mu(i) = family.starting_mean(response(i));
    eta(i) = family.link_fn(mu(i));
  }

  const auto working = [&](const Vec<Scalar>& m) {
    Vec<Scalar> w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Scalar g = family.mu_eta(m(i));
      w(i) = prior_weights(i) * g * g / family.variance(m(i));
    }
    return w;
  };
  const auto valid = [&](const Vec<Scalar>& m) {
    for (Eigen::Index i = 0; i < n; ++i)
      if (!family.in_mean_domain(m(i))) return false;
    return true;
  };

  FittedGlm<Scalar> fit;
  fit.labels = design.labels;
  fit.response = response;
  fit.prior_weights = prior_weights;
  Vec<Scalar> coef;
  Scalar dev_old = std::numeric_limits<Scalar>::infinity();
  bool converged = false;
  int it = 0;
  for (it = 1; it <= control.max_iterations; ++it) {
    const Vec<Scalar> w = working(mu);
    Vec<Scalar> z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = eta(i) + (response(i) - mu(i)) / family.mu_eta(mu(i));
    Vec<Scalar> next =
        detail::weighted_least_squares<Scalar>(x, z, w, control.rank_tolerance).coefficients;

    Vec<Scalar> eta_new = x * next;
    Vec<Scalar> mu_new = eta_new.unaryExpr([&](Scalar e) { return family.inverse_link(e); });
    Scalar dev = valid(mu_new) ? detail::weighted_total(family, response, mu_new, prior_weights)
                               : std::numeric_limits<Scalar>::quiet_NaN();
    // Step halving keeps the deviance finite and non-increasing.
    for (int half = 0; coef.size() == p && half < 40 &&
                       (!std::isfinite(double(dev)) || dev > dev_old * (Scalar(1) + Scalar(1e-12)));
         ++half) {
      next = (next + coef) / Scalar(2);
      eta_new = x * next;
      mu_new = eta_new.unaryExpr([&](Scalar e) { return family.inverse_link(e); });
      dev = valid(mu_new) ? detail::weighted_total(family, response, mu_new, prior_weights)
                          : std::numeric_limits<Scalar>::quiet_NaN();
    }
    if (!std::isfinite(double(dev)))
      throw Error(ErrorCode::NonConvergence, "IRLS left the mean domain of the " + family.name() +
                                                 " family");
    coef = next;
    eta = eta_new;
    mu = mu_new;
    if (abs(dev - dev_old) / (abs(dev) + Scalar(0.1)) < Scalar(control.tolerance)) {
      converged = true;
      break;
    }
    dev_old = dev;
  }
  if (!converged)
    throw Error(ErrorCode::NonConvergence,
                "IRLS did not converge in " + std::to_string(control.max_iterations) + " iterations");

  fit.coefficients = coef;
  fit.linear_predictor = eta;
  fit.fitted_means = mu;
  fit.deviance_components = deviance_components<Scalar>(response, mu, family);
  fit.working_weights = working(mu);
  auto final_solve = detail::weighted_least_squares<Scalar>(x, Vec<Scalar>(), fit.working_weights,
                                                            control.rank_tolerance, false);
  fit.hat_values = final_solve.hat_values;
  fit.unscaled_covariance = final_solve.unscaled_covariance;
  fit.converged = true;
  fit.iterations = it;
  return fit;
}

}  // namespace jmmd
