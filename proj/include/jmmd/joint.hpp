#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "jmmd/glm.hpp"

namespace jmmd {

/// Terms and families of a joint mean/dispersion model.
struct JointSpec {
  std::vector<std::string> mean_terms{kIntercept};
  std::vector<std::string> disp_terms{kIntercept};
  Family mean_family = Family::normal();
  Family disp_family = Family::gamma_dispersion();

  void validate() const {
    const auto has_intercept = [](const std::vector<std::string>& t) {
      return !t.empty() && t.front() == kIntercept;
    };
    if (!has_intercept(mean_terms) || !has_intercept(disp_terms))
      throw Error(ErrorCode::InvalidArgument, "both sub-models must start with the intercept '1'");
    if (disp_family.kind() != FamilyKind::GammaDisp)
      throw Error(ErrorCode::InvalidArgument, "dispersion sub-model must use the Gamma family");
  }
};

template <typename Scalar = double>
struct JointFit {
  FittedGlm<Scalar> mean_fit;
  FittedGlm<Scalar> disp_fit;
  Vec<Scalar> phi_hat;
  Vec<Scalar> std_deviance;
  Scalar eql{};
  int outer_iterations = 0;
  bool converged = false;
};

struct JointControl {
  double tolerance = 1e-8;
  int max_outer = 50;
  IrlsControl irls{};
};

/// Raised when the seesaw hits its iteration cap; keeps the last state for inspection.
template <typename Scalar = double>
class JointNonConvergence : public Error {
 public:
  JointNonConvergence(JointFit<Scalar> last, const std::string& what)
      : Error(ErrorCode::NonConvergence, what), last_(std::move(last)) {}
  const JointFit<Scalar>& last() const noexcept { return last_; }

 private:
  JointFit<Scalar> last_;
};

inline constexpr double kLeverageCeiling = 1.0 - 1e-10;
inline constexpr double kDevianceFloor = 1e-12;

/// d*_i = d_i / (1 - h_i).
template <typename Scalar>
Vec<Scalar> standardized_deviance(const Vec<Scalar>& d, const Vec<Scalar>& h) {
  if (d.size() != h.size())
    throw Error(ErrorCode::InvalidArgument, "deviances and leverages differ in length");
  for (Eigen::Index i = 0; i < h.size(); ++i)
    if (!(h(i) >= Scalar(0) && h(i) < Scalar(kLeverageCeiling)))
      throw Error(ErrorCode::DomainError,
                  "leverage " + std::to_string(double(h(i))) + " at row " + std::to_string(i) +
                      " is outside [0, 1)");
  return (d.array() / (Scalar(1) - h.array())).matrix();
}

/// V(y) with the 1/6 continuity correction where the variance vanishes.
template <typename Scalar>
Scalar guarded_variance(const Family& family, Scalar y) {
  switch (family.kind()) {
    case FamilyKind::Poisson:
      return family.variance(y == Scalar(0) ? y + Scalar(1) / Scalar(6) : y);
    case FamilyKind::Binomial: {
      const Scalar m(family.binomial_index());
      using std::clamp;
      if (y == Scalar(0) || y == m)
        return family.variance(clamp(y, Scalar(1) / Scalar(6), m - Scalar(1) / Scalar(6)));
      return family.variance(y);
    }
    default:
      return family.variance(y);
  }
}

/// Adjusted extended quasi-likelihood
/// Q+ = sum_i -1/2 (d*_i / phi_i + log(2 pi phi_i V(y_i))).
template <typename Scalar>
Scalar extended_quasi_likelihood(const Vec<Scalar>& y, const Vec<Scalar>& mu,
                                 const Vec<Scalar>& phi, const Vec<Scalar>& std_dev,
                                 const Family& family) {
  using std::log;
  const Eigen::Index n = y.size();
  if (mu.size() != n || phi.size() != n || std_dev.size() != n)
    throw Error(ErrorCode::InvalidArgument, "extended quasi-likelihood inputs differ in length");
  Scalar q(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(phi(i) > Scalar(0))) throw Error(ErrorCode::DomainError, "dispersion must be positive");
    const Scalar v = guarded_variance(family, y(i));
    if (!(v > Scalar(0)))
      throw Error(ErrorCode::DomainError,
                  "variance function vanishes at y=" + std::to_string(double(y(i))));
    q -= Scalar(0.5) * (std_dev(i) / phi(i) + log(Scalar(2) * std::numbers::pi_v<Scalar> * phi(i) * v));
  }
  return q;
}

/// Mean/dispersion seesaw: mean GLM with prior weights 1/phi, Gamma log-link
/// GLM on d* with prior weights (1-h)/2, repeated until Q+ settles.
template <typename Scalar>
JointFit<Scalar> fit_joint(const DesignMatrix<Scalar>& mean_design,
                           const DesignMatrix<Scalar>& disp_design, const Vec<Scalar>& y,
                           const Family& mean_family, const JointControl& control = {}) {
  using std::abs;
  const Eigen::Index n = y.size();
  if (mean_design.rows() != n || disp_design.rows() != n)
    throw Error(ErrorCode::InvalidArgument, "designs and response differ in length");
  if (n <= mean_design.cols() || n <= disp_design.cols())
    throw Error(ErrorCode::InvalidArgument, "need more observations than parameters in both sub-models");

  const Family gamma = Family::gamma_dispersion();
  JointFit<Scalar> state;
  Vec<Scalar> phi = Vec<Scalar>::Ones(n);
  Scalar previous = std::numeric_limits<Scalar>::quiet_NaN();
  for (int outer = 1; outer <= control.max_outer; ++outer) {
    state.mean_fit = irls_fit<Scalar>(mean_design, y, mean_family, phi.cwiseInverse().eval(), control.irls);
    state.std_deviance = standardized_deviance<Scalar>(state.mean_fit.deviance_components,
                                                       state.mean_fit.hat_values);
    const Vec<Scalar> response = state.std_deviance.cwiseMax(Scalar(kDevianceFloor));
    const Vec<Scalar> weights =
        ((Scalar(1) - state.mean_fit.hat_values.array()) / Scalar(2)).matrix();
    state.disp_fit = irls_fit<Scalar>(disp_design, response, gamma, weights, control.irls);
    phi = state.disp_fit.fitted_means;
    state.phi_hat = phi;
    state.eql = extended_quasi_likelihood<Scalar>(y, state.mean_fit.fitted_means, phi,
                                                  state.std_deviance, mean_family);
    state.outer_iterations = outer;
    if (outer > 1 && abs(state.eql - previous) / (abs(state.eql) + Scalar(1)) < Scalar(control.tolerance)) {
      state.converged = true;
      return state;
    }
    previous = state.eql;
  }
  throw JointNonConvergence<Scalar>(state, "seesaw did not settle in " +
                                               std::to_string(control.max_outer) + " cycles");
}

}  // namespace jmmd
