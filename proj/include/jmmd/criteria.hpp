#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "jmmd/glm.hpp"

namespace jmmd {

enum class CriterionKind {
  R2MeanSqrtN,
  R2MeanLogN,
  R2MeanUnit,
  EAIC,
  R2DispSqrtN,
  R2DispLogN,
  R2DispUnit,
  AICc,
};

enum class Direction { Maximize, Minimize };
enum class PenaltyRate { SqrtN, LogN, Unit };

inline Direction direction(CriterionKind kind) {
  return (kind == CriterionKind::EAIC || kind == CriterionKind::AICc) ? Direction::Minimize
                                                                     : Direction::Maximize;
}

inline bool is_mean_criterion(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::R2MeanSqrtN:
    case CriterionKind::R2MeanLogN:
    case CriterionKind::R2MeanUnit:
    case CriterionKind::EAIC:
      return true;
    default:
      return false;
  }
}

inline std::optional<PenaltyRate> penalty_rate(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::R2MeanSqrtN:
    case CriterionKind::R2DispSqrtN: return PenaltyRate::SqrtN;
    case CriterionKind::R2MeanLogN:
    case CriterionKind::R2DispLogN: return PenaltyRate::LogN;
    case CriterionKind::R2MeanUnit:
    case CriterionKind::R2DispUnit: return PenaltyRate::Unit;
    default: return std::nullopt;
  }
}

inline std::string to_string(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::R2MeanSqrtN: return "R2m(sqrt n)";
    case CriterionKind::R2MeanLogN: return "R2m(log n)";
    case CriterionKind::R2MeanUnit: return "R2m(1)";
    case CriterionKind::EAIC: return "EAIC";
    case CriterionKind::R2DispSqrtN: return "R2d(sqrt n)";
    case CriterionKind::R2DispLogN: return "R2d(log n)";
    case CriterionKind::R2DispUnit: return "R2d(1)";
    case CriterionKind::AICc: return "AICc";
  }
  return "?";
}

/// True when `candidate` is strictly better than `incumbent` under `kind`.
inline bool improves(CriterionKind kind, double candidate, double incumbent) {
  return direction(kind) == Direction::Maximize ? candidate > incumbent : candidate < incumbent;
}

struct CriterionValue {
  CriterionKind kind{};
  double value = 0.0;
  long n = 0;
  long params = 0;
  std::optional<double> lambda_n;
};

template <typename Scalar = double>
Scalar penalty_lambda(PenaltyRate rate, Eigen::Index n) {
  using std::log;
  using std::sqrt;
  switch (rate) {
    case PenaltyRate::SqrtN: return sqrt(Scalar(n));
    case PenaltyRate::LogN: return log(Scalar(n));
    case PenaltyRate::Unit: return Scalar(1);
  }
  return Scalar(1);
}

namespace detail {

/// Antiderivative of sqrt(1 + v^2), doubled.
template <typename Scalar>
Scalar arc_primitive(Scalar v) {
  using std::asinh;
  using std::sqrt;
  return v * sqrt(Scalar(1) + v * v) + asinh(v);
}

template <typename Scalar>
void require_arc_domain(const Family& family, Scalar a, Scalar b) {
  const auto ok = [&](Scalar t) {
    using std::isfinite;
    if (!isfinite(t)) return false;
    switch (family.kind()) {
      case FamilyKind::Normal: return true;
      case FamilyKind::Poisson:
      case FamilyKind::GammaDisp: return t >= Scalar(0);
      case FamilyKind::Binomial: return t >= Scalar(0) && t <= Scalar(family.binomial_index());
    }
    return false;
  };
  if (!ok(a) || !ok(b))
    throw Error(ErrorCode::DomainError, "arc-length arguments outside the " + family.name() +
                                            " domain");
}

}  // namespace detail

/// Squared arc length of the variance function scaled by phi,
/// [int_a^b sqrt(1 + phi^2 V'(t)^2) dt]^2.
template <typename Scalar>
Scalar weighted_arc_length_distance(Scalar a, Scalar b, const Family& family, Scalar phi) {
  if (!(phi > Scalar(0))) throw Error(ErrorCode::DomainError, "phi must be positive");
  detail::require_arc_domain(family, a, b);
  if (a == b) return Scalar(0);
  const Scalar diff = b - a;
  switch (family.kind()) {
    case FamilyKind::Normal: return diff * diff;
    case FamilyKind::Poisson: return (Scalar(1) + phi * phi) * diff * diff;
    case FamilyKind::Binomial: {
      const Scalar m(family.binomial_index());
      const Scalar alpha = phi * (Scalar(1) - Scalar(2) * a / m);
      const Scalar beta = phi * (Scalar(1) - Scalar(2) * b / m);
      const Scalar len = m / (Scalar(4) * phi) *
                         (detail::arc_primitive(alpha) - detail::arc_primitive(beta));
      return len * len;
    }
    case FamilyKind::GammaDisp: {
      const Scalar len = (detail::arc_primitive(Scalar(2) * phi * b) -
                          detail::arc_primitive(Scalar(2) * phi * a)) /
                         (Scalar(4) * phi);
      return len * len;
    }
  }
  return Scalar(0);
}

/// Squared arc length of the variance function between a and b.
template <typename Scalar>
Scalar arc_length_distance(Scalar a, Scalar b, const Family& family) {
  return weighted_arc_length_distance<Scalar>(a, b, family, Scalar(1));
}

namespace detail {

template <typename Scalar>
Scalar adjusted_ratio(Scalar unexplained, Scalar total, Eigen::Index n, Scalar penalty) {
  if (!(total > Scalar(0)))
    throw Error(ErrorCode::DegenerateResponse, "response has no variation about its mean");
  const Scalar resid_df = Scalar(n) - penalty;
  if (!(resid_df > Scalar(0)))
    throw Error(ErrorCode::PenaltyOverflow, "penalised degrees of freedom " +
                                                std::to_string(double(resid_df)) +
                                                " are not positive");
  return Scalar(1) - (unexplained / resid_df) / (total / Scalar(n - 1));
}

template <typename Scalar>
void require_same_length(const Vec<Scalar>& a, const Vec<Scalar>& b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::InvalidArgument, "vectors differ in length");
  if (a.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two observations");
}

}  // namespace detail

/// 1 - [sum (y - mu)^2 / (n - lambda r)] / [sum (y - ybar)^2 / (n - 1)].
template <typename Scalar>
Scalar r2_hu_shao(const Vec<Scalar>& y, const Vec<Scalar>& mu_hat, Eigen::Index r,
                  Scalar lambda_n) {
  detail::require_same_length(y, mu_hat);
  const Scalar ybar = y.mean();
  return detail::adjusted_ratio<Scalar>((y - mu_hat).squaredNorm(),
                                        (y.array() - ybar).square().sum(), y.size(),
                                        lambda_n * Scalar(r));
}

template <typename Scalar>
Scalar r2_zhang(const Vec<Scalar>& y, const Vec<Scalar>& mu_hat, const Family& family,
                Eigen::Index r) {
  detail::require_same_length(y, mu_hat);
  const Scalar ybar = y.mean();
  Scalar num(0), den(0);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    num += arc_length_distance<Scalar>(y(i), mu_hat(i), family);
    den += arc_length_distance<Scalar>(y(i), ybar, family);
  }
  return detail::adjusted_ratio<Scalar>(num, den, y.size(), Scalar(r));
}

/// Mean-model criterion. Each observation enters with weight 1/phi_i and its
/// own phi_i inside the weighted arc length; the reference fit is the
/// weighted mean sum(y/phi)/sum(1/phi).
template <typename Scalar>
Scalar r2_mean(const Vec<Scalar>& y, const Vec<Scalar>& mu_hat, const Vec<Scalar>& phi_hat,
               const Family& family, Eigen::Index p, PenaltyRate rate) {
  detail::require_same_length(y, mu_hat);
  detail::require_same_length(y, phi_hat);
  if ((phi_hat.array() <= Scalar(0)).any())
    throw Error(ErrorCode::DomainError, "dispersion must be positive");
  const Vec<Scalar> w = phi_hat.cwiseInverse();
  const Scalar ybar = w.dot(y) / w.sum();
  Scalar num(0), den(0);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    num += w(i) * weighted_arc_length_distance<Scalar>(y(i), mu_hat(i), family, phi_hat(i));
    den += w(i) * weighted_arc_length_distance<Scalar>(y(i), ybar, family, phi_hat(i));
  }
  return detail::adjusted_ratio<Scalar>(num, den, y.size(),
                                        penalty_lambda<Scalar>(rate, y.size()) * Scalar(p));
}

/// Dispersion-model criterion on the Gamma arc length between d* and phi.
template <typename Scalar>
Scalar r2_dispersion(const Vec<Scalar>& d_star, const Vec<Scalar>& phi_hat, Eigen::Index q,
                     PenaltyRate rate) {
  detail::require_same_length(d_star, phi_hat);
  const Family gamma = Family::gamma_dispersion();
  const Vec<Scalar> d = d_star.cwiseMax(Scalar(1e-12));
  const Scalar dbar = d.mean();
  Scalar num(0), den(0);
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    num += arc_length_distance<Scalar>(d(i), phi_hat(i), gamma);
    den += arc_length_distance<Scalar>(d(i), dbar, gamma);
  }
  return detail::adjusted_ratio<Scalar>(num, den, d.size(),
                                        penalty_lambda<Scalar>(rate, d.size()) * Scalar(q));
}

/// -2 Q+ + 2 kappa n / (n - kappa - 1) with kappa = p + q.
template <typename Scalar>
Scalar eaic(Scalar eql, Eigen::Index p, Eigen::Index q, Eigen::Index n) {
  const Eigen::Index kappa = p + q;
  if (n <= kappa + 1)
    throw Error(ErrorCode::PenaltyOverflow, "EAIC needs n > p + q + 1");
  return Scalar(-2) * eql + Scalar(2 * kappa) * Scalar(n) / Scalar(n - kappa - 1);
}

struct AiccOptions {
  enum class Likelihood {
    /// Gamma shape 1/s with s = weighted deviance / total weight.
    ScaleFromDeviance,
    /// Gamma shape w_i / 2 from the nominal variance 2 phi^2.
    FixedShapeWeighted,
  };
  enum class Penalty {
    /// 2 (q + 1): coefficients plus the estimated scale.
    ParametersPlusScale,
    /// 2 q n / (n - q - 1).
    SmallSampleCorrected,
  };
  Likelihood likelihood = Likelihood::ScaleFromDeviance;
  Penalty penalty = Penalty::ParametersPlusScale;
};

template <typename Scalar>
Scalar gamma_log_likelihood(const FittedGlm<Scalar>& disp_fit,
                            AiccOptions::Likelihood convention) {
  using std::lgamma;
  using std::log;
  const Vec<Scalar>& r = disp_fit.response;
  const Vec<Scalar>& phi = disp_fit.fitted_means;
  const Vec<Scalar>& w = disp_fit.prior_weights;
  if (r.size() != phi.size() || w.size() != phi.size())
    throw Error(ErrorCode::InvalidArgument, "dispersion fit is missing its response");
  const auto logpdf = [](Scalar x, Scalar shape, Scalar scale) {
    return (shape - Scalar(1)) * log(x) - x / scale - lgamma(shape) - shape * log(scale);
  };
  Scalar ll(0);
  if (convention == AiccOptions::Likelihood::ScaleFromDeviance) {
    const Scalar s = disp_fit.weighted_deviance() / w.sum();
    if (!(s > Scalar(0)))
      throw Error(ErrorCode::DegenerateResponse, "dispersion fit is exact; Gamma scale is zero");
    for (Eigen::Index i = 0; i < r.size(); ++i)
      ll += w(i) * logpdf(std::max(r(i), Scalar(1e-12)), Scalar(1) / s, phi(i) * s);
  } else {
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const Scalar a = w(i) / Scalar(2);
      ll += logpdf(std::max(r(i), Scalar(1e-12)), a, phi(i) / a);
    }
  }
  return ll;
}

template <typename Scalar>
Scalar aicc_gamma(const FittedGlm<Scalar>& disp_fit, const AiccOptions& options = {}) {
  const Eigen::Index n = disp_fit.fitted_means.size();
  const Eigen::Index q = disp_fit.parameters();
  if (n <= q + 1) throw Error(ErrorCode::PenaltyOverflow, "AICc needs n > q + 1");
  const Scalar penalty = options.penalty == AiccOptions::Penalty::ParametersPlusScale
                             ? Scalar(2 * (q + 1))
                             : Scalar(2 * q) * Scalar(n) / Scalar(n - q - 1);
  return Scalar(-2) * gamma_log_likelihood(disp_fit, options.likelihood) + penalty;
}

}  // namespace jmmd
