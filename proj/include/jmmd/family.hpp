#pragma once

#include <cmath>
#include <string>

#include "jmmd/error.hpp"

namespace jmmd {

enum class FamilyKind { Normal, Poisson, Binomial, GammaDisp };
enum class Link { Identity, Log, Logit };

/// Variance function and link of one sub-model.
///
/// The mean model uses one of the quasi families (Normal type V=1, Poisson
/// type V=mu, Binomial type V=mu(1-mu/m) on counts 0..m); the dispersion model
/// is always the Gamma family (V=mu^2) with log link.
class Family {
 public:
  static Family normal(Link link = Link::Identity) { return Family(FamilyKind::Normal, link, 1); }
  static Family poisson(Link link = Link::Log) { return Family(FamilyKind::Poisson, link, 1); }
  static Family binomial(int index, Link link = Link::Logit) {
    return Family(FamilyKind::Binomial, link, index);
  }
  static Family gamma_dispersion() { return Family(FamilyKind::GammaDisp, Link::Log, 1); }

  FamilyKind kind() const noexcept { return kind_; }
  Link link() const noexcept { return link_; }
  int binomial_index() const noexcept { return index_; }

  std::string name() const {
    switch (kind_) {
      case FamilyKind::Normal: return "normal";
      case FamilyKind::Poisson: return "poisson";
      case FamilyKind::Binomial: return "binomial:" + std::to_string(index_);
      case FamilyKind::GammaDisp: return "gamma";
    }
    return "?";
  }

  template <typename Scalar>
  Scalar variance(Scalar mu) const {
    switch (kind_) {
      case FamilyKind::Normal: return Scalar(1);
      case FamilyKind::Poisson: return mu;
      case FamilyKind::Binomial: return mu * (Scalar(1) - mu / Scalar(index_));
      case FamilyKind::GammaDisp: return mu * mu;
    }
    return Scalar(1);
  }

  template <typename Scalar>
  Scalar variance_derivative(Scalar mu) const {
    switch (kind_) {
      case FamilyKind::Normal: return Scalar(0);
      case FamilyKind::Poisson: return Scalar(1);
      case FamilyKind::Binomial: return Scalar(1) - Scalar(2) * mu / Scalar(index_);
      case FamilyKind::GammaDisp: return Scalar(2) * mu;
    }
    return Scalar(0);
  }

  template <typename Scalar>
  Scalar link_fn(Scalar mu) const {
    using std::log;
    switch (link_) {
      case Link::Identity: return mu;
      case Link::Log: return log(mu);
      case Link::Logit: return log(mu / (Scalar(index_) - mu));
    }
    return mu;
  }

  template <typename Scalar>
  Scalar inverse_link(Scalar eta) const {
    using std::exp;
    switch (link_) {
      case Link::Identity: return eta;
      case Link::Log: return exp(eta);
      case Link::Logit: return Scalar(index_) / (Scalar(1) + exp(-eta));
    }
    return eta;
  }

  /// d mu / d eta evaluated at mu.
  template <typename Scalar>
  Scalar mu_eta(Scalar mu) const {
    switch (link_) {
      case Link::Identity: return Scalar(1);
      case Link::Log: return mu;
      case Link::Logit: return mu * (Scalar(1) - mu / Scalar(index_));
    }
    return Scalar(1);
  }

  template <typename Scalar>
  bool in_mean_domain(Scalar mu) const {
    using std::isfinite;
    if (!isfinite(mu)) return false;
    switch (kind_) {
      case FamilyKind::Normal: return link_ != Link::Log || mu > Scalar(0);
      case FamilyKind::Poisson:
      case FamilyKind::GammaDisp: return mu > Scalar(0);
      case FamilyKind::Binomial: return mu > Scalar(0) && mu < Scalar(index_);
    }
    return false;
  }

  template <typename Scalar>
  bool in_observation_domain(Scalar y) const {
    using std::isfinite;
    if (!isfinite(y)) return false;
    switch (kind_) {
      case FamilyKind::Normal: return true;
      case FamilyKind::Poisson: return y >= Scalar(0);
      case FamilyKind::Binomial: return y >= Scalar(0) && y <= Scalar(index_);
      case FamilyKind::GammaDisp: return y > Scalar(0);
    }
    return false;
  }

  /// IRLS starting mean: the observation pulled into the interior of the domain.
  template <typename Scalar>
  Scalar starting_mean(Scalar y) const {
    using std::max;
    using std::min;
    switch (kind_) {
      case FamilyKind::Normal: return link_ == Link::Log ? max(y, Scalar(0.1)) : y;
      case FamilyKind::Poisson: return max(y, Scalar(0.1));
      case FamilyKind::Binomial:
        return min(max(y, Scalar(0.5)), Scalar(index_) - Scalar(0.5));
      case FamilyKind::GammaDisp: return max(y, Scalar(1e-8));
    }
    return y;
  }

  /// Unit deviance 2 * int_mu^y (y - t) / V(t) dt in closed form.
  template <typename Scalar>
  Scalar unit_deviance(Scalar y, Scalar mu) const {
    using std::log;
    const auto ylogy = [](Scalar a, Scalar b) { return a == Scalar(0) ? Scalar(0) : a * log(a / b); };
    switch (kind_) {
      case FamilyKind::Normal: return (y - mu) * (y - mu);
      case FamilyKind::Poisson: return Scalar(2) * (ylogy(y, mu) - (y - mu));
      case FamilyKind::Binomial: {
        const Scalar m(index_);
        return Scalar(2) * (ylogy(y, mu) + ylogy(m - y, m - mu));
      }
      case FamilyKind::GammaDisp: return Scalar(2) * (-log(y / mu) + (y - mu) / mu);
    }
    return Scalar(0);
  }

  bool operator==(const Family&) const = default;

 private:
  Family(FamilyKind kind, Link link, int index) : kind_(kind), link_(link), index_(index) {
    if (kind == FamilyKind::GammaDisp && link != Link::Log)
      throw Error(ErrorCode::InvalidArgument, "the Gamma dispersion family requires the log link");
    if (kind == FamilyKind::Binomial && index < 1)
      throw Error(ErrorCode::InvalidArgument, "binomial index must be a positive integer");
    if (link == Link::Logit && kind != FamilyKind::Binomial)
      throw Error(ErrorCode::InvalidArgument, "the logit link is only defined for the binomial family");
  }

  FamilyKind kind_;
  Link link_;
  int index_;
};

}  // namespace jmmd
