#include "jmmd/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

namespace jmmd {

std::string to_string(ModelKind kind) {
  return kind == ModelKind::Mean ? "mean" : "dispersion";
}

std::string to_string(Decision decision) {
  switch (decision) {
    case Decision::Accepted: return "Accepted";
    case Decision::RejectedByTest: return "RejectedByTest";
    case Decision::RejectedByCriterion: return "RejectedByCriterion";
    case Decision::AcceptedFinal: return "AcceptedFinal";
  }
  return "?";
}

MeanStage fit_mean_model(const Dataset& data, const std::vector<std::string>& terms,
                         const Family& family, const Eigen::VectorXd& phi,
                         const StageOptions& options) {
  if (phi.size() != data.n())
    throw Error(ErrorCode::InvalidArgument, "dispersion vector and data differ in length");
  const Eigen::VectorXd weights = phi.cwiseInverse();
  MeanStage stage;
  stage.terms = terms;
  stage.phi = phi;
  stage.fit = irls_fit<double>(build_design(data, terms), data.response(), family, weights,
                               options.irls);
  stage.std_deviance =
      standardized_deviance<double>(stage.fit.deviance_components, stage.fit.hat_values);
  stage.measure = weights.dot(stage.std_deviance);
  stage.eql = extended_quasi_likelihood<double>(data.response(), stage.fit.fitted_means, phi,
                                                stage.std_deviance, family);
  return stage;
}

MeanStage evaluate_mean_model(const Dataset& data, const std::vector<std::string>& terms,
                              const Family& family, const Eigen::VectorXd& phi,
                              Eigen::Index disp_params, CriterionKind criterion,
                              const StageOptions& options) {
  if (!is_mean_criterion(criterion))
    throw Error(ErrorCode::InvalidArgument, to_string(criterion) + " is not a mean-model criterion");
  MeanStage stage = fit_mean_model(data, terms, family, phi, options);
  const Eigen::Index p = stage.fit.parameters();
  stage.criterion.kind = criterion;
  stage.criterion.n = data.n();
  stage.criterion.params = p;
  if (criterion == CriterionKind::EAIC) {
    stage.criterion.value = eaic<double>(stage.eql, p, disp_params, data.n());
  } else {
    const PenaltyRate rate = *penalty_rate(criterion);
    stage.criterion.lambda_n = penalty_lambda<double>(rate, data.n());
    stage.criterion.value =
        r2_mean<double>(data.response(), stage.fit.fitted_means, phi, family, p, rate);
  }
  return stage;
}

DispersionStage evaluate_dispersion_model(const Dataset& data,
                                          const std::vector<std::string>& terms,
                                          const Eigen::VectorXd& response,
                                          CriterionKind criterion, const StageOptions& options) {
  if (is_mean_criterion(criterion))
    throw Error(ErrorCode::InvalidArgument,
                to_string(criterion) + " is not a dispersion-model criterion");
  if (response.size() != data.n())
    throw Error(ErrorCode::InvalidArgument, "dispersion response and data differ in length");
  DispersionStage stage;
  stage.terms = terms;
  stage.fit = irls_fit<double>(build_design(data, terms), response, Family::gamma_dispersion(),
                               Eigen::VectorXd::Ones(data.n()), options.irls);
  stage.deviance = stage.fit.deviance();
  const Eigen::Index q = stage.fit.parameters();
  stage.criterion.kind = criterion;
  stage.criterion.n = data.n();
  stage.criterion.params = q;
  if (criterion == CriterionKind::AICc) {
    stage.criterion.value = aicc_gamma<double>(stage.fit, options.aicc);
  } else {
    const PenaltyRate rate = *penalty_rate(criterion);
    stage.criterion.lambda_n = penalty_lambda<double>(rate, data.n());
    stage.criterion.value = r2_dispersion<double>(response, stage.fit.fitted_means, q, rate);
  }
  return stage;
}

namespace {

struct NestedTest {
  TestResult result;
  long df1 = 0;
  long df2 = 0;
};

constexpr double kStopTolerance = 1e-10;

bool strictly_better(CriterionKind kind, double a, double b, double tol) {
  return direction(kind) == Direction::Maximize ? a > b + tol : a < b - tol;
}

template <typename Stage, typename Evaluate, typename Test>
SubmodelSelection<Stage> forward_search(ModelKind kind, const std::vector<std::string>& pool_in,
                                        CriterionKind criterion, double alpha, double tie,
                                        Evaluate evaluate, Test test) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  std::vector<std::string> current{kIntercept};
  std::vector<std::string> pool;
  for (const auto& t : pool_in)
    if (t != kIntercept && std::find(pool.begin(), pool.end(), t) == pool.end()) pool.push_back(t);

  SubmodelSelection<Stage> out{evaluate(current), {}, {}, {}};
  Stage incumbent = out.initial;
  while (!pool.empty()) {
    std::optional<Stage> best;
    std::string best_term;
    for (const auto& term : pool) {
      std::vector<std::string> terms = current;
      terms.push_back(term);
      try {
        Stage cand = evaluate(terms);
        if (!best || strictly_better(criterion, cand.criterion.value, best->criterion.value, tie)) {
          best = std::move(cand);
          best_term = term;
        }
      } catch (const Error& e) {
        if (!e.is_numerical()) throw;
        out.skipped.push_back({term, e.what()});
      }
    }
    if (!best) break;

    const NestedTest nt = test(incumbent, *best);
    const bool better = improves(criterion, best->criterion.value, incumbent.criterion.value);
    const bool significant = nt.result.p_value < alpha;

    SelectionStep step;
    step.model_kind = kind;
    step.candidate = best_term;
    step.model = best->terms;
    step.criterion = best->criterion;
    if constexpr (std::is_same_v<Stage, MeanStage>)
      step.measure = best->measure;
    else
      step.measure = best->deviance;
    step.test_statistic = nt.result.statistic;
    step.df1 = nt.df1;
    step.df2 = nt.df2;
    step.p_value = nt.result.p_value;
    step.decision = better ? (significant ? Decision::Accepted : Decision::RejectedByTest)
                           : (significant ? Decision::AcceptedFinal : Decision::RejectedByCriterion);
    out.steps.push_back(step);

    if (significant) {
      current = best->terms;
      pool.erase(std::find(pool.begin(), pool.end(), best_term));
      incumbent = std::move(*best);
    }
    if (!better || !significant) break;
  }
  out.chosen = std::move(incumbent);
  return out;
}

}  // namespace

SubmodelSelection<MeanStage> select_mean_terms(const Dataset& data, const Family& family,
                                               const Eigen::VectorXd& phi,
                                               Eigen::Index disp_params,
                                               const std::vector<std::string>& pool,
                                               CriterionKind criterion, double alpha,
                                               const StageOptions& options) {
  const long n = data.n();
  return forward_search<MeanStage>(
      ModelKind::Mean, pool, criterion, alpha, options.tie_tolerance,
      [&](const std::vector<std::string>& terms) {
        return evaluate_mean_model(data, terms, family, phi, disp_params, criterion, options);
      },
      [&](const MeanStage& small, const MeanStage& big) {
        const long c = small.fit.parameters();
        const long d = big.fit.parameters();
        NestedTest nt{{}, d - c, n - d};
        // S uses leverage-corrected deviances, so a larger model can score a
        // slightly higher S; that is no evidence for the extra term.
        if (big.measure < small.measure)
          nt.result = f_test_nested(small.measure, big.measure, c, d, n);
        return nt;
      });
}

SubmodelSelection<DispersionStage> select_dispersion_terms(const Dataset& data,
                                                           const Eigen::VectorXd& response,
                                                           const std::vector<std::string>& pool,
                                                           CriterionKind criterion, double alpha,
                                                           const StageOptions& options) {
  return forward_search<DispersionStage>(
      ModelKind::Dispersion, pool, criterion, alpha, options.tie_tolerance,
      [&](const std::vector<std::string>& terms) {
        return evaluate_dispersion_model(data, terms, response, criterion, options);
      },
      [&](const DispersionStage& small, const DispersionStage& big) {
        const long a = small.fit.parameters();
        const long b = big.fit.parameters();
        return NestedTest{chisq_test_nested(small.deviance, big.deviance, a, b), b - a, 0};
      });
}

namespace {

/// The constant unit dispersion used before any dispersion model is selected.
FittedGlm<double> unit_dispersion_fit(const Eigen::VectorXd& response) {
  const Eigen::Index n = response.size();
  const Family gamma = Family::gamma_dispersion();
  FittedGlm<double> fit;
  fit.labels = {kIntercept};
  fit.response = response;
  fit.coefficients = Eigen::VectorXd::Zero(1);
  fit.fitted_means = Eigen::VectorXd::Ones(n);
  fit.linear_predictor = Eigen::VectorXd::Zero(n);
  fit.deviance_components = deviance_components<double>(response, fit.fitted_means, gamma);
  fit.hat_values = Eigen::VectorXd::Constant(n, 1.0 / double(n));
  fit.prior_weights = Eigen::VectorXd::Ones(n);
  fit.working_weights = Eigen::VectorXd::Ones(n);
  fit.unscaled_covariance = Eigen::MatrixXd::Constant(1, 1, 1.0 / double(n));
  fit.converged = true;
  return fit;
}

}  // namespace

SelectionTrace select_joint(const Dataset& data, const Family& family,
                            const std::vector<std::string>& mean_pool,
                            const std::vector<std::string>& disp_pool,
                            const JointSelectionOptions& options) {
  const CriterionKind mc = options.mean_criterion;
  const CriterionKind dc = options.disp_criterion;
  if (!is_mean_criterion(mc) || is_mean_criterion(dc))
    throw Error(ErrorCode::InvalidArgument, "criteria do not match their sub-models");
  if (options.max_iterations < 1)
    throw Error(ErrorCode::InvalidArgument, "max_iterations must be positive");

  SelectionTrace trace;
  auto first = select_mean_terms(data, family, Eigen::VectorXd::Ones(data.n()), 1, mean_pool, mc,
                                 options.alpha_mean, options.stage);
  SelectionIteration it1;
  it1.index = 1;
  it1.mean_steps = first.steps;
  it1.skipped = first.skipped;
  it1.mean = first.chosen;
  it1.mean_criterion_final = first.chosen.criterion.value;
  trace.iterations.push_back(it1);

  MeanStage best_mean = first.chosen;
  std::optional<DispersionStage> best_disp;
  for (int index = 2;; ++index) {
    if (index > options.max_iterations)
      throw Error(ErrorCode::IterationCap, "selection still improving after " +
                                               std::to_string(options.max_iterations) +
                                               " iterations");
    auto disp = select_dispersion_terms(data, best_mean.dispersion_response(), disp_pool, dc,
                                        options.alpha_disp, options.stage);
    auto mean = select_mean_terms(data, family, disp.chosen.fit.fitted_means,
                                  static_cast<Eigen::Index>(disp.chosen.terms.size()), mean_pool, mc,
                                  options.alpha_mean, options.stage);
    SelectionIteration iter;
    iter.index = index;
    iter.disp_steps = disp.steps;
    iter.mean_steps = mean.steps;
    iter.skipped = disp.skipped;
    iter.skipped.insert(iter.skipped.end(), mean.skipped.begin(), mean.skipped.end());
    iter.dispersion = disp.chosen;
    iter.mean = mean.chosen;
    iter.mean_criterion_final = mean.chosen.criterion.value;
    trace.iterations.push_back(iter);

    // Equal criteria (up to rounding) also stop the search.
    const double scale = 1.0 + std::abs(best_mean.criterion.value);
    if (!strictly_better(mc, mean.chosen.criterion.value, best_mean.criterion.value,
                         kStopTolerance * scale))
      break;
    best_mean = std::move(mean.chosen);
    best_disp = std::move(disp.chosen);
  }

  trace.final_spec.mean_terms = best_mean.terms;
  trace.final_spec.disp_terms = best_disp ? best_disp->terms : std::vector<std::string>{kIntercept};
  trace.final_spec.mean_family = family;
  JointFit<double>& fit = trace.final_fit;
  fit.mean_fit = best_mean.fit;
  fit.disp_fit = best_disp ? best_disp->fit : unit_dispersion_fit(best_mean.dispersion_response());
  fit.phi_hat = best_mean.phi;
  fit.std_deviance = best_mean.std_deviance;
  fit.eql = best_mean.eql;
  fit.outer_iterations = static_cast<int>(trace.iterations.size());
  fit.converged = true;
  return trace;
}

JointSpec enforce_hierarchy(const JointSpec& spec, const std::vector<std::string>& factor_names) {
  JointSpec out = spec;
  std::vector<std::string> parents;
  for (const auto& term : spec.mean_terms) {
    if (term == kIntercept) continue;
    std::vector<std::string> parts;
    try {
      parts = resolve_term(term, factor_names);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingColumn) throw;
      throw Error(ErrorCode::UnknownParent, "term '" + term + "' refers to an undeclared factor");
    }
    if (parts.size() < 2) continue;
    for (const auto& parent : parts)
      if (std::find(out.mean_terms.begin(), out.mean_terms.end(), parent) == out.mean_terms.end())
        out.mean_terms.push_back(parent);
  }
  return out;
}

CandidateCount count_candidate_models(std::uint64_t l, std::uint64_t m, std::uint64_t k) {
  if (k > m) throw Error(ErrorCode::InvalidArgument, "k must not exceed m");
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  CandidateCount out;
  const auto mul = [&](std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) {
      out.saturated = true;
      return kMax;
    }
    return r;
  };
  const auto add = [&](std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) {
      out.saturated = true;
      return kMax;
    }
    return r;
  };
  // k (2m - k + 1) is always even.
  const std::uint64_t inner = add(mul(k, add(mul(2, m) - k, 1)) / 2, 1);
  out.with_procedure = mul(add(mul(2, l), 1), inner);
  if (out.saturated) out.with_procedure = kMax;
  if (m >= 32) {
    out.exhaustive = kMax;
    out.saturated = true;
  } else {
    out.exhaustive = std::uint64_t{1} << (2 * m);
  }
  return out;
}

}  // namespace jmmd
