#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jmmd/criteria.hpp"
#include "jmmd/dataset.hpp"
#include "jmmd/inference.hpp"
#include "jmmd/joint.hpp"

namespace jmmd {

enum class ModelKind { Mean, Dispersion };
enum class Decision { Accepted, RejectedByTest, RejectedByCriterion, AcceptedFinal };

std::string to_string(ModelKind kind);
std::string to_string(Decision decision);

struct SelectionStep {
  ModelKind model_kind{};
  std::string candidate;
  std::vector<std::string> model;  // incumbent terms plus the candidate
  CriterionValue criterion;
  double measure = 0.0;  // S for the mean model, Gamma deviance D for the dispersion model
  double test_statistic = 0.0;
  long df1 = 0;
  long df2 = 0;  // zero for the chi-square test
  double p_value = 1.0;
  Decision decision{};
};

struct StageOptions {
  AiccOptions aicc{};
  IrlsControl irls{};
  double tie_tolerance = 1e-12;
};

/// Mean model fitted with the dispersion held fixed.
struct MeanStage {
  std::vector<std::string> terms;
  FittedGlm<double> fit;
  Eigen::VectorXd phi;
  Eigen::VectorXd std_deviance;  // d*_i = d_i / (1 - h_i)
  double measure = 0.0;          // S = sum d*_i / phi_i
  double eql = 0.0;
  CriterionValue criterion;

  /// Response handed to the dispersion model: d*_i / phi_i.
  Eigen::VectorXd dispersion_response() const {
    return (std_deviance.array() / phi.array()).max(kDevianceFloor).matrix();
  }
};

/// Gamma log-link model for a fixed dispersion response.
struct DispersionStage {
  std::vector<std::string> terms;
  FittedGlm<double> fit;
  double deviance = 0.0;
  CriterionValue criterion;
};

/// Fit only; the criterion field is left unset.
MeanStage fit_mean_model(const Dataset& data, const std::vector<std::string>& terms,
                         const Family& family, const Eigen::VectorXd& phi,
                         const StageOptions& options = {});

MeanStage evaluate_mean_model(const Dataset& data, const std::vector<std::string>& terms,
                              const Family& family, const Eigen::VectorXd& phi,
                              Eigen::Index disp_params, CriterionKind criterion,
                              const StageOptions& options = {});

DispersionStage evaluate_dispersion_model(const Dataset& data,
                                          const std::vector<std::string>& terms,
                                          const Eigen::VectorXd& response,
                                          CriterionKind criterion,
                                          const StageOptions& options = {});

struct SkippedCandidate {
  std::string candidate;
  std::string reason;
};

template <typename Stage>
struct SubmodelSelection {
  Stage initial;
  Stage chosen;
  std::vector<SelectionStep> steps;
  std::vector<SkippedCandidate> skipped;
};

/// Forward selection for the mean model with the dispersion vector held fixed.
/// Each round fits every one-term extension, keeps the best under the
/// criterion and confirms it with the nested F test at level alpha. A best
/// extension that does not improve the criterion is tested once more and the
/// search ends either way.
SubmodelSelection<MeanStage> select_mean_terms(const Dataset& data, const Family& family,
                                               const Eigen::VectorXd& phi,
                                               Eigen::Index disp_params,
                                               const std::vector<std::string>& pool,
                                               CriterionKind criterion, double alpha,
                                               const StageOptions& options = {});

/// Same search for the dispersion model on a fixed response, confirmed by the
/// chi-square test on the Gamma deviance.
SubmodelSelection<DispersionStage> select_dispersion_terms(const Dataset& data,
                                                           const Eigen::VectorXd& response,
                                                           const std::vector<std::string>& pool,
                                                           CriterionKind criterion, double alpha,
                                                           const StageOptions& options = {});

struct JointSelectionOptions {
  CriterionKind mean_criterion = CriterionKind::R2MeanSqrtN;
  CriterionKind disp_criterion = CriterionKind::AICc;
  double alpha_mean = 0.10;
  double alpha_disp = 0.10;
  int max_iterations = 20;
  StageOptions stage{};
};

struct SelectionIteration {
  int index = 0;
  std::vector<SelectionStep> disp_steps;  // empty on the first iteration
  std::vector<SelectionStep> mean_steps;
  std::vector<SkippedCandidate> skipped;
  std::optional<DispersionStage> dispersion;
  MeanStage mean;
  double mean_criterion_final = 0.0;
};

struct SelectionTrace {
  std::vector<SelectionIteration> iterations;
  JointSpec final_spec;
  /// State at the accepted iteration: the mean fit under the dispersion it was
  /// selected with, and that dispersion fit.
  JointFit<double> final_fit;
};

/// Alternates mean and dispersion selection until the mean criterion stops
/// improving, then returns the previous pair.
SelectionTrace select_joint(const Dataset& data, const Family& family,
                            const std::vector<std::string>& mean_pool,
                            const std::vector<std::string>& disp_pool,
                            const JointSelectionOptions& options = {});

/// Appends missing parent main effects of every mean-model interaction.
JointSpec enforce_hierarchy(const JointSpec& spec, const std::vector<std::string>& factor_names);

struct CandidateCount {
  std::uint64_t with_procedure = 0;
  std::uint64_t exhaustive = 0;
  bool saturated = false;
};

/// Joint models visited by the stepwise procedure for l seesaw cycles, m
/// candidate terms and k selected terms, against the 2^(2m) exhaustive search.
CandidateCount count_candidate_models(std::uint64_t l, std::uint64_t m, std::uint64_t k);

}  // namespace jmmd
