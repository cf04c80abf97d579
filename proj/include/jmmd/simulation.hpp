#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "jmmd/dataset.hpp"
#include "jmmd/selection.hpp"

namespace jmmd {

enum class Distribution { Normal, Binomial, Poisson };

/// What the beta-binomial and compound-Poisson generators do with a row whose
/// dispersion falls outside the range the mechanism can produce.
enum class RangePolicy {
  Reject,   // throw DispersionOutOfRange
  DropRow,  // leave the row out of the generated dataset
  Redraw,   // draw fresh covariates for the row until its dispersion is in range
};

struct ScenarioSpec {
  Distribution distribution = Distribution::Normal;
  std::vector<double> beta{0, 0, 0, 0};   // beta_0..beta_3; zero marks an inactive term
  std::vector<double> gamma{0, 0, 0, 0};  // gamma_0..gamma_3
  int n = 100;
  int binomial_index = 10;  // m
  int cluster_size = 5;     // k, recorded only
  int replications = 1000;
  CriterionKind criterion_mean = CriterionKind::R2MeanSqrtN;
  CriterionKind criterion_disp = CriterionKind::AICc;
  double alpha = 0.10;
  std::uint64_t seed = 1;
  RangePolicy range_policy = RangePolicy::Reject;

  void validate() const;
};

using Rng = std::mt19937_64;

struct Covariates {
  Eigen::MatrixXd x;  // n x 3, mean-model covariates x1..x3
  Eigen::MatrixXd z;  // n x 3, dispersion-model covariates z1..z3
};

/// Independent U(-1, 1) draws, open at both ends.
Covariates gen_covariates(int n, Rng& rng);

Dataset gen_normal(const ScenarioSpec& spec, Rng& rng);
Dataset gen_normal(const ScenarioSpec& spec, const Covariates& cov, Rng& rng);
Dataset gen_beta_binomial(const ScenarioSpec& spec, Rng& rng);
Dataset gen_beta_binomial(const ScenarioSpec& spec, const Covariates& cov, Rng& rng);
Dataset gen_compound_poisson(const ScenarioSpec& spec, Rng& rng);
Dataset gen_compound_poisson(const ScenarioSpec& spec, const Covariates& cov, Rng& rng);
Dataset generate(const ScenarioSpec& spec, Rng& rng);

/// Mean family the selection runs under for a scenario.
Family scenario_family(const ScenarioSpec& spec);

enum class ModelClass { Optimal, Type1, Type2 };
std::string to_string(ModelClass c);

/// Optimal: same terms as the truth. Type2: every true term plus extras.
/// Type1: at least one true term missing. The intercept is ignored.
ModelClass classify_model(const std::vector<std::string>& selected,
                          const std::vector<std::string>& truth);

/// Active terms x_j (mean) and z_j (dispersion) from the nonzero coefficients.
std::vector<std::string> true_mean_terms(const ScenarioSpec& spec);
std::vector<std::string> true_disp_terms(const ScenarioSpec& spec);

struct ClassShares {
  double optimal = 0.0;
  double type2 = 0.0;
  double type1 = 0.0;
};

struct McReport {
  ScenarioSpec spec;
  int replications = 0;
  int failed = 0;
  ClassShares mean;  // percentages over non-failed replications
  ClassShares dispersion;
  std::vector<std::string> failures;  // one message per failed replication
};

/// Replication r draws from a generator seeded with (seed, r), so the report
/// does not depend on the number of threads.
McReport run_monte_carlo(const ScenarioSpec& spec, int threads = 1);

/// key = value lines; '#' starts a comment. Keys: distribution, beta, gamma,
/// n, m, k, reps, criterion_mean, criterion_disp, alpha, seed, range_policy.
ScenarioSpec parse_scenario(std::istream& in);
ScenarioSpec load_scenario(const std::string& path);

/// r2-sqrt | r2-log | r2-unit | eaic for the mean model and
/// r2-sqrt | r2-log | r2-unit | aicc for the dispersion model.
CriterionKind parse_criterion(const std::string& text, ModelKind model);
std::string criterion_flag(CriterionKind kind);

std::string format_report(const McReport& report);
std::string report_json(const McReport& report);

}  // namespace jmmd
