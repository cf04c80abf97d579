#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "jmmd/dataset.hpp"
#include "jmmd/inference.hpp"
#include "jmmd/selection.hpp"

namespace jmmd {

struct CsvOptions {
  std::string response_column = "y";
  std::optional<int> binomial_index;
};

/// Header row plus numeric body; every non-response column becomes a factor.
Dataset read_dataset_csv(std::istream& in, const CsvOptions& options = {});
Dataset load_dataset_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// Writes response then factors with 17 significant digits.
void write_dataset_csv(const Dataset& data, std::ostream& out);

struct CaseStudy {
  Dataset dataset;
  std::vector<std::string> mean_pool;
  std::vector<std::string> disp_pool;
};

/// Shrinkage data of the 2^(7-4) injection-molding experiment: 8 runs of
/// controllable factors A-G crossed with 4 settings of noise factors M, N, O.
/// The mean pool is A-G, M-O and every controllable-by-noise product; the
/// dispersion pool is A-G.
CaseStudy injection_molding_dataset();

/// Per-observation diagnostics of a joint fit, for both sub-models.
struct DiagnosticsBundle {
  Eigen::VectorXd response;
  Eigen::VectorXd mean_fitted_means;
  Eigen::VectorXd mean_standardized_residuals;  // sign(y - mu) sqrt(d_i / phi_i)
  Eigen::VectorXd mean_hat_values;
  Eigen::VectorXd phi_hat;
  Eigen::VectorXd d_star;
  Eigen::VectorXd disp_response;
  Eigen::VectorXd disp_fitted_means;
  Eigen::VectorXd disp_standardized_residuals;  // Gamma deviance residual over sqrt(2)
  Eigen::VectorXd disp_hat_values;
};

DiagnosticsBundle make_diagnostics(const JointFit<double>& fit);

/// Writes the diagnostics CSV at `csv_path` and the coefficient tables as JSON
/// next to it (same stem, .json extension).
void export_diagnostics(const JointFit<double>& fit, const Family& mean_family,
                        const std::filesystem::path& csv_path);

/// Outcome of replaying the injection-molding analysis.
struct CaseStudyResult {
  SelectionTrace trace;
  JointSpec hierarchical_spec;
  JointFit<double> final_fit;  // mean refitted with the hierarchy terms
  std::vector<CoefficientRow> mean_table;
  std::vector<CoefficientRow> disp_table;
};

/// Selection options that replay the injection-molding analysis.
JointSelectionOptions injection_molding_options();

CaseStudyResult run_case_study(const Dataset& data, const Family& family,
                               const std::vector<std::string>& mean_pool,
                               const std::vector<std::string>& disp_pool,
                               const JointSelectionOptions& options, bool hierarchy);

/// One line per selection step: iteration, sub-model, model, criterion,
/// measure, statistic, p-value (4 decimals), decision.
std::string format_trace(const SelectionTrace& trace);
std::string format_coefficients(const std::vector<CoefficientRow>& rows);

}  // namespace jmmd
