#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "jmmd/io.hpp"
#include "jmmd/simulation.hpp"

namespace {

using namespace jmmd;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Family parse_family(const std::string& text) {
  if (text == "normal") return Family::normal();
  if (text == "poisson") return Family::poisson();
  if (text.rfind("binomial:", 0) == 0) {
    const std::string rest = text.substr(9);
    int m = 0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), m);
    if (ec != std::errc() || ptr != rest.data() + rest.size() || m < 1)
      throw UsageError("binomial index must be a positive integer: " + text);
    return Family::binomial(m);
  }
  throw UsageError("unknown family '" + text + "' (normal | poisson | binomial:m)");
}

/// "A,CN" and "A+CN" both list two terms.
std::vector<std::string> split_terms(std::string text) {
  std::replace(text.begin(), text.end(), '+', ',');
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<std::string> with_intercept(std::vector<std::string> terms) {
  std::erase(terms, std::string(kIntercept));
  terms.insert(terms.begin(), std::string(kIntercept));
  return terms;
}

Dataset load_for(const std::string& path, const std::string& response, const Family& family) {
  CsvOptions opts;
  opts.response_column = response;
  if (family.kind() == FamilyKind::Binomial) opts.binomial_index = family.binomial_index();
  return load_dataset_csv(path, opts);
}

nlohmann::json table_json(const std::vector<CoefficientRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows)
    out.push_back({{"term", r.term},
                   {"Estimate", r.estimate},
                   {"Std. Error", r.std_error},
                   {"t value", r.t_value},
                   {"Pr(>|t|)", r.p_value}});
  return out;
}

/// Default pool: every factor column, in file order.
std::vector<std::string> default_pool(const Dataset& data, const std::string& flag) {
  if (!flag.empty()) return split_terms(flag);
  return data.factor_names();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint mean and dispersion modeling: fitting, selection and simulation"};
  app.require_subcommand(1);

  // fit
  std::string fit_csv, fit_response = "y", fit_family = "normal", fit_mean, fit_disp, fit_diag;
  auto* fit_cmd = app.add_subcommand("fit", "Fit one joint model to a CSV dataset");
  fit_cmd->add_option("csv", fit_csv, "Dataset (header row, numeric body)")->required();
  fit_cmd->add_option("--response", fit_response, "Response column")->capture_default_str();
  fit_cmd->add_option("--family", fit_family, "normal | poisson | binomial:m")->capture_default_str();
  fit_cmd->add_option("--mean", fit_mean, "Mean terms besides the intercept, e.g. A,CN");
  fit_cmd->add_option("--disp", fit_disp, "Dispersion terms besides the intercept");
  fit_cmd->add_option("--diagnostics", fit_diag, "Write diagnostics CSV (plus JSON tables) here");

  // select
  std::string sel_csv, sel_response = "y", sel_family = "normal", sel_mean_crit = "r2-sqrt",
                       sel_disp_crit = "aicc", sel_hier = "on", sel_mean_pool, sel_disp_pool;
  double sel_alpha = 0.10;
  double sel_alpha_disp = -1.0;
  bool sel_json = false;
  auto* sel_cmd = app.add_subcommand("select", "Stepwise joint selection on a CSV dataset");
  sel_cmd->add_option("csv", sel_csv, "Dataset (header row, numeric body)")->required();
  sel_cmd->add_option("--response", sel_response, "Response column")->capture_default_str();
  sel_cmd->add_option("--family", sel_family, "normal | poisson | binomial:m")->capture_default_str();
  sel_cmd->add_option("--mean-criterion", sel_mean_crit, "r2-sqrt | r2-log | r2-unit | eaic")
      ->capture_default_str();
  sel_cmd->add_option("--disp-criterion", sel_disp_crit, "r2-sqrt | r2-log | r2-unit | aicc")
      ->capture_default_str();
  sel_cmd->add_option("--alpha", sel_alpha, "Significance level of the confirming tests")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  sel_cmd->add_option("--alpha-disp", sel_alpha_disp,
                      "Separate level for the dispersion-model test (defaults to --alpha)")
      ->check(CLI::Range(0.0, 1.0));
  sel_cmd->add_option("--hierarchy", sel_hier, "on | off")
      ->capture_default_str()
      ->check(CLI::IsMember({"on", "off"}));
  sel_cmd->add_option("--mean-pool", sel_mean_pool, "Candidate mean terms (default: every factor)");
  sel_cmd->add_option("--disp-pool", sel_disp_pool,
                      "Candidate dispersion terms (default: every factor)");
  sel_cmd->add_flag("--json", sel_json, "Print the final model as JSON after the trace");

  // simulate
  std::string sim_file;
  int sim_reps = -1, sim_threads = 1;
  std::uint64_t sim_seed = 0;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo selection study from a scenario file");
  sim_cmd->add_option("scenario", sim_file, "Scenario file (key = value lines)")->required();
  auto* reps_opt = sim_cmd->add_option("--reps", sim_reps, "Override the replication count")
                       ->check(CLI::PositiveNumber);
  auto* seed_opt = sim_cmd->add_option("--seed", sim_seed, "Override the seed");
  sim_cmd->add_option("--threads", sim_threads, "Worker threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  // demo-injection
  double demo_alpha = -1.0;
  auto* demo_cmd = app.add_subcommand(
      "demo-injection", "Replay the injection-molding analysis: selection trace and coefficients");
  demo_cmd->add_option("--alpha-disp", demo_alpha,
                       "Dispersion-model test level (default 0.05; mean model uses 0.10)")
      ->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fit_cmd) {
      JointSpec spec;
      spec.mean_family = parse_family(fit_family);
      const Dataset data = load_for(fit_csv, fit_response, spec.mean_family);
      spec.mean_terms = with_intercept(split_terms(fit_mean));
      spec.disp_terms = with_intercept(split_terms(fit_disp));
      const JointFit<double> fit = fit_joint(data, spec);
      nlohmann::json out{
          {"mean_terms", spec.mean_terms},
          {"disp_terms", spec.disp_terms},
          {"eql", fit.eql},
          {"outer_iterations", fit.outer_iterations},
          {"converged", fit.converged},
          {"mean", table_json(coefficient_table(fit.mean_fit, spec.mean_family))},
          {"dispersion", table_json(coefficient_table(fit.disp_fit, spec.disp_family))},
      };
      if (!fit_diag.empty()) export_diagnostics(fit, spec.mean_family, fit_diag);
      std::cout << out.dump(2) << "\n";
    } else if (*sel_cmd) {
      const Family family = parse_family(sel_family);
      const Dataset data = load_for(sel_csv, sel_response, family);
      JointSelectionOptions opts;
      opts.mean_criterion = parse_criterion(sel_mean_crit, ModelKind::Mean);
      opts.disp_criterion = parse_criterion(sel_disp_crit, ModelKind::Dispersion);
      opts.alpha_mean = sel_alpha;
      opts.alpha_disp = sel_alpha_disp >= 0.0 ? sel_alpha_disp : sel_alpha;
      const auto result = run_case_study(data, family, default_pool(data, sel_mean_pool),
                                         default_pool(data, sel_disp_pool), opts,
                                         sel_hier == "on");
      std::cout << format_trace(result.trace);
      std::cout << "mean model " << join_terms(result.hierarchical_spec.mean_terms) << "\n"
                << format_coefficients(result.mean_table);
      std::cout << "dispersion model " << join_terms(result.hierarchical_spec.disp_terms) << "\n"
                << format_coefficients(result.disp_table);
      if (sel_json) {
        nlohmann::json out{{"mean_terms", result.hierarchical_spec.mean_terms},
                           {"disp_terms", result.hierarchical_spec.disp_terms},
                           {"mean", table_json(result.mean_table)},
                           {"dispersion", table_json(result.disp_table)}};
        std::cout << out.dump(2) << "\n";
      }
    } else if (*sim_cmd) {
      ScenarioSpec spec = load_scenario(sim_file);
      if (*reps_opt) spec.replications = sim_reps;
      if (*seed_opt) spec.seed = sim_seed;
      const McReport report = run_monte_carlo(spec, sim_threads);
      std::cout << report_json(report) << "\n";
      std::cerr << format_report(report);
    } else if (*demo_cmd) {
      const CaseStudy cs = injection_molding_dataset();
      JointSelectionOptions opts = injection_molding_options();
      if (demo_alpha >= 0.0) opts.alpha_disp = demo_alpha;
      const auto result =
          run_case_study(cs.dataset, Family::normal(), cs.mean_pool, cs.disp_pool, opts, true);
      std::cout << format_trace(result.trace) << "\n";
      std::cout << "mean model " << join_terms(result.hierarchical_spec.mean_terms) << "\n"
                << format_coefficients(result.mean_table) << "\n";
      std::cout << "dispersion model " << join_terms(result.hierarchical_spec.disp_terms) << "\n"
                << format_coefficients(result.disp_table);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_numerical() ? kExitNumerical : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}
