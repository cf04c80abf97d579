#include "jmmd/io.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace jmmd {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == line.npos ? line.npos : comma - start)));
    if (comma == line.npos) break;
    start = comma + 1;
  }
  return out;
}

std::string location(std::size_t row, std::size_t col) {
  return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Dataset read_dataset_csv(std::istream& in, const CsvOptions& options) {
  std::string line;
  std::vector<std::string> header;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    for (auto f : split_fields(line)) header.emplace_back(f);
    break;
  }
  if (header.empty()) throw Error(ErrorCode::EmptyFile, "no header row");
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j].empty())
      throw Error(ErrorCode::ParseError, "empty column name at " + location(line_no, j + 1));
    for (std::size_t k = 0; k < j; ++k)
      if (header[k] == header[j])
        throw Error(ErrorCode::ParseError, "duplicate column '" + header[j] + "'");
  }
  const auto resp = std::find(header.begin(), header.end(), options.response_column);
  if (resp == header.end())
    throw Error(ErrorCode::MissingColumn, "no response column '" + options.response_column + "'");
  const std::size_t resp_col = static_cast<std::size_t>(resp - header.begin());

  std::vector<std::vector<double>> columns(header.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw Error(ErrorCode::ParseError, "row " + std::to_string(line_no) + " has " +
                                             std::to_string(fields.size()) + " fields, expected " +
                                             std::to_string(header.size()));
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const auto f = fields[j];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v))
        throw Error(ErrorCode::NonNumericCell, "cell '" + std::string(f) + "' at " +
                                                   location(line_no, j + 1) + " is not numeric");
      columns[j].push_back(v);
    }
  }
  if (columns[0].empty()) throw Error(ErrorCode::EmptyFile, "no data rows");

  const auto to_vec = [](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
  };
  Dataset data(to_vec(columns[resp_col]), options.response_column, options.binomial_index);
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j == resp_col) continue;
    if (!is_valid_factor_name(header[j]))
      throw Error(ErrorCode::ParseError, "column name '" + header[j] +
                                             "' must use letters, digits and underscores only");
    data.add_factor(header[j], to_vec(columns[j]));
  }
  return data;
}

Dataset load_dataset_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return read_dataset_csv(in, options);
}

void write_dataset_csv(const Dataset& data, std::ostream& out) {
  out << data.response_name();
  for (const auto& f : data.factor_names()) out << ',' << f;
  out << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << format_double(data.response()(i));
    for (const auto& f : data.factor_names()) out << ',' << format_double(data.factor(f)(i));
    out << '\n';
  }
}

CaseStudy injection_molding_dataset() {
  static constexpr std::array<std::array<int, 7>, 8> runs{{
      {-1, -1, -1, -1, -1, -1, -1},
      {-1, -1, -1, 1, 1, 1, 1},
      {-1, 1, 1, -1, -1, 1, 1},
      {-1, 1, 1, 1, 1, -1, -1},
      {1, -1, 1, -1, 1, -1, 1},
      {1, -1, 1, 1, -1, 1, -1},
      {1, 1, -1, -1, 1, 1, -1},
      {1, 1, -1, 1, -1, -1, 1},
  }};
  static constexpr std::array<std::array<int, 3>, 4> noise{{
      {-1, -1, -1}, {-1, 1, 1}, {1, -1, 1}, {1, 1, -1}}};
  static constexpr std::array<std::array<double, 4>, 8> shrinkage{{
      {2.2, 2.1, 2.3, 2.3},
      {2.5, 0.3, 2.7, 0.3},
      {0.5, 3.1, 0.4, 2.8},
      {2.0, 1.9, 1.8, 2.0},
      {3.0, 3.1, 3.0, 3.0},
      {2.1, 4.2, 1.0, 3.1},
      {4.0, 1.9, 4.6, 2.2},
      {2.0, 1.9, 1.9, 1.8},
  }};
  const std::string controllable = "ABCDEFG";
  const std::string noisy = "MNO";

  Eigen::VectorXd y(32);
  Eigen::MatrixXd x(32, 10);
  for (int r = 0; r < 8; ++r)
    for (int j = 0; j < 4; ++j) {
      const int row = 4 * r + j;
      y(row) = shrinkage[r][j];
      for (int k = 0; k < 7; ++k) x(row, k) = runs[r][k];
      for (int k = 0; k < 3; ++k) x(row, 7 + k) = noise[j][k];
    }

  CaseStudy cs{Dataset(y, "y"), {}, {}};
  const std::string all = controllable + noisy;
  for (int k = 0; k < 10; ++k) cs.dataset.add_factor(std::string(1, all[k]), x.col(k));
  for (char c : all) cs.mean_pool.emplace_back(1, c);
  for (char c : controllable)
    for (char z : noisy) cs.mean_pool.push_back(std::string{c, z});
  for (char c : controllable) cs.disp_pool.emplace_back(1, c);
  return cs;
}

DiagnosticsBundle make_diagnostics(const JointFit<double>& fit) {
  DiagnosticsBundle b;
  const auto& m = fit.mean_fit;
  const auto& d = fit.disp_fit;
  const Eigen::Index n = m.fitted_means.size();
  const auto sign = [](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); };
  b.response = m.response;
  b.mean_fitted_means = m.fitted_means;
  b.mean_hat_values = m.hat_values;
  b.phi_hat = fit.phi_hat;
  b.d_star = fit.std_deviance;
  b.disp_response = d.response;
  b.disp_fitted_means = d.fitted_means;
  b.disp_hat_values = d.hat_values;
  b.mean_standardized_residuals.resize(n);
  b.disp_standardized_residuals.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b.mean_standardized_residuals(i) = sign(m.response(i) - m.fitted_means(i)) *
                                       std::sqrt(m.deviance_components(i) / fit.phi_hat(i));
    b.disp_standardized_residuals(i) = sign(d.response(i) - d.fitted_means(i)) *
                                       std::sqrt(d.deviance_components(i) / 2.0);
  }
  return b;
}

namespace {

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

}  // namespace

void export_diagnostics(const JointFit<double>& fit, const Family& mean_family,
                        const std::filesystem::path& csv_path) {
  const DiagnosticsBundle b = make_diagnostics(fit);
  {
    std::ofstream out(csv_path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + csv_path.string() + "'");
    const std::vector<std::pair<const char*, const Eigen::VectorXd*>> cols{
        {"y", &b.response},
        {"mean_fitted_means", &b.mean_fitted_means},
        {"mean_standardized_residuals", &b.mean_standardized_residuals},
        {"mean_hat_values", &b.mean_hat_values},
        {"phi_hat", &b.phi_hat},
        {"d_star", &b.d_star},
        {"disp_response", &b.disp_response},
        {"disp_fitted_means", &b.disp_fitted_means},
        {"disp_standardized_residuals", &b.disp_standardized_residuals},
        {"disp_hat_values", &b.disp_hat_values},
    };
    for (std::size_t j = 0; j < cols.size(); ++j) out << (j ? "," : "") << cols[j].first;
    out << '\n';
    for (Eigen::Index i = 0; i < b.response.size(); ++i) {
      for (std::size_t j = 0; j < cols.size(); ++j)
        out << (j ? "," : "") << format_double((*cols[j].second)(i));
      out << '\n';
    }
    if (!out) throw Error(ErrorCode::IoError, "failed writing '" + csv_path.string() + "'");
  }
  nlohmann::json sidecar;
  sidecar["n"] = fit.mean_fit.fitted_means.size();
  sidecar["mean_family"] = mean_family.name();
  sidecar["eql"] = fit.eql;
  sidecar["mean"] = table_json(coefficient_table(fit.mean_fit, mean_family));
  sidecar["dispersion"] = table_json(coefficient_table(fit.disp_fit, Family::gamma_dispersion()));
  std::filesystem::path json_path = csv_path;
  json_path.replace_extension(".json");
  std::ofstream out(json_path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + json_path.string() + "'");
  out << sidecar.dump(2) << '\n';
}

JointSelectionOptions injection_molding_options() {
  JointSelectionOptions o;
  o.mean_criterion = CriterionKind::R2MeanSqrtN;
  o.disp_criterion = CriterionKind::AICc;
  o.alpha_mean = 0.10;
  // The reference dispersion path rejects a candidate with p = 0.0725.
  o.alpha_disp = 0.05;
  return o;
}

CaseStudyResult run_case_study(const Dataset& data, const Family& family,
                               const std::vector<std::string>& mean_pool,
                               const std::vector<std::string>& disp_pool,
                               const JointSelectionOptions& options, bool hierarchy) {
  CaseStudyResult res;
  res.trace = select_joint(data, family, mean_pool, disp_pool, options);
  res.hierarchical_spec =
      hierarchy ? enforce_hierarchy(res.trace.final_spec, data.factor_names()) : res.trace.final_spec;
  res.final_fit = res.trace.final_fit;
  if (res.hierarchical_spec.mean_terms != res.trace.final_spec.mean_terms) {
    const MeanStage refit = fit_mean_model(data, res.hierarchical_spec.mean_terms, family,
                                           res.final_fit.phi_hat, options.stage);
    res.final_fit.mean_fit = refit.fit;
    res.final_fit.std_deviance = refit.std_deviance;
    res.final_fit.eql = refit.eql;
  }
  res.mean_table = coefficient_table(res.final_fit.mean_fit, family);
  res.disp_table = coefficient_table(res.final_fit.disp_fit, Family::gamma_dispersion());
  return res;
}

std::string format_trace(const SelectionTrace& trace) {
  std::ostringstream os;
  const auto fmt = [](double v, int prec) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(prec) << v;
    return s.str();
  };
  const auto emit = [&](int iteration, const SelectionStep& s) {
    os << "iter=" << iteration << " model=" << to_string(s.model_kind)
       << " terms=" << join_terms(s.model) << " candidate=" << s.candidate << ' '
       << to_string(s.criterion.kind) << '=' << fmt(s.criterion.value, 4)
       << (s.model_kind == ModelKind::Mean ? " S=" : " D=") << fmt(s.measure, 4)
       << (s.model_kind == ModelKind::Mean ? " F=" : " chisq=") << fmt(s.test_statistic, 4)
       << " p=" << fmt(s.p_value, 4) << " decision=" << to_string(s.decision) << '\n';
  };
  for (const auto& it : trace.iterations) {
    for (const auto& s : it.disp_steps) emit(it.index, s);
    for (const auto& s : it.mean_steps) emit(it.index, s);
    os << "iter=" << it.index << " selected mean=" << join_terms(it.mean.terms)
       << " dispersion="
       << (it.dispersion ? join_terms(it.dispersion->terms) : std::string(kIntercept)) << ' '
       << to_string(it.mean.criterion.kind) << '=' << fmt(it.mean_criterion_final, 4) << '\n';
  }
  os << "final mean=" << join_terms(trace.final_spec.mean_terms)
     << " dispersion=" << join_terms(trace.final_spec.disp_terms) << '\n';
  return os.str();
}

std::string format_coefficients(const std::vector<CoefficientRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(8) << "term" << std::right << std::setw(12) << "Estimate"
     << std::setw(12) << "Std. Error" << std::setw(10) << "t value" << std::setw(10) << "Pr(>|t|)"
     << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(8) << r.term << std::right << std::fixed << std::setprecision(5)
       << std::setw(12) << r.estimate << std::setw(12) << r.std_error << std::setprecision(3)
       << std::setw(10) << r.t_value << std::setprecision(4) << std::setw(10) << r.p_value << '\n';
  }
  return os.str();
}

}  // namespace jmmd
