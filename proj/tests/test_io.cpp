#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "jmmd/io.hpp"

using namespace jmmd;

namespace {

ErrorCode code_of(const std::string& text) {
  std::istringstream in(text);
  try {
    read_dataset_csv(in);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a parse failure");
  return ErrorCode::InvalidArgument;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("jmmd_test_" + name);
}

}  // namespace

TEST_CASE("minimal CSV") {
  std::istringstream in("y,x1\n1.5,0\n2,1\n-3e-1,2\n");
  const Dataset d = read_dataset_csv(in);
  CHECK(d.n() == 3);
  CHECK(d.factor_names() == std::vector<std::string>{"x1"});
  CHECK(d.response()(2) == doctest::Approx(-0.3));
  CHECK(d.factor("x1")(1) == 1.0);
}

TEST_CASE("response column can sit anywhere") {
  std::istringstream in("a,shrink,b\r\n1,2,3\r\n4,5,6\r\n");
  CsvOptions opts;
  opts.response_column = "shrink";
  const Dataset d = read_dataset_csv(in, opts);
  CHECK(d.response()(1) == 5.0);
  CHECK(d.factor_names() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("CSV rejection contract") {
  CHECK(code_of("") == ErrorCode::EmptyFile);
  CHECK(code_of("y,x1\n1,\n") == ErrorCode::NonNumericCell);
  CHECK(code_of("y,x1\n1,abc\n") == ErrorCode::NonNumericCell);
  CHECK(code_of("y,x1\n1,2,3\n") == ErrorCode::ParseError);
  CHECK(code_of("y,x1,x1\n1,2,3\n") == ErrorCode::ParseError);
  CHECK(code_of("y,x-1\n1,2\n") == ErrorCode::ParseError);
  CHECK(code_of("x1,x2\n1,2\n") == ErrorCode::MissingColumn);
  std::istringstream in("y,x1\n1,2\n3,\n");
  try {
    read_dataset_csv(in);
  } catch (const Error& e) {
    const std::string what = e.what();
    CHECK(what.find("row 3") != std::string::npos);
    CHECK(what.find("column 2") != std::string::npos);
  }
}

TEST_CASE("CSV round trip keeps full precision") {
  Eigen::VectorXd y(3);
  y << 0.1, 1.0 / 3.0, -2.5e-7;
  Dataset d(y);
  Eigen::VectorXd x(3);
  x << std::acos(-1.0), 1e300, -0.0;
  d.add_factor("x", x);
  std::stringstream ss;
  write_dataset_csv(d, ss);
  const Dataset back = read_dataset_csv(ss);
  CHECK(back == d);
}

TEST_CASE("injection-molding data") {
  const CaseStudy cs = injection_molding_dataset();
  const Dataset& d = cs.dataset;
  CHECK(d.n() == 32);
  CHECK(d.factor_names().size() == 10);
  CHECK(d.response()(4) == doctest::Approx(2.5));
  CHECK(d.response()(5) == doctest::Approx(0.3));
  CHECK(d.response()(6) == doctest::Approx(2.7));
  CHECK(d.response()(7) == doctest::Approx(0.3));
  CHECK(d.response().head(4) == Eigen::Vector4d(2.2, 2.1, 2.3, 2.3));
  CHECK(d.response().tail(4) == Eigen::Vector4d(2.0, 1.9, 1.9, 1.8));
  CHECK(term_column(d, "CN")(0) == 1.0);
  CHECK(cs.disp_pool == std::vector<std::string>{"A", "B", "C", "D", "E", "F", "G"});
  CHECK(cs.mean_pool.size() == 10 + 21);
}

TEST_CASE("shipped CSV matches the embedded data") {
  const Dataset loaded = load_dataset_csv(std::string(JMMD_SOURCE_DIR) + "/data/injection_molding.csv");
  CHECK(loaded == injection_molding_dataset().dataset);
  std::ifstream in(std::string(JMMD_SOURCE_DIR) + "/data/injection_molding.csv");
  std::stringstream file, fresh;
  file << in.rdbuf();
  write_dataset_csv(injection_molding_dataset().dataset, fresh);
  CHECK(file.str() == fresh.str());
}

TEST_CASE("missing files") {
  CHECK_THROWS_AS(load_dataset_csv("/nonexistent/data.csv"), Error);
}

TEST_CASE("diagnostics of a perfect fit are zero") {
  JointFit<double> fit;
  const Eigen::Vector3d y(1, 2, 3), one = Eigen::Vector3d::Ones();
  fit.mean_fit.response = y;
  fit.mean_fit.fitted_means = y;
  fit.mean_fit.deviance_components = Eigen::Vector3d::Zero();
  fit.mean_fit.hat_values = Eigen::Vector3d::Constant(1.0 / 3.0);
  fit.disp_fit.response = one;
  fit.disp_fit.fitted_means = one;
  fit.disp_fit.deviance_components = Eigen::Vector3d::Zero();
  fit.disp_fit.hat_values = Eigen::Vector3d::Constant(1.0 / 3.0);
  fit.phi_hat = one;
  fit.std_deviance = Eigen::Vector3d::Zero();
  const auto b = make_diagnostics(fit);
  CHECK(b.mean_standardized_residuals.cwiseAbs().maxCoeff() == 0.0);
  CHECK(b.disp_standardized_residuals.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("diagnostics export of the injection-molding fit") {
  const CaseStudy cs = injection_molding_dataset();
  const auto r = run_case_study(cs.dataset, Family::normal(), cs.mean_pool, cs.disp_pool,
                                injection_molding_options(), true);
  const auto csv = temp_path("diag.csv");
  export_diagnostics(r.final_fit, Family::normal(), csv);

  CsvOptions opts;
  opts.response_column = "y";
  const Dataset back = load_dataset_csv(csv, opts);
  CHECK(back.n() == 32);
  CHECK(back.factor("phi_hat").size() == 32);
  CHECK(back.factor_names().size() == 9);

  std::filesystem::path json_path = csv;
  json_path.replace_extension(".json");
  std::ifstream in(json_path);
  const auto j = nlohmann::json::parse(in);
  const std::vector<double> disp{-2.2973, -0.8670, 0.6773, -0.6015};
  REQUIRE(j["dispersion"].size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(std::abs(j["dispersion"][k]["Estimate"].get<double>() - disp[k]) < 0.005);
    CHECK(j["dispersion"][k].contains("Std. Error"));
    CHECK(j["dispersion"][k].contains("t value"));
    CHECK(j["dispersion"][k].contains("Pr(>|t|)"));
  }
  bool found_cn = false;
  for (const auto& row : j["mean"]) {
    if (row["term"] == "CN") {
      found_cn = true;
      CHECK(std::abs(row["Estimate"].get<double>() - 0.58684) < 0.005);
    }
  }
  CHECK(found_cn);
  std::filesystem::remove(csv);
  std::filesystem::remove(json_path);

  CHECK_THROWS_AS(export_diagnostics(r.final_fit, Family::normal(), "/nonexistent/dir/x.csv"),
                  Error);
}

TEST_CASE("trace lines are stable") {
  const CaseStudy cs = injection_molding_dataset();
  const auto a = run_case_study(cs.dataset, Family::normal(), cs.mean_pool, cs.disp_pool,
                                injection_molding_options(), true);
  const std::string text = format_trace(a.trace);
  CHECK(text.find("iter=1 model=mean terms=1+CN candidate=CN") != std::string::npos);
  CHECK(text.find("p=0.1530 decision=RejectedByTest") != std::string::npos);
  CHECK(text.find("final mean=1+A+CN+EN+D dispersion=1+E+B+G") != std::string::npos);
}
