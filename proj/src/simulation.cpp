#include "jmmd/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace jmmd {

void ScenarioSpec::validate() const {
  if (beta.size() != 4 || gamma.size() != 4)
    throw Error(ErrorCode::InvalidArgument, "beta and gamma need four entries each");
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "n must be at least 2");
  if (replications < 1) throw Error(ErrorCode::InvalidArgument, "replications must be positive");
  if (distribution == Distribution::Binomial && binomial_index < 2)
    throw Error(ErrorCode::InvalidArgument, "binomial index must be at least 2");
  if (!is_mean_criterion(criterion_mean) || is_mean_criterion(criterion_disp))
    throw Error(ErrorCode::InvalidArgument, "criteria do not match their sub-models");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
}

Covariates gen_covariates(int n, Rng& rng) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be positive");
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto draw = [&] {
    double v;
    do v = u(rng);
    while (v == -1.0);
    return v;
  };
  Covariates c{Eigen::MatrixXd(n, 3), Eigen::MatrixXd(n, 3)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) c.x(i, j) = draw();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) c.z(i, j) = draw();
  return c;
}

namespace {

double linear(const std::vector<double>& coef, const Eigen::MatrixXd& m, Eigen::Index i) {
  return coef[0] + coef[1] * m(i, 0) + coef[2] * m(i, 1) + coef[3] * m(i, 2);
}

Dataset assemble(const std::vector<double>& y, const std::vector<Eigen::Index>& rows,
                 const Covariates& cov, std::optional<int> m) {
  const auto k = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd resp(k);
  for (Eigen::Index i = 0; i < k; ++i) resp(i) = y[static_cast<std::size_t>(i)];
  Dataset data(resp, "y", m);
  for (int j = 0; j < 3; ++j) {
    Eigen::VectorXd xc(k), zc(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      xc(i) = cov.x(rows[static_cast<std::size_t>(i)], j);
      zc(i) = cov.z(rows[static_cast<std::size_t>(i)], j);
    }
    data.add_factor("x" + std::to_string(j + 1), xc);
    data.add_factor("z" + std::to_string(j + 1), zc);
  }
  return data;
}

void require_kind(const ScenarioSpec& spec, Distribution d) {
  spec.validate();
  if (spec.distribution != d)
    throw Error(ErrorCode::InvalidArgument, "scenario is for a different distribution");
}

constexpr int kRedrawLimit = 10000;

template <typename Draw>
Dataset generate_rows(const ScenarioSpec& spec, Covariates cov, std::optional<int> m, Rng& rng,
                      Draw draw) {
  std::vector<double> y;
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < cov.x.rows(); ++i) {
    double eta = linear(spec.beta, cov.x, i);
    double phi = std::exp(linear(spec.gamma, cov.z, i));
    std::optional<double> v = draw(eta, phi);
    for (int tries = 0; !v && spec.range_policy == RangePolicy::Redraw; ++tries) {
      if (tries == kRedrawLimit)
        throw Error(ErrorCode::DispersionOutOfRange,
                    "no covariate draw gives an admissible dispersion");
      const Covariates fresh = gen_covariates(1, rng);
      cov.x.row(i) = fresh.x.row(0);
      cov.z.row(i) = fresh.z.row(0);
      eta = linear(spec.beta, cov.x, i);
      phi = std::exp(linear(spec.gamma, cov.z, i));
      v = draw(eta, phi);
    }
    if (!v) {
      if (spec.range_policy == RangePolicy::Reject)
        throw Error(ErrorCode::DispersionOutOfRange,
                    "dispersion " + std::to_string(phi) + " at row " + std::to_string(i) +
                        " cannot be produced by the " +
                        (m ? std::string("beta-binomial") : std::string("compound Poisson")) +
                        " mechanism");
      continue;
    }
    y.push_back(*v);
    rows.push_back(i);
  }
  return assemble(y, rows, cov, m);
}

}  // namespace

Dataset gen_normal(const ScenarioSpec& spec, const Covariates& cov, Rng& rng) {
  require_kind(spec, Distribution::Normal);
  std::normal_distribution<double> z(0.0, 1.0);
  return generate_rows(spec, cov, std::nullopt, rng, [&](double eta, double phi) {
    return std::optional<double>(eta + std::sqrt(phi) * z(rng));
  });
}

Dataset gen_beta_binomial(const ScenarioSpec& spec, const Covariates& cov, Rng& rng) {
  require_kind(spec, Distribution::Binomial);
  const int m = spec.binomial_index;
  return generate_rows(spec, cov, m, rng, [&](double eta, double phi) -> std::optional<double> {
    if (!(phi > 1.0 && phi < double(m))) return std::nullopt;
    const double lambda = 1.0 / (1.0 + std::exp(-eta));
    const double delta = (phi - 1.0) / double(m - 1);
    const double total = 1.0 / delta - 1.0;  // a + b
    std::gamma_distribution<double> ga(lambda * total, 1.0);
    std::gamma_distribution<double> gb((1.0 - lambda) * total, 1.0);
    const double u = ga(rng);
    const double v = gb(rng);
    const double pi = (u + v) > 0.0 ? u / (u + v) : lambda;
    std::binomial_distribution<int> y(m, pi);
    return double(y(rng));
  });
}

Dataset gen_compound_poisson(const ScenarioSpec& spec, const Covariates& cov, Rng& rng) {
  require_kind(spec, Distribution::Poisson);
  return generate_rows(spec, cov, std::nullopt, rng, [&](double eta, double phi) -> std::optional<double> {
    if (!(phi > 1.0 + 1e-6)) return std::nullopt;
    const double mu = std::exp(eta);
    const double rho = phi - 1.0;
    std::poisson_distribution<long> clusters(mu / rho);
    const long count = clusters(rng);
    if (count == 0) return 0.0;
    std::poisson_distribution<long> y(double(count) * rho);
    return double(y(rng));
  });
}

Dataset gen_normal(const ScenarioSpec& spec, Rng& rng) {
  const Covariates cov = gen_covariates(spec.n, rng);
  return gen_normal(spec, cov, rng);
}

Dataset gen_beta_binomial(const ScenarioSpec& spec, Rng& rng) {
  const Covariates cov = gen_covariates(spec.n, rng);
  return gen_beta_binomial(spec, cov, rng);
}

Dataset gen_compound_poisson(const ScenarioSpec& spec, Rng& rng) {
  const Covariates cov = gen_covariates(spec.n, rng);
  return gen_compound_poisson(spec, cov, rng);
}

Dataset generate(const ScenarioSpec& spec, Rng& rng) {
  switch (spec.distribution) {
    case Distribution::Normal: return gen_normal(spec, rng);
    case Distribution::Binomial: return gen_beta_binomial(spec, rng);
    case Distribution::Poisson: return gen_compound_poisson(spec, rng);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown distribution");
}

Family scenario_family(const ScenarioSpec& spec) {
  switch (spec.distribution) {
    case Distribution::Normal: return Family::normal(Link::Identity);
    case Distribution::Binomial: return Family::binomial(spec.binomial_index, Link::Logit);
    case Distribution::Poisson: return Family::poisson(Link::Log);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown distribution");
}

std::string to_string(ModelClass c) {
  switch (c) {
    case ModelClass::Optimal: return "Optimal";
    case ModelClass::Type1: return "Type1";
    case ModelClass::Type2: return "Type2";
  }
  return "?";
}

ModelClass classify_model(const std::vector<std::string>& selected,
                          const std::vector<std::string>& truth) {
  const auto strip = [](const std::vector<std::string>& v) {
    std::vector<std::string> out;
    for (const auto& t : v)
      if (t != kIntercept) out.push_back(t);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };
  const auto s = strip(selected);
  const auto t = strip(truth);
  if (s == t) return ModelClass::Optimal;
  if (std::includes(s.begin(), s.end(), t.begin(), t.end())) return ModelClass::Type2;
  return ModelClass::Type1;
}

namespace {

std::vector<std::string> active(const std::vector<double>& coef, const std::string& prefix) {
  std::vector<std::string> out{kIntercept};
  for (std::size_t j = 1; j < coef.size(); ++j)
    if (coef[j] != 0.0) out.push_back(prefix + std::to_string(j));
  return out;
}

}  // namespace

std::vector<std::string> true_mean_terms(const ScenarioSpec& spec) { return active(spec.beta, "x"); }
std::vector<std::string> true_disp_terms(const ScenarioSpec& spec) { return active(spec.gamma, "z"); }

McReport run_monte_carlo(const ScenarioSpec& spec, int threads) {
  spec.validate();
  const int reps = spec.replications;
  struct Outcome {
    bool ok = false;
    ModelClass mean{};
    ModelClass disp{};
    std::string error;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(reps));
  const Family family = scenario_family(spec);
  const std::vector<std::string> mean_pool{"x1", "x2", "x3"};
  const std::vector<std::string> disp_pool{"z1", "z2", "z3"};
  const auto mean_truth = true_mean_terms(spec);
  const auto disp_truth = true_disp_terms(spec);
  JointSelectionOptions options;
  options.mean_criterion = spec.criterion_mean;
  options.disp_criterion = spec.criterion_disp;
  options.alpha_mean = spec.alpha;
  options.alpha_disp = spec.alpha;

  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int r = next++; r < reps; r = next++) {
      Outcome& out = outcomes[static_cast<std::size_t>(r)];
      std::seed_seq seq{static_cast<std::uint32_t>(spec.seed & 0xffffffffu),
                        static_cast<std::uint32_t>(spec.seed >> 32), static_cast<std::uint32_t>(r)};
      Rng rng(seq);
      try {
        const Dataset data = generate(spec, rng);
        const SelectionTrace trace = select_joint(data, family, mean_pool, disp_pool, options);
        out.mean = classify_model(trace.final_spec.mean_terms, mean_truth);
        out.disp = classify_model(trace.final_spec.disp_terms, disp_truth);
        out.ok = true;
      } catch (const Error& e) {
        out.error = "replication " + std::to_string(r) + ": " + e.what();
      }
    }
  };
  const int nthreads = std::clamp(threads, 1, reps);
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  McReport report;
  report.spec = spec;
  report.replications = reps;
  std::map<ModelClass, int> mc, dc;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++report.failed;
      report.failures.push_back(o.error);
      continue;
    }
    ++mc[o.mean];
    ++dc[o.disp];
  }
  const int ok = reps - report.failed;
  const auto share = [&](std::map<ModelClass, int>& counts) {
    ClassShares s;
    if (ok == 0) return s;
    s.optimal = 100.0 * counts[ModelClass::Optimal] / ok;
    s.type2 = 100.0 * counts[ModelClass::Type2] / ok;
    s.type1 = 100.0 * counts[ModelClass::Type1] / ok;
    return s;
  };
  report.mean = share(mc);
  report.dispersion = share(dc);
  return report;
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& key) {
  std::string s = text;
  for (char& c : s)
    if (c == ',' || c == '(' || c == ')') c = ' ';
  std::istringstream is(s);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "'" + tok + "' in '" + key + "' is not a number");
    }
  }
  return out;
}

long parse_integer(const std::string& text, const std::string& key) {
  const auto v = parse_numbers(text, key);
  if (v.size() != 1 || v[0] != std::floor(v[0]))
    throw Error(ErrorCode::ParseError, "'" + key + "' needs one integer");
  return static_cast<long>(v[0]);
}

}  // namespace

CriterionKind parse_criterion(const std::string& text, ModelKind model) {
  const std::string t = lower(text);
  const bool mean = model == ModelKind::Mean;
  if (t == "r2-sqrt") return mean ? CriterionKind::R2MeanSqrtN : CriterionKind::R2DispSqrtN;
  if (t == "r2-log") return mean ? CriterionKind::R2MeanLogN : CriterionKind::R2DispLogN;
  if (t == "r2-unit") return mean ? CriterionKind::R2MeanUnit : CriterionKind::R2DispUnit;
  if (mean && t == "eaic") return CriterionKind::EAIC;
  if (!mean && t == "aicc") return CriterionKind::AICc;
  throw Error(ErrorCode::InvalidArgument,
              "unknown " + to_string(model) + " criterion '" + text + "'");
}

std::string criterion_flag(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::R2MeanSqrtN:
    case CriterionKind::R2DispSqrtN: return "r2-sqrt";
    case CriterionKind::R2MeanLogN:
    case CriterionKind::R2DispLogN: return "r2-log";
    case CriterionKind::R2MeanUnit:
    case CriterionKind::R2DispUnit: return "r2-unit";
    case CriterionKind::EAIC: return "eaic";
    case CriterionKind::AICc: return "aicc";
  }
  return "?";
}

ScenarioSpec parse_scenario(std::istream& in) {
  ScenarioSpec spec;
  std::string line;
  int line_no = 0;
  bool has_distribution = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    const auto blank = line.find_first_not_of(" \t\r") == std::string::npos;
    if (blank) continue;
    if (eq == std::string::npos)
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + " has no '='");
    const auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = lower(strip(line.substr(0, eq)));
    const std::string value = strip(line.substr(eq + 1));
    if (key == "distribution") {
      const std::string v = lower(value);
      if (v == "normal") spec.distribution = Distribution::Normal;
      else if (v == "binomial") spec.distribution = Distribution::Binomial;
      else if (v == "poisson") spec.distribution = Distribution::Poisson;
      else throw Error(ErrorCode::ParseError, "unknown distribution '" + value + "'");
      has_distribution = true;
    } else if (key == "beta") {
      spec.beta = parse_numbers(value, key);
    } else if (key == "gamma") {
      spec.gamma = parse_numbers(value, key);
    } else if (key == "n") {
      spec.n = static_cast<int>(parse_integer(value, key));
    } else if (key == "m") {
      spec.binomial_index = static_cast<int>(parse_integer(value, key));
    } else if (key == "k") {
      spec.cluster_size = static_cast<int>(parse_integer(value, key));
    } else if (key == "reps" || key == "replications") {
      spec.replications = static_cast<int>(parse_integer(value, key));
    } else if (key == "criterion_mean") {
      spec.criterion_mean = parse_criterion(value, ModelKind::Mean);
    } else if (key == "criterion_disp") {
      spec.criterion_disp = parse_criterion(value, ModelKind::Dispersion);
    } else if (key == "alpha") {
      const auto v = parse_numbers(value, key);
      if (v.size() != 1) throw Error(ErrorCode::ParseError, "'alpha' needs one number");
      spec.alpha = v[0];
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(parse_integer(value, key));
    } else if (key == "range_policy") {
      const std::string v = lower(value);
      if (v == "reject") spec.range_policy = RangePolicy::Reject;
      else if (v == "drop") spec.range_policy = RangePolicy::DropRow;
      else if (v == "redraw") spec.range_policy = RangePolicy::Redraw;
      else throw Error(ErrorCode::ParseError, "unknown range_policy '" + value + "'");
    } else {
      throw Error(ErrorCode::ParseError,
                  "unknown key '" + key + "' on line " + std::to_string(line_no));
    }
  }
  if (!has_distribution) throw Error(ErrorCode::ParseError, "scenario has no distribution");
  spec.validate();
  return spec;
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return parse_scenario(in);
}

namespace {

std::string distribution_name(Distribution d) {
  switch (d) {
    case Distribution::Normal: return "normal";
    case Distribution::Binomial: return "binomial";
    case Distribution::Poisson: return "poisson";
  }
  return "?";
}

}  // namespace

std::string range_policy_name(RangePolicy p) {
  switch (p) {
    case RangePolicy::Reject: return "reject";
    case RangePolicy::DropRow: return "drop";
    case RangePolicy::Redraw: return "redraw";
  }
  return "?";
}

std::string format_report(const McReport& r) {
  std::ostringstream os;
  os << "distribution=" << distribution_name(r.spec.distribution) << " n=" << r.spec.n
     << " replications=" << r.replications << " failed=" << r.failed << '\n';
  os << std::left << std::setw(12) << "Model" << std::setw(14) << "Criterion" << std::right
     << std::setw(9) << "Optimal" << std::setw(9) << "Type 2" << std::setw(9) << "Type 1" << '\n';
  os << std::fixed << std::setprecision(1);
  const auto row = [&](const char* model, CriterionKind k, const ClassShares& s) {
    os << std::left << std::setw(12) << model << std::setw(14) << to_string(k) << std::right
       << std::setw(9) << s.optimal << std::setw(9) << s.type2 << std::setw(9) << s.type1 << '\n';
  };
  row("Mean", r.spec.criterion_mean, r.mean);
  row("Dispersion", r.spec.criterion_disp, r.dispersion);
  return os.str();
}

std::string report_json(const McReport& r) {
  const auto shares = [](const ClassShares& s) {
    return nlohmann::json{{"optimal", s.optimal}, {"type2", s.type2}, {"type1", s.type1}};
  };
  nlohmann::json j;
  j["spec"] = {{"distribution", distribution_name(r.spec.distribution)},
               {"beta", r.spec.beta},
               {"gamma", r.spec.gamma},
               {"n", r.spec.n},
               {"binomial_index", r.spec.binomial_index},
               {"cluster_size", r.spec.cluster_size},
               {"replications", r.spec.replications},
               {"criterion_mean", criterion_flag(r.spec.criterion_mean)},
               {"criterion_disp", criterion_flag(r.spec.criterion_disp)},
               {"alpha", r.spec.alpha},
               {"seed", r.spec.seed},
               {"range_policy", range_policy_name(r.spec.range_policy)}};
  j["replications"] = r.replications;
  j["failed"] = r.failed;
  j["mean"] = shares(r.mean);
  j["dispersion"] = shares(r.dispersion);
  j["failures"] = r.failures;
  return j.dump(2) + "\n";
}

}  // namespace jmmd
