#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jmmd/glm.hpp"
#include "jmmd/joint.hpp"

namespace jmmd {

/// Response plus named numeric factor columns, all of length n.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(Eigen::VectorXd response, std::string response_name = "y",
                   std::optional<int> binomial_index = std::nullopt);

  Eigen::Index n() const { return response_.size(); }
  const Eigen::VectorXd& response() const { return response_; }
  const std::string& response_name() const { return response_name_; }
  std::optional<int> binomial_index() const { return binomial_index_; }
  void set_binomial_index(std::optional<int> m) { binomial_index_ = m; }

  const std::vector<std::string>& factor_names() const { return names_; }
  bool has_factor(std::string_view name) const;
  const Eigen::VectorXd& factor(std::string_view name) const;
  void add_factor(std::string name, Eigen::VectorXd column);

  /// Keeps only the listed rows, in the given order.
  Dataset subset(const std::vector<Eigen::Index>& rows) const;

  bool operator==(const Dataset& other) const;

 private:
  Eigen::VectorXd response_;
  std::string response_name_ = "y";
  std::optional<int> binomial_index_;
  std::vector<std::string> names_;
  std::vector<Eigen::VectorXd> columns_;
};

/// True for labels made of letters, digits and underscores.
bool is_valid_factor_name(std::string_view name);

/// Splits a term label into the factors it multiplies. "1" resolves to no
/// factors; "CN" resolves to {"C","N"} when C and N are factors and CN is not;
/// "x1:z2" uses an explicit separator.
std::vector<std::string> resolve_term(std::string_view label,
                                      const std::vector<std::string>& factor_names);

Eigen::VectorXd term_column(const Dataset& data, std::string_view label);

DesignMatrix<double> build_design(const Dataset& data, const std::vector<std::string>& terms);

/// "1+CN+EN" style rendering of a term list.
std::string join_terms(const std::vector<std::string>& terms);

/// Builds both designs from the spec's term labels and runs the seesaw.
JointFit<double> fit_joint(const Dataset& data, const JointSpec& spec,
                           const JointControl& control = {});

}  // namespace jmmd
