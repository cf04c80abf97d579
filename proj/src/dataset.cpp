#include "jmmd/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

namespace jmmd {

Dataset::Dataset(Eigen::VectorXd response, std::string response_name,
                 std::optional<int> binomial_index)
    : response_(std::move(response)),
      response_name_(std::move(response_name)),
      binomial_index_(binomial_index) {
  if (!response_.allFinite())
    throw Error(ErrorCode::NonNumericCell, "response contains missing or non-finite values");
}

bool Dataset::has_factor(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

const Eigen::VectorXd& Dataset::factor(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end())
    throw Error(ErrorCode::MissingColumn, "no column named '" + std::string(name) + "'");
  return columns_[static_cast<std::size_t>(it - names_.begin())];
}

void Dataset::add_factor(std::string name, Eigen::VectorXd column) {
  if (!is_valid_factor_name(name))
    throw Error(ErrorCode::InvalidArgument, "invalid factor name '" + name + "'");
  if (has_factor(name) || name == response_name_)
    throw Error(ErrorCode::InvalidArgument, "duplicate column '" + name + "'");
  if (column.size() != n())
    throw Error(ErrorCode::InvalidArgument, "column '" + name + "' has length " +
                                                std::to_string(column.size()) + ", expected " +
                                                std::to_string(n()));
  if (!column.allFinite())
    throw Error(ErrorCode::NonNumericCell, "column '" + name + "' has missing values");
  names_.push_back(std::move(name));
  columns_.push_back(std::move(column));
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) y(static_cast<Eigen::Index>(i)) = response_(rows[i]);
  Dataset out(std::move(y), response_name_, binomial_index_);
  for (std::size_t j = 0; j < names_.size(); ++j) {
    Eigen::VectorXd c(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
      c(static_cast<Eigen::Index>(i)) = columns_[j](rows[i]);
    out.add_factor(names_[j], std::move(c));
  }
  return out;
}

bool Dataset::operator==(const Dataset& other) const {
  if (response_name_ != other.response_name_ || binomial_index_ != other.binomial_index_ ||
      names_ != other.names_ || response_.size() != other.response_.size() ||
      response_ != other.response_)
    return false;
  for (std::size_t j = 0; j < columns_.size(); ++j)
    if (columns_[j] != other.columns_[j]) return false;
  return true;
}

bool is_valid_factor_name(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

std::vector<std::string> resolve_term(std::string_view label,
                                      const std::vector<std::string>& factor_names) {
  if (label == kIntercept) return {};
  const auto known = [&](std::string_view s) {
    return std::find(factor_names.begin(), factor_names.end(), s) != factor_names.end();
  };
  if (known(label)) return {std::string(label)};

  if (label.find(':') != std::string_view::npos) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= label.size()) {
      const auto stop = label.find(':', start);
      const auto piece = label.substr(start, stop == std::string_view::npos ? label.npos : stop - start);
      if (!known(piece))
        throw Error(ErrorCode::UnknownParent, "term '" + std::string(label) +
                                                  "' references unknown factor '" +
                                                  std::string(piece) + "'");
      parts.emplace_back(piece);
      if (stop == std::string_view::npos) break;
      start = stop + 1;
    }
    return parts;
  }

  // Concatenated labels: longest factor name first, backtracking on failure.
  std::vector<std::string> by_length = factor_names;
  std::stable_sort(by_length.begin(), by_length.end(),
                   [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
  std::vector<std::string> parts;
  std::function<bool(std::size_t)> split = [&](std::size_t pos) {
    if (pos == label.size()) return true;
    for (const auto& f : by_length) {
      if (label.substr(pos, f.size()) == f) {
        parts.push_back(f);
        if (split(pos + f.size())) return true;
        parts.pop_back();
      }
    }
    return false;
  };
  if (!split(0) || parts.size() < 2) {
    const bool partial = std::any_of(factor_names.begin(), factor_names.end(),
                                     [&](const std::string& f) { return label.rfind(f, 0) == 0; });
    if (!partial)
      throw Error(ErrorCode::MissingColumn, "no column named '" + std::string(label) + "'");
    throw Error(ErrorCode::UnknownParent,
                "term '" + std::string(label) + "' does not resolve to known factors");
  }
  return parts;
}

Eigen::VectorXd term_column(const Dataset& data, std::string_view label) {
  Eigen::VectorXd col = Eigen::VectorXd::Ones(data.n());
  for (const auto& f : resolve_term(label, data.factor_names())) col.array() *= data.factor(f).array();
  return col;
}

DesignMatrix<double> build_design(const Dataset& data, const std::vector<std::string>& terms) {
  DesignMatrix<double> design;
  design.labels = terms;
  design.values.resize(data.n(), static_cast<Eigen::Index>(terms.size()));
  for (std::size_t j = 0; j < terms.size(); ++j)
    design.values.col(static_cast<Eigen::Index>(j)) = term_column(data, terms[j]);
  design.validate();
  return design;
}

std::string join_terms(const std::vector<std::string>& terms) {
  std::string out;
  for (const auto& t : terms) {
    if (!out.empty()) out += '+';
    out += t;
  }
  return out;
}

JointFit<double> fit_joint(const Dataset& data, const JointSpec& spec,
                           const JointControl& control) {
  spec.validate();
  Family family = spec.mean_family;
  if (family.kind() == FamilyKind::Binomial && data.binomial_index() &&
      *data.binomial_index() != family.binomial_index())
    throw Error(ErrorCode::InvalidArgument, "binomial index differs from the dataset's");
  return fit_joint<double>(build_design(data, spec.mean_terms), build_design(data, spec.disp_terms),
                           data.response(), family, control);
}

}  // namespace jmmd
