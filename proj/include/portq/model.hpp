#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace portq {

/// Raised when a problem file cannot be parsed.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a Problem violates one of its invariants. The message names
/// the first violated invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class AssetClass { EQ, FI, MM };

enum class ConstraintOp { EQ, LE, GE };

std::string to_string(AssetClass c);
std::string to_string(ConstraintOp op);
AssetClass asset_class_from_string(const std::string& s);
ConstraintOp constraint_op_from_string(const std::string& s);

struct Asset {
  std::string name;
  AssetClass asset_class = AssetClass::EQ;
  double mean_return = 0.0;  // fraction per period
  double weight_min = 0.0;
  double weight_max = 1.0;

  double width() const { return weight_max - weight_min; }
};

/// Row a_j of the multi-asset constraint matrix together with its relation.
struct LinearConstraint {
  std::vector<double> coefficients;
  ConstraintOp op = ConstraintOp::LE;
  double rhs = 0.0;

  double lhs(const std::vector<double>& weights) const;
};

/// Markowitz portfolio problem: maximize r.w subject to w'Sw <= sigma2_target,
/// sum(w) = 1, per-asset boxes and the multi-asset linear constraints.
///
/// Vectors and matrices are indexed by asset order as given at construction.
struct Problem {
  std::vector<Asset> assets;
  Eigen::MatrixXd covariance;
  double sigma2_target = 0.0;
  std::vector<LinearConstraint> multi_constraints;

  std::size_t size() const { return assets.size(); }
  Eigen::VectorXd returns() const;
  std::vector<double> weight_min() const;
  std::vector<double> weight_max() const;
};

/// Checks every Problem invariant, throwing ValidationError on the first
/// violation.
void validate(const Problem& problem);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& symmetric);

/// PSD test with tolerance -1e-10 * trace.
bool is_positive_semidefinite(const Eigen::MatrixXd& symmetric);

double portfolio_return(const std::vector<double>& weights, const Problem& problem);
double portfolio_variance(const std::vector<double>& weights, const Problem& problem);

Problem load_problem(const std::filesystem::path& path);
void save_problem(const Problem& problem, const std::filesystem::path& path);

/// JSON text round trip; the file functions are thin wrappers around these.
Problem parse_problem(const std::string& json_text);
std::string serialize_problem(const Problem& problem);

/// Synthetic instance with a factor covariance F F' + D.
///
/// Returns are uniform in [-0.02, 0.10]; boxes are [0, 0.1] when N * 0.1 > 1
/// and [0, min(1, 2/N)] otherwise. sigma2_target is the variance of the
/// equal-weight portfolio. Assets cycle through EQ, FI, MM and each present
/// class receives one constraint: EQ <= 0.6, FI >= 0.2, MM <= 0.4.
Problem generate_instance(std::size_t n_assets, std::size_t n_factors, std::uint64_t seed);

}  // namespace portq
