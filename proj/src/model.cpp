#include "portq/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "portq/random.hpp"

namespace portq {

using json = nlohmann::json;

std::string to_string(AssetClass c) {
  switch (c) {
    case AssetClass::EQ: return "EQ";
    case AssetClass::FI: return "FI";
    case AssetClass::MM: return "MM";
  }
  return "?";
}

std::string to_string(ConstraintOp op) {
  switch (op) {
    case ConstraintOp::EQ: return "eq";
    case ConstraintOp::LE: return "le";
    case ConstraintOp::GE: return "ge";
  }
  return "?";
}

AssetClass asset_class_from_string(const std::string& s) {
  if (s == "EQ") return AssetClass::EQ;
  if (s == "FI") return AssetClass::FI;
  if (s == "MM") return AssetClass::MM;
  throw ParseError(fmt::format("unknown asset class '{}' (expected EQ, FI or MM)", s));
}

ConstraintOp constraint_op_from_string(const std::string& s) {
  if (s == "eq") return ConstraintOp::EQ;
  if (s == "le") return ConstraintOp::LE;
  if (s == "ge") return ConstraintOp::GE;
  throw ParseError(fmt::format("unknown constraint op '{}' (expected eq, le or ge)", s));
}

double LinearConstraint::lhs(const std::vector<double>& weights) const {
  if (weights.size() != coefficients.size()) {
    throw std::invalid_argument("LinearConstraint::lhs: dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += coefficients[i] * weights[i];
  return acc;
}

Eigen::VectorXd Problem::returns() const {
  Eigen::VectorXd r(static_cast<Eigen::Index>(assets.size()));
  for (std::size_t i = 0; i < assets.size(); ++i) r[static_cast<Eigen::Index>(i)] = assets[i].mean_return;
  return r;
}

std::vector<double> Problem::weight_min() const {
  std::vector<double> out;
  out.reserve(assets.size());
  for (const auto& a : assets) out.push_back(a.weight_min);
  return out;
}

std::vector<double> Problem::weight_max() const {
  std::vector<double> out;
  out.reserve(assets.size());
  for (const auto& a : assets) out.push_back(a.weight_max);
  return out;
}

double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
  if (symmetric.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

bool is_positive_semidefinite(const Eigen::MatrixXd& symmetric) {
  const double trace = symmetric.trace();
  return min_eigenvalue(symmetric) >= -1e-10 * std::abs(trace);
}

void validate(const Problem& problem) {
  const std::size_t n = problem.size();
  if (n == 0) throw ValidationError("problem has no assets");

  for (std::size_t i = 0; i < n; ++i) {
    const Asset& a = problem.assets[i];
    const auto label = fmt::format("asset {} ('{}')", i, a.name);
    if (!std::isfinite(a.mean_return) || !std::isfinite(a.weight_min) || !std::isfinite(a.weight_max)) {
      throw ValidationError(label + ": non-finite field");
    }
    if (a.weight_min < 0.0) throw ValidationError(label + ": weight_min < 0");
    if (a.weight_max > 1.0) throw ValidationError(label + ": weight_max > 1");
    if (a.weight_min > a.weight_max) throw ValidationError(label + ": weight_min > weight_max");
  }

  const auto& cov = problem.covariance;
  if (static_cast<std::size_t>(cov.rows()) != n || static_cast<std::size_t>(cov.cols()) != n) {
    throw ValidationError(fmt::format("covariance must be {0}x{0}, got {1}x{2}", n, cov.rows(), cov.cols()));
  }
  if (!cov.allFinite()) throw ValidationError("covariance has non-finite entries");
  const double scale = std::max(cov.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < cov.cols(); ++j) {
      if (std::abs(cov(i, j) - cov(j, i)) > 1e-12 * scale) {
        throw ValidationError(fmt::format("covariance not symmetric at ({}, {})", i, j));
      }
    }
  }
  if (!is_positive_semidefinite(cov)) {
    throw ValidationError(fmt::format("covariance not positive semidefinite (min eigenvalue {:.6g})",
                                      min_eigenvalue(cov)));
  }

  if (!(problem.sigma2_target > 0.0) || !std::isfinite(problem.sigma2_target)) {
    throw ValidationError("sigma2_target must be a positive finite number");
  }

  double sum_min = 0.0;
  double sum_max = 0.0;
  for (const auto& a : problem.assets) {
    sum_min += a.weight_min;
    sum_max += a.weight_max;
  }
  // Box sums such as 10 x 0.1 land one ulp away from 1.
  constexpr double kSumSlack = 1e-12;
  if (sum_min > 1.0 + kSumSlack) throw ValidationError("normalization infeasible: sum of weight_min > 1");
  if (sum_max < 1.0 - kSumSlack) throw ValidationError("normalization infeasible: sum of weight_max < 1");

  for (std::size_t j = 0; j < problem.multi_constraints.size(); ++j) {
    const auto& c = problem.multi_constraints[j];
    if (c.coefficients.size() != n) {
      throw ValidationError(fmt::format("constraint {}: expected {} coefficients, got {}", j, n,
                                        c.coefficients.size()));
    }
    bool any_nonzero = false;
    for (double a : c.coefficients) {
      if (!std::isfinite(a)) throw ValidationError(fmt::format("constraint {}: non-finite coefficient", j));
      any_nonzero = any_nonzero || a != 0.0;
    }
    if (!any_nonzero) throw ValidationError(fmt::format("constraint {}: all coefficients are zero", j));
    if (!std::isfinite(c.rhs)) throw ValidationError(fmt::format("constraint {}: non-finite rhs", j));
  }
}

double portfolio_return(const std::vector<double>& weights, const Problem& problem) {
  if (weights.size() != problem.size()) {
    throw std::invalid_argument(
        fmt::format("portfolio_return: expected {} weights, got {}", problem.size(), weights.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += problem.assets[i].mean_return * weights[i];
  return acc;
}

double portfolio_variance(const std::vector<double>& weights, const Problem& problem) {
  if (weights.size() != problem.size()) {
    throw std::invalid_argument(
        fmt::format("portfolio_variance: expected {} weights, got {}", problem.size(), weights.size()));
  }
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return w.dot(problem.covariance * w);
}

namespace {

double finite_number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ParseError(what + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(what + ": NaN/Inf not permitted");
  return v;
}

const json& field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(fmt::format("{}: missing field '{}'", where, key));
  return *it;
}

}  // namespace

Problem parse_problem(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ParseError("problem file must contain a JSON object");

  Problem p;
  const auto& assets = field(root, "assets", "problem");
  if (!assets.is_array()) throw ParseError("'assets' must be an array");
  for (std::size_t i = 0; i < assets.size(); ++i) {
    const auto& a = assets[i];
    const auto where = fmt::format("assets[{}]", i);
    if (!a.is_object()) throw ParseError(where + ": expected an object");
    Asset asset;
    const auto& name = field(a, "name", where);
    if (!name.is_string()) throw ParseError(where + ".name: expected a string");
    asset.name = name.get<std::string>();
    const auto& cls = field(a, "class", where);
    if (!cls.is_string()) throw ParseError(where + ".class: expected a string");
    asset.asset_class = asset_class_from_string(cls.get<std::string>());
    asset.mean_return = finite_number(field(a, "ret", where), where + ".ret");
    asset.weight_min = finite_number(field(a, "min", where), where + ".min");
    asset.weight_max = finite_number(field(a, "max", where), where + ".max");
    p.assets.push_back(std::move(asset));
  }

  const auto n = static_cast<Eigen::Index>(p.assets.size());
  const auto& cov = field(root, "covariance", "problem");
  if (!cov.is_array() || static_cast<Eigen::Index>(cov.size()) != n) {
    throw ParseError(fmt::format("'covariance' must be an array of {} rows", n));
  }
  p.covariance.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = cov[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw ParseError(fmt::format("covariance row {} must have {} entries", i, n));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      p.covariance(i, j) = finite_number(row[static_cast<std::size_t>(j)], fmt::format("covariance[{}][{}]", i, j));
    }
  }

  p.sigma2_target = finite_number(field(root, "sigma2_target", "problem"), "sigma2_target");

  if (auto it = root.find("constraints"); it != root.end()) {
    if (!it->is_array()) throw ParseError("'constraints' must be an array");
    for (std::size_t j = 0; j < it->size(); ++j) {
      const auto& c = (*it)[j];
      const auto where = fmt::format("constraints[{}]", j);
      if (!c.is_object()) throw ParseError(where + ": expected an object");
      LinearConstraint lc;
      const auto& coeffs = field(c, "coeffs", where);
      if (!coeffs.is_array()) throw ParseError(where + ".coeffs: expected an array");
      for (std::size_t k = 0; k < coeffs.size(); ++k) {
        lc.coefficients.push_back(finite_number(coeffs[k], fmt::format("{}.coeffs[{}]", where, k)));
      }
      const auto& op = field(c, "op", where);
      if (!op.is_string()) throw ParseError(where + ".op: expected a string");
      lc.op = constraint_op_from_string(op.get<std::string>());
      lc.rhs = finite_number(field(c, "rhs", where), where + ".rhs");
      p.multi_constraints.push_back(std::move(lc));
    }
  }

  validate(p);
  return p;
}

std::string serialize_problem(const Problem& problem) {
  json root;
  root["assets"] = json::array();
  for (const auto& a : problem.assets) {
    root["assets"].push_back({{"name", a.name},
                              {"class", to_string(a.asset_class)},
                              {"ret", a.mean_return},
                              {"min", a.weight_min},
                              {"max", a.weight_max}});
  }
  root["covariance"] = json::array();
  for (Eigen::Index i = 0; i < problem.covariance.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < problem.covariance.cols(); ++j) row.push_back(problem.covariance(i, j));
    root["covariance"].push_back(std::move(row));
  }
  root["sigma2_target"] = problem.sigma2_target;
  root["constraints"] = json::array();
  for (const auto& c : problem.multi_constraints) {
    root["constraints"].push_back({{"coeffs", c.coefficients}, {"op", to_string(c.op)}, {"rhs", c.rhs}});
  }
  return root.dump(2) + "\n";
}

Problem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open problem file '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str());
}

void save_problem(const Problem& problem, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << serialize_problem(problem);
}

Problem generate_instance(std::size_t n_assets, std::size_t n_factors, std::uint64_t seed) {
  if (n_assets == 0 || n_factors == 0 || n_factors > n_assets) {
    throw std::invalid_argument(
        fmt::format("generate_instance: need 1 <= n_factors <= n_assets, got n_assets={}, n_factors={}",
                    n_assets, n_factors));
  }
  Rng rng(seed);
  const auto n = static_cast<Eigen::Index>(n_assets);
  const auto f = static_cast<Eigen::Index>(n_factors);

  // Lattice maxima stay strictly below the box maximum, so the plain
  // [0, 0.1] box is only kept when it leaves room above a budget of one.
  const double box_max =
      (static_cast<double>(n_assets) * 0.1 > 1.0) ? 0.1 : std::min(1.0, 2.0 / static_cast<double>(n_assets));

  Problem p;
  constexpr AssetClass kCycle[] = {AssetClass::EQ, AssetClass::FI, AssetClass::MM};
  for (std::size_t i = 0; i < n_assets; ++i) {
    Asset a;
    a.name = fmt::format("A{:03d}", i);
    a.asset_class = kCycle[i % 3];
    a.mean_return = rng.uniform(-0.02, 0.10);
    a.weight_min = 0.0;
    a.weight_max = box_max;
    p.assets.push_back(std::move(a));
  }

  std::normal_distribution<double> gauss(0.0, 0.1 / std::sqrt(static_cast<double>(n_factors)));
  Eigen::MatrixXd loadings(n, f);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < f; ++k) loadings(i, k) = gauss(rng.engine());
  }
  p.covariance = loadings * loadings.transpose();
  for (Eigen::Index i = 0; i < n; ++i) p.covariance(i, i) += rng.uniform(0.001, 0.01);
  // Exact symmetry regardless of the product's rounding.
  p.covariance = (0.5 * (p.covariance + p.covariance.transpose())).eval();

  const std::vector<double> equal(n_assets, 1.0 / static_cast<double>(n_assets));
  p.sigma2_target = portfolio_variance(equal, p);

  struct ClassRule {
    AssetClass cls;
    ConstraintOp op;
    double rhs;
  };
  constexpr ClassRule kRules[] = {
      {AssetClass::EQ, ConstraintOp::LE, 0.6},
      {AssetClass::FI, ConstraintOp::GE, 0.2},
      {AssetClass::MM, ConstraintOp::LE, 0.4},
  };
  for (const auto& rule : kRules) {
    LinearConstraint c;
    c.coefficients.assign(n_assets, 0.0);
    bool present = false;
    for (std::size_t i = 0; i < n_assets; ++i) {
      if (p.assets[i].asset_class == rule.cls) {
        c.coefficients[i] = 1.0;
        present = true;
      }
    }
    if (!present) continue;
    c.op = rule.op;
    c.rhs = rule.rhs;
    p.multi_constraints.push_back(std::move(c));
  }

  validate(p);
  return p;
}

}  // namespace portq
