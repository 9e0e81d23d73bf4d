#include "portq/compiler.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace portq {

std::string h4_mode_name(const H4Mode& mode) {
  if (std::holds_alternative<EqualityToZero>(mode)) return "equality-to-zero";
  if (std::holds_alternative<Linearized>(mode)) return "linearized";
  return "slack-constraint";
}

H4Mode h4_mode_from_string(const std::string& name) {
  if (name == "equality-to-zero" || name == "eqz") return EqualityToZero{};
  if (name == "linearized" || name == "linear") return Linearized{};
  if (name == "slack-constraint" || name == "slack") return SlackConstraint{};
  throw std::invalid_argument(
      fmt::format("unknown h4 mode '{}' (expected equality-to-zero, linearized or slack-constraint)", name));
}

double PenaltyWeights::lambda3_for(std::size_t constraint) const {
  if (lambda3_per_constraint.empty()) return lambda3;
  return lambda3 * lambda3_per_constraint.at(constraint);
}

void PenaltyWeights::validate(std::size_t n_constraints) const {
  for (double l : {lambda1, lambda2, lambda3, lambda4}) {
    if (!std::isfinite(l) || l < 0.0) throw std::invalid_argument("penalty weights must be finite and >= 0");
  }
  if (!lambda3_per_constraint.empty()) {
    if (lambda3_per_constraint.size() != n_constraints) {
      throw std::invalid_argument(fmt::format("expected {} per-constraint weights, got {}", n_constraints,
                                              lambda3_per_constraint.size()));
    }
    for (double l : lambda3_per_constraint) {
      if (!std::isfinite(l) || l < 0.0) throw std::invalid_argument("per-constraint weights must be finite and >= 0");
    }
  }
}

PenaltyWeights default_penalty_weights(const Problem& problem, const EncodingLayout& layout) {
  double max_r = 0.0;
  for (const auto& a : problem.assets) max_r = std::max(max_r, std::abs(a.mean_return));
  if (max_r == 0.0) max_r = 1.0;
  double p_eff = max_effective_granularity(problem, layout.bits_per_asset);
  if (p_eff == 0.0) p_eff = granularity(layout.bits_per_asset);

  PenaltyWeights w;
  w.lambda1 = 1.0;
  w.lambda2 = 10.0 * max_r / p_eff;
  w.lambda3 = w.lambda2;
  w.lambda4 = max_r / problem.sigma2_target;
  return w;
}

LinearForm weight_form(const Problem& problem, const EncodingLayout& layout, std::size_t asset) {
  const Asset& a = problem.assets.at(asset);
  const double step = a.width() * granularity(layout.bits_per_asset);
  LinearForm f;
  f.constant = a.weight_min;
  const std::size_t start = layout.asset_bit_offset.at(asset);
  for (int k = 0; k < layout.bits_per_asset; ++k) {
    f.add(start + static_cast<std::size_t>(k), std::ldexp(step, k));
  }
  return f;
}

LinearForm slack_form(const EncodingLayout& layout, std::size_t constraint) {
  LinearForm f;
  const SlackBlock* block = layout.slack_for(constraint);
  if (block == nullptr) return f;
  const double step = block->beta * block->granularity();
  for (int k = 0; k < block->bits; ++k) f.add(block->start + static_cast<std::size_t>(k), std::ldexp(step, k));
  return f;
}

namespace {

// sum_i c_i w_i(x) + constant as one affine form.
LinearForm weighted_weight_sum(const Problem& problem, const EncodingLayout& layout,
                               const std::vector<double>& coefficients, double constant) {
  LinearForm out;
  out.constant = constant;
  for (std::size_t i = 0; i < problem.size(); ++i) {
    if (coefficients[i] == 0.0) continue;
    const LinearForm w = weight_form(problem, layout, i);
    out.constant += coefficients[i] * w.constant;
    for (const auto& [bit, c] : w.coeffs) out.add(bit, coefficients[i] * c);
  }
  return out;
}

}  // namespace

QuadraticModel build_h1(const Problem& problem, const EncodingLayout& layout) {
  check_layout(layout, problem);
  std::vector<double> neg_r;
  for (const auto& a : problem.assets) neg_r.push_back(-a.mean_return);
  QuadraticModel m(layout.total_bits);
  add_linear_form(m, weighted_weight_sum(problem, layout, neg_r, 0.0));
  return m;
}

QuadraticModel build_h2(const Problem& problem, const EncodingLayout& layout) {
  check_layout(layout, problem);
  QuadraticModel m(layout.total_bits);
  add_squared(m, weighted_weight_sum(problem, layout, std::vector<double>(problem.size(), 1.0), -1.0));
  return m;
}

QuadraticModel build_h3_constraint(const Problem& problem, const EncodingLayout& layout, std::size_t constraint) {
  check_layout(layout, problem);
  const auto& c = problem.multi_constraints.at(constraint);
  LinearForm f = weighted_weight_sum(problem, layout, c.coefficients, -c.rhs);
  if (const SlackBlock* block = layout.slack_for(constraint)) {
    for (const auto& [bit, v] : slack_form(layout, constraint).coeffs) f.add(bit, block->alpha * v);
  } else if (c.op != ConstraintOp::EQ) {
    throw std::invalid_argument(fmt::format("layout has no slack block for inequality constraint {}", constraint));
  }
  QuadraticModel m(layout.total_bits);
  add_squared(m, f);
  return m;
}

QuadraticModel build_h3(const Problem& problem, const EncodingLayout& layout) {
  QuadraticModel m(layout.total_bits);
  for (std::size_t j = 0; j < problem.multi_constraints.size(); ++j) {
    m.add_scaled(build_h3_constraint(problem, layout, j), 1.0);
  }
  return m;
}

namespace {

QuadraticModel risk_form(const Problem& problem, const EncodingLayout& layout) {
  // sum_{i<=j} adjusted_ij w_i w_j with adjusted_ii = S_ii, adjusted_ij = 2 S_ij.
  QuadraticModel m(layout.total_bits);
  std::vector<LinearForm> w;
  for (std::size_t i = 0; i < problem.size(); ++i) w.push_back(weight_form(problem, layout, i));
  const auto& cov = problem.covariance;
  for (std::size_t i = 0; i < problem.size(); ++i) {
    for (std::size_t j = i; j < problem.size(); ++j) {
      const double s = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const double adjusted = (i == j) ? s : 2.0 * s;
      if (adjusted == 0.0) continue;
      add_product(m, w[i], w[j], adjusted);
    }
  }
  return m;
}

}  // namespace

QuadraticModel build_h4(const Problem& problem, const EncodingLayout& layout, const H4Mode& mode) {
  check_layout(layout, problem);
  if (std::holds_alternative<SlackConstraint>(mode)) {
    throw UnsupportedModeError(
        "slack-constraint volatility has no quadratic penalty: squaring w'Sw + s - sigma2 gives a quartic "
        "(PUBO) term; use a constrained model instead");
  }
  if (std::holds_alternative<EqualityToZero>(mode)) return risk_form(problem, layout);

  const auto& lin = std::get<Linearized>(mode);
  const std::size_t n = problem.size();
  std::vector<double> k = lin.k.empty() ? std::vector<double>(n, 1.0 / static_cast<double>(n)) : lin.k;
  if (k.size() != n) {
    throw std::invalid_argument(fmt::format("linearization vector needs {} entries, got {}", n, k.size()));
  }
  // (k' S) w - sigma2_target.
  const Eigen::Map<const Eigen::VectorXd> kv(k.data(), static_cast<Eigen::Index>(n));
  const Eigen::VectorXd row = problem.covariance.transpose() * kv;
  const std::vector<double> c(row.data(), row.data() + row.size());
  QuadraticModel m(layout.total_bits);
  add_squared(m, weighted_weight_sum(problem, layout, c, -problem.sigma2_target));
  return m;
}

QuadraticModel assemble(const Problem& problem, const EncodingLayout& layout, const PenaltyWeights& weights,
                        const H4Mode& mode) {
  check_layout(layout, problem);
  weights.validate(problem.multi_constraints.size());
  QuadraticModel total(layout.total_bits);
  total.add_scaled(build_h1(problem, layout), weights.lambda1);
  total.add_scaled(build_h2(problem, layout), weights.lambda2);
  for (std::size_t j = 0; j < problem.multi_constraints.size(); ++j) {
    const double l = weights.lambda3_for(j);
    if (l == 0.0) continue;
    total.add_scaled(build_h3_constraint(problem, layout, j), l);
  }
  if (weights.lambda4 != 0.0 || std::holds_alternative<SlackConstraint>(mode)) {
    total.add_scaled(build_h4(problem, layout, mode), weights.lambda4);
  }
  return total;
}

std::string to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::Normalization: return "normalization";
    case ConstraintKind::MultiLinear: return "multi_linear";
    case ConstraintKind::Volatility: return "volatility";
  }
  return "?";
}

bool NaturalConstraint::satisfied(const BitString& x) const {
  const double r = residual(x);
  switch (op) {
    case ConstraintOp::EQ: return std::abs(r) <= tolerance;
    case ConstraintOp::LE: return r <= tolerance;
    case ConstraintOp::GE: return r >= -tolerance;
  }
  return false;
}

double normalization_tolerance(const Problem& problem, const EncodingLayout& layout) {
  return max_effective_granularity(problem, layout.bits_per_asset);
}

NaturalConstraint build_volatility_constraint(const Problem& problem, const EncodingLayout& layout) {
  NaturalConstraint c;
  c.label = "volatility";
  c.kind = ConstraintKind::Volatility;
  c.term = risk_form(problem, layout);
  c.op = ConstraintOp::LE;
  c.rhs = problem.sigma2_target;
  c.tolerance = 0.0;
  return c;
}

ConstrainedModel build_constrained(const Problem& problem, const EncodingLayout& layout) {
  check_layout(layout, problem);
  if (!layout.slack_blocks.empty()) {
    throw std::invalid_argument("constrained models keep inequalities in natural form; build the layout without "
                                "linear slack blocks");
  }
  const PenaltyWeights defaults = default_penalty_weights(problem, layout);
  ConstrainedModel cm;
  cm.objective = build_h1(problem, layout);
  cm.slack_bits = layout.bits_per_asset;

  NaturalConstraint budget;
  budget.label = "normalization";
  budget.kind = ConstraintKind::Normalization;
  budget.term = QuadraticModel(layout.total_bits);
  add_linear_form(budget.term, weighted_weight_sum(problem, layout, std::vector<double>(problem.size(), 1.0), 0.0));
  budget.op = ConstraintOp::EQ;
  budget.rhs = 1.0;
  budget.tolerance = normalization_tolerance(problem, layout);
  budget.penalty_weight = defaults.lambda2;
  cm.constraints.push_back(std::move(budget));

  for (std::size_t j = 0; j < problem.multi_constraints.size(); ++j) {
    const auto& lc = problem.multi_constraints[j];
    NaturalConstraint c;
    c.label = fmt::format("multi_{}", j);
    c.kind = ConstraintKind::MultiLinear;
    c.term = QuadraticModel(layout.total_bits);
    add_linear_form(c.term, weighted_weight_sum(problem, layout, lc.coefficients, 0.0));
    c.op = lc.op;
    c.rhs = lc.rhs;
    c.tolerance = kLinearTolerance;
    c.source = j;
    c.penalty_weight = defaults.lambda3;
    cm.constraints.push_back(std::move(c));
  }

  cm.constraints.push_back(build_volatility_constraint(problem, layout));
  cm.constraints.back().penalty_weight = defaults.lambda4;
  return cm;
}

}  // namespace portq
