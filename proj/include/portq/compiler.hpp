#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "portq/encoding.hpp"
#include "portq/model.hpp"
#include "portq/quadratic_model.hpp"

namespace portq {

/// Raised when an H4 mode cannot be expressed as a quadratic model.
class UnsupportedModeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Volatility handling.
///  - EqualityToZero: H4 = w' S w (pushes risk down, never exactly zero).
///  - Linearized: H4 = (k' S w - sigma2_target)^2 for a fixed vector k.
///  - SlackConstraint: the inequality w' S w <= sigma2_target kept as a
///    natural-form constraint; squaring it with a slack would give a quartic
///    polynomial, so it has no quadratic penalty form.
struct EqualityToZero {};
struct Linearized {
  std::vector<double> k;  // empty means k_i = 1/N
};
struct SlackConstraint {};
using H4Mode = std::variant<EqualityToZero, Linearized, SlackConstraint>;

std::string h4_mode_name(const H4Mode& mode);
H4Mode h4_mode_from_string(const std::string& name);

/// Relative weights of f_Q = l1 H1 + l2 H2 + sum_j l3 * l3j * H3_j + l4 H4.
/// Per-constraint multipliers default to one when the vector is empty.
struct PenaltyWeights {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 1.0;
  double lambda4 = 1.0;
  std::vector<double> lambda3_per_constraint;

  double lambda3_for(std::size_t constraint) const;
  void validate(std::size_t n_constraints) const;
};

/// Scale-aware defaults: l1 = 1, l2 = 10 max|r| / p_eff, l3 = l2 and
/// l4 = max|r| / sigma2_target, where p_eff is the largest effective
/// granularity of the layout.
PenaltyWeights default_penalty_weights(const Problem& problem, const EncodingLayout& layout);

/// Affine form of asset i's decoded weight over the layout's bits.
LinearForm weight_form(const Problem& problem, const EncodingLayout& layout, std::size_t asset);

/// Affine form of slack s_j (empty form for equalities).
LinearForm slack_form(const EncodingLayout& layout, std::size_t constraint);

/// -r . w(x); linear only.
QuadraticModel build_h1(const Problem& problem, const EncodingLayout& layout);
/// (sum_i w_i(x) - 1)^2.
QuadraticModel build_h2(const Problem& problem, const EncodingLayout& layout);
/// (a_j . w(x) + alpha_j s_j(x) - b_j)^2 for one multi-asset constraint.
QuadraticModel build_h3_constraint(const Problem& problem, const EncodingLayout& layout, std::size_t constraint);
/// Sum of build_h3_constraint over all constraints (unit per-constraint weights).
QuadraticModel build_h3(const Problem& problem, const EncodingLayout& layout);
/// Throws UnsupportedModeError for SlackConstraint.
QuadraticModel build_h4(const Problem& problem, const EncodingLayout& layout, const H4Mode& mode);

QuadraticModel assemble(const Problem& problem, const EncodingLayout& layout, const PenaltyWeights& weights,
                        const H4Mode& mode = EqualityToZero{});

enum class ConstraintKind { Normalization, MultiLinear, Volatility };
std::string to_string(ConstraintKind kind);

/// "term <op> rhs" over model bits. The residual is term(x) - rhs.
struct NaturalConstraint {
  std::string label;
  ConstraintKind kind = ConstraintKind::MultiLinear;
  QuadraticModel term;
  ConstraintOp op = ConstraintOp::EQ;
  double rhs = 0.0;
  /// Satisfaction band, identical to the one used when checking decoded
  /// portfolios: p_eff for the budget, 1e-12 for linear rows, 0 for risk.
  double tolerance = 0.0;
  /// Index into Problem::multi_constraints for MultiLinear entries.
  std::optional<std::size_t> source;
  /// Starting multiplier when the constraint is folded into a penalty.
  double penalty_weight = 1.0;

  double residual(const BitString& x) const { return term.energy(x) - rhs; }
  bool satisfied(const BitString& x) const;
};

/// Objective plus constraints in natural form. Bits are the layout's asset
/// bits (and a volatility slack block if the layout has one, which no
/// constraint reads).
struct ConstrainedModel {
  QuadraticModel objective;
  std::vector<NaturalConstraint> constraints;
  /// Slack width used whenever an inequality has to be turned into a penalty.
  int slack_bits = 0;
  std::size_t num_variables() const { return objective.size(); }
};

/// w' S w <= sigma2_target as a natural-form constraint (the SlackConstraint
/// treatment of H4).
NaturalConstraint build_volatility_constraint(const Problem& problem, const EncodingLayout& layout);

/// Requires a layout without linear slack blocks.
ConstrainedModel build_constrained(const Problem& problem, const EncodingLayout& layout);

/// Tolerances shared by the natural-form model and the portfolio checks.
inline constexpr double kLinearTolerance = 1e-12;
double normalization_tolerance(const Problem& problem, const EncodingLayout& layout);

}  // namespace portq
