#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "portq/solvers.hpp"

namespace portq {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct InnerState {
  VectorXd w;
  VectorXd y_eq;
  VectorXd y_le;
};

// Risk-penalized subproblem: min -r.w + mu w'Sw over box, budget and the
// linear rows (equalities in A_eq w = b_eq, inequalities as A_le w <= b_le).
class ReferenceSolver {
 public:
  ReferenceSolver(const Problem& problem, double tolerance) : tol_(tolerance) {
    const auto n = static_cast<Eigen::Index>(problem.size());
    r_ = problem.returns();
    s_ = problem.covariance;
    lo_ = VectorXd::Map(problem.weight_min().data(), n);
    hi_ = VectorXd::Map(problem.weight_max().data(), n);
    std::vector<const LinearConstraint*> eq;
    std::vector<std::pair<const LinearConstraint*, double>> le;
    for (const auto& c : problem.multi_constraints) {
      if (c.op == ConstraintOp::EQ) eq.push_back(&c);
      else le.emplace_back(&c, c.op == ConstraintOp::LE ? 1.0 : -1.0);
    }
    a_eq_.resize(static_cast<Eigen::Index>(eq.size()), n);
    b_eq_.resize(static_cast<Eigen::Index>(eq.size()));
    for (std::size_t j = 0; j < eq.size(); ++j) {
      const auto row = static_cast<Eigen::Index>(j);
      a_eq_.row(row) = VectorXd::Map(eq[j]->coefficients.data(), n).transpose();
      b_eq_(row) = eq[j]->rhs;
    }
    a_le_.resize(static_cast<Eigen::Index>(le.size()), n);
    b_le_.resize(static_cast<Eigen::Index>(le.size()));
    for (std::size_t j = 0; j < le.size(); ++j) {
      const auto row = static_cast<Eigen::Index>(j);
      a_le_.row(row) = le[j].second * VectorXd::Map(le[j].first->coefficients.data(), n).transpose();
      b_le_(row) = le[j].second * le[j].first->rhs;
    }
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(s_, Eigen::EigenvaluesOnly);
    lambda_max_ = std::max(0.0, eig.eigenvalues().maxCoeff());
    rows_norm2_ = a_eq_.squaredNorm() + a_le_.squaredNorm();
  }

  std::size_t steps() const { return steps_; }
  double variance(const VectorXd& w) const { return w.dot(s_ * w); }
  const VectorXd& returns() const { return r_; }

  /// Euclidean projection onto {lo <= w <= hi, sum w = 1}: w = clamp(v - tau).
  VectorXd project(const VectorXd& v) const {
    const auto sum_at = [&](double tau) { return (v.array() - tau).max(lo_.array()).min(hi_.array()).sum(); };
    double t_lo = (v - hi_).minCoeff();  // sum_at(t_lo) = sum hi >= 1
    double t_hi = (v - lo_).maxCoeff();  // sum_at(t_hi) = sum lo <= 1
    for (int it = 0; it < 200 && t_hi - t_lo > 0.0; ++it) {
      const double mid = 0.5 * (t_lo + t_hi);
      if (mid <= t_lo || mid >= t_hi) break;
      (sum_at(mid) > 1.0 ? t_lo : t_hi) = mid;
    }
    double tau = 0.5 * (t_lo + t_hi);
    // Closed form on the free set identified by bisection.
    double free_sum = 0.0;
    double fixed = 0.0;
    int free_count = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double u = v(i) - tau;
      if (u <= lo_(i)) fixed += lo_(i);
      else if (u >= hi_(i)) fixed += hi_(i);
      else {
        free_sum += v(i);
        ++free_count;
      }
    }
    VectorXd w = (v.array() - tau).max(lo_.array()).min(hi_.array());
    if (free_count > 0) {
      const double exact = (free_sum + fixed - 1.0) / free_count;
      VectorXd candidate = (v.array() - exact).max(lo_.array()).min(hi_.array());
      if (std::abs(candidate.sum() - 1.0) <= std::abs(w.sum() - 1.0)) w = std::move(candidate);
    }
    return w;
  }

  /// Gradient of the Lagrangian without the augmentation terms.
  VectorXd lagrangian_gradient(const InnerState& s, double mu) const {
    VectorXd g = -r_ + 2.0 * mu * (s_ * s.w);
    if (a_eq_.rows() > 0) g += a_eq_.transpose() * s.y_eq;
    if (a_le_.rows() > 0) g += a_le_.transpose() * s.y_le;
    return g;
  }

  double step_constant(double mu, double rho) const {
    return std::max(1e-6, 2.0 * mu * lambda_max_ + rho * rows_norm2_);
  }

  /// Infinity norm of the projected-gradient mapping L (w - P(w - g / L)).
  double mapping_norm(const VectorXd& w, const VectorXd& g, double lipschitz) const {
    return (lipschitz * (w - project(w - g / lipschitz))).lpNorm<Eigen::Infinity>();
  }

  double row_infeasibility(const VectorXd& w) const {
    double v = 0.0;
    if (a_eq_.rows() > 0) v = std::max(v, (a_eq_ * w - b_eq_).lpNorm<Eigen::Infinity>());
    if (a_le_.rows() > 0) v = std::max(v, (a_le_ * w - b_le_).maxCoeff());
    return std::max(v, 0.0);
  }

  double complementarity(const InnerState& s) const {
    if (a_le_.rows() == 0) return 0.0;
    return (s.y_le.array() * (a_le_ * s.w - b_le_).array()).abs().maxCoeff();
  }

  /// Augmented Lagrangian on the linear rows around FISTA on the box and
  /// budget. Returns false when the iteration caps are hit.
  bool solve(InnerState& s, double mu) {
    const double inner_tol = 0.1 * tol_;
    if (a_eq_.rows() + a_le_.rows() == 0) return fista(s, mu, 0.0, inner_tol);
    double rho = 1.0;
    double last_infeasibility = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < 200; ++outer) {
      if (!fista(s, mu, rho, inner_tol)) return false;
      const VectorXd g_eq = a_eq_ * s.w - b_eq_;
      const VectorXd g_le = a_le_ * s.w - b_le_;
      const double infeasibility = row_infeasibility(s.w);
      const VectorXd y_le_next = (s.y_le + rho * g_le).cwiseMax(0.0);
      const double multiplier_change = std::max((rho * g_eq).lpNorm<Eigen::Infinity>(),
                                                (y_le_next - s.y_le).lpNorm<Eigen::Infinity>());
      s.y_eq += rho * g_eq;
      s.y_le = y_le_next;
      if (infeasibility <= inner_tol && multiplier_change <= inner_tol) return fista(s, mu, rho, inner_tol);
      if (infeasibility > 0.25 * last_infeasibility && rho < 1e6) rho *= 10.0;
      last_infeasibility = infeasibility;
    }
    return false;
  }

 private:
  VectorXd al_gradient(const VectorXd& w, const InnerState& s, double mu, double rho) const {
    VectorXd g = -r_ + 2.0 * mu * (s_ * w);
    if (a_eq_.rows() > 0) g += a_eq_.transpose() * (s.y_eq + rho * (a_eq_ * w - b_eq_));
    if (a_le_.rows() > 0) g += a_le_.transpose() * (s.y_le + rho * (a_le_ * w - b_le_)).cwiseMax(0.0);
    return g;
  }

  bool fista(InnerState& s, double mu, double rho, double inner_tol) {
    const double lipschitz = step_constant(mu, rho);
    VectorXd x = project(s.w);
    VectorXd z = x;
    double t = 1.0;
    for (std::size_t k = 0; k < kReferenceMaxGradientSteps; ++k) {
      ++steps_;
      const VectorXd g = al_gradient(z, s, mu, rho);
      const VectorXd next = project(z - g / lipschitz);
      if ((lipschitz * (z - next)).lpNorm<Eigen::Infinity>() <= inner_tol &&
          mapping_norm(next, al_gradient(next, s, mu, rho), lipschitz) <= inner_tol) {
        s.w = next;
        return true;
      }
      if ((z - next).dot(next - x) > 0.0) {
        // Momentum points uphill: restart.
        t = 1.0;
        z = next;
      } else {
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = next + ((t - 1.0) / t_next) * (next - x);
        t = t_next;
      }
      x = next;
    }
    s.w = x;
    return false;
  }

  double tol_;
  VectorXd r_;
  MatrixXd s_;
  VectorXd lo_;
  VectorXd hi_;
  MatrixXd a_eq_;
  VectorXd b_eq_;
  MatrixXd a_le_;
  VectorXd b_le_;
  double lambda_max_ = 0.0;
  double rows_norm2_ = 0.0;
  std::size_t steps_ = 0;
};

}  // namespace

ReferenceSolution reference_continuous(const Problem& problem, double tolerance) {
  validate(problem);
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  ReferenceSolver solver(problem, tolerance);
  const auto n = static_cast<Eigen::Index>(problem.size());
  std::size_t n_eq = 0;
  for (const auto& c : problem.multi_constraints) n_eq += c.op == ConstraintOp::EQ ? 1 : 0;
  const auto n_le = problem.multi_constraints.size() - n_eq;

  InnerState state{VectorXd::Constant(n, 1.0 / static_cast<double>(n)), VectorXd::Zero(static_cast<Eigen::Index>(n_eq)),
                   VectorXd::Zero(static_cast<Eigen::Index>(n_le))};
  const double sigma2 = problem.sigma2_target;
  auto run = [&](InnerState& s, double mu) {
    if (!solver.solve(s, mu)) {
      throw ReferenceSolveError(fmt::format(
          "reference solve did not converge within {} gradient steps at risk multiplier {} (infeasible "
          "constraints?)",
          kReferenceMaxGradientSteps, mu));
    }
  };

  double mu = 0.0;
  std::size_t bisections = 0;
  run(state, 0.0);
  if (solver.variance(state.w) > sigma2) {
    const double mu0 = std::max(solver.returns().lpNorm<Eigen::Infinity>(), 1e-12) / sigma2;
    double lo = 0.0;
    double hi = mu0;
    InnerState hi_state = state;
    run(hi_state, hi);
    while (solver.variance(hi_state.w) > sigma2) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e12 * mu0) {
        throw ReferenceSolveError(fmt::format("risk bound {} is below the smallest attainable variance {}", sigma2,
                                              solver.variance(hi_state.w)));
      }
      run(hi_state, hi);
    }
    for (; bisections < kReferenceBisectionSteps; ++bisections) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      InnerState trial = hi_state;
      run(trial, mid);
      if (solver.variance(trial.w) > sigma2) {
        lo = mid;
      } else {
        hi = mid;
        hi_state = std::move(trial);
      }
    }
    mu = hi;
    state = std::move(hi_state);
  }

  ReferenceSolution out;
  out.weights.assign(state.w.data(), state.w.data() + state.w.size());
  out.expected_return = solver.returns().dot(state.w);
  out.volatility = solver.variance(state.w);
  out.risk_multiplier = mu;
  out.gradient_steps = solver.steps();
  out.bisection_steps = bisections;

  const VectorXd g = solver.lagrangian_gradient(state, mu);
  const double lipschitz = solver.step_constant(mu, 1.0);
  out.kkt_residual = std::max({solver.mapping_norm(state.w, g, lipschitz), solver.row_infeasibility(state.w),
                               solver.complementarity(state), std::max(0.0, out.volatility - sigma2),
                               mu * std::abs(out.volatility - sigma2)});
  if (!(out.kkt_residual <= tolerance)) {
    throw ReferenceSolveError(
        fmt::format("reference KKT residual {:.3e} exceeds tolerance {:.3e}", out.kkt_residual, tolerance));
  }
  return out;
}

}  // namespace portq
