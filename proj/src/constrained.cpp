#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "local_field.hpp"
#include "portq/random.hpp"
#include "portq/solvers.hpp"

namespace portq {

namespace {

// Generated slack of one folded linear inequality: form(x) + alpha * s = rhs.
struct FoldedSlack {
  std::size_t start = 0;
  int bits = 0;
  double bound = 0.0;
  int alpha = 0;
  LinearForm form;
  double rhs = 0.0;
};

struct Folded {
  QuadraticModel model;
  std::vector<FoldedSlack> slacks;
};

LinearForm linear_part(const QuadraticModel& term) {
  LinearForm f;
  f.constant = term.offset();
  for (const auto& t : term.terms()) f.add(t.i, t.coeff);
  return f;
}

Folded fold(const ConstrainedModel& cmodel, const std::vector<double>& penalties) {
  if (penalties.size() != cmodel.constraints.size()) {
    throw SolverConfigError(
        fmt::format("expected {} penalties, got {}", cmodel.constraints.size(), penalties.size()));
  }
  const std::size_t n0 = cmodel.num_variables();
  const int s_bits = std::max(1, cmodel.slack_bits);
  Folded out{cmodel.objective, {}};

  for (std::size_t c = 0; c < cmodel.constraints.size(); ++c) {
    const NaturalConstraint& nc = cmodel.constraints[c];
    const double lambda = penalties[c];
    if (nc.term.size() != n0) throw std::invalid_argument(fmt::format("constraint '{}' has wrong size", nc.label));
    if (lambda == 0.0) continue;

    if (!nc.term.is_linear()) {
      if (nc.op != ConstraintOp::LE) {
        throw UnsupportedModeError(fmt::format("quadratic constraint '{}' must be '<='", nc.label));
      }
      // lambda * term pushes the quadratic form down; the constant rhs does
      // not change the minimizer.
      QuadraticModel widened = nc.term;
      widened.resize(out.model.size());
      out.model.add_scaled(widened, lambda);
      continue;
    }

    LinearForm f = linear_part(nc.term);
    f.constant -= nc.rhs;  // f(x) = term(x) - rhs
    const double lo = f.min_value();
    const double hi = f.max_value();
    int alpha = 0;
    double bound = 0.0;
    if (nc.op == ConstraintOp::LE) {
      if (hi <= 0.0) continue;  // always satisfied
      alpha = 1;
      bound = -lo;
    } else if (nc.op == ConstraintOp::GE) {
      if (lo >= 0.0) continue;
      alpha = -1;
      bound = hi;
    }
    if (alpha == 0 || bound <= 0.0) {
      add_squared(out.model, f, lambda);
      continue;
    }
    FoldedSlack slack;
    slack.start = out.model.size();
    slack.bits = s_bits;
    slack.bound = bound;
    slack.alpha = alpha;
    slack.form = linear_part(nc.term);
    slack.rhs = nc.rhs;
    out.model.resize(slack.start + static_cast<std::size_t>(s_bits));
    const double step = bound * granularity(s_bits);
    for (int k = 0; k < s_bits; ++k) {
      f.add(slack.start + static_cast<std::size_t>(k), alpha * std::ldexp(step, k));
    }
    add_squared(out.model, f, lambda);
    out.slacks.push_back(std::move(slack));
  }
  return out;
}

BitString model_bits(const BitString& x, std::size_t n0) {
  return BitString(std::vector<std::uint8_t>(x.data().begin(), x.data().begin() + static_cast<std::ptrdiff_t>(n0)));
}

bool all_satisfied(const ConstrainedModel& cmodel, const BitString& y) {
  return std::all_of(cmodel.constraints.begin(), cmodel.constraints.end(),
                     [&](const NaturalConstraint& c) { return c.satisfied(y); });
}

// Pair moves need the dense coupling matrix; beyond this size only single
// flips are tried.
inline constexpr std::size_t kPolishDenseLimit = 1024;

// Incremental view of one model for the polish moves.
struct Tracked {
  const QuadraticModel* model;
  detail::Adjacency adj;
  std::optional<detail::LocalField> field;
  std::vector<double> dense;  // n x n off-diagonal coefficients, empty when linear
  std::size_t n;
  double value = 0.0;

  Tracked(const QuadraticModel& m, const BitString& y) : model(&m), adj(m), n(m.size()) {
    field.emplace(adj, y.view());
    value = m.energy(y);
    if (!m.is_linear() && n <= kPolishDenseLimit) {
      dense.assign(n * n, 0.0);
      for (const auto& t : m.terms()) {
        if (t.i == t.j) continue;
        dense[t.i * n + t.j] = t.coeff;
        dense[t.j * n + t.i] = t.coeff;
      }
    }
  }

  double delta(std::size_t i) const { return field->delta(i); }
  double pair_delta(std::size_t i, std::size_t j) const {
    double d = field->delta(i) + field->delta(j);
    if (!dense.empty()) {
      const double si = field->bit(i) ? -1.0 : 1.0;
      const double sj = field->bit(j) ? -1.0 : 1.0;
      d += si * sj * dense[i * n + j];
    }
    return d;
  }
  void flip(std::size_t i) {
    value += field->delta(i);
    field->flip(i);
  }
};

inline constexpr std::size_t kPolishMaxPasses = 64;

bool move_keeps_feasible(const ConstrainedModel& cmodel, const std::vector<Tracked>& cons,
                         const std::vector<double>& deltas) {
  for (std::size_t c = 0; c < cons.size(); ++c) {
    const NaturalConstraint& nc = cmodel.constraints[c];
    const double r = cons[c].value + deltas[c] - nc.rhs;
    switch (nc.op) {
      case ConstraintOp::EQ:
        if (std::abs(r) > nc.tolerance) return false;
        break;
      case ConstraintOp::LE:
        if (r > nc.tolerance) return false;
        break;
      case ConstraintOp::GE:
        if (r < -nc.tolerance) return false;
        break;
    }
  }
  return true;
}

// Improves the objective of a feasible point with one- and two-bit flips
// that keep every constraint satisfied. First improvement, ascending indices.
BitString polish(const ConstrainedModel& cmodel, const BitString& start) {
  const std::size_t n = start.size();
  Tracked obj(cmodel.objective, start);
  std::vector<Tracked> cons;
  cons.reserve(cmodel.constraints.size());
  for (const auto& c : cmodel.constraints) cons.emplace_back(c.term, start);
  const bool pairs = n <= kPolishDenseLimit;
  const double eps = 1e-12 * std::max(1.0, std::abs(obj.value));
  std::vector<double> deltas(cons.size());

  for (std::size_t pass = 0; pass < kPolishMaxPasses; ++pass) {
    bool improved = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (obj.delta(i) >= -eps) continue;
      for (std::size_t c = 0; c < cons.size(); ++c) deltas[c] = cons[c].delta(i);
      if (!move_keeps_feasible(cmodel, cons, deltas)) continue;
      obj.flip(i);
      for (auto& t : cons) t.flip(i);
      improved = true;
    }
    if (pairs) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (obj.pair_delta(i, j) >= -eps) continue;
          for (std::size_t c = 0; c < cons.size(); ++c) deltas[c] = cons[c].pair_delta(i, j);
          if (!move_keeps_feasible(cmodel, cons, deltas)) continue;
          obj.flip(i);
          obj.flip(j);
          for (auto& t : cons) {
            t.flip(i);
            t.flip(j);
          }
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
  const auto state = obj.field->state();
  return BitString(std::vector<std::uint8_t>(state.begin(), state.end()));
}

// Sets every generated slack to the level closest to the value that closes
// its row.
void fit_slacks(const Folded& folded, BitString& x, const BitString& y) {
  for (const auto& s : folded.slacks) {
    const double gap = s.alpha * (s.rhs - s.form.evaluate(y));
    const auto level = nearest_level(gap, s.bits, 0.0, s.bound);
    write_slice(level, x.view().subspan(s.start, static_cast<std::size_t>(s.bits)));
  }
}

SampleSet run_sampler(const QuadraticModel& model, const SamplerConfig& config, SamplerKind kind) {
  return kind == SamplerKind::Tabu ? tabu_search(model, config) : simulated_anneal(model, config);
}

}  // namespace

std::vector<double> initial_penalties(const ConstrainedModel& cmodel) {
  std::vector<double> out;
  for (const auto& c : cmodel.constraints) out.push_back(c.penalty_weight);
  return out;
}

QuadraticModel fold_constraints(const ConstrainedModel& cmodel, const std::vector<double>& penalties) {
  return fold(cmodel, penalties).model;
}

ConstrainedResult solve_constrained(const ConstrainedModel& cmodel, const SamplerConfig& config,
                                    const ConstrainedOptions& options) {
  config.validate();
  if (!(options.eta > 1.0)) throw SolverConfigError(fmt::format("eta must be > 1, got {}", options.eta));
  if (options.max_rounds < 1) throw SolverConfigError("max_rounds must be >= 1");
  if (cmodel.num_variables() == 0) throw SolverConfigError("constrained model has no variables");
  for (const auto& c : cmodel.constraints) {
    if (!std::isfinite(c.penalty_weight) || c.penalty_weight < 0.0) {
      throw SolverConfigError(fmt::format("constraint '{}' has an invalid penalty weight", c.label));
    }
  }

  const std::size_t n0 = cmodel.num_variables();
  ConstrainedResult result;
  result.model_bits = n0;
  std::vector<double> penalties = initial_penalties(cmodel);
  std::optional<BitString> previous_best;

  auto better_incumbent = [&](const BitString& y, double objective) {
    if (!result.incumbent) return true;
    const BitString inc = model_bits(result.incumbent->bits, n0);
    const double inc_obj = cmodel.objective.energy(inc);
    if (objective != inc_obj) return objective < inc_obj;
    return y < inc;
  };

  for (std::size_t round = 0; round < options.max_rounds; ++round) {
    result.lambda_history.push_back(penalties);
    const Folded folded = fold(cmodel, penalties);
    SamplerConfig round_config = config;
    round_config.seed = derive_seed(config.seed, round);
    SampleSet set = run_sampler(folded.model, round_config, options.sampler);
    result.samples.truncated = result.samples.truncated || set.truncated;

    for (auto& s : set.samples) {
      s.round = round;
      BitString y = model_bits(s.bits, n0);
      if (!all_satisfied(cmodel, y)) continue;
      if (BitString polished = polish(cmodel, y); all_satisfied(cmodel, polished)) y = std::move(polished);
      std::copy(y.data().begin(), y.data().end(), s.bits.view().begin());
      fit_slacks(folded, s.bits, y);
      s.energy = folded.model.energy(s.bits);
      const double objective = cmodel.objective.energy(y);
      if (better_incumbent(y, objective)) result.incumbent = s;
    }
    set.sort();
    result.rounds = round + 1;

    const Sample& best = set.best();
    const BitString best_y = model_bits(best.bits, n0);
    bool violated = false;
    for (std::size_t c = 0; c < cmodel.constraints.size(); ++c) {
      if (!cmodel.constraints[c].satisfied(best_y)) {
        penalties[c] *= options.eta;
        violated = true;
      }
    }
    const bool repeat = !violated && previous_best && *previous_best == best_y;
    previous_best = violated ? std::nullopt : std::optional<BitString>(best_y);
    result.samples.merge(std::move(set));
    if (repeat) break;
  }
  result.feasible = result.incumbent.has_value();
  return result;
}

}  // namespace portq
