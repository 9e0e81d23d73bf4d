#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "portq/compiler.hpp"
#include "portq/encoding.hpp"
#include "portq/quadratic_model.hpp"

namespace portq {

class SolverConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SamplerConfig {
  std::uint64_t seed = 0;
  std::size_t num_reads = 50;
  /// Annealing: sweeps of n proposed flips. Tabu: moves per read.
  std::size_t sweeps = 1000;
  /// Unset temperatures are filled from the model (see default_schedule).
  std::optional<double> temperature_initial;
  std::optional<double> temperature_final;
  /// Unset means min(20, max(1, n / 4)).
  std::optional<std::size_t> tabu_tenure;
  /// Wall-clock cutoff in seconds; reads not started before the cutoff are
  /// skipped and the set is flagged as truncated.
  std::optional<double> time_limit;
  /// Worker threads for independent reads.
  std::size_t threads = 1;

  void validate() const;
};

/// Fills unset temperatures: T_initial = max|q_ij| and
/// T_final = 1e-3 * p_eff^2. Without a granularity hint T_final falls back to
/// 1e-3 times the smallest nonzero |q_ij|.
SamplerConfig default_schedule(SamplerConfig config, const QuadraticModel& model,
                               std::optional<double> effective_granularity = std::nullopt);

struct Sample {
  BitString bits;
  double energy = 0.0;
  std::size_t read = 0;
  std::size_t round = 0;
};

/// Samples sorted ascending by (energy, bits) with bits compared
/// lexicographically from index 0.
struct SampleSet {
  std::vector<Sample> samples;
  bool truncated = false;

  void sort();
  bool empty() const { return samples.empty(); }
  const Sample& best() const;
  /// Merges and re-sorts.
  void merge(SampleSet other);
};

inline constexpr std::size_t kBruteForceMaxBits = 30;

struct BruteForceResult {
  BitString bits;
  double energy = 0.0;
};

/// Exhaustive minimum; ties resolve to the lexicographically smallest bits.
BruteForceResult brute_force(const QuadraticModel& model);

/// Single-bit-flip Metropolis with a geometric schedule. Read r uses an
/// mt19937_64 seeded with seed ^ r and starts from a uniform random state.
SampleSet simulated_anneal(const QuadraticModel& model, const SamplerConfig& config);

/// Best-improving single-flip tabu search with aspiration on a new best;
/// each read restarts from a random state and reports its best state.
SampleSet tabu_search(const QuadraticModel& model, const SamplerConfig& config);

enum class SamplerKind { Annealing, Tabu };

struct ConstrainedOptions {
  double eta = 2.0;
  std::size_t max_rounds = 12;
  SamplerKind sampler = SamplerKind::Annealing;
};

/// Adaptive-penalty solve of a natural-form model.
struct ConstrainedResult {
  /// Every sample of every round, bits over the round QUBO's variables (the
  /// model's variables first, then generated slack bits).
  SampleSet samples;
  std::optional<Sample> incumbent;
  bool feasible = false;
  std::size_t rounds = 0;
  /// Penalty multiplier of each natural constraint, one row per round.
  std::vector<std::vector<double>> lambda_history;
  std::size_t model_bits = 0;
};

/// Round-0 multipliers: each constraint's penalty_weight (build_constrained
/// stores the default_penalty_weights values l2, l3 and l4 there).
std::vector<double> initial_penalties(const ConstrainedModel& cmodel);

/// Folds the natural constraints into one QUBO with the given multipliers.
/// Linear inequalities get generated slack bits (S = cmodel.slack_bits,
/// bound from the extremal value of the row over the bits); quadratic
/// inequalities "<= rhs" enter as multiplier * term.
QuadraticModel fold_constraints(const ConstrainedModel& cmodel, const std::vector<double>& penalties);

/// Round r samples fold_constraints(cmodel, penalties_r); feasible samples
/// are improved by feasibility-preserving one- and two-bit moves; the
/// multiplier of every constraint violated by the round's lowest-energy
/// sample is multiplied by eta. Stops when the same feasible sample is the
/// lowest-energy one in two consecutive rounds, or after max_rounds.
ConstrainedResult solve_constrained(const ConstrainedModel& cmodel, const SamplerConfig& config,
                                    const ConstrainedOptions& options = {});

class ReferenceSolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ReferenceSolution {
  std::vector<double> weights;
  double expected_return = 0.0;
  double volatility = 0.0;  // w' S w
  double risk_multiplier = 0.0;
  double kkt_residual = 0.0;
  std::size_t gradient_steps = 0;
  std::size_t bisection_steps = 0;
};

inline constexpr std::size_t kReferenceMaxGradientSteps = 100000;
inline constexpr std::size_t kReferenceBisectionSteps = 60;

/// Continuous benchmark: max r.w over the box, the budget, the multi-asset
/// rows and w'Sw <= sigma2_target.
///
/// For a risk multiplier mu the inner problem min -r.w + mu w'Sw over the
/// polytope is solved by projected gradient (projection onto box and budget
/// hyperplane, linear rows through an augmented Lagrangian). mu is then
/// bracketed and bisected until the risk bound holds. Throws
/// ReferenceSolveError when the risk bound cannot be met or the KKT residual
/// stays above `tolerance`.
ReferenceSolution reference_continuous(const Problem& problem, double tolerance = 1e-9);

/// CSV with header read,round,energy,bits,feasible.
std::string format_sample_csv(const SampleSet& set, const std::function<bool(const BitString&)>& feasible);
void write_sample_csv(const SampleSet& set, const std::function<bool(const BitString&)>& feasible,
                      const std::filesystem::path& path);
/// Parses the CSV above (the feasible column is ignored).
SampleSet parse_sample_csv(const std::string& text);

}  // namespace portq
