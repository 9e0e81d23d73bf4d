#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "portq/compiler.hpp"
#include "portq/encoding.hpp"
#include "portq/model.hpp"
#include "portq/solvers.hpp"

namespace portq {

struct ViolationEntry {
  std::string label;
  ConstraintKind kind = ConstraintKind::MultiLinear;
  /// Natural-form lhs - rhs (sum w - 1, a.w - b, w'Sw - sigma2_target).
  double residual = 0.0;
  bool satisfied = true;
  /// a.w + alpha s - b for rows with a slack block; what the penalty squares.
  std::optional<double> penalty_residual;
};

/// Box constraints never appear: the encoding satisfies them by construction.
struct ViolationReport {
  std::vector<ViolationEntry> entries;
  std::size_t not_satisfied = 0;
};

/// Budget: |sum w - 1| <= max effective granularity. Linear rows: op within
/// 1e-12. Volatility: w'Sw <= sigma2_target with no band. `slacks` may be
/// empty; otherwise one value per multi-asset constraint.
ViolationReport check_constraints(const std::vector<double>& weights, const std::vector<double>& slacks,
                                  const Problem& problem, const EncodingLayout& layout);
ViolationReport check_constraints(const DecodedSolution& solution, const Problem& problem,
                                  const EncodingLayout& layout);

struct Kpis {
  double expected_return = 0.0;
  double volatility = 0.0;  // w'Sw
  /// return / sqrt(volatility), risk-free rate 0; empty when volatility <= 0.
  std::optional<double> sharpe;
};

Kpis kpis(const std::vector<double>& weights, const Problem& problem);

/// Fraction of reports with nothing violated. Throws on an empty list.
double success_probability(std::span<const ViolationReport> reports);

struct ErrorStats {
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
};

/// Rounding error of Uniform[0,1) onto the grid {0, p, ..., 1 - p}, the top
/// segment [1 - p, 1) mapping to 1 - p:
///   mean = p^2/2, variance = p^2/12 + p^3/4 - p^4/4,
///   skewness = (p^4/4 - 3 (p^2/2) var - (p^2/2)^3) / var^(3/2) ~ 3 sqrt(3) p.
/// Requires 0 < p <= 0.5.
ErrorStats error_stats_theory(double p);

struct MonteCarloErrorStats {
  ErrorStats stats;
  std::size_t samples = 0;
  double mean_stderr = 0.0;      // sqrt(var / n)
  double variance_stderr = 0.0;  // sqrt((m4 - var^2) / n)
};

inline constexpr std::size_t kMinMonteCarloSamples = 10000;

/// Samples the same rounding error. Variance is the unbiased estimator and
/// skewness the adjusted Fisher-Pearson G1 = g1 sqrt(n (n - 1)) / (n - 2)
/// with g1 = m3 / m2^(3/2) from central sample moments.
MonteCarloErrorStats error_stats_monte_carlo(double p, std::size_t n_samples, std::uint64_t seed);

struct SampleRecord {
  std::size_t read = 0;
  std::size_t round = 0;
  double energy = 0.0;
  std::string bits;
  std::vector<double> weights;
  double sum_weights = 0.0;
  Kpis kpis;
  ViolationReport report;
};

struct HistogramBin {
  double center = 0.0;
  std::size_t count = 0;
};

struct ViolationCount {
  std::string label;
  ConstraintKind kind = ConstraintKind::MultiLinear;
  std::size_t count = 0;
};

struct ExperimentRecord {
  std::vector<SampleRecord> samples;
  /// Index into samples of the highest-return sample with nothing violated.
  std::optional<std::size_t> best_feasible;
  double success_probability = 0.0;
  double median_return = 0.0;
  double median_volatility = 0.0;
  double median_sum_weights = 0.0;
  std::optional<double> median_sharpe;
  /// Sum of weights binned in steps of the budget tolerance around 1.
  double histogram_width = 0.0;
  std::vector<HistogramBin> sum_weights_histogram;
  /// Samples violating each constraint, in report order.
  std::vector<ViolationCount> violation_counts;
};

/// Decodes and checks every sample. Bit strings longer than the layout (the
/// constrained solver appends slack bits) are read through their prefix.
/// Throws on an empty set.
ExperimentRecord summarize(const SampleSet& samples, const Problem& problem, const EncodingLayout& layout);

double median(std::vector<double> values);

std::string record_to_json(const ExperimentRecord& record);
/// Per-sample rows: read,round,energy,return,volatility,sharpe,not_satisfied,sum_weights.
std::string format_record_csv(const ExperimentRecord& record);
/// Bar-chart rows: label,kind,count.
std::string format_violation_csv(const ExperimentRecord& record);

}  // namespace portq
