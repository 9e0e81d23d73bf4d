#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "portq/compiler.hpp"
#include "portq/solvers.hpp"

namespace portq::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInfeasible = 3;

enum class SolverChoice { Brute, Annealing, Tabu, Constrained };
std::string to_string(SolverChoice s);
SolverChoice solver_from_string(const std::string& s);

enum class SweepAxis { Bits, Assets, Reads };
std::string to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& s);

/// Everything one invocation depends on. Resolved as flags over config file
/// over these defaults.
struct RunConfig {
  std::string problem;
  int bits = 10;
  SolverChoice solver = SolverChoice::Annealing;
  std::string h4_mode = "equality-to-zero";
  /// Unset entries fall back to default_penalty_weights.
  std::optional<double> lambda1, lambda2, lambda3, lambda4;
  SamplerConfig sampler;
  double eta = 2.0;
  std::size_t max_rounds = 12;
  std::string out = "portq_out";

  // sweep
  std::optional<SweepAxis> axis;
  std::vector<double> values;
  std::size_t factors = 3;

  // error-stats
  std::optional<double> granularity;  // p; defaults to 2^-bits
  std::size_t mc_samples = 1000000;

  // report
  std::string samples_csv;

  void validate() const;
};

/// Effective configuration as pretty JSON (the same document a config file
/// may contain).
std::string config_to_json(const RunConfig& config);
/// Applies the fields of a JSON config document; unknown keys are errors.
void apply_config_json(RunConfig& config, const std::string& json_text);

/// Entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace portq::cli
