#include "portq/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "portq/analysis.hpp"
#include "portq/random.hpp"

namespace portq::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace

std::string to_string(SolverChoice s) {
  switch (s) {
    case SolverChoice::Brute: return "brute";
    case SolverChoice::Annealing: return "sa";
    case SolverChoice::Tabu: return "tabu";
    case SolverChoice::Constrained: return "constrained";
  }
  return "?";
}

SolverChoice solver_from_string(const std::string& s) {
  if (s == "brute") return SolverChoice::Brute;
  if (s == "sa") return SolverChoice::Annealing;
  if (s == "tabu") return SolverChoice::Tabu;
  if (s == "constrained") return SolverChoice::Constrained;
  throw UsageError(fmt::format("unknown solver '{}' (expected brute, sa, tabu or constrained)", s));
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Bits: return "K";
    case SweepAxis::Assets: return "assets";
    case SweepAxis::Reads: return "reads";
  }
  return "?";
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "K" || s == "bits") return SweepAxis::Bits;
  if (s == "assets") return SweepAxis::Assets;
  if (s == "reads") return SweepAxis::Reads;
  throw UsageError(fmt::format("unknown sweep axis '{}' (expected K, assets or reads)", s));
}

void RunConfig::validate() const {
  if (bits < 1 || bits > kMaxBits) throw UsageError(fmt::format("bits must be in [1, {}], got {}", kMaxBits, bits));
  h4_mode_from_string(h4_mode);
  sampler.validate();
  if (!(eta > 1.0)) throw UsageError(fmt::format("eta must be > 1, got {}", eta));
  if (max_rounds < 1) throw UsageError("max_rounds must be >= 1");
  for (const auto& l : {lambda1, lambda2, lambda3, lambda4}) {
    if (l && (!std::isfinite(*l) || *l < 0.0)) throw UsageError("penalty weights must be finite and >= 0");
  }
}

namespace {

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
void read_opt(const json& j, std::optional<T>& target) {
  if (j.is_null()) {
    target.reset();
  } else {
    target = j.get<T>();
  }
}

}  // namespace

std::string config_to_json(const RunConfig& c) {
  json j;
  j["problem"] = c.problem;
  j["bits"] = c.bits;
  j["solver"] = to_string(c.solver);
  j["h4_mode"] = c.h4_mode;
  j["lambda1"] = opt(c.lambda1);
  j["lambda2"] = opt(c.lambda2);
  j["lambda3"] = opt(c.lambda3);
  j["lambda4"] = opt(c.lambda4);
  j["seed"] = c.sampler.seed;
  j["reads"] = c.sampler.num_reads;
  j["sweeps"] = c.sampler.sweeps;
  j["temperature_initial"] = opt(c.sampler.temperature_initial);
  j["temperature_final"] = opt(c.sampler.temperature_final);
  j["tabu_tenure"] = opt(c.sampler.tabu_tenure);
  j["time_limit"] = opt(c.sampler.time_limit);
  j["threads"] = c.sampler.threads;
  j["eta"] = c.eta;
  j["max_rounds"] = c.max_rounds;
  j["out"] = c.out;
  j["axis"] = c.axis ? json(to_string(*c.axis)) : json(nullptr);
  j["values"] = c.values;
  j["factors"] = c.factors;
  j["p"] = opt(c.granularity);
  j["mc_samples"] = c.mc_samples;
  j["samples_csv"] = c.samples_csv;
  return j.dump(2) + "\n";
}

void apply_config_json(RunConfig& c, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw UsageError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "problem") c.problem = v.get<std::string>();
      else if (key == "bits") c.bits = v.get<int>();
      else if (key == "solver") c.solver = solver_from_string(v.get<std::string>());
      else if (key == "h4_mode") c.h4_mode = v.get<std::string>();
      else if (key == "lambda1") read_opt(v, c.lambda1);
      else if (key == "lambda2") read_opt(v, c.lambda2);
      else if (key == "lambda3") read_opt(v, c.lambda3);
      else if (key == "lambda4") read_opt(v, c.lambda4);
      else if (key == "seed") c.sampler.seed = v.get<std::uint64_t>();
      else if (key == "reads") c.sampler.num_reads = v.get<std::size_t>();
      else if (key == "sweeps") c.sampler.sweeps = v.get<std::size_t>();
      else if (key == "temperature_initial") read_opt(v, c.sampler.temperature_initial);
      else if (key == "temperature_final") read_opt(v, c.sampler.temperature_final);
      else if (key == "tabu_tenure") read_opt(v, c.sampler.tabu_tenure);
      else if (key == "time_limit") read_opt(v, c.sampler.time_limit);
      else if (key == "threads") c.sampler.threads = v.get<std::size_t>();
      else if (key == "eta") c.eta = v.get<double>();
      else if (key == "max_rounds") c.max_rounds = v.get<std::size_t>();
      else if (key == "out") c.out = v.get<std::string>();
      else if (key == "axis") c.axis = v.is_null() ? std::nullopt : std::optional(sweep_axis_from_string(v.get<std::string>()));
      else if (key == "values") c.values = v.get<std::vector<double>>();
      else if (key == "factors") c.factors = v.get<std::size_t>();
      else if (key == "p") read_opt(v, c.granularity);
      else if (key == "mc_samples") c.mc_samples = v.get<std::size_t>();
      else if (key == "samples_csv") c.samples_csv = v.get<std::string>();
      else throw UsageError(fmt::format("unknown config key '{}'", key));
    }
  } catch (const json::exception& e) {
    throw UsageError(fmt::format("bad config value: {}", e.what()));
  }
}

namespace {

// Flag values; only the ones given on the command line are set.
struct Flags {
  std::optional<std::string> config, problem, solver, h4_mode, out, axis, samples_csv;
  std::optional<int> bits;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reads, sweeps, threads, tabu_tenure, max_rounds, factors, mc_samples;
  std::optional<double> t_initial, t_final, time_limit, eta, lambda1, lambda2, lambda3, lambda4, p;
  std::optional<std::vector<double>> values;
};

std::string read_file(const fs::path& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(fmt::format("{} not found or unreadable: {}", what, path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig resolve(const Flags& f) {
  RunConfig c;
  if (f.config) apply_config_json(c, read_file(*f.config, "config file"));
  if (f.problem) c.problem = *f.problem;
  if (f.bits) c.bits = *f.bits;
  if (f.solver) c.solver = solver_from_string(*f.solver);
  if (f.h4_mode) c.h4_mode = *f.h4_mode;
  if (f.lambda1) c.lambda1 = f.lambda1;
  if (f.lambda2) c.lambda2 = f.lambda2;
  if (f.lambda3) c.lambda3 = f.lambda3;
  if (f.lambda4) c.lambda4 = f.lambda4;
  if (f.seed) c.sampler.seed = *f.seed;
  if (f.reads) c.sampler.num_reads = *f.reads;
  if (f.sweeps) c.sampler.sweeps = *f.sweeps;
  if (f.t_initial) c.sampler.temperature_initial = f.t_initial;
  if (f.t_final) c.sampler.temperature_final = f.t_final;
  if (f.tabu_tenure) c.sampler.tabu_tenure = f.tabu_tenure;
  if (f.time_limit) c.sampler.time_limit = f.time_limit;
  if (f.threads) c.sampler.threads = *f.threads;
  if (f.eta) c.eta = *f.eta;
  if (f.max_rounds) c.max_rounds = *f.max_rounds;
  if (f.out) c.out = *f.out;
  if (f.axis) c.axis = sweep_axis_from_string(*f.axis);
  if (f.values) c.values = *f.values;
  if (f.factors) c.factors = *f.factors;
  if (f.p) c.granularity = f.p;
  if (f.mc_samples) c.mc_samples = *f.mc_samples;
  if (f.samples_csv) c.samples_csv = *f.samples_csv;
  c.validate();
  return c;
}

Problem load_checked(const std::string& path) {
  if (path.empty()) throw UsageError("no problem file given (--problem)");
  if (!fs::exists(path)) throw UsageError(fmt::format("problem file not found: {}", path));
  return load_problem(path);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

EncodingLayout make_layout(const Problem& problem, const RunConfig& c) {
  LayoutOptions opts;
  opts.linear_slack = c.solver != SolverChoice::Constrained;
  return build_layout(problem, c.bits, opts);
}

PenaltyWeights make_weights(const Problem& problem, const EncodingLayout& layout, const RunConfig& c) {
  PenaltyWeights w = default_penalty_weights(problem, layout);
  if (c.lambda1) w.lambda1 = *c.lambda1;
  if (c.lambda2) w.lambda2 = *c.lambda2;
  if (c.lambda3) w.lambda3 = *c.lambda3;
  if (c.lambda4) w.lambda4 = *c.lambda4;
  return w;
}

std::string layout_json(const EncodingLayout& layout, const PenaltyWeights& w, const std::string& h4,
                        const QuadraticModel& qubo) {
  json j;
  j["n_assets"] = layout.n_assets;
  j["bits_per_asset"] = layout.bits_per_asset;
  j["total_bits"] = layout.total_bits;
  j["asset_bit_offset"] = layout.asset_bit_offset;
  json blocks = json::array();
  for (const auto& b : layout.slack_blocks) {
    blocks.push_back(
        {{"constraint", b.constraint}, {"start", b.start}, {"bits", b.bits}, {"beta", b.beta}, {"alpha", b.alpha}});
  }
  j["slack_blocks"] = blocks;
  j["h4_mode"] = h4;
  j["penalties"] = {{"lambda1", w.lambda1}, {"lambda2", w.lambda2}, {"lambda3", w.lambda3}, {"lambda4", w.lambda4}};
  j["num_terms"] = qubo.num_terms();
  j["density"] = qubo.density();
  return j.dump(2) + "\n";
}

struct SolveOutcome {
  EncodingLayout layout;
  SampleSet samples;
  ExperimentRecord record;
};

SolveOutcome solve_problem(const Problem& problem, const RunConfig& c) {
  SolveOutcome o;
  o.layout = make_layout(problem, c);
  if (c.solver == SolverChoice::Constrained) {
    const ConstrainedModel cm = build_constrained(problem, o.layout);
    ConstrainedOptions opts;
    opts.eta = c.eta;
    opts.max_rounds = c.max_rounds;
    o.samples = solve_constrained(cm, c.sampler, opts).samples;
  } else {
    const QuadraticModel qubo =
        assemble(problem, o.layout, make_weights(problem, o.layout, c), h4_mode_from_string(c.h4_mode));
    switch (c.solver) {
      case SolverChoice::Brute: {
        if (qubo.size() > kBruteForceMaxBits) {
          throw UsageError(
              fmt::format("solver brute needs total_bits <= {}, layout has {}", kBruteForceMaxBits, qubo.size()));
        }
        BruteForceResult r = brute_force(qubo);
        o.samples.samples.push_back(Sample{std::move(r.bits), r.energy, 0, 0});
        break;
      }
      case SolverChoice::Annealing:
        o.samples = simulated_anneal(
            qubo, default_schedule(c.sampler, qubo, max_effective_granularity(problem, c.bits)));
        break;
      case SolverChoice::Tabu: o.samples = tabu_search(qubo, c.sampler); break;
      case SolverChoice::Constrained: break;
    }
  }
  o.record = summarize(o.samples, problem, o.layout);
  return o;
}

std::function<bool(const BitString&)> feasibility(const Problem& problem, const EncodingLayout& layout) {
  return [&problem, &layout](const BitString& bits) {
    const BitString x(std::vector<std::uint8_t>(bits.data().begin(),
                                                bits.data().begin() + static_cast<std::ptrdiff_t>(layout.total_bits)));
    return check_constraints(decode_solution(x, layout, problem), problem, layout).not_satisfied == 0;
  };
}

void write_record(const fs::path& dir, const ExperimentRecord& record) {
  write_text(dir / "record.json", record_to_json(record));
  write_text(dir / "record.csv", format_record_csv(record));
  write_text(dir / "violations.csv", format_violation_csv(record));
}

void print_record(std::ostream& out, const ExperimentRecord& r) {
  out << fmt::format("samples: {}\n", r.samples.size());
  out << fmt::format("success_probability: {}\n", r.success_probability);
  if (r.best_feasible) {
    const auto& b = r.samples[*r.best_feasible];
    out << fmt::format("best_feasible: return {} volatility {} sum_weights {}\n", b.kpis.expected_return,
                       b.kpis.volatility, b.sum_weights);
  } else {
    out << "best_feasible: none\n";
  }
}

int cmd_compile(const RunConfig& c, std::ostream& out) {
  const Problem problem = load_checked(c.problem);
  const EncodingLayout layout = build_layout(problem, c.bits, LayoutOptions{});
  const PenaltyWeights w = make_weights(problem, layout, c);
  const QuadraticModel qubo = assemble(problem, layout, w, h4_mode_from_string(c.h4_mode));
  fs::create_directories(c.out);
  write_text(fs::path(c.out) / "config.json", config_to_json(c));
  write_text(fs::path(c.out) / "layout.json", layout_json(layout, w, c.h4_mode, qubo));
  write_qubo(qubo, fs::path(c.out) / "qubo.txt");
  out << fmt::format("total_bits: {}\n", layout.total_bits);
  out << fmt::format("density: {}\n", qubo.density());
  return kExitOk;
}

int cmd_solve(const RunConfig& c, std::ostream& out) {
  const Problem problem = load_checked(c.problem);
  const SolveOutcome o = solve_problem(problem, c);
  const fs::path dir(c.out);
  fs::create_directories(dir);
  write_text(dir / "config.json", config_to_json(c));
  write_sample_csv(o.samples, feasibility(problem, o.layout), dir / "samples.csv");
  write_record(dir, o.record);
  out << fmt::format("solver: {}\ntotal_bits: {}\n", to_string(c.solver), o.layout.total_bits);
  print_record(out, o.record);
  return o.record.best_feasible ? kExitOk : kExitInfeasible;
}

int cmd_sweep(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (!c.axis) throw UsageError("sweep needs --axis");
  if (c.values.empty()) throw UsageError("sweep needs at least one value");
  std::optional<Problem> base;
  if (*c.axis != SweepAxis::Assets) base = load_checked(c.problem);
  const fs::path root(c.out);
  fs::create_directories(root);
  write_text(root / "config.json", config_to_json(c));

  std::string summary =
      "axis,value,seed,status,total_bits,samples,success_probability,median_return,median_volatility,"
      "median_sum_weights,median_abs_budget_error_feasible,best_return,best_volatility\n";
  bool all_feasible = true;
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    const double v = c.values[i];
    RunConfig point = c;
    point.sampler.seed = derive_seed(c.sampler.seed, i);
    const std::string label = fmt::format("{}_{}", to_string(*c.axis), v);
    const fs::path dir = root / label;
    std::string row = fmt::format("{},{},{}", to_string(*c.axis), v, point.sampler.seed);
    try {
      if (v < 1.0 || v != std::floor(v)) throw UsageError(fmt::format("sweep value {} must be a positive integer", v));
      Problem problem;
      switch (*c.axis) {
        case SweepAxis::Bits:
          point.bits = static_cast<int>(v);
          problem = *base;
          break;
        case SweepAxis::Reads:
          point.sampler.num_reads = static_cast<std::size_t>(v);
          problem = *base;
          break;
        case SweepAxis::Assets:
          problem = generate_instance(static_cast<std::size_t>(v), c.factors, point.sampler.seed);
          break;
      }
      point.validate();
      fs::create_directories(dir);
      if (*c.axis == SweepAxis::Assets) save_problem(problem, dir / "problem.json");
      const SolveOutcome o = solve_problem(problem, point);
      write_text(dir / "config.json", config_to_json(point));
      write_sample_csv(o.samples, feasibility(problem, o.layout), dir / "samples.csv");
      write_record(dir, o.record);

      std::vector<double> budget;
      for (const auto& s : o.record.samples) {
        if (s.report.not_satisfied == 0) budget.push_back(std::abs(s.sum_weights - 1.0));
      }
      const auto& r = o.record;
      const bool ok = r.best_feasible.has_value();
      all_feasible = all_feasible && ok;
      row += fmt::format(",{},{},{},{},{},{},{},{},{},{}\n", ok ? "ok" : "infeasible", o.layout.total_bits,
                         r.samples.size(), r.success_probability, r.median_return, r.median_volatility,
                         r.median_sum_weights, budget.empty() ? std::string("NA") : fmt::format("{}", median(budget)),
                         ok ? fmt::format("{}", r.samples[*r.best_feasible].kpis.expected_return) : "NA",
                         ok ? fmt::format("{}", r.samples[*r.best_feasible].kpis.volatility) : "NA");
      out << fmt::format("{}: {} (success {})\n", label, ok ? "ok" : "infeasible", r.success_probability);
    } catch (const std::exception& e) {
      all_feasible = false;
      row += ",error,NA,NA,NA,NA,NA,NA,NA,NA,NA\n";
      err << fmt::format("{}: {}\n", label, e.what());
      out << fmt::format("{}: error\n", label);
    }
    summary += row;
  }
  write_text(root / "summary.csv", summary);
  return all_feasible ? kExitOk : kExitInfeasible;
}

int cmd_error_stats(const RunConfig& c, std::ostream& out) {
  const double p = c.granularity.value_or(granularity(c.bits));
  const ErrorStats theory = error_stats_theory(p);
  const MonteCarloErrorStats mc = error_stats_monte_carlo(p, c.mc_samples, c.sampler.seed);
  out << fmt::format("p = {} ({} samples, seed {})\n", p, mc.samples, c.sampler.seed);
  out << fmt::format("{:<10} {:>12} {:>12} {:>12}\n", "statistic", "theory", "monte_carlo", "stderr");
  out << fmt::format("{:<10} {:>12.3g} {:>12.3g} {:>12.3g}\n", "mean", theory.mean, mc.stats.mean, mc.mean_stderr);
  out << fmt::format("{:<10} {:>12.3g} {:>12.3g} {:>12.3g}\n", "variance", theory.variance, mc.stats.variance,
                     mc.variance_stderr);
  out << fmt::format("{:<10} {:>12.3g} {:>12.3g} {:>12}\n", "skewness", theory.skewness, mc.stats.skewness, "");
  fs::create_directories(c.out);
  write_text(fs::path(c.out) / "error_stats.csv",
             fmt::format("statistic,theory,monte_carlo,stderr\nmean,{},{},{}\nvariance,{},{},{}\nskewness,{},{},NA\n",
                         theory.mean, mc.stats.mean, mc.mean_stderr, theory.variance, mc.stats.variance,
                         mc.variance_stderr, theory.skewness, mc.stats.skewness));
  return kExitOk;
}

int cmd_report(const RunConfig& c, std::ostream& out) {
  if (c.samples_csv.empty()) throw UsageError("report needs --samples");
  const Problem problem = load_checked(c.problem);
  const SampleSet set = parse_sample_csv(read_file(c.samples_csv, "sample file"));
  const EncodingLayout layout = make_layout(problem, c);
  const ExperimentRecord record = summarize(set, problem, layout);
  fs::create_directories(c.out);
  write_record(c.out, record);
  print_record(out, record);
  return record.best_feasible ? kExitOk : kExitInfeasible;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config file (flags override its fields)");
  cmd->add_option("--problem", f.problem, "problem JSON file");
  cmd->add_option("--bits,-K", f.bits, "bits per asset K");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "base seed");
}

void add_solver_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--solver", f.solver, "brute, sa, tabu or constrained");
  cmd->add_option("--h4-mode", f.h4_mode, "equality-to-zero, linearized or slack-constraint");
  cmd->add_option("--reads", f.reads, "reads (restarts)");
  cmd->add_option("--sweeps", f.sweeps, "annealing sweeps / tabu moves per read");
  cmd->add_option("--t-initial", f.t_initial, "initial temperature");
  cmd->add_option("--t-final", f.t_final, "final temperature");
  cmd->add_option("--tabu-tenure", f.tabu_tenure, "tabu tenure");
  cmd->add_option("--time-limit", f.time_limit, "wall-clock limit in seconds");
  cmd->add_option("--threads", f.threads, "worker threads");
  cmd->add_option("--eta", f.eta, "penalty growth factor of the constrained solver");
  cmd->add_option("--max-rounds", f.max_rounds, "rounds of the constrained solver");
  cmd->add_option("--lambda1", f.lambda1, "return weight");
  cmd->add_option("--lambda2", f.lambda2, "budget penalty");
  cmd->add_option("--lambda3", f.lambda3, "multi-asset penalty");
  cmd->add_option("--lambda4", f.lambda4, "volatility penalty");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Portfolio optimization as QUBO: compile, solve and analyze"};
  app.require_subcommand(1);
  Flags f;

  auto* compile = app.add_subcommand("compile", "write the layout and QUBO of a problem");
  add_common(compile, f);
  compile->add_option("--h4-mode", f.h4_mode, "equality-to-zero, linearized or slack-constraint");
  compile->add_option("--lambda1", f.lambda1, "return weight");
  compile->add_option("--lambda2", f.lambda2, "budget penalty");
  compile->add_option("--lambda3", f.lambda3, "multi-asset penalty");
  compile->add_option("--lambda4", f.lambda4, "volatility penalty");

  auto* solve = app.add_subcommand("solve", "sample a problem and write samples and the experiment record");
  add_common(solve, f);
  add_solver_flags(solve, f);

  auto* sweep = app.add_subcommand("sweep", "solve once per value of K, asset count or reads");
  add_common(sweep, f);
  add_solver_flags(sweep, f);
  sweep->add_option("--axis", f.axis, "K, assets or reads");
  sweep->add_option("--values", f.values, "values of the swept axis");
  sweep->add_option("--factors", f.factors, "covariance factors of generated instances");

  auto* stats = app.add_subcommand("error-stats", "discretization error: theory vs Monte Carlo");
  add_common(stats, f);
  stats->add_option("--p", f.p, "granularity (default 2^-K)");
  stats->add_option("--samples", f.mc_samples, "Monte Carlo samples");

  auto* report = app.add_subcommand("report", "rebuild the experiment record from a sample CSV");
  add_common(report, f);
  report->add_option("--solver", f.solver, "solver that produced the samples (selects the layout)");
  report->add_option("--samples", f.samples_csv, "sample CSV written by solve");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const RunConfig c = resolve(f);
    out << "effective config:\n" << config_to_json(c);
    if (compile->parsed()) return cmd_compile(c, out);
    if (solve->parsed()) return cmd_solve(c, out);
    if (sweep->parsed()) return cmd_sweep(c, out, err);
    if (stats->parsed()) return cmd_error_stats(c, out);
    if (report->parsed()) return cmd_report(c, out);
  } catch (const InfeasibleConstraintError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}

}  // namespace portq::cli
