#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "local_field.hpp"
#include "portq/random.hpp"
#include "portq/solvers.hpp"

namespace portq {

void SamplerConfig::validate() const {
  if (num_reads < 1) throw SolverConfigError("num_reads must be >= 1");
  if (sweeps < 1) throw SolverConfigError("sweeps must be >= 1");
  if (temperature_initial && !(*temperature_initial > 0.0)) {
    throw SolverConfigError("temperature_initial must be > 0");
  }
  if (temperature_final && !(*temperature_final > 0.0)) throw SolverConfigError("temperature_final must be > 0");
  if (temperature_initial && temperature_final && !(*temperature_initial > *temperature_final)) {
    throw SolverConfigError(fmt::format("temperature_initial ({}) must exceed temperature_final ({})",
                                        *temperature_initial, *temperature_final));
  }
  if (time_limit && !(*time_limit > 0.0)) throw SolverConfigError("time_limit must be > 0");
  if (threads < 1) throw SolverConfigError("threads must be >= 1");
}

SamplerConfig default_schedule(SamplerConfig config, const QuadraticModel& model,
                               std::optional<double> effective_granularity) {
  double max_abs = 0.0;
  double min_abs = std::numeric_limits<double>::infinity();
  for (const auto& t : model.terms()) {
    max_abs = std::max(max_abs, std::abs(t.coeff));
    min_abs = std::min(min_abs, std::abs(t.coeff));
  }
  if (max_abs == 0.0) {
    max_abs = 1.0;
    min_abs = 1.0;
  }
  if (!config.temperature_initial) config.temperature_initial = max_abs;
  if (!config.temperature_final) {
    config.temperature_final = effective_granularity ? 1e-3 * *effective_granularity * *effective_granularity
                                                     : 1e-3 * min_abs;
  }
  if (*config.temperature_final >= *config.temperature_initial) {
    config.temperature_final = 1e-3 * *config.temperature_initial;
  }
  return config;
}

void SampleSet::sort() {
  std::stable_sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) {
    if (a.energy != b.energy) return a.energy < b.energy;
    return a.bits < b.bits;
  });
}

const Sample& SampleSet::best() const {
  if (samples.empty()) throw std::logic_error("SampleSet::best on empty set");
  return samples.front();
}

void SampleSet::merge(SampleSet other) {
  truncated = truncated || other.truncated;
  for (auto& s : other.samples) samples.push_back(std::move(s));
  sort();
}

BruteForceResult brute_force(const QuadraticModel& model) {
  const std::size_t n = model.size();
  if (n > kBruteForceMaxBits) {
    throw SolverConfigError(fmt::format("brute force limited to {} bits, model has {}", kBruteForceMaxBits, n));
  }
  BitString zero(n);
  if (n == 0) return {zero, model.energy(zero)};

  const detail::Adjacency adj(model);
  detail::LocalField field(adj, zero.view());
  double scale = 1.0;
  for (const auto& t : model.terms()) scale += std::abs(t.coeff);
  const double tie = 1e-12 * scale;

  // Bit i of the mask is x_i; lexicographic order from x_0 is the order of
  // the bit-reversed mask.
  auto lex_key = [n](std::uint64_t mask) {
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if ((mask >> i) & 1U) key |= std::uint64_t{1} << (n - 1 - i);
    }
    return key;
  };

  double energy = model.offset();
  std::uint64_t mask = 0;
  double best_energy = energy;
  std::uint64_t best_mask = 0;
  const std::uint64_t count = std::uint64_t{1} << n;
  for (std::uint64_t step = 1; step < count; ++step) {
    // Gray code: flip the lowest set bit position of step.
    const auto i = static_cast<std::size_t>(std::countr_zero(step));
    energy += field.delta(i);
    field.flip(i);
    mask ^= std::uint64_t{1} << i;
    if (energy < best_energy - tie || (energy <= best_energy + tie && lex_key(mask) < lex_key(best_mask))) {
      best_energy = std::min(best_energy, energy);
      best_mask = mask;
    }
  }

  BitString best(n);
  for (std::size_t i = 0; i < n; ++i) best.set(i, (best_mask >> i) & 1U);
  return {best, model.energy(best)};
}

namespace {

using Clock = std::chrono::steady_clock;

BitString random_state(std::size_t n, Rng& rng) {
  BitString x(n);
  for (std::size_t i = 0; i < n; ++i) x.set(i, rng.coin());
  return x;
}

// Runs read_fn(read) for every read, optionally on several threads, honoring
// the time limit between reads. Results are kept by read index.
template <typename ReadFn>
SampleSet run_reads(const QuadraticModel& model, const SamplerConfig& config, ReadFn read_fn) {
  const auto start = Clock::now();
  const auto expired = [&] {
    if (!config.time_limit) return false;
    return std::chrono::duration<double>(Clock::now() - start).count() > *config.time_limit;
  };
  std::vector<std::optional<BitString>> results(config.num_reads);
  auto worker = [&](std::size_t first, std::size_t stride) {
    for (std::size_t r = first; r < config.num_reads; r += stride) {
      if (expired()) return;
      results[r] = read_fn(r);
    }
  };
  const std::size_t threads = std::min(config.threads, config.num_reads);
  if (threads <= 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker, t, threads);
    for (auto& th : pool) th.join();
  }

  SampleSet set;
  for (std::size_t r = 0; r < results.size(); ++r) {
    if (!results[r]) {
      set.truncated = true;
      continue;
    }
    const double e = model.energy(*results[r]);
    set.samples.push_back(Sample{std::move(*results[r]), e, r, 0});
  }
  set.sort();
  return set;
}

}  // namespace

SampleSet simulated_anneal(const QuadraticModel& model, const SamplerConfig& config_in) {
  config_in.validate();
  if (model.size() == 0) throw SolverConfigError("simulated_anneal needs at least one variable");
  const SamplerConfig config = default_schedule(config_in, model);
  config.validate();
  const detail::Adjacency adj(model);
  const std::size_t n = model.size();
  const double t0 = *config.temperature_initial;
  const double t1 = *config.temperature_final;
  const double ratio = config.sweeps > 1 ? std::pow(t1 / t0, 1.0 / static_cast<double>(config.sweeps - 1)) : 1.0;

  return run_reads(model, config, [&](std::size_t read) {
    Rng rng(config.seed ^ static_cast<std::uint64_t>(read));
    const BitString start = random_state(n, rng);
    detail::LocalField field(adj, start.view());
    double temperature = config.sweeps > 1 ? t0 : t1;
    for (std::size_t sweep = 0; sweep < config.sweeps; ++sweep) {
      const double beta = 1.0 / temperature;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = field.delta(i);
        if (d <= 0.0 || rng.uniform() < std::exp(-d * beta)) field.flip(i);
      }
      temperature *= ratio;
    }
    return BitString(std::vector<std::uint8_t>(field.state().begin(), field.state().end()));
  });
}

SampleSet tabu_search(const QuadraticModel& model, const SamplerConfig& config) {
  config.validate();
  const std::size_t n = model.size();
  if (n == 0) throw SolverConfigError("tabu_search needs at least one variable");
  const detail::Adjacency adj(model);
  std::size_t tenure = config.tabu_tenure.value_or(std::min<std::size_t>(20, std::max<std::size_t>(1, n / 4)));
  tenure = std::min(tenure, n - 1);
  double scale = 1.0;
  for (const auto& t : model.terms()) scale = std::max(scale, std::abs(t.coeff));
  const double eps = 1e-12 * scale;

  return run_reads(model, config, [&](std::size_t read) {
    Rng rng(config.seed ^ static_cast<std::uint64_t>(read));
    const BitString start = random_state(n, rng);
    detail::LocalField field(adj, start.view());
    double energy = model.energy(start);
    double best_energy = energy;
    std::vector<std::uint8_t> best(field.state().begin(), field.state().end());
    // Move index until which bit i stays tabu.
    std::vector<std::size_t> tabu_until(n, 0);

    for (std::size_t move = 1; move <= config.sweeps; ++move) {
      std::size_t chosen = n;
      double chosen_delta = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        const double d = field.delta(i);
        const bool allowed = tabu_until[i] < move || energy + d < best_energy - eps;
        if (allowed && d < chosen_delta) {
          chosen = i;
          chosen_delta = d;
        }
      }
      if (chosen == n) continue;  // every bit tabu this move
      if (tenure == 0 && chosen_delta >= 0.0) break;
      field.flip(chosen);
      energy += chosen_delta;
      tabu_until[chosen] = move + tenure;
      if (energy < best_energy - eps) {
        best_energy = energy;
        best.assign(field.state().begin(), field.state().end());
      }
    }
    return BitString(std::move(best));
  });
}

std::string format_sample_csv(const SampleSet& set, const std::function<bool(const BitString&)>& feasible) {
  std::string out = "read,round,energy,bits,feasible\n";
  for (const auto& s : set.samples) {
    out += fmt::format("{},{},{},{},{}\n", s.read, s.round, s.energy, s.bits.to_string(),
                       feasible && feasible(s.bits) ? 1 : 0);
  }
  return out;
}

void write_sample_csv(const SampleSet& set, const std::function<bool(const BitString&)>& feasible,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << format_sample_csv(set, feasible);
}

SampleSet parse_sample_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  SampleSet set;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("read,", 0) == 0) continue;
    }
    std::istringstream ls(line);
    std::string read, round, energy, bits;
    if (!std::getline(ls, read, ',') || !std::getline(ls, round, ',') || !std::getline(ls, energy, ',') ||
        !std::getline(ls, bits, ',')) {
      throw std::invalid_argument("malformed sample row: " + line);
    }
    set.samples.push_back(Sample{BitString::from_string(bits), std::stod(energy), std::stoul(read), std::stoul(round)});
  }
  set.sort();
  return set;
}

}  // namespace portq
