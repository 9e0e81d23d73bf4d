#include "portq/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "portq/random.hpp"

namespace portq {

ViolationReport check_constraints(const std::vector<double>& weights, const std::vector<double>& slacks,
                                  const Problem& problem, const EncodingLayout& layout) {
  if (weights.size() != problem.size()) {
    throw std::invalid_argument(
        fmt::format("check_constraints: {} weights for {} assets", weights.size(), problem.size()));
  }
  if (!slacks.empty() && slacks.size() != problem.multi_constraints.size()) {
    throw std::invalid_argument("check_constraints: one slack per multi-asset constraint expected");
  }
  ViolationReport report;
  auto push = [&](ViolationEntry e) {
    if (!e.satisfied) ++report.not_satisfied;
    report.entries.push_back(std::move(e));
  };

  double sum = 0.0;
  for (double w : weights) sum += w;
  const double budget = sum - 1.0;
  push({"normalization", ConstraintKind::Normalization, budget,
        std::abs(budget) <= normalization_tolerance(problem, layout), std::nullopt});

  for (std::size_t j = 0; j < problem.multi_constraints.size(); ++j) {
    const auto& c = problem.multi_constraints[j];
    const double r = c.lhs(weights) - c.rhs;
    bool ok = false;
    switch (c.op) {
      case ConstraintOp::EQ: ok = std::abs(r) <= kLinearTolerance; break;
      case ConstraintOp::LE: ok = r <= kLinearTolerance; break;
      case ConstraintOp::GE: ok = r >= -kLinearTolerance; break;
    }
    std::optional<double> penalty;
    if (const SlackBlock* block = layout.slack_for(j); block != nullptr && !slacks.empty()) {
      penalty = r + block->alpha * slacks[j];
    }
    push({fmt::format("multi_{}", j), ConstraintKind::MultiLinear, r, ok, penalty});
  }

  const double var = portfolio_variance(weights, problem);
  const double risk = var - problem.sigma2_target;
  push({"volatility", ConstraintKind::Volatility, risk, risk <= 0.0, std::nullopt});
  return report;
}

ViolationReport check_constraints(const DecodedSolution& solution, const Problem& problem,
                                  const EncodingLayout& layout) {
  return check_constraints(solution.weights, solution.slacks, problem, layout);
}

Kpis kpis(const std::vector<double>& weights, const Problem& problem) {
  Kpis k;
  k.expected_return = portfolio_return(weights, problem);
  k.volatility = portfolio_variance(weights, problem);
  if (k.volatility > 0.0) k.sharpe = k.expected_return / std::sqrt(k.volatility);
  return k;
}

double success_probability(std::span<const ViolationReport> reports) {
  if (reports.empty()) throw std::invalid_argument("success_probability needs at least one report");
  const auto clean = std::count_if(reports.begin(), reports.end(),
                                   [](const ViolationReport& r) { return r.not_satisfied == 0; });
  return static_cast<double>(clean) / static_cast<double>(reports.size());
}

ErrorStats error_stats_theory(double p) {
  if (!(p > 0.0 && p <= 0.5)) throw std::invalid_argument(fmt::format("granularity must be in (0, 0.5], got {}", p));
  const double p2 = p * p;
  const double p3 = p2 * p;
  const double p4 = p2 * p2;
  ErrorStats s;
  s.mean = p2 / 2.0;
  s.variance = p2 / 12.0 + p3 / 4.0 - p4 / 4.0;
  const double third_central = p4 / 4.0 - 3.0 * s.mean * s.variance - s.mean * s.mean * s.mean;
  s.skewness = third_central / std::pow(s.variance, 1.5);
  return s;
}

MonteCarloErrorStats error_stats_monte_carlo(double p, std::size_t n_samples, std::uint64_t seed) {
  if (!(p > 0.0 && p <= 0.5)) throw std::invalid_argument(fmt::format("granularity must be in (0, 0.5], got {}", p));
  if (n_samples < kMinMonteCarloSamples) {
    throw std::invalid_argument(fmt::format("need at least {} samples, got {}", kMinMonteCarloSamples, n_samples));
  }
  Rng rng(seed);
  const double top = 1.0 - p;
  std::vector<double> eps(n_samples);
  long double sum = 0.0L;
  for (auto& e : eps) {
    const double u = rng.uniform();
    const double q = std::min(std::nearbyint(u / p) * p, top);
    e = u - q;
    sum += e;
  }
  const auto n = static_cast<long double>(n_samples);
  const long double mean = sum / n;
  long double m2 = 0.0L, m3 = 0.0L, m4 = 0.0L;
  for (double e : eps) {
    const long double d = e - mean;
    const long double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;

  MonteCarloErrorStats out;
  out.samples = n_samples;
  out.stats.mean = static_cast<double>(mean);
  out.stats.variance = static_cast<double>(m2 * n / (n - 1.0L));
  const long double g1 = m2 > 0.0L ? m3 / std::pow(m2, 1.5L) : 0.0L;
  out.stats.skewness = static_cast<double>(g1 * std::sqrt(n * (n - 1.0L)) / (n - 2.0L));
  out.mean_stderr = static_cast<double>(std::sqrt(m2 / n));
  out.variance_stderr = static_cast<double>(std::sqrt(std::max(0.0L, m4 - m2 * m2) / n));
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

ExperimentRecord summarize(const SampleSet& samples, const Problem& problem, const EncodingLayout& layout) {
  if (samples.empty()) throw std::invalid_argument("summarize needs at least one sample");
  ExperimentRecord rec;
  std::vector<ViolationReport> reports;
  for (const auto& s : samples.samples) {
    if (s.bits.size() < layout.total_bits) {
      throw std::invalid_argument(
          fmt::format("sample has {} bits, layout expects at least {}", s.bits.size(), layout.total_bits));
    }
    const BitString x(std::vector<std::uint8_t>(s.bits.data().begin(),
                                                s.bits.data().begin() + static_cast<std::ptrdiff_t>(layout.total_bits)));
    const DecodedSolution d = decode_solution(x, layout, problem);
    SampleRecord r;
    r.read = s.read;
    r.round = s.round;
    r.energy = s.energy;
    r.bits = s.bits.to_string();
    r.weights = d.weights;
    for (double w : d.weights) r.sum_weights += w;
    r.kpis = kpis(d.weights, problem);
    r.report = check_constraints(d, problem, layout);
    reports.push_back(r.report);
    rec.samples.push_back(std::move(r));
  }
  rec.success_probability = success_probability(reports);

  std::vector<double> returns, vols, sums, sharpes;
  for (std::size_t i = 0; i < rec.samples.size(); ++i) {
    const auto& r = rec.samples[i];
    returns.push_back(r.kpis.expected_return);
    vols.push_back(r.kpis.volatility);
    sums.push_back(r.sum_weights);
    if (r.kpis.sharpe) sharpes.push_back(*r.kpis.sharpe);
    if (r.report.not_satisfied != 0) continue;
    // Samples are in (energy, bits) order, so the first maximum wins ties.
    if (!rec.best_feasible || r.kpis.expected_return > rec.samples[*rec.best_feasible].kpis.expected_return) {
      rec.best_feasible = i;
    }
  }
  rec.median_return = median(returns);
  rec.median_volatility = median(vols);
  rec.median_sum_weights = median(sums);
  if (!sharpes.empty()) rec.median_sharpe = median(sharpes);

  rec.histogram_width = normalization_tolerance(problem, layout);
  std::map<long long, std::size_t> bins;
  for (double s : sums) ++bins[std::llround((s - 1.0) / rec.histogram_width)];
  for (const auto& [k, count] : bins) {
    rec.sum_weights_histogram.push_back({1.0 + static_cast<double>(k) * rec.histogram_width, count});
  }

  for (const auto& e : rec.samples.front().report.entries) rec.violation_counts.push_back({e.label, e.kind, 0});
  for (const auto& r : rec.samples) {
    for (std::size_t c = 0; c < r.report.entries.size(); ++c) {
      if (!r.report.entries[c].satisfied) ++rec.violation_counts[c].count;
    }
  }
  return rec;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string optional_csv(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : "NA"; }

}  // namespace

std::string record_to_json(const ExperimentRecord& record) {
  using nlohmann::json;
  json j;
  j["num_samples"] = record.samples.size();
  j["success_probability"] = record.success_probability;
  j["best_feasible_absent"] = !record.best_feasible.has_value();
  if (record.best_feasible) {
    const auto& b = record.samples[*record.best_feasible];
    j["best_feasible"] = {{"read", b.read},
                          {"round", b.round},
                          {"energy", b.energy},
                          {"bits", b.bits},
                          {"weights", b.weights},
                          {"return", b.kpis.expected_return},
                          {"volatility", b.kpis.volatility},
                          {"sharpe", optional_json(b.kpis.sharpe)},
                          {"sum_weights", b.sum_weights}};
  } else {
    j["best_feasible"] = nullptr;
  }
  j["median"] = {{"return", record.median_return},
                 {"volatility", record.median_volatility},
                 {"sum_weights", record.median_sum_weights},
                 {"sharpe", optional_json(record.median_sharpe)}};
  json hist = json::array();
  for (const auto& b : record.sum_weights_histogram) hist.push_back({{"center", b.center}, {"count", b.count}});
  j["sum_weights_histogram"] = {{"width", record.histogram_width}, {"bins", hist}};
  json viol = json::array();
  for (const auto& v : record.violation_counts) {
    viol.push_back({{"label", v.label}, {"kind", to_string(v.kind)}, {"count", v.count}});
  }
  j["violations"] = viol;
  json rows = json::array();
  for (const auto& s : record.samples) {
    rows.push_back({{"read", s.read},
                    {"round", s.round},
                    {"energy", s.energy},
                    {"return", s.kpis.expected_return},
                    {"volatility", s.kpis.volatility},
                    {"sharpe", optional_json(s.kpis.sharpe)},
                    {"not_satisfied", s.report.not_satisfied},
                    {"sum_weights", s.sum_weights}});
  }
  j["samples"] = rows;
  return j.dump(2) + "\n";
}

std::string format_record_csv(const ExperimentRecord& record) {
  std::string out = "read,round,energy,return,volatility,sharpe,not_satisfied,sum_weights\n";
  for (const auto& s : record.samples) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", s.read, s.round, s.energy, s.kpis.expected_return,
                       s.kpis.volatility, optional_csv(s.kpis.sharpe), s.report.not_satisfied, s.sum_weights);
  }
  return out;
}

std::string format_violation_csv(const ExperimentRecord& record) {
  std::string out = "label,kind,count\n";
  for (const auto& v : record.violation_counts) out += fmt::format("{},{},{}\n", v.label, to_string(v.kind), v.count);
  return out;
}

}  // namespace portq
