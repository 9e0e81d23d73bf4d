#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "oracles.hpp"
#include "portq/analysis.hpp"

using namespace portq;

namespace {

// Three assets, one bit each: every weight is 0 or 0.5.
Problem half_steps() {
  Problem p;
  p.assets = {Asset{"a", AssetClass::EQ, 0.04, 0.0, 1.0}, Asset{"b", AssetClass::EQ, 0.04, 0.0, 1.0},
              Asset{"c", AssetClass::FI, 0.06, 0.0, 1.0}};
  p.covariance = Eigen::MatrixXd::Identity(3, 3) * 0.01;
  p.sigma2_target = 0.1;
  validate(p);
  return p;
}

SampleSet samples_of(const std::vector<std::string>& bits, const QuadraticModel& m) {
  SampleSet set;
  for (std::size_t r = 0; r < bits.size(); ++r) {
    const BitString x = BitString::from_string(bits[r]);
    set.samples.push_back(Sample{x, m.energy(x), r, 0});
  }
  set.sort();
  return set;
}

ViolationReport report_with(std::size_t violations) {
  ViolationReport r;
  r.not_satisfied = violations;
  return r;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("clean portfolio") {
    Problem p = half_steps();
    p.multi_constraints.push_back(LinearConstraint{{1, 0, 0}, ConstraintOp::LE, 0.5});
    const EncodingLayout layout = build_layout(p, 4);
    const ViolationReport r = check_constraints({0.25, 0.25, 0.5}, {}, p, layout);
    CHECK(r.not_satisfied == 0);
    REQUIRE(r.entries.size() == 3);
    CHECK(r.entries[0].label == "normalization");
    CHECK(r.entries[0].kind == ConstraintKind::Normalization);
    CHECK(r.entries[1].label == "multi_0");
    CHECK(r.entries[2].label == "volatility");
    for (const auto& e : r.entries) CHECK(e.label.find("single") == std::string::npos);
  }

  TEST_CASE("budget band and strict risk") {
    const Problem p = half_steps();
    const EncodingLayout layout = build_layout(p, 4);
    const double p_eff = max_effective_granularity(p, 4);
    CHECK(p_eff == 1.0 / 16.0);
    CHECK(check_constraints({0.5 + 0.5 * p_eff, 0.25, 0.25}, {}, p, layout).not_satisfied == 0);
    CHECK(check_constraints({0.5 + p_eff, 0.25, 0.25}, {}, p, layout).not_satisfied == 0);
    CHECK(check_constraints({0.5 + 1.5 * p_eff, 0.25, 0.25}, {}, p, layout).not_satisfied == 1);

    Problem risky = p;
    // (1, 0, 0) has variance 0.01; aim 1% below it.
    risky.sigma2_target = 0.01 / 1.01;
    const ViolationReport r = check_constraints({1.0, 0.0, 0.0}, {}, risky, layout);
    CHECK(r.not_satisfied == 1);
    CHECK_FALSE(r.entries.back().satisfied);
    CHECK(r.entries.back().residual == doctest::Approx(0.01 * risky.sigma2_target).epsilon(1e-12));
    risky.sigma2_target = 0.01;
    CHECK(check_constraints({1.0, 0.0, 0.0}, {}, risky, layout).not_satisfied == 0);
  }

  TEST_CASE("linear row tolerance and penalty residual") {
    Problem p = half_steps();
    p.multi_constraints.push_back(LinearConstraint{{1, 1, 0}, ConstraintOp::GE, 0.5});
    p.multi_constraints.push_back(LinearConstraint{{0, 0, 1}, ConstraintOp::EQ, 0.25});
    const EncodingLayout layout = build_layout(p, 4);
    const ViolationReport ok = check_constraints({0.25, 0.5, 0.25}, {0.25, 0.0}, p, layout);
    CHECK(ok.not_satisfied == 0);
    REQUIRE(ok.entries[1].penalty_residual.has_value());
    CHECK(*ok.entries[1].penalty_residual == doctest::Approx(0.0).scale(1.0));  // 0.75 - 0.25 - 0.5
    CHECK_FALSE(ok.entries[2].penalty_residual.has_value());
    const ViolationReport bad = check_constraints({0.25, 0.25 - 1e-9, 0.5}, {}, p, layout);
    CHECK(bad.entries[0].satisfied);
    CHECK_FALSE(bad.entries[1].satisfied);
    CHECK_FALSE(bad.entries[2].satisfied);
    CHECK(bad.not_satisfied == 2);
    CHECK(check_constraints({0.5, 0.25 - 1e-13, 0.25 + 1e-13}, {}, p, layout).not_satisfied == 0);
    CHECK_FALSE(check_constraints({0.5, 0.25, 0.25 + 1e-11}, {}, p, layout).entries[2].satisfied);
    CHECK_THROWS_AS(check_constraints({0.5, 0.5}, {}, p, layout), std::invalid_argument);
  }

  TEST_CASE("not_satisfied counts the unsatisfied entries") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
      const Problem p = oracle::random_problem(rng, 2 + rng.below(4), rng.below(3));
      const EncodingLayout layout = build_layout(p, 3);
      const DecodedSolution d = decode_solution(oracle::random_bits(rng, layout.total_bits), layout, p);
      const ViolationReport r = check_constraints(d, p, layout);
      const auto unsatisfied = std::count_if(r.entries.begin(), r.entries.end(), [](const auto& e) { return !e.satisfied; });
      CHECK(r.not_satisfied == static_cast<std::size_t>(unsatisfied));
      CHECK((r.not_satisfied == 0) == oracle::feasible(d.weights, p, 3));
      CHECK(r.entries.size() == 2 + p.multi_constraints.size());
    }
  }

  TEST_CASE("reference solutions pass the checks") {
    Rng rng(32);
    int checked = 0;
    for (int trial = 0; trial < 10; ++trial) {
      const Problem p = oracle::random_problem(rng, 3 + rng.below(3), rng.below(2));
      ReferenceSolution ref;
      try {
        ref = reference_continuous(p);
      } catch (const ReferenceSolveError&) {
        continue;
      }
      ++checked;
      // The reference sits on the risk boundary up to its tolerance; shave
      // that tolerance off before the strict check.
      std::vector<double> w = ref.weights;
      if (ref.volatility > p.sigma2_target) {
        const double shrink = std::sqrt(p.sigma2_target / ref.volatility);
        for (auto& v : w) v *= shrink;
      }
      CHECK(check_constraints(w, {}, p, build_layout(p, 10)).not_satisfied == 0);
    }
    CHECK(checked >= 3);
  }

  TEST_CASE("kpis") {
    Problem p;
    p.assets = {Asset{"a", AssetClass::EQ, 0.05, 0.0, 1.0}, Asset{"b", AssetClass::EQ, 0.01, 0.0, 1.0}};
    p.covariance.resize(2, 2);
    p.covariance << 0.04, 0.0, 0.0, 0.09;
    p.sigma2_target = 0.1;
    const Kpis k = kpis({1.0, 0.0}, p);
    CHECK(k.expected_return == doctest::Approx(0.05));
    CHECK(k.volatility == doctest::Approx(0.04));
    REQUIRE(k.sharpe.has_value());
    CHECK(*k.sharpe == doctest::Approx(0.25));
    const Kpis zero = kpis({0.0, 0.0}, p);
    CHECK(zero.expected_return == 0.0);
    CHECK(zero.volatility == 0.0);
    CHECK_FALSE(zero.sharpe.has_value());

    Problem doubled = p;
    for (auto& a : doubled.assets) a.mean_return *= 2.0;
    const Kpis k2 = kpis({0.3, 0.7}, doubled);
    const Kpis k1 = kpis({0.3, 0.7}, p);
    CHECK(k2.expected_return == doctest::Approx(2.0 * k1.expected_return));
    CHECK(*k2.sharpe == doctest::Approx(2.0 * *k1.sharpe));
    CHECK(k2.volatility == k1.volatility);
  }

  TEST_CASE("success probability") {
    std::vector<ViolationReport> reports;
    for (int i = 0; i < 100; ++i) reports.push_back(report_with(i < 18 ? 1 : 0));
    CHECK(success_probability(reports) == 0.82);
    Rng rng(33);
    for (int shuffle = 0; shuffle < 10; ++shuffle) {
      std::shuffle(reports.begin(), reports.end(), rng.engine());
      CHECK(success_probability(reports) == 0.82);
    }
    CHECK(success_probability(std::vector<ViolationReport>(5, report_with(0))) == 1.0);
    CHECK(success_probability(std::vector<ViolationReport>(5, report_with(2))) == 0.0);
    CHECK_THROWS_AS(success_probability(std::vector<ViolationReport>{}), std::invalid_argument);
  }

  TEST_CASE("error statistics in closed form") {
    const double p = std::ldexp(1.0, -10);
    const ErrorStats s = error_stats_theory(p);
    CHECK(s.mean == doctest::Approx(4.76837158203125e-7).epsilon(1e-14));
    // p^2/12 + p^3/4 - p^4/4, computed independently.
    const double expected_var = 1.0 / (12.0 * 1048576.0) + 1.0 / (4.0 * 1073741824.0) - 1.0 / (4.0 * 1099511627776.0);
    CHECK(s.variance == doctest::Approx(expected_var).epsilon(1e-14));
    CHECK(s.variance == doctest::Approx(7.9706e-8).epsilon(1e-4));
    // Expanding numerator and variance to the next order gives 3 sqrt(3) p (1 - 7.5 p).
    CHECK(std::abs(s.skewness - 3.0 * std::sqrt(3.0) * p) <= 50.0 * p * p);
    CHECK(std::abs(s.skewness - 3.0 * std::sqrt(3.0) * p * (1.0 - 7.5 * p)) <= 200.0 * p * p * p);
    CHECK(error_stats_theory(0.5).mean == 0.125);
    CHECK_THROWS_AS(error_stats_theory(0.0), std::invalid_argument);
    CHECK_THROWS_AS(error_stats_theory(0.75), std::invalid_argument);

    for (int k = 4; k <= 30; ++k) {
      const double q = std::ldexp(1.0, -k);
      const ErrorStats t = error_stats_theory(q);
      CHECK(t.variance > 0.0);
      CHECK(t.variance / (q * q) >= 1.0 / 12.0);
      CHECK(t.variance / (q * q) <= 1.0 / 12.0 + q);
    }
  }

  TEST_CASE("monte carlo agrees with the closed form") {
    for (int k : {4, 10, 20}) {
      const double p = std::ldexp(1.0, -k);
      const ErrorStats t = error_stats_theory(p);
      const MonteCarloErrorStats mc = error_stats_monte_carlo(p, 1000000, 12345 + static_cast<std::uint64_t>(k));
      CHECK(mc.samples == 1000000);
      CHECK(std::abs(mc.stats.mean - t.mean) <= 5.0 * mc.mean_stderr);
      CHECK(std::abs(mc.stats.variance - t.variance) <= 5.0 * mc.variance_stderr);
      CHECK(mc.stats.variance >= 0.0);
    }
    const MonteCarloErrorStats coarse = error_stats_monte_carlo(0.5, 1000000, 1);
    CHECK(coarse.stats.mean == doctest::Approx(0.125).epsilon(0.01));

    const auto a = error_stats_monte_carlo(0.01, 20000, 5);
    const auto b = error_stats_monte_carlo(0.01, 20000, 5);
    CHECK(a.stats.mean == b.stats.mean);
    CHECK(a.stats.skewness == b.stats.skewness);
    CHECK_THROWS_AS(error_stats_monte_carlo(0.01, 9999, 1), std::invalid_argument);
  }

  TEST_CASE("monte carlo moments match a direct two-pass computation") {
    // Same stream as the library: rng.uniform() per sample, nearest level
    // clamped below one.
    const double p = 0.125;
    const std::size_t n = 20000;
    Rng rng(77);
    std::vector<double> e(n);
    for (auto& v : e) {
      const double u = rng.uniform();
      double level = std::floor(u / p + 0.5);
      if (u / p + 0.5 == level && std::fmod(level, 2.0) != 0.0) level -= 1.0;  // ties to even
      v = u - std::min(level * p, 1.0 - p);
    }
    double mean = 0.0;
    for (double v : e) mean += v;
    mean /= static_cast<double>(n);
    double m2 = 0.0, m3 = 0.0;
    for (double v : e) {
      m2 += (v - mean) * (v - mean);
      m3 += (v - mean) * (v - mean) * (v - mean);
    }
    const double var = m2 / static_cast<double>(n - 1);
    const double g1 = (m3 / n) / std::pow(m2 / n, 1.5);
    const double skew = g1 * std::sqrt(static_cast<double>(n) * (n - 1)) / static_cast<double>(n - 2);
    const auto mc = error_stats_monte_carlo(p, n, 77);
    CHECK(mc.stats.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(mc.stats.variance == doctest::Approx(var).epsilon(1e-10));
    CHECK(mc.stats.skewness == doctest::Approx(skew).epsilon(1e-8));
  }

  TEST_CASE("sum of weights bias under nearest rounding") {
    const int k = 3;
    const double p = std::ldexp(1.0, -k);
    Rng rng(34);
    const Problem prob = oracle::random_problem(rng, 5, 0);
    const EncodingLayout layout = build_layout(prob, k);
    double width = 0.0;
    for (const auto& a : prob.assets) width += a.width();
    const std::size_t m = 40000;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t s = 0; s < m; ++s) {
      std::vector<double> target;
      for (const auto& a : prob.assets) target.push_back(a.weight_min + a.width() * rng.uniform());
      const DecodedSolution d = decode_solution(encode_nearest(target, layout, prob), layout, prob);
      double bias = 0.0;
      for (std::size_t i = 0; i < target.size(); ++i) bias += target[i] - d.weights[i];
      sum += bias;
      sum2 += bias * bias;
    }
    const double mean = sum / m;
    const double stderr_ = std::sqrt((sum2 / m - mean * mean) / m);
    CHECK(std::abs(mean - width * p * p / 2.0) <= 5.0 * stderr_);
  }

  TEST_CASE("median") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    CHECK_THROWS_AS(median({}), std::invalid_argument);
  }

  TEST_CASE("summarize picks the best feasible sample") {
    const Problem p = half_steps();
    const EncodingLayout layout = build_layout(p, 1);
    const QuadraticModel m = build_h1(p, layout);

    const ExperimentRecord one = summarize(samples_of({"110"}, m), p, layout);
    REQUIRE(one.best_feasible.has_value());
    CHECK(*one.best_feasible == 0);
    CHECK(one.success_probability == 1.0);

    const ExperimentRecord two = summarize(samples_of({"110", "101", "000"}, m), p, layout);
    REQUIRE(two.best_feasible.has_value());
    CHECK(two.samples[*two.best_feasible].kpis.expected_return == doctest::Approx(0.05));
    CHECK(two.success_probability == doctest::Approx(2.0 / 3.0));
    CHECK(two.median_sum_weights == 1.0);
    REQUIRE(two.violation_counts.size() == 2);
    CHECK(two.violation_counts[0].label == "normalization");
    CHECK(two.violation_counts[0].count == 1);
    CHECK(two.violation_counts[1].count == 0);
    std::size_t binned = 0;
    for (const auto& b : two.sum_weights_histogram) binned += b.count;
    CHECK(binned == 3);

    const ExperimentRecord none = summarize(samples_of({"000"}, m), p, layout);
    CHECK_FALSE(none.best_feasible.has_value());
    const auto j = nlohmann::json::parse(record_to_json(none));
    CHECK(j["best_feasible_absent"] == true);
    CHECK(j["best_feasible"].is_null());

    CHECK_THROWS_AS(summarize(SampleSet{}, p, layout), std::invalid_argument);
  }

  TEST_CASE("record exports") {
    const Problem p = half_steps();
    const EncodingLayout layout = build_layout(p, 1);
    const QuadraticModel m = build_h1(p, layout);
    const ExperimentRecord rec = summarize(samples_of({"110", "000"}, m), p, layout);
    const std::string csv = format_record_csv(rec);
    CHECK(csv.rfind("read,round,energy,return,volatility,sharpe,not_satisfied,sum_weights\n", 0) == 0);
    CHECK(csv.find(",NA,") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    const std::string viol = format_violation_csv(rec);
    CHECK(viol == "label,kind,count\nnormalization,normalization,1\nvolatility,volatility,0\n");
    const auto j = nlohmann::json::parse(record_to_json(rec));
    CHECK(j["samples"].size() == 2);
    CHECK(j["violations"].size() == 2);
  }
}
