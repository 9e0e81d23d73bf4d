#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "oracles.hpp"
#include "portq/model.hpp"

using namespace portq;

namespace {

nlohmann::json problem_json(std::size_t n, double box_max) {
  nlohmann::json j;
  j["assets"] = nlohmann::json::array();
  for (std::size_t i = 0; i < n; ++i) {
    j["assets"].push_back({{"name", std::string(1, static_cast<char>('A' + i))},
                           {"class", i % 2 ? "FI" : "EQ"},
                           {"ret", 0.01 * static_cast<double>(i + 1)},
                           {"min", 0.0},
                           {"max", box_max}});
  }
  nlohmann::json cov = nlohmann::json::array();
  for (std::size_t i = 0; i < n; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t k = 0; k < n; ++k) row.push_back(i == k ? 1.0 : 0.0);
    cov.push_back(row);
  }
  j["covariance"] = cov;
  j["sigma2_target"] = 0.04;
  j["constraints"] = nlohmann::json::array();
  return j;
}

Problem two_asset(double s00, double s01, double s11) {
  Problem p;
  p.assets = {Asset{"x", AssetClass::EQ, 0.04, 0.0, 1.0}, Asset{"y", AssetClass::FI, 0.02, 0.0, 1.0}};
  p.covariance.resize(2, 2);
  p.covariance << s00, s01, s01, s11;
  p.sigma2_target = 0.05;
  return p;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("ten asset file with 0.1 boxes loads") {
    const Problem p = parse_problem(problem_json(10, 0.1).dump());
    CHECK(p.size() == 10);
    for (const auto& a : p.assets) CHECK(a.width() == doctest::Approx(0.1));
    CHECK(p.assets[3].name == "D");
  }

  TEST_CASE("inverted box is reported with the asset") {
    auto j = problem_json(5, 0.5);
    j["assets"][3]["min"] = 0.4;
    j["assets"][3]["max"] = 0.2;
    try {
      parse_problem(j.dump());
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("asset 3") != std::string::npos);
      CHECK(msg.find("weight_min > weight_max") != std::string::npos);
    }
  }

  TEST_CASE("three assets with identity covariance") {
    const Problem p = parse_problem(problem_json(3, 1.0).dump());
    CHECK(p.size() == 3);
    CHECK(p.covariance.isIdentity());
    CHECK(p.sigma2_target == 0.04);
  }

  TEST_CASE("malformed and non-finite files are parse errors") {
    CHECK_THROWS_AS(parse_problem("{not json"), ParseError);
    auto j = problem_json(3, 1.0);
    j.erase("covariance");
    CHECK_THROWS_AS(parse_problem(j.dump()), ParseError);
    const std::string with_nan = R"({"assets":[{"name":"a","class":"EQ","ret":NaN,"min":0,"max":1}],
      "covariance":[[1]],"sigma2_target":0.1,"constraints":[]})";
    CHECK_THROWS_AS(parse_problem(with_nan), ParseError);
    auto bad_op = problem_json(3, 1.0);
    bad_op["constraints"].push_back({{"coeffs", {1, 0, 0}}, {"op", "lt"}, {"rhs", 0.5}});
    CHECK_THROWS_AS(parse_problem(bad_op.dump()), ParseError);
  }

  TEST_CASE("validation catches each invariant") {
    auto j = problem_json(3, 1.0);
    j["covariance"][0][1] = 0.5;
    CHECK_THROWS_WITH_AS(parse_problem(j.dump()), doctest::Contains("not symmetric"), ValidationError);

    auto neg = problem_json(2, 1.0);
    neg["covariance"] = {{1.0, 2.0}, {2.0, 1.0}};
    CHECK_THROWS_WITH_AS(parse_problem(neg.dump()), doctest::Contains("positive semidefinite"), ValidationError);

    auto low = problem_json(3, 0.2);
    CHECK_THROWS_WITH_AS(parse_problem(low.dump()), doctest::Contains("sum of weight_max < 1"), ValidationError);

    auto zero_row = problem_json(3, 1.0);
    zero_row["constraints"].push_back({{"coeffs", {0, 0, 0}}, {"op", "le"}, {"rhs", 0.5}});
    CHECK_THROWS_WITH_AS(parse_problem(zero_row.dump()), doctest::Contains("all coefficients are zero"),
                         ValidationError);

    auto short_row = problem_json(3, 1.0);
    short_row["constraints"].push_back({{"coeffs", {1, 0}}, {"op", "le"}, {"rhs", 0.5}});
    CHECK_THROWS_AS(parse_problem(short_row.dump()), ValidationError);

    auto sigma = problem_json(3, 1.0);
    sigma["sigma2_target"] = 0.0;
    CHECK_THROWS_AS(parse_problem(sigma.dump()), ValidationError);
  }

  TEST_CASE("portfolio return") {
    Problem p = parse_problem(problem_json(3, 1.0).dump());
    p.assets[0].mean_return = 0.05;
    p.assets[1].mean_return = 0.02;
    p.assets[2].mean_return = 0.01;
    CHECK(portfolio_return({1, 0, 0}, p) == doctest::Approx(0.05));
    CHECK(portfolio_return({0, 0, 0}, p) == 0.0);
    p.assets[0].mean_return = 0.04;
    p.assets[2].mean_return = 0.10;
    CHECK(portfolio_return({0.5, 0.5, 0}, p) == doctest::Approx(0.03));
    CHECK_THROWS_AS(portfolio_return({1, 0}, p), std::invalid_argument);
  }

  TEST_CASE("portfolio variance") {
    const Problem id4 = parse_problem(problem_json(4, 1.0).dump());
    CHECK(portfolio_variance({0.25, 0.25, 0.25, 0.25}, id4) == doctest::Approx(0.25));
    CHECK(portfolio_variance({0, 0, 0, 0}, id4) == 0.0);
    const Problem p = two_asset(0.04, 0.01, 0.09);
    CHECK(portfolio_variance({0.5, 0.5}, p) == doctest::Approx(0.0375).epsilon(1e-14));
    CHECK_THROWS_AS(portfolio_variance({1.0}, p), std::invalid_argument);
  }

  TEST_CASE("variance is nonnegative and return is linear on random data") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      const Problem p = oracle::random_problem(rng, 1 + rng.below(8), 0);
      std::vector<double> a(p.size()), b(p.size()), mix(p.size());
      for (auto& v : a) v = rng.uniform(-1.0, 1.0);
      for (auto& v : b) v = rng.uniform(-1.0, 1.0);
      const double s = rng.uniform(-3.0, 3.0), t = rng.uniform(-3.0, 3.0);
      for (std::size_t i = 0; i < p.size(); ++i) mix[i] = s * a[i] + t * b[i];
      CHECK(portfolio_variance(a, p) >= -1e-12);
      const double lhs = portfolio_return(mix, p);
      const double rhs = s * portfolio_return(a, p) + t * portfolio_return(b, p);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
      CHECK(portfolio_variance(a, p) == doctest::Approx(oracle::variance(a, p)).epsilon(1e-12));
    }
  }

  TEST_CASE("generated instances are deterministic and valid") {
    const Problem a = generate_instance(10, 3, 42);
    const Problem b = generate_instance(10, 3, 42);
    CHECK(serialize_problem(a) == serialize_problem(b));
    CHECK(a.covariance == b.covariance);
    CHECK(serialize_problem(generate_instance(10, 3, 43)) != serialize_problem(a));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const std::size_t n = 1 + seed % 15;
      CHECK_NOTHROW(validate(generate_instance(n, 1 + seed % n, seed)));
    }
    CHECK_THROWS_AS(generate_instance(3, 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_instance(0, 1, 1), std::invalid_argument);
  }

  TEST_CASE("large generated instance is PSD") {
    const Problem p = generate_instance(499, 10, 7);
    CHECK(p.size() == 499);
    CHECK(is_positive_semidefinite(p.covariance));
    for (const auto& a : p.assets) {
      CHECK(a.weight_min == 0.0);
      CHECK(a.weight_max == 0.1);
      CHECK(a.mean_return >= -0.02);
      CHECK(a.mean_return <= 0.10);
    }
  }

  TEST_CASE("rank one plus diagonal spectrum") {
    // F F' + D with D >= 0.001: every eigenvalue is at least the smallest noise term.
    const Problem p = generate_instance(4, 1, 1);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p.covariance);
    CHECK(eig.eigenvalues().minCoeff() >= 0.001 - 1e-12);
    // Removing the top eigenpair leaves a spectrum inside the noise range.
    CHECK(eig.eigenvalues()(2) <= 0.01 + 1e-12);
  }

  TEST_CASE("small instances widen their boxes") {
    const Problem p = generate_instance(5, 2, 3);
    for (const auto& a : p.assets) CHECK(a.weight_max == doctest::Approx(0.4));
    const Problem one = generate_instance(1, 1, 3);
    CHECK(one.assets[0].weight_max == 1.0);
  }

  TEST_CASE("save and load round trip is bit exact") {
    Rng rng(5);
    const auto dir = std::filesystem::temp_directory_path() / "portq_model_test";
    std::filesystem::create_directories(dir);
    for (int trial = 0; trial < 10; ++trial) {
      const Problem p = oracle::random_problem(rng, 2 + rng.below(5), rng.below(3), true);
      const auto path = dir / ("p" + std::to_string(trial) + ".json");
      save_problem(p, path);
      const Problem q = load_problem(path);
      REQUIRE(q.size() == p.size());
      for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(q.assets[i].name == p.assets[i].name);
        CHECK(q.assets[i].asset_class == p.assets[i].asset_class);
        CHECK(q.assets[i].mean_return == p.assets[i].mean_return);
        CHECK(q.assets[i].weight_min == p.assets[i].weight_min);
        CHECK(q.assets[i].weight_max == p.assets[i].weight_max);
      }
      CHECK(q.covariance == p.covariance);
      CHECK(q.sigma2_target == p.sigma2_target);
      REQUIRE(q.multi_constraints.size() == p.multi_constraints.size());
      for (std::size_t j = 0; j < p.multi_constraints.size(); ++j) {
        CHECK(q.multi_constraints[j].coefficients == p.multi_constraints[j].coefficients);
        CHECK(q.multi_constraints[j].op == p.multi_constraints[j].op);
        CHECK(q.multi_constraints[j].rhs == p.multi_constraints[j].rhs);
      }
    }
    CHECK_THROWS_AS(load_problem(dir / "missing.json"), ParseError);
  }
}
