#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <map>
#include <vector>

#include "portq/encoding.hpp"

namespace portq {

/// Coefficients with magnitude below this are dropped from the sparse map.
inline constexpr double kPruneThreshold = 1e-15;

struct Term {
  std::uint32_t i = 0;
  std::uint32_t j = 0;  // i <= j; i == j is the linear (diagonal) term
  double coeff = 0.0;
};

/// Sum over i <= j of q_ij x_i x_j plus a constant offset, with x in {0,1}.
///
/// Storage is upper triangular: add(i, j, c) with i > j accumulates into (j, i).
/// Because x_i^2 = x_i the diagonal doubles as the linear part.
class QuadraticModel {
 public:
  QuadraticModel() = default;
  explicit QuadraticModel(std::size_t n, double offset = 0.0) : n_(n), offset_(offset) {}

  std::size_t size() const { return n_; }
  double offset() const { return offset_; }

  void add(std::size_t i, std::size_t j, double coeff);
  void add_linear(std::size_t i, double coeff) { add(i, i, coeff); }
  void add_offset(double value) { offset_ += value; }
  /// this += scale * other; sizes must match.
  void add_scaled(const QuadraticModel& other, double scale);
  /// Grows the variable count; existing coefficients keep their indices.
  void resize(std::size_t n);

  double coefficient(std::size_t i, std::size_t j) const;
  /// Stored entries above the prune threshold, ascending by (i, j).
  std::vector<Term> terms() const;
  std::size_t num_terms() const;
  /// num_terms / (n (n + 1) / 2).
  double density() const;
  bool is_linear() const;

  double energy(const BitString& x) const;
  double energy(std::span<const std::uint8_t> x) const;

 private:
  static std::uint64_t key(std::size_t i, std::size_t j) { return (std::uint64_t{i} << 32) | std::uint64_t{j}; }

  std::size_t n_ = 0;
  double offset_ = 0.0;
  std::map<std::uint64_t, double> q_;  // key (i << 32) | j, so iteration is row-major
};

/// Affine form c0 + sum_i c_i x_i over bits, kept dense in the touched indices.
struct LinearForm {
  std::vector<std::pair<std::size_t, double>> coeffs;
  double constant = 0.0;

  void add(std::size_t i, double c) { coeffs.emplace_back(i, c); }
  double evaluate(const BitString& x) const;
  /// Merges duplicate indices and drops zeros.
  LinearForm compacted() const;
  double min_value() const;
  double max_value() const;
};

/// Adds scale * (form)^2 into `model`.
void add_squared(QuadraticModel& model, const LinearForm& form, double scale = 1.0);

/// Adds scale * (a)(b) into `model`.
void add_product(QuadraticModel& model, const LinearForm& a, const LinearForm& b, double scale = 1.0);

/// Adds scale * form (linear) into `model`.
void add_linear_form(QuadraticModel& model, const LinearForm& form, double scale = 1.0);

/// Text export: "# offset <v>", "# n <n>", then "i j coeff" per entry with
/// ascending indices. Numbers use round-trip precision.
std::string format_qubo(const QuadraticModel& model);
void write_qubo(const QuadraticModel& model, const std::filesystem::path& path);
QuadraticModel parse_qubo(const std::string& text);

}  // namespace portq
