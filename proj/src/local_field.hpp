#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "portq/quadratic_model.hpp"

namespace portq::detail {

/// Symmetric adjacency of a QuadraticModel's off-diagonal terms.
struct Adjacency {
  std::vector<double> diag;
  std::vector<std::size_t> row_start;  // size n + 1
  std::vector<std::uint32_t> col;
  std::vector<double> val;

  explicit Adjacency(const QuadraticModel& model);
  std::size_t size() const { return diag.size(); }
  double max_abs_coefficient() const;
};

/// Tracks h_i = sum_{j != i} q_ij x_j so that the energy change of flipping
/// bit i is (1 - 2 x_i)(q_ii + h_i), and updates in O(degree) per flip.
class LocalField {
 public:
  LocalField(const Adjacency& adj, std::span<const std::uint8_t> x);

  double delta(std::size_t i) const { return (x_[i] ? -1.0 : 1.0) * (adj_->diag[i] + field_[i]); }
  void flip(std::size_t i);
  std::span<const std::uint8_t> state() const { return x_; }
  std::uint8_t bit(std::size_t i) const { return x_[i]; }

 private:
  const Adjacency* adj_;
  std::vector<std::uint8_t> x_;
  std::vector<double> field_;
};

}  // namespace portq::detail
