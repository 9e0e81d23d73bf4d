#include "local_field.hpp"

#include <algorithm>
#include <cmath>

namespace portq::detail {

Adjacency::Adjacency(const QuadraticModel& model) : diag(model.size(), 0.0), row_start(model.size() + 1, 0) {
  const auto terms = model.terms();
  std::vector<std::size_t> degree(model.size(), 0);
  for (const auto& t : terms) {
    if (t.i == t.j) {
      diag[t.i] += t.coeff;
    } else {
      ++degree[t.i];
      ++degree[t.j];
    }
  }
  for (std::size_t i = 0; i < model.size(); ++i) row_start[i + 1] = row_start[i] + degree[i];
  col.resize(row_start.back());
  val.resize(row_start.back());
  std::vector<std::size_t> cursor(row_start.begin(), row_start.end() - 1);
  for (const auto& t : terms) {
    if (t.i == t.j) continue;
    col[cursor[t.i]] = t.j;
    val[cursor[t.i]++] = t.coeff;
    col[cursor[t.j]] = t.i;
    val[cursor[t.j]++] = t.coeff;
  }
}

double Adjacency::max_abs_coefficient() const {
  double m = 0.0;
  for (double d : diag) m = std::max(m, std::abs(d));
  for (double v : val) m = std::max(m, std::abs(v));
  return m;
}

LocalField::LocalField(const Adjacency& adj, std::span<const std::uint8_t> x)
    : adj_(&adj), x_(x.begin(), x.end()), field_(adj.size(), 0.0) {
  for (std::size_t i = 0; i < adj.size(); ++i) {
    if (!x_[i]) continue;
    for (std::size_t p = adj.row_start[i]; p < adj.row_start[i + 1]; ++p) field_[adj.col[p]] += adj.val[p];
  }
}

void LocalField::flip(std::size_t i) {
  const double sign = x_[i] ? -1.0 : 1.0;
  x_[i] ^= 1;
  for (std::size_t p = adj_->row_start[i]; p < adj_->row_start[i + 1]; ++p) field_[adj_->col[p]] += sign * adj_->val[p];
}

}  // namespace portq::detail
