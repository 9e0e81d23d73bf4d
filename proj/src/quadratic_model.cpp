#include "portq/quadratic_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <fmt/format.h>

namespace portq {

void QuadraticModel::add(std::size_t i, std::size_t j, double coeff) {
  if (i > j) std::swap(i, j);
  if (j >= n_) {
    throw std::out_of_range(fmt::format("QuadraticModel::add: index {} out of range for {} variables", j, n_));
  }
  if (coeff == 0.0) return;
  q_[key(i, j)] += coeff;
}

void QuadraticModel::add_scaled(const QuadraticModel& other, double scale) {
  if (other.n_ != n_) {
    throw std::invalid_argument(fmt::format("QuadraticModel size mismatch: {} vs {}", n_, other.n_));
  }
  if (scale == 0.0) return;
  for (const auto& [k, v] : other.q_) q_[k] += scale * v;
  offset_ += scale * other.offset_;
}

void QuadraticModel::resize(std::size_t n) {
  if (n < n_) throw std::invalid_argument("QuadraticModel::resize cannot shrink");
  n_ = n;
}

double QuadraticModel::coefficient(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  auto it = q_.find(key(i, j));
  if (it == q_.end() || std::abs(it->second) < kPruneThreshold) return 0.0;
  return it->second;
}

std::vector<Term> QuadraticModel::terms() const {
  std::vector<Term> out;
  out.reserve(q_.size());
  for (const auto& [k, v] : q_) {
    if (std::abs(v) < kPruneThreshold) continue;
    out.push_back(Term{static_cast<std::uint32_t>(k >> 32), static_cast<std::uint32_t>(k & 0xffffffffULL), v});
  }
  return out;
}

std::size_t QuadraticModel::num_terms() const {
  return static_cast<std::size_t>(
      std::count_if(q_.begin(), q_.end(), [](const auto& kv) { return std::abs(kv.second) >= kPruneThreshold; }));
}

double QuadraticModel::density() const {
  if (n_ == 0) return 0.0;
  const double slots = static_cast<double>(n_) * static_cast<double>(n_ + 1) / 2.0;
  return static_cast<double>(num_terms()) / slots;
}

bool QuadraticModel::is_linear() const {
  return std::none_of(q_.begin(), q_.end(), [](const auto& kv) {
    return (kv.first >> 32) != (kv.first & 0xffffffffULL) && std::abs(kv.second) >= kPruneThreshold;
  });
}

double QuadraticModel::energy(const BitString& x) const { return energy(x.view()); }

double QuadraticModel::energy(std::span<const std::uint8_t> x) const {
  if (x.size() != n_) {
    throw std::invalid_argument(fmt::format("energy: bit string has {} bits, model has {}", x.size(), n_));
  }
  double e = offset_;
  for (const auto& [k, v] : q_) {
    if (std::abs(v) < kPruneThreshold) continue;
    if (x[k >> 32] && x[k & 0xffffffffULL]) e += v;
  }
  return e;
}

double LinearForm::evaluate(const BitString& x) const {
  double v = constant;
  for (const auto& [i, c] : coeffs) {
    if (x[i]) v += c;
  }
  return v;
}

LinearForm LinearForm::compacted() const {
  std::map<std::size_t, double> merged;
  for (const auto& [i, c] : coeffs) merged[i] += c;
  LinearForm out;
  out.constant = constant;
  for (const auto& [i, c] : merged) {
    if (c != 0.0) out.coeffs.emplace_back(i, c);
  }
  return out;
}

double LinearForm::min_value() const {
  double v = constant;
  for (const auto& [i, c] : compacted().coeffs) v += std::min(c, 0.0);
  return v;
}

double LinearForm::max_value() const {
  double v = constant;
  for (const auto& [i, c] : compacted().coeffs) v += std::max(c, 0.0);
  return v;
}

void add_linear_form(QuadraticModel& model, const LinearForm& form, double scale) {
  model.add_offset(scale * form.constant);
  for (const auto& [i, c] : form.coeffs) model.add_linear(i, scale * c);
}

void add_product(QuadraticModel& model, const LinearForm& a, const LinearForm& b, double scale) {
  // (a0 + sum a_i x_i)(b0 + sum b_j x_j); x_i x_i = x_i lands on the diagonal.
  model.add_offset(scale * a.constant * b.constant);
  for (const auto& [i, c] : a.coeffs) model.add_linear(i, scale * c * b.constant);
  for (const auto& [j, c] : b.coeffs) model.add_linear(j, scale * c * a.constant);
  for (const auto& [i, ci] : a.coeffs) {
    for (const auto& [j, cj] : b.coeffs) model.add(i, j, scale * ci * cj);
  }
}

void add_squared(QuadraticModel& model, const LinearForm& form, double scale) {
  const LinearForm f = form.compacted();
  model.add_offset(scale * f.constant * f.constant);
  for (std::size_t a = 0; a < f.coeffs.size(); ++a) {
    const auto [i, ci] = f.coeffs[a];
    model.add_linear(i, scale * (ci * ci + 2.0 * f.constant * ci));
    for (std::size_t b = a + 1; b < f.coeffs.size(); ++b) {
      const auto [j, cj] = f.coeffs[b];
      model.add(i, j, scale * 2.0 * ci * cj);
    }
  }
}

std::string format_qubo(const QuadraticModel& model) {
  std::string out;
  out += fmt::format("# offset {}\n", model.offset());
  out += fmt::format("# n {}\n", model.size());
  for (const auto& t : model.terms()) out += fmt::format("{} {} {}\n", t.i, t.j, t.coeff);
  return out;
}

void write_qubo(const QuadraticModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << format_qubo(model);
}

QuadraticModel parse_qubo(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  double offset = 0.0;
  std::size_t n = 0;
  std::optional<std::size_t> declared;
  std::vector<Term> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, key;
      ls >> hash >> key;
      if (key == "offset") ls >> offset;
      if (key == "n" && ls >> n) declared = n;
      continue;
    }
    Term t;
    if (!(ls >> t.i >> t.j >> t.coeff)) throw std::invalid_argument("malformed QUBO line: " + line);
    if (t.i > t.j) std::swap(t.i, t.j);
    if (declared && t.j >= *declared) {
      throw std::invalid_argument(fmt::format("QUBO index {} out of range for n = {}", t.j, *declared));
    }
    entries.push_back(t);
    n = std::max<std::size_t>(n, std::size_t{t.j} + 1);
  }
  QuadraticModel m(n, offset);
  for (const auto& t : entries) m.add(t.i, t.j, t.coeff);
  return m;
}

}  // namespace portq
