#include "portq/encoding.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace portq {

namespace {

void check_bits(int bits) {
  if (bits < 1 || bits > kMaxBits) {
    throw std::invalid_argument(fmt::format("bit count must be in [1, {}], got {}", kMaxBits, bits));
  }
}

}  // namespace

double granularity(int bits) {
  check_bits(bits);
  return std::ldexp(1.0, -bits);
}

std::uint64_t slice_value(std::span<const std::uint8_t> bits) {
  if (bits.size() > static_cast<std::size_t>(kMaxBits)) throw std::invalid_argument("slice longer than 62 bits");
  std::uint64_t v = 0;
  for (std::size_t k = 0; k < bits.size(); ++k) {
    if (bits[k]) v |= std::uint64_t{1} << k;
  }
  return v;
}

void write_slice(std::uint64_t value, std::span<std::uint8_t> bits) {
  for (std::size_t k = 0; k < bits.size(); ++k) bits[k] = static_cast<std::uint8_t>((value >> k) & 1U);
}

double decode_weight(std::span<const std::uint8_t> bits, double weight_min, double weight_max) {
  const int k = static_cast<int>(bits.size());
  const double fraction = static_cast<double>(slice_value(bits)) * granularity(k);
  return weight_min + (weight_max - weight_min) * fraction;
}

double effective_granularity(int bits, double weight_min, double weight_max) {
  return (weight_max - weight_min) * granularity(bits);
}

std::uint64_t nearest_level(double weight, int bits, double weight_min, double weight_max) {
  const std::uint64_t top = (std::uint64_t{1} << bits) - 1;
  const double width = weight_max - weight_min;
  if (!(width > 0.0)) return 0;
  const double scaled = (weight - weight_min) / width / granularity(bits);
  if (!(scaled > 0.0)) return 0;
  if (scaled >= static_cast<double>(top)) return top;
  // Round half down: ties go to the lower level.
  const double lower = std::floor(scaled);
  const auto level = static_cast<std::uint64_t>(lower);
  return (scaled - lower > 0.5) ? level + 1 : level;
}

BitString::BitString(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto& b : bits_) {
    if (b > 1) throw std::invalid_argument("BitString entries must be 0 or 1");
  }
}

BitString BitString::from_string(std::string_view text) {
  std::vector<std::uint8_t> bits;
  bits.reserve(text.size());
  for (char c : text) {
    if (c == '0') {
      bits.push_back(0);
    } else if (c == '1') {
      bits.push_back(1);
    } else {
      throw std::invalid_argument(fmt::format("invalid bit character '{}'", c));
    }
  }
  return BitString(std::move(bits));
}

std::string BitString::to_string() const {
  std::string out(bits_.size(), '0');
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out[i] = '1';
  }
  return out;
}

double SlackBlock::granularity() const { return portq::granularity(bits); }

double SlackBlock::value(const BitString& x) const {
  return beta * static_cast<double>(slice_value(x.slice(start, static_cast<std::size_t>(bits)))) * granularity();
}

double VolaSlackBlock::value(const BitString& x) const {
  return bound * static_cast<double>(slice_value(x.slice(start, static_cast<std::size_t>(bits)))) *
         portq::granularity(bits);
}

const SlackBlock* EncodingLayout::slack_for(std::size_t constraint) const {
  for (const auto& b : slack_blocks) {
    if (b.constraint == constraint) return &b;
  }
  return nullptr;
}

EncodingLayout build_layout(const Problem& problem, int bits, bool include_vola_slack) {
  LayoutOptions opts;
  opts.include_vola_slack = include_vola_slack;
  return build_layout(problem, bits, opts);
}

EncodingLayout build_layout(const Problem& problem, int bits, const LayoutOptions& options) {
  check_bits(bits);
  const int slack_bits = options.slack_bits.value_or(bits);
  check_bits(slack_bits);

  EncodingLayout layout;
  layout.n_assets = problem.size();
  layout.bits_per_asset = bits;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < problem.size(); ++i) {
    layout.asset_bit_offset.push_back(cursor);
    cursor += static_cast<std::size_t>(bits);
  }

  for (std::size_t j = 0; j < problem.multi_constraints.size(); ++j) {
    const auto& c = problem.multi_constraints[j];
    if (c.op == ConstraintOp::EQ) continue;
    // Extremal residual over the continuous box.
    double extreme = 0.0;
    for (std::size_t i = 0; i < problem.size(); ++i) {
      const double lo = c.coefficients[i] * problem.assets[i].weight_min;
      const double hi = c.coefficients[i] * problem.assets[i].weight_max;
      extreme += (c.op == ConstraintOp::LE) ? std::min(lo, hi) : std::max(lo, hi);
    }
    const double beta = (c.op == ConstraintOp::LE) ? c.rhs - extreme : extreme - c.rhs;
    if (beta < 0.0) {
      throw InfeasibleConstraintError(
          j, fmt::format("constraint {} ({} {}) cannot be satisfied inside the weight box (slack bound {:.6g} < 0)",
                         j, to_string(c.op), c.rhs, beta));
    }
    if (!options.linear_slack) continue;
    SlackBlock block;
    block.constraint = j;
    block.start = cursor;
    block.bits = slack_bits;
    block.beta = beta;
    block.alpha = (c.op == ConstraintOp::LE) ? 1 : -1;
    layout.slack_blocks.push_back(block);
    cursor += static_cast<std::size_t>(slack_bits);
  }

  if (options.include_vola_slack) {
    layout.vola_slack_block = VolaSlackBlock{cursor, slack_bits, problem.sigma2_target};
    cursor += static_cast<std::size_t>(slack_bits);
  }
  layout.total_bits = cursor;
  return layout;
}

void check_layout(const EncodingLayout& layout, const Problem& problem) {
  if (layout.n_assets != problem.size() || layout.asset_bit_offset.size() != problem.size()) {
    throw std::invalid_argument(
        fmt::format("layout built for {} assets, problem has {}", layout.n_assets, problem.size()));
  }
  for (const auto& b : layout.slack_blocks) {
    if (b.constraint >= problem.multi_constraints.size()) {
      throw std::invalid_argument("layout slack block refers to a missing constraint");
    }
  }
}

double max_effective_granularity(const Problem& problem, int bits) {
  double p = 0.0;
  for (const auto& a : problem.assets) p = std::max(p, effective_granularity(bits, a.weight_min, a.weight_max));
  return p;
}

DecodedSolution decode_solution(const BitString& x, const EncodingLayout& layout, const Problem& problem) {
  if (x.size() != layout.total_bits) {
    throw std::invalid_argument(
        fmt::format("bit string has {} bits, layout expects {}", x.size(), layout.total_bits));
  }
  check_layout(layout, problem);
  DecodedSolution out;
  const auto k = static_cast<std::size_t>(layout.bits_per_asset);
  out.weights.reserve(problem.size());
  for (std::size_t i = 0; i < problem.size(); ++i) {
    const auto& a = problem.assets[i];
    out.weights.push_back(decode_weight(x.slice(layout.asset_bit_offset[i], k), a.weight_min, a.weight_max));
  }
  out.slacks.assign(problem.multi_constraints.size(), 0.0);
  for (const auto& b : layout.slack_blocks) out.slacks[b.constraint] = b.value(x);
  if (layout.vola_slack_block) out.vola_slack = layout.vola_slack_block->value(x);
  return out;
}

BitString encode_nearest(const std::vector<double>& weights, const EncodingLayout& layout, const Problem& problem) {
  if (weights.size() != problem.size()) throw std::invalid_argument("encode_nearest: dimension mismatch");
  check_layout(layout, problem);
  BitString x(layout.total_bits);
  const auto k = static_cast<std::size_t>(layout.bits_per_asset);
  for (std::size_t i = 0; i < problem.size(); ++i) {
    const auto& a = problem.assets[i];
    const auto level = nearest_level(weights[i], layout.bits_per_asset, a.weight_min, a.weight_max);
    write_slice(level, x.view().subspan(layout.asset_bit_offset[i], k));
  }
  return x;
}

}  // namespace portq
