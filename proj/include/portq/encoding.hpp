#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "portq/model.hpp"

namespace portq {

/// Raised by build_layout when an inequality cannot be met anywhere in the
/// weight box (its slack bound would be negative).
class InfeasibleConstraintError : public std::invalid_argument {
 public:
  InfeasibleConstraintError(std::size_t constraint, const std::string& what)
      : std::invalid_argument(what), constraint_(constraint) {}
  std::size_t constraint() const { return constraint_; }

 private:
  std::size_t constraint_;
};

inline constexpr int kMaxBits = 62;

/// p_K = 2^-K, exact for 1 <= K <= 62.
double granularity(int bits);

/// w_min + (w_max - w_min) * sum_k 2^(k-1) x_k * 2^-K, index 0 = LSB.
double decode_weight(std::span<const std::uint8_t> bits, double weight_min, double weight_max);

/// (w_max - w_min) * 2^-K.
double effective_granularity(int bits, double weight_min, double weight_max);

/// Unsigned value of an LSB-first bit slice.
std::uint64_t slice_value(std::span<const std::uint8_t> bits);

/// Writes `value` into an LSB-first slice of bits.size() bits.
void write_slice(std::uint64_t value, std::span<std::uint8_t> bits);

/// Lattice index (0 .. 2^K - 1) closest to `weight` inside [w_min, w_max);
/// ties resolve to the lower index.
std::uint64_t nearest_level(double weight, int bits, double weight_min, double weight_max);

/// Binary vector over all model bits. Serializes as an ASCII '0'/'1' string
/// with index 0 leftmost.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t n) : bits_(n, 0) {}
  explicit BitString(std::vector<std::uint8_t> bits);

  static BitString from_string(std::string_view text);
  std::string to_string() const;

  std::size_t size() const { return bits_.size(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, bool value) { bits_[i] = value ? 1 : 0; }
  void flip(std::size_t i) { bits_[i] ^= 1; }

  std::span<const std::uint8_t> view() const { return bits_; }
  std::span<std::uint8_t> view() { return bits_; }
  std::span<const std::uint8_t> slice(std::size_t start, std::size_t count) const {
    return std::span<const std::uint8_t>(bits_).subspan(start, count);
  }
  const std::vector<std::uint8_t>& data() const { return bits_; }

  auto operator<=>(const BitString&) const = default;
  bool operator==(const BitString&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Slack bits of one LE/GE multi-asset constraint:
/// s_j = beta * sum_k 2^(k-1) s_k * 2^-S, entering the penalty with sign alpha.
struct SlackBlock {
  std::size_t constraint = 0;
  std::size_t start = 0;
  int bits = 0;
  double beta = 0.0;
  int alpha = 0;  // +1 for LE, -1 for GE

  double granularity() const;
  double value(const BitString& x) const;
};

/// Diagnostic slack for the volatility inequality, bounded by sigma2_target.
struct VolaSlackBlock {
  std::size_t start = 0;
  int bits = 0;
  double bound = 0.0;

  double value(const BitString& x) const;
};

struct LayoutOptions {
  bool linear_slack = true;
  bool include_vola_slack = false;
  /// Overrides S_j = S_sigma = K.
  std::optional<int> slack_bits;
};

/// Bit map: assets first (K bits each, LSB first), then one slack block per
/// inequality in constraint order, then the optional volatility slack.
struct EncodingLayout {
  std::size_t n_assets = 0;
  int bits_per_asset = 0;
  std::vector<std::size_t> asset_bit_offset;
  std::vector<SlackBlock> slack_blocks;
  std::optional<VolaSlackBlock> vola_slack_block;
  std::size_t total_bits = 0;

  std::size_t asset_bits() const { return n_assets * static_cast<std::size_t>(bits_per_asset); }
  /// Slack block for multi-asset constraint j, or nullptr for equalities.
  const SlackBlock* slack_for(std::size_t constraint) const;
};

EncodingLayout build_layout(const Problem& problem, int bits, bool include_vola_slack = false);
EncodingLayout build_layout(const Problem& problem, int bits, const LayoutOptions& options);

/// Throws std::invalid_argument when the layout does not describe `problem`.
void check_layout(const EncodingLayout& layout, const Problem& problem);

/// Largest per-asset effective granularity; the normalization tolerance.
double max_effective_granularity(const Problem& problem, int bits);

struct DecodedSolution {
  std::vector<double> weights;
  /// One entry per multi-asset constraint; zero for equalities.
  std::vector<double> slacks;
  std::optional<double> vola_slack;
};

DecodedSolution decode_solution(const BitString& x, const EncodingLayout& layout, const Problem& problem);

/// Asset bits of the nearest representable point to `weights` (slack bits
/// left at zero).
BitString encode_nearest(const std::vector<double>& weights, const EncodingLayout& layout, const Problem& problem);

}  // namespace portq
