#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "snrml/mining.hpp"
#include "snrml/numerics.hpp"

namespace snrml {

/// M-bit sign code. Bit m is 1 when h_m > 0 and 0 otherwise, so an exact zero
/// maps to the -1 side.
class BinaryCode {
 public:
  std::size_t size() const noexcept { return bits_; }
  bool bit(std::size_t m) const { return (words_[m / 64] >> (m % 64)) & 1u; }

  BinaryCode complement() const;
  /// The +1/-1 vector this code stands for.
  Vector to_signs() const;
  /// Dimension 0 first (MSB-first), one '0' or '1' per bit.
  std::string to_string() const;

  friend bool operator==(const BinaryCode&, const BinaryCode&) = default;
  friend BinaryCode quantize(std::span<const double> h);
  friend std::size_t hamming_distance(const BinaryCode& a, const BinaryCode& b);

 private:
  std::size_t bits_ = 0;
  std::vector<std::uint64_t> words_;
};

BinaryCode quantize(std::span<const double> h);
std::vector<BinaryCode> quantize_rows(const Matrix& embeddings);

/// Number of differing bits. Throws on length mismatch.
std::size_t hamming_distance(const BinaryCode& a, const BinaryCode& b);

/// Gallery indices by ascending Hamming distance to `query`, ties by index.
std::vector<std::size_t> hamming_rank(const BinaryCode& query,
                                      const std::vector<BinaryCode>& gallery);

/// Mean Hamming distance over same-label and different-label unordered pairs.
struct HammingSpread {
  double intra = 0.0;
  double inter = 0.0;
};

HammingSpread hamming_spread(const std::vector<BinaryCode>& codes,
                             const std::vector<LabelSet>& labels);

/// One line per item: "<id> <bits>\n".
void write_codes(std::ostream& out, const std::vector<BinaryCode>& codes,
                 const std::vector<std::string>& ids);

}  // namespace snrml
