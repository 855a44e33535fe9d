#include "snrml/hashing.hpp"

#include <algorithm>
#include <bit>
#include <ostream>

namespace snrml {

BinaryCode quantize(std::span<const double> h) {
  require_finite(h, "quantize");
  BinaryCode code;
  code.bits_ = h.size();
  code.words_.assign((h.size() + 63) / 64, 0);
  for (std::size_t m = 0; m < h.size(); ++m) {
    if (h[m] > 0.0) code.words_[m / 64] |= std::uint64_t{1} << (m % 64);
  }
  return code;
}

std::vector<BinaryCode> quantize_rows(const Matrix& embeddings) {
  std::vector<BinaryCode> out;
  out.reserve(embeddings.rows());
  for (std::size_t r = 0; r < embeddings.rows(); ++r) out.push_back(quantize(embeddings.row(r)));
  return out;
}

BinaryCode BinaryCode::complement() const {
  Vector signs = to_signs();
  for (double& s : signs) s = -s;
  return quantize(signs);
}

Vector BinaryCode::to_signs() const {
  Vector out(bits_);
  for (std::size_t m = 0; m < bits_; ++m) out[m] = bit(m) ? 1.0 : -1.0;
  return out;
}

std::string BinaryCode::to_string() const {
  std::string s(bits_, '0');
  for (std::size_t m = 0; m < bits_; ++m) {
    if (bit(m)) s[m] = '1';
  }
  return s;
}

std::size_t hamming_distance(const BinaryCode& a, const BinaryCode& b) {
  if (a.bits_ != b.bits_) {
    throw Error(ErrorCategory::Dimension, "hamming_distance: code length mismatch");
  }
  std::size_t d = 0;
  for (std::size_t w = 0; w < a.words_.size(); ++w) {
    d += static_cast<std::size_t>(std::popcount(a.words_[w] ^ b.words_[w]));
  }
  return d;
}

std::vector<std::size_t> hamming_rank(const BinaryCode& query,
                                      const std::vector<BinaryCode>& gallery) {
  // Counting sort on distance keeps ties in ascending index order.
  std::vector<std::vector<std::size_t>> buckets(query.size() + 1);
  for (std::size_t g = 0; g < gallery.size(); ++g) {
    buckets[hamming_distance(query, gallery[g])].push_back(g);
  }
  std::vector<std::size_t> order;
  order.reserve(gallery.size());
  for (const auto& b : buckets) order.insert(order.end(), b.begin(), b.end());
  return order;
}

HammingSpread hamming_spread(const std::vector<BinaryCode>& codes,
                             const std::vector<LabelSet>& labels) {
  if (codes.size() != labels.size()) {
    throw Error(ErrorCategory::Dimension, "hamming_spread: label count mismatch");
  }
  double intra = 0.0, inter = 0.0;
  std::size_t n_intra = 0, n_inter = 0;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    for (std::size_t j = i + 1; j < codes.size(); ++j) {
      const auto d = static_cast<double>(hamming_distance(codes[i], codes[j]));
      if (similar(labels[i], labels[j])) {
        intra += d;
        ++n_intra;
      } else {
        inter += d;
        ++n_inter;
      }
    }
  }
  if (n_intra == 0 || n_inter == 0) {
    throw Error(ErrorCategory::Parameter, "hamming_spread: need both same- and cross-label pairs");
  }
  return {intra / static_cast<double>(n_intra), inter / static_cast<double>(n_inter)};
}

void write_codes(std::ostream& out, const std::vector<BinaryCode>& codes,
                 const std::vector<std::string>& ids) {
  if (codes.size() != ids.size()) {
    throw Error(ErrorCategory::Dimension, "write_codes: id count mismatch");
  }
  for (std::size_t i = 0; i < codes.size(); ++i) {
    out << ids[i] << ' ' << codes[i].to_string() << '\n';
  }
}

}  // namespace snrml
