#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace agsfh {

using Index = Eigen::Index;

/// K x N matrix over {-1, +1}; one code per column.
using SignMatrix = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Entrywise sign with sgn(0) = +1.
SignMatrix sign_of(const Eigen::MatrixXd& scores);

bool is_sign_matrix(const SignMatrix& codes);

/// Codes packed into 64-bit words: bit (k mod 64) of word (k / 64) is set
/// when bit k of the code is +1. Unused high bits of the last word are zero.
class PackedCodes {
 public:
  PackedCodes() = default;
  PackedCodes(Index bits, Index count);
  static PackedCodes pack(const SignMatrix& codes);

  Index bits() const { return bits_; }
  Index size() const { return count_; }
  Index words_per_code() const { return words_; }

  std::span<const std::uint64_t> code(Index i) const {
    return {words_data_.data() + i * words_, static_cast<std::size_t>(words_)};
  }
  std::span<std::uint64_t> code(Index i) {
    return {words_data_.data() + i * words_, static_cast<std::size_t>(words_)};
  }
  const std::vector<std::uint64_t>& words() const { return words_data_; }

  SignMatrix unpack() const;

  bool operator==(const PackedCodes&) const = default;

 private:
  Index bits_ = 0;
  Index count_ = 0;
  Index words_ = 0;
  std::vector<std::uint64_t> words_data_;
};

/// Number of differing bits.
int hamming_distance(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

/// Code file: magic "AGSC", u32 K, u64 Q, then Q codes of ceil(K/64)
/// little-endian u64 words each.
void write_codes(std::ostream& out, const PackedCodes& codes);
PackedCodes read_codes(std::istream& in);
void save_codes(const std::filesystem::path& path, const PackedCodes& codes);
PackedCodes load_codes(const std::filesystem::path& path);

}  // namespace agsfh
