#include "agsfh/codes.hpp"

#include <bit>
#include <fstream>
#include <string>

#include "agsfh/error.hpp"
#include "binary_io.hpp"

namespace agsfh {
namespace {
constexpr std::string_view kCodeMagic = "AGSC";
}

SignMatrix sign_of(const Eigen::MatrixXd& scores) {
  return scores.unaryExpr([](double v) -> std::int8_t { return v >= 0.0 ? 1 : -1; });
}

bool is_sign_matrix(const SignMatrix& codes) {
  return (codes.array() == 1 || codes.array() == -1).all();
}

PackedCodes::PackedCodes(Index bits, Index count)
    : bits_(bits), count_(count), words_((bits + 63) / 64),
      words_data_(static_cast<std::size_t>(words_ * count), 0) {}

PackedCodes PackedCodes::pack(const SignMatrix& codes) {
  PackedCodes out(codes.rows(), codes.cols());
  for (Index i = 0; i < codes.cols(); ++i) {
    auto dst = out.code(i);
    for (Index k = 0; k < codes.rows(); ++k)
      if (codes(k, i) > 0) dst[static_cast<std::size_t>(k / 64)] |= std::uint64_t{1} << (k % 64);
  }
  return out;
}

SignMatrix PackedCodes::unpack() const {
  SignMatrix out(bits_, count_);
  for (Index i = 0; i < count_; ++i) {
    const auto src = code(i);
    for (Index k = 0; k < bits_; ++k)
      out(k, i) = (src[static_cast<std::size_t>(k / 64)] >> (k % 64)) & 1U ? 1 : -1;
  }
  return out;
}

int hamming_distance(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  int d = 0;
  for (std::size_t w = 0; w < a.size(); ++w) d += std::popcount(a[w] ^ b[w]);
  return d;
}

void write_codes(std::ostream& out, const PackedCodes& codes) {
  detail::write_magic(out, kCodeMagic);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(codes.bits()));
  detail::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(codes.size()));
  for (std::uint64_t w : codes.words()) detail::write_le(out, w);
}

PackedCodes read_codes(std::istream& in) {
  detail::expect_magic(in, kCodeMagic);
  const auto bits = detail::read_le<std::uint32_t>(in, "code length");
  const auto count = detail::read_le<std::uint64_t>(in, "code count");
  PackedCodes out(static_cast<Index>(bits), static_cast<Index>(count));
  for (Index i = 0; i < out.size(); ++i)
    for (auto& w : out.code(i)) w = detail::read_le<std::uint64_t>(in, "code words");
  return out;
}

void save_codes(const std::filesystem::path& path, const PackedCodes& codes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_codes(out, codes);
}

PackedCodes load_codes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  try {
    return read_codes(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace agsfh
