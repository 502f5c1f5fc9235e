#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace agsfh {

/// Portable pseudo-random stream.
///
/// The engine is MT19937-64 (std::mt19937_64, whose output sequence is fixed
/// by the C++ standard). Every derived distribution is implemented here rather
/// than taken from <random>, whose distributions are implementation-defined:
///
///   uniform()   = (next() >> 11) * 2^-53, in [0, 1)
///   normal()    = sqrt(-2 ln(1 - u1)) * cos(2 pi u2), two fresh uniforms per
///                 draw, no caching of the paired value
///   below(n)    = rejection sampling on next() against the largest multiple
///                 of n not exceeding 2^64
///   shuffle()   = Fisher-Yates from the back, j = below(i + 1)
///
/// Any implementation reproducing these rules reproduces the generated data
/// bit-for-bit (up to libm's log/cos rounding for normal()).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();
  double normal();
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace agsfh
