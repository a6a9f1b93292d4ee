#pragma once

#include <cstdint>
#include <vector>

namespace difftree {

// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
// A stream is addressed by (seed, stream id); draws within a stream are
// addressed by a 64-bit position counter. Streams never overlap, so
// replicate r of a resampling study can use stream r and produce the
// same numbers no matter which worker runs it.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream)
      : key0_(std::uint32_t(seed)), key1_(std::uint32_t(seed >> 32)),
        stream_lo_(std::uint32_t(stream)), stream_hi_(std::uint32_t(stream >> 32)) {}

  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }

  result_type operator()() {
    if (have_ & 1) {
      have_ &= ~1u;
      return buffered_;
    }
    std::uint32_t ctr[4] = {std::uint32_t(pos_), std::uint32_t(pos_ >> 32), stream_lo_, stream_hi_};
    ++pos_;
    block(ctr);
    buffered_ = (std::uint64_t(ctr[2]) << 32) | ctr[3];
    have_ |= 1;
    return (std::uint64_t(ctr[0]) << 32) | ctr[1];
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return double((*this)() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n < 2) return 0;
    std::uint64_t bound = max() - max() % n;
    std::uint64_t x;
    do { x = (*this)(); } while (x >= bound);
    return x % n;
  }

  bool coin() { return ((*this)() & 1) != 0; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = std::size_t(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static void round(std::uint32_t ctr[4], std::uint32_t k0, std::uint32_t k1) {
    std::uint64_t p0 = std::uint64_t(0xD2511F53u) * ctr[0];
    std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * ctr[2];
    std::uint32_t lo0 = std::uint32_t(p0), hi0 = std::uint32_t(p0 >> 32);
    std::uint32_t lo1 = std::uint32_t(p1), hi1 = std::uint32_t(p1 >> 32);
    std::uint32_t out[4] = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
    ctr[0] = out[0]; ctr[1] = out[1]; ctr[2] = out[2]; ctr[3] = out[3];
  }

  void block(std::uint32_t ctr[4]) const {
    std::uint32_t k0 = key0_, k1 = key1_;
    for (int r = 0; r < 10; ++r) {
      round(ctr, k0, k1);
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
  }

  std::uint32_t key0_, key1_, stream_lo_, stream_hi_;
  std::uint64_t pos_ = 0;
  std::uint64_t buffered_ = 0;
  unsigned have_ = 0;
};

// Stream-id layout used across the library so that nested resampling
// loops (replicate, bootstrap, grid point) never collide.
namespace rng_domain {
constexpr std::uint64_t permutation = 1;
constexpr std::uint64_t bagging = 2;
constexpr std::uint64_t simulation = 3;
constexpr std::uint64_t simulation_null = 4;
constexpr std::uint64_t sequential = 5;
constexpr std::uint64_t user = 15;
}  // namespace rng_domain

inline Philox make_stream(std::uint64_t seed, std::uint64_t domain, std::uint64_t a, std::uint64_t b = 0) {
  return Philox(seed, (domain << 56) | (a << 28) | b);
}

}  // namespace difftree
