#pragma once
// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// Stream layout: key = 64-bit seed, counter words (c2,c3) = 64-bit stream id,
// (c0,c1) = block index.  Every matrix, field vector and auxiliary normal
// vector gets its own stream id, so draws do not depend on thread scheduling.

#include <array>
#include <cstdint>
#include <limits>

namespace ssk {

enum class Stream : std::uint32_t {
  matrix = 1,    // off-diagonal g_ij of M
  diagonal = 2,  // g_ii completing H
  field = 3,     // uniform field direction
  aux = 4,       // synthetic g_i, tridiagonal GOE models, Monte Carlo draws
};

class Philox {
 public:
  using result_type = std::uint64_t;

  Philox(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}
  Philox(std::uint64_t seed, Stream kind, std::uint32_t index = 0) noexcept
      : Philox(seed, (static_cast<std::uint64_t>(kind) << 32) | index) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (pos_ == 2) {
      refill();
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  void discard(std::uint64_t n) noexcept {
    while (n--) (*this)();
  }

 private:
  static constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  static constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;

  void refill() noexcept {
    std::array<std::uint32_t, 4> c{static_cast<std::uint32_t>(block_),
                                   static_cast<std::uint32_t>(block_ >> 32),
                                   static_cast<std::uint32_t>(stream_),
                                   static_cast<std::uint32_t>(stream_ >> 32)};
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int r = 0; r < 10; ++r) {
      const std::uint64_t p0 = std::uint64_t{M0} * c[0];
      const std::uint64_t p1 = std::uint64_t{M1} * c[2];
      c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k0, static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k1, static_cast<std::uint32_t>(p0)};
      k0 += W0;
      k1 += W1;
    }
    ++block_;
    buf_[0] = (std::uint64_t{c[1]} << 32) | c[0];
    buf_[1] = (std::uint64_t{c[3]} << 32) | c[2];
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buf_{};
  int pos_ = 2;
};

// seed_i = splitmix64 finalizer applied to seed_base + (i+1)*golden.
constexpr std::uint64_t replicate_seed(std::uint64_t seed_base, std::uint64_t i) noexcept {
  std::uint64_t z = seed_base + (i + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace ssk
