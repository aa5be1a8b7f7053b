#pragma once

// Counter-based, splittable pseudo-random streams.
//
// A stream is fully determined by its key (master seed, replicate, purpose,
// index, round), so draws never depend on the order in which other streams
// were consumed. This is what makes replicate fan-out reproducible under any
// worker count.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace dsgd {

enum class Purpose : std::uint64_t {
  network = 0x6e6574,   // "net"
  gradient = 0x67726164, // "grad"
  data = 0x64617461,
  graph = 0x67726170,
  probe = 0x70726f62,
  test = 0x74657374,
};

namespace detail {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) noexcept {
  return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

}  // namespace detail

struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  Purpose purpose = Purpose::test;
  std::uint64_t index = 0;
  std::uint64_t round = 0;

  constexpr std::uint64_t hash() const noexcept {
    std::uint64_t h = detail::mix64(seed + 0x243f6a8885a308d3ULL);
    h = detail::combine(h, replicate);
    h = detail::combine(h, static_cast<std::uint64_t>(purpose));
    h = detail::combine(h, index);
    h = detail::combine(h, round);
    return h;
  }
};

/// SplitMix64 sequence started from a hashed key. Cheap to construct, so a
/// fresh stream per (node, round) costs a handful of multiplies.
class Stream {
 public:
  constexpr explicit Stream(const StreamKey& key) noexcept : state_(key.hash()) {}
  constexpr explicit Stream(std::uint64_t raw_state) noexcept : state_(raw_state) {}

  constexpr std::uint64_t next_u64() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return detail::mix64(state_);
  }

  /// Uniform on [0, 1).
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer on {0, ..., n-1} (Lemire's multiply-shift with rejection).
  std::uint64_t uniform_index(std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Standard normal via Box-Muller. Both variates are used; the spare is
  /// cached so the sequence stays a pure function of the key.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Streams owned by one replicate of one run. Network draws are keyed by
/// round only; node i's gradient sample by (i, round).
struct ReplicateStreams {
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;

  Stream network(std::uint64_t round) const noexcept {
    return Stream(StreamKey{seed, replicate, Purpose::network, 0, round});
  }
  Stream gradient(std::uint64_t node, std::uint64_t round) const noexcept {
    return Stream(StreamKey{seed, replicate, Purpose::gradient, node, round});
  }
};

}  // namespace dsgd
