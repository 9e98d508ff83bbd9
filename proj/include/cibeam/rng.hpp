#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace cibeam::rng {

/// Independent substreams drawn by a generator. Each (seed, trial, stream)
/// triple keys a distinct counter-based sequence, so trials can be evaluated
/// in any order (or in parallel) and still produce identical draws.
enum class Stream : std::uint64_t {
  channels = 1,
  symbols = 2,
  noise = 3,
  csi_error = 4,
};

namespace detail {

constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

}  // namespace detail

/// Counter-based uniform/Gaussian source (SplitMix64 output function).
/// The i-th output is a pure function of (key, i); no call-order coupling.
class SubStream {
 public:
  SubStream(std::uint64_t seed, std::uint64_t trial, Stream stream) {
    std::uint64_t k = detail::mix(seed + detail::golden);
    k = detail::mix(k ^ (trial * 0xd1342543de82ef95ULL));
    k = detail::mix(k ^ (static_cast<std::uint64_t>(stream) * 0xaf251af3b0f025b5ULL));
    key_ = k;
  }

  std::uint64_t next_u64() { return detail::mix(key_ + (++counter_) * detail::golden); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1]; safe as a log() argument.
  double uniform_open() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; pairs are cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Circularly symmetric complex Gaussian, unit variance (1/2 per part).
  std::complex<double> complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re * 0.70710678118654752440, im * 0.70710678118654752440};
  }

  /// Integer in [0, n) from one uniform draw.
  int below(int n) { return static_cast<int>(uniform() * static_cast<double>(n)); }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace cibeam::rng
