#ifndef POWALLOC_RNG_HPP
#define POWALLOC_RNG_HPP

#include <cmath>
#include <cstdint>

namespace powalloc {

namespace detail {

// SplitMix64 finalizer. Bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based generator: output i of stream (seed, stream) is a pure
/// function of (seed, stream, i). No global state, identical sequences on
/// every platform, and derived streams are independent by construction.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : base_(detail::mix64(seed ^ detail::mix64(stream ^ 0xa5a5a5a5a5a5a5a5ULL))) {}

  /// Independent generator for a sub-stream (restart index, batch index, ...).
  CounterRng derive(std::uint64_t stream) const { return CounterRng(base_, stream + 1); }

  std::uint64_t next_u64() { return detail::mix64(base_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform on (0, 1]: 53-bit mantissa, never exactly zero.
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal deviate by the Box-Muller transform (pairs cached).
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace powalloc

#endif  // POWALLOC_RNG_HPP
