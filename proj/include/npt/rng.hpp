#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace npt {

// splitmix64 finalizer, used to fold seeds and stream tags into engine states.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream salts keep unrelated draws on disjoint sub-streams of one run seed,
// so results do not depend on evaluation order or scheduling.
enum class Stream : std::uint64_t {
  Splits = 1,
  Init = 2,
  Permute = 3,
  Gaussian = 4,
  ErRewire = 5,
  RandomScore = 6,
  Score = 7,
  SbmEdges = 8,
  SbmFeatures = 9,
  Pairing = 10,
  SeedLoop = 11,
  Instance = 12,
};

class Rng {
 public:
  explicit Rng(std::uint64_t state) : eng_(state) {}

  std::uint64_t next_u64() { return eng_(); }

  // Unbiased integer in [0, n) via rejection; n must be >= 1.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = eng_();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; second value of each pair is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

namespace detail {
inline void fold(std::uint64_t& h, std::uint64_t tag) { h = mix64(h ^ mix64(tag)); }
}  // namespace detail

inline Rng substream(std::uint64_t seed, Stream salt, std::uint64_t a = 0,
                     std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = mix64(seed);
  detail::fold(h, static_cast<std::uint64_t>(salt));
  detail::fold(h, a);
  detail::fold(h, b);
  detail::fold(h, c);
  return Rng(h);
}

}  // namespace npt
