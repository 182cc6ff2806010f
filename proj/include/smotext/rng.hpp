#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace smotext {

/// FNV-1a 64-bit hash over raw bytes.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Counter-free PRNG (Steele/Lea/Vigna splitmix64). Chosen over the std
/// engines+distributions because every draw here must be bit-identical
/// across platforms and standard library versions.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Unbiased uniform integer in [0, n). Lemire's multiply-shift with
  /// rejection. n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      std::uint64_t t = (0 - n) % n;
      while (lo < t) {
        m = static_cast<unsigned __int128>(next()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  std::uint64_t state_;
};

/// Derive an independent stream from (seed, domain tag, key, index).
/// Streams derived this way are the unit of parallelism: work items that
/// own distinct (tag, key, index) triples can run in any order without
/// changing any draw.
inline SplitMix64 derive_stream(std::uint64_t seed, std::string_view tag,
                                std::string_view key, std::uint64_t index) {
  std::uint64_t h = fnv1a64(tag);
  h = fnv1a64(key, h);
  for (int shift = 0; shift < 64; shift += 8) {
    unsigned char b[2] = {static_cast<unsigned char>((seed >> shift) & 0xff),
                          static_cast<unsigned char>((index >> shift) & 0xff)};
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(b), 2), h);
  }
  return SplitMix64(h);
}

/// Fisher-Yates shuffle driven by an explicit stream.
template <typename T>
void seeded_shuffle(std::vector<T>& v, SplitMix64& rng) {
  if (v.size() < 2) return;
  for (std::size_t i = v.size() - 1; i > 0; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
    using std::swap;
    swap(v[i], v[j]);
  }
}

}  // namespace smotext
