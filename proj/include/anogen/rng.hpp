#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace anogen {

// All randomness in the project flows from one root seed through this
// derivation: derive(root, purpose, id) mixes the purpose tag and an
// integer id into a child seed with FNV-1a + splitmix finalization.
// The same (root, purpose, id) always yields the same stream.
inline std::uint64_t mix_seed(std::uint64_t state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose,
                                 std::uint64_t id = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ root;
  for (char c : purpose) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  h ^= id + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return mix_seed(h);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t root, std::string_view purpose,
                    std::uint64_t id = 0) {
  return Rng(derive_seed(root, purpose, id));
}

// Canonical 53-bit uniform in [0,1). Every draw is an exact multiple of
// 2^-53, which keeps affine identities on sampled values exact in
// double arithmetic.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi_inclusive) {
  std::uniform_int_distribution<int> d(lo, hi_inclusive);
  return d(rng);
}

}  // namespace anogen
