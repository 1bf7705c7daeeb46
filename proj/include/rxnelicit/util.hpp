#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace rxnelicit {

// 64-bit FNV-1a. Used wherever a stable, platform-independent hash is
// needed (fingerprint bits, hash embeddings, model fingerprints).
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// murmur3 finalizer. FNV-1a diffuses poorly into its low bits, so hashes
// are mixed before being folded into a bucket by modulo.
constexpr std::uint64_t mix64(std::uint64_t h) {
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ULL;
  h ^= h >> 33;
  return h;
}

// Stable bucket hash: mix64(fnv1a64(bytes)).
constexpr std::uint64_t bucket_hash(std::string_view bytes) {
  return mix64(fnv1a64(bytes));
}

std::string hex64(std::uint64_t v);

std::string_view trim(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);

// Seeded generator with distribution helpers whose output does not depend
// on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) { }

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  // Uniform real in [0, 1).
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double normal();

  template <class T>
  void shuffle(std::vector<T> &v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rxnelicit
