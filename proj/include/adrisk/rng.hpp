#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace adrisk::rng {

using Engine = std::mt19937_64;

// splitmix64 finalizer; used to derive independent stream seeds from a
// master seed plus a tag, so concurrent consumers never share a stream.
inline std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t tag) {
  return mix(mix(seed) ^ tag);
}

inline std::uint64_t tag_of(std::string_view name) {
  // FNV-1a
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

inline Engine make_engine(std::uint64_t seed, std::string_view stream,
                          std::uint64_t index = 0) {
  return Engine(mix(mix(seed, tag_of(stream)), index));
}

// The std:: distributions are implementation-defined; these draws are pinned
// so outputs are reproducible across standard libraries.
inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;  // [0,1)
}

inline double uniform(Engine& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(eng);
}

inline std::uint64_t below(Engine& eng, std::uint64_t n) {
  // rejection sampling; unbiased for any n >= 1
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = eng();
  } while (x >= limit);
  return x % n;
}

inline int uniform_int(Engine& eng, int n) {
  return static_cast<int>(below(eng, static_cast<std::uint64_t>(n)));
}

inline double gaussian(Engine& eng) {
  // Box-Muller, no cached spare so the draw count per sample is fixed.
  const double u1 = 1.0 - uniform01(eng);  // (0,1]
  const double u2 = uniform01(eng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline double gaussian(Engine& eng, double mean, double stddev) {
  return mean + stddev * gaussian(eng);
}

inline bool bernoulli(Engine& eng, double p) { return uniform01(eng) < p; }

template <typename T>
void shuffle(std::vector<T>& v, Engine& eng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = below(eng, i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace adrisk::rng
