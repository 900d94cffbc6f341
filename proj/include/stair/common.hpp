#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stair {

// Deterministic 64-bit mixer (splitmix64 finalizer). Used everywhere a
// sub-seed is derived from a base seed plus a tag, e.g. per-horizon seeds
// seed_h = mix_seed(seed, horizon) and per-epoch shuffle seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(seed, a), b);
}

// FNV-1a over bytes; stable across platforms, used for config hashes.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Dense batch of per-channel sequences, laid out [channel][sample][time] so
// each channel plane is a contiguous (batch x len) row-major matrix. This is
// the canonical layout for model inputs (len = lookback) and outputs
// (len = horizon); keeping one layout everywhere makes metric accumulation
// order identical across shared and per-channel evaluation paths.
template <class T>
struct SeqBatch {
  std::size_t channels = 0;
  std::size_t batch = 0;
  std::size_t len = 0;
  std::vector<T> data;

  SeqBatch() = default;
  SeqBatch(std::size_t c, std::size_t b, std::size_t l)
      : channels(c), batch(b), len(l), data(c * b * l, T(0)) {}

  std::size_t size() const { return channels * batch * len; }

  T* plane(std::size_t c) { return data.data() + c * batch * len; }
  const T* plane(std::size_t c) const { return data.data() + c * batch * len; }

  T* row(std::size_t c, std::size_t b) { return plane(c) + b * len; }
  const T* row(std::size_t c, std::size_t b) const { return plane(c) + b * len; }

  T& at(std::size_t c, std::size_t b, std::size_t t) { return data[(c * batch + b) * len + t]; }
  const T& at(std::size_t c, std::size_t b, std::size_t t) const {
    return data[(c * batch + b) * len + t];
  }

  void require_shape(std::size_t c, std::size_t b, std::size_t l, const char* what) const {
    if (channels != c || batch != b || len != l) {
      throw std::invalid_argument(std::string(what) + ": shape mismatch, got (" +
                                  std::to_string(channels) + "," + std::to_string(batch) + "," +
                                  std::to_string(len) + ") expected (" + std::to_string(c) + "," +
                                  std::to_string(b) + "," + std::to_string(l) + ")");
    }
  }
};

}  // namespace stair
