#include "ewlab/rng.hpp"

#include <cmath>
#include <numbers>

#include "ewlab/error.hpp"

namespace ewlab {

namespace {

// splitmix64 finalizer; good avalanche for cheap stream derivation.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  // FNV-1a over the label, folded into the master seed.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : label) {
    h = (h ^ c) * 0x100000001b3ull;
  }
  return mix(master ^ mix(h));
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index) {
  return mix(derive_seed(master, label) ^ mix(index + 0x51ed2701ull));
}

double Rng::gaussian() {
  // Box-Muller without caching the second value, to keep the stream
  // state equal to the engine state.
  double u1 = 1.0 - uniform();  // (0, 1]
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) fail(ErrorCode::ConfigInvalid, "uniform_int over empty range");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n,
                                                         std::size_t k) {
  if (k > n) {
    fail(ErrorCode::InsufficientData, "sample_without_replacement: k > n");
  }
  // Partial Fisher-Yates over an index pool.
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(uniform_int(n - i));
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

}  // namespace ewlab
