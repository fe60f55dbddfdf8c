#pragma once

#include <cstdint>
#include <random>

namespace iptwmi {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Seeded random stream. A (seed, stream_id) pair always yields the same
// sequence; replications use stream_id = replication index.
class RngStream {
 public:
  RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id) {
    std::uint64_t a = detail::splitmix64(seed ^ 0x6a09e667f3bcc908ULL);
    std::uint64_t b = detail::splitmix64(a ^ detail::splitmix64(stream_id + 0x3c6ef372fe94f82bULL));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Independent child stream, a pure function of (seed, stream_id, k).
  RngStream substream(std::uint64_t k) const {
    std::uint64_t key = detail::splitmix64(seed_ ^ detail::splitmix64(stream_id_ ^ 0xa54ff53a5f1d36f1ULL));
    return RngStream(key, detail::splitmix64(k + 0x510e527fade682d1ULL));
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal() { return normal_(engine_); }
  bool bernoulli(double p) { return uniform() < p; }
  double chi_squared(double df) { return std::chi_squared_distribution<double>(df)(engine_); }

  // Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace iptwmi
