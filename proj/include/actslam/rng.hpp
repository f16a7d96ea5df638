#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>

namespace actslam {

/// Seeded random source with independent named substreams, so that e.g.
/// odometry noise and viewpoint sampling consume from separate sequences and
/// adding draws to one consumer never perturbs another. Identical seed plus
/// identical per-stream call sequences give identical outputs.
class RngStream {
 public:
  class Sub {
   public:
    explicit Sub(uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) {
      return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    /// std == 0 returns the mean without consuming engine state.
    double normal(double mean, double std) {
      if (std <= 0.0) return mean;
      return std::normal_distribution<double>(mean, std)(engine_);
    }
    /// Uniform integer in [0, n).
    uint64_t integer(uint64_t n) {
      return std::uniform_int_distribution<uint64_t>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

   private:
    std::mt19937_64 engine_;
  };

  explicit RngStream(uint64_t seed) : seed_(seed) {}

  /// Fetch (creating on first use) the substream for a consumer name.
  Sub& stream(std::string_view name) {
    auto it = subs_.find(std::string(name));
    if (it == subs_.end())
      it = subs_.emplace(std::string(name), Sub(substream_seed(name))).first;
    return it->second;
  }

  uint64_t seed() const { return seed_; }

 private:
  /// FNV-1a over the name, mixed with the master seed and finalized with a
  /// splitmix64 step so substream seeds are well separated.
  uint64_t substream_seed(std::string_view name) const {
    uint64_t h = 14695981039346656037ull;
    for (char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    uint64_t z = seed_ ^ h;
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t seed_;
  std::map<std::string, Sub, std::less<>> subs_;
};

}  // namespace actslam
