#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace hevrl {

// Counter-style splitmix64 stream with a Box-Muller gaussian cache.
// State is two words plus the cached spare, so it serializes exactly and
// reruns are bit-identical on any platform.
class Rng {
 public:
  Rng() = default;
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // [0, 1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // integer in [0, n)
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  double gaussian();

  std::uint64_t state() const { return state_; }
  bool has_spare() const { return has_spare_; }
  double spare() const { return spare_; }
  void restore(std::uint64_t state, bool has_spare, double spare) {
    state_ = state;
    has_spare_ = has_spare;
    spare_ = spare;
  }

 private:
  std::uint64_t state_ = 0x9E3779B97F4A7C15ull;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Named substream so components (env, policy-init, attack, eval, ...) never
// share draws. FNV-1a over the name folded into the master seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);

}  // namespace hevrl
