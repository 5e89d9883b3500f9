#ifndef EXSEL_RNG_HPP
#define EXSEL_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace exsel {

// Derives an independent sub-stream seed from a master seed and a short tag,
// so one experiment seed deterministically controls several unrelated random
// decisions (pool draw, strategy noise, policy init) without coupling them.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag);

// Seeded random source. mt19937_64 output is pinned by the standard, and all
// derived quantities (doubles, bounded ints, normals) are computed here rather
// than through std distributions, whose algorithms are implementation-defined.
// Same seed, same call sequence -> same values on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), rejection-sampled to avoid modulo bias. n >= 1.
  std::uint64_t below(std::uint64_t n);

  // Standard normal via Box-Muller (pair cached).
  double normal();

  // k distinct indices drawn uniformly from [0, n), in draw order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace exsel

#endif  // EXSEL_RNG_HPP
