#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace biasvote {

/// Seeded generator used for every random choice in the toolkit.
///
/// Wraps std::mt19937_64, whose output sequence is fixed by the C++ standard.
/// Bounded draws use rejection sampling on the raw 64-bit output instead of
/// std::uniform_int_distribution (whose algorithm is implementation-defined),
/// so a given seed yields the same permutation on every platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be nonzero.
  std::uint64_t uniform_below(std::uint64_t bound);

  /// In-place Fisher-Yates shuffle, walking from the last element down.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

  /// k distinct indices from [0, n), returned in ascending order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

private:
  std::mt19937_64 engine_;
};

/// Derives an independent sub-seed for a named stage of a pipeline.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace biasvote
