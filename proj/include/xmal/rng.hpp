#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "xmal/types.hpp"

namespace xmal {

// Deterministic random source. std::mt19937_64 has a fully specified output
// sequence, and every derived draw below is implemented by hand, so a given
// seed produces the same stream on every platform and standard library.
// (std::uniform_*_distribution and std::shuffle are implementation-defined
// and must not be used anywhere reproducibility matters.)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1), 53 mantissa bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller with a cached spare.
  double normal(double mean = 0.0, double stddev = 1.0);

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::size_t below(std::size_t n);

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  // Matrices are filled row-major so draw order is part of the contract.
  Matrix normal_matrix(Index rows, Index cols, double stddev = 1.0);
  Matrix uniform_matrix(Index rows, Index cols, double lo, double hi);
  Vector normal_vector(Index size, double stddev = 1.0);

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace xmal
