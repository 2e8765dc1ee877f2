#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "betrun/common.hpp"

namespace betrun {

// splitmix64 finalizer; bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

std::uint64_t fnv1a64(std::string_view s);

// Counter-based splittable generator (splitmix64). Fully specified here so
// that streams are identical on every platform and compiler.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();

  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit();

  /// Uniform integer in [0, bound); bound must be >= 1.
  std::uint64_t next_below(std::uint64_t bound);

  std::size_t next_index(std::size_t bound);

  /// Child generator with a decorrelated state.
  SplitMix64 split();

 private:
  std::uint64_t state_;
};

// Deterministic per-instance seeds. The same (master seed, subject,
// repetition, slot) always yields the same seed, and distinct slots of one
// run always get distinct seeds.
class SeedSource {
 public:
  explicit SeedSource(std::uint64_t master_seed) : master_(master_seed) {}

  std::uint64_t master() const { return master_; }

  std::uint64_t instance_seed(const SubjectId& subject, int repetition,
                              int slot) const;

 private:
  std::uint64_t master_;
};

}  // namespace betrun
