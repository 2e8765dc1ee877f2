#include "betrun/rng.hpp"

namespace betrun {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t SplitMix64::next() {
  state_ += kGolden;
  return mix64(state_);
}

double SplitMix64::next_unit() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t SplitMix64::next_below(std::uint64_t bound) {
  return next() % bound;
}

std::size_t SplitMix64::next_index(std::size_t bound) {
  return static_cast<std::size_t>(next_below(static_cast<std::uint64_t>(bound)));
}

SplitMix64 SplitMix64::split() {
  return SplitMix64(next() ^ 0x3C6EF372FE94F82AULL);
}

std::uint64_t SeedSource::instance_seed(const SubjectId& subject,
                                        int repetition, int slot) const {
  std::uint64_t h = mix64(master_ ^ fnv1a64(subject));
  h = mix64(h ^ (kGolden * (static_cast<std::uint64_t>(repetition) + 1)));
  // (slot+1)*kGolden is injective mod 2^64 (odd multiplier) and mix64 is a
  // bijection, so distinct slots always map to distinct seeds.
  return mix64(h ^ (kGolden * (static_cast<std::uint64_t>(slot) + 1)));
}

}  // namespace betrun
