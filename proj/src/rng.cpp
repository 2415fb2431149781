#include "gossipq/rng.hpp"

#include <random>

namespace gq {

Rng Rng::split(std::uint64_t stream) const {
  return Rng(FromKey{}, mix(key_ ^ mix(stream + 0x243f6a8885a308d3ULL)));
}

Rng Rng::split(std::string_view name) const {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return split(h);
}

std::uint64_t Rng::below(std::uint64_t n) {
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(*this);
}

}  // namespace gq
