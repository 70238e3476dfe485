#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace cagan {

// Every random draw in the library comes from one of these, seeded explicitly.
using Rng = std::mt19937_64;

inline std::string serialize_rng(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

inline Rng deserialize_rng(const std::string& state) {
  Rng rng;
  std::istringstream in(state);
  in >> rng;
  return rng;
}

// Derives an independent stream for a named purpose from a run seed.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

}  // namespace cagan
