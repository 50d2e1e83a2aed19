#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hoifkit {

using Engine = std::mt19937_64;

/// 64-bit FNV-1a; used for purpose tags and config hashes.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// SplitMix64 step; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Independent engine for (master_seed, rep, purpose). Streams for different
/// purposes never share draws, so adding a consumer leaves others unchanged.
Engine make_engine(std::uint64_t master_seed, std::uint64_t rep, std::string_view purpose);

/// Standard normal draw by Marsaglia's polar method (portable across standard libraries).
double standard_normal(Engine& eng);
/// Uniform on [0,1) with 53 random bits.
double uniform01(Engine& eng);
/// Uniform integer in [0, bound) without modulo bias.
std::uint64_t uniform_below(Engine& eng, std::uint64_t bound);

}  // namespace hoifkit
