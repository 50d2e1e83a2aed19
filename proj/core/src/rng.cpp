#include "hoifkit/rng.hpp"

#include <cmath>

namespace hoifkit {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Engine make_engine(std::uint64_t master_seed, std::uint64_t rep, std::string_view purpose) {
  std::uint64_t state = master_seed;
  const std::uint64_t a = splitmix64(state);
  state ^= rep * 0xd1b54a32d192ed03ULL;
  const std::uint64_t b = splitmix64(state);
  state ^= fnv1a(purpose);
  const std::uint64_t c = splitmix64(state);
  const std::uint64_t d = splitmix64(state);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                    static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(d >> 32)};
  return Engine(seq);
}

double uniform01(Engine& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

std::uint64_t uniform_below(Engine& eng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % bound;
  std::uint64_t r;
  do {
    r = eng();
  } while (r >= limit);
  return r % bound;
}

double standard_normal(Engine& eng) {
  double u, v, s;
  do {
    u = 2.0 * uniform01(eng) - 1.0;
    v = 2.0 * uniform01(eng) - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  // The second variate is discarded to keep the engine state a pure function of draw count.
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

}  // namespace hoifkit
