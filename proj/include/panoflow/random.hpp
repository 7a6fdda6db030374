#pragma once

#include <cstdint>

namespace panoflow {

/// SplitMix64 step. Used instead of library engines so that seeded output is
/// identical on every platform and standard library.
inline std::uint64_t splitmix64(std::uint64_t& state) noexcept
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double unit_double(std::uint64_t bits) noexcept
{
    return double(bits >> 11) * 0x1.0p-53;
}

/// Stateless hash of a seed and two lattice coordinates.
inline std::uint64_t lattice_hash(std::uint64_t seed, std::int64_t i, std::int64_t j) noexcept
{
    std::uint64_t s = seed ^ (std::uint64_t(i) * 0xd1b54a32d192ed03ull) ^ (std::uint64_t(j) * 0xabc98388fb8fac03ull);
    return splitmix64(s);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept : m_state(seed) {}

    std::uint64_t next() noexcept { return splitmix64(m_state); }
    double uniform() noexcept { return unit_double(next()); }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    int below(int n) noexcept { return int(next() % std::uint64_t(n)); }

private:
    std::uint64_t m_state;
};

}
