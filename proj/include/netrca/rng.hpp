#pragma once

#include <cstdint>
#include <random>

namespace netrca {

/**
 * Seedable generator with a fully specified output sequence ("netrca-rng v1").
 *
 * The engine is std::mt19937_64, whose sequence is fixed by the C++ standard.
 * The standard distributions are implementation-defined, so every transform
 * used by the library is defined here instead:
 *   - uniform01():  (next() >> 11) * 2^-53, in [0, 1)
 *   - uniform(a,b): a + (b - a) * uniform01()
 *   - index(n):     rejection sampling of next() below the largest multiple of n, then % n
 *   - normal():     Box-Muller cosine branch, u1 = 1 - uniform01(), u2 = uniform01(),
 *                   sqrt(-2 ln u1) * cos(2 pi u2); one normal per two draws
 *   - derive(seed, stream): splitmix64(seed + 0x9E3779B97F4A7C15 * (stream + 1))
 */
class Rng {
public:
    static constexpr int kVersion = 1;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    double uniform01();
    double uniform(double lo, double hi);
    std::size_t index(std::size_t n);
    double normal();

    /// Seed for an independent sub-stream, so adding draws to one stage never
    /// shifts the sequence seen by another.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

private:
    std::mt19937_64 engine_;
};

}  // namespace netrca
