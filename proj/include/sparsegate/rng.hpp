#pragma once

#include <array>
#include <cstdint>

namespace sparsegate {

// Deterministic PRNG: xoshiro256++ 1.0 (Blackman & Vigna), state expanded
// from the seed with splitmix64. Pure integer arithmetic, so identical seeds
// give byte-identical streams on every platform.
//
// Not thread-safe; give each thread its own instance (see stream()).
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform on the open interval (0,1). Endpoints are excluded by
    // construction: the 53-bit mantissa draw is offset by half an ulp, which
    // keeps log() and log(-log()) finite.
    double uniform();

    // Standard Gumbel(0,1) draw: -log(-log(u)).
    double gumbel();

    // Standard normal via Box-Muller. Uses two uniforms per call and keeps
    // no cached state, so the stream position is easy to reason about.
    double normal();

    std::uint64_t seed() const { return seed_; }

    // Independent deterministic substream. Streams with different salts are
    // decorrelated; used to keep e.g. batch shuffling and gate noise
    // separate so that consuming one does not shift the other.
    Rng stream(std::uint64_t salt) const;

private:
    std::uint64_t seed_;
    std::array<std::uint64_t, 4> state_;
};

// The Gumbel transform on its own, for callers that already have a uniform.
double gumbel_from_uniform(double u);

}  // namespace sparsegate
