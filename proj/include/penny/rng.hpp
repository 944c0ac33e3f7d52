// Portable seeded randomness.
//
// Every random stream in the library is a std::mt19937_64 (its output
// sequence is fixed by the C++ standard). Substreams are derived from a
// single 64-bit master seed with SplitMix64: stream k (k >= 0) is seeded
// with output number k + 1 of a SplitMix64 generator started at `master`. Doubles
// are built from the top 53 bits, so no std:: distribution (whose output is
// implementation-defined) is involved.
#pragma once

#include <cstdint>
#include <random>

namespace penny {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(master + stream * 0x9E3779B97F4A7C15ULL);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    Rng(std::uint64_t master, std::uint64_t stream) : engine_(substream_seed(master, stream)) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// +1 or -1 with equal probability.
    double sign() { return (engine_() >> 63) != 0 ? -1.0 : 1.0; }

    /// Uniform in [0, n), n > 0 (modulo reduction, bias below 2^-40 for n < 2^24).
    std::uint64_t below(std::uint64_t n) { return engine_() % n; }

  private:
    std::mt19937_64 engine_;
};

} // namespace penny
