#ifndef AGSR_RNG_HPP
#define AGSR_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace agsr {

/// splitmix64 finalizer, used to derive independent stream seeds
/// (e.g. one per training epoch) from a base seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic random source. Wraps mt19937_64 (whose raw output
/// sequence is fixed by the standard) and maps to floats/indices with
/// explicit arithmetic, so results are reproducible across platforms.
/// Distribution adaptors from <random> are avoided on purpose: their
/// output is implementation defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }

    /// Standard normal via Box-Muller. Draws two words per call.
    double gaussian() {
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Uniform index in [0, n). Multiply-shift mapping.
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Fisher-Yates shuffle.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

} // namespace agsr

#endif // AGSR_RNG_HPP
