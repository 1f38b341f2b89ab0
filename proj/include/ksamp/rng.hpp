#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ksamp {

// Seeded generator with hand-pinned distributions. std::mt19937_64 output is
// specified bit-exactly by the standard; the std:: distributions are not, so
// reproducible runs go through these helpers instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform integer in [0, bound), bound >= 1. Rejection sampling keeps it unbiased.
    std::uint64_t uniform_below(std::uint64_t bound) {
        const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % bound;
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % bound;
    }

    int uniform_int(int lo, int hi) {  // inclusive range
        return lo + int(uniform_below(std::uint64_t(hi - lo + 1)));
    }

    // Uniform double in [0, 1) with 53-bit resolution.
    double uniform01() { return double(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = std::size_t(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace ksamp
