#pragma once

#include <cstdint>
#include <vector>

#include "ksamp/complex_image.hpp"
#include "ksamp/rng.hpp"

namespace ksamp {

// Binary selection of columns of the subsampled k-space dimension. Bits are
// stored in centered frequency order (DC at floor(size/2)); apply_mask maps
// them onto DFT bin order internally.
struct Mask {
    int size = 0;
    std::vector<std::uint8_t> bits;
    int base_count = 0;

    Mask() = default;
    Mask(int n, int base) : size(n), bits(std::size_t(n), 0), base_count(base) {}

    bool is_set(int centered_index) const { return bits[std::size_t(centered_index)] != 0; }
    void set(int centered_index) { bits[std::size_t(centered_index)] = 1; }

    int popcount() const {
        int c = 0;
        for (auto b : bits) c += b != 0;
        return c;
    }

    bool operator==(const Mask& o) const = default;
};

// Zero out spectrum columns whose centered bit is 0. spec is in DFT bin
// order. Idempotent projection.
ComplexImage apply_mask(const ComplexImage& spec, const Mask& mask);

// The `budget` bins nearest DC in centered coordinates, ties toward the
// lower index.
Mask make_low_frequency_mask(int n, int budget);

// base `b` bins nearest DC plus `s` bins drawn uniformly without replacement
// from the rest. Deterministic per seed.
Mask make_uniform_random_mask(int n, int b, int s, std::uint64_t seed);

// base `b` bins nearest DC plus the `s` remaining bins with the largest
// summed spectral column energy over the training frames, ties toward the
// lower centered index.
Mask make_energy_mask(int n, int b, int s, const std::vector<ComplexImage>& training_frames);

}  // namespace ksamp
