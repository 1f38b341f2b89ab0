#include "ksamp/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ksamp/fft.hpp"

namespace ksamp {
namespace {

// Centered indices sorted by distance to DC, ties toward the lower index.
std::vector<int> bins_by_dc_distance(int n) {
    const int dc = n / 2;
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [dc](int a, int b) {
        return std::abs(a - dc) < std::abs(b - dc);
    });
    return idx;
}

Mask base_mask(int n, int b) {
    Mask m(n, b);
    auto order = bins_by_dc_distance(n);
    for (int i = 0; i < b; ++i) m.set(order[std::size_t(i)]);
    return m;
}

}  // namespace

ComplexImage apply_mask(const ComplexImage& spec, const Mask& mask) {
    require(mask.size == spec.width, ErrorKind::InvalidArgument,
            "apply_mask: mask size does not match spectrum width");
    ComplexImage out(spec.height, spec.width);
    for (int k = 0; k < spec.width; ++k) {
        if (!mask.is_set(dft_to_centered(k, spec.width))) continue;
        for (int r = 0; r < spec.height; ++r) out.at(r, k) = spec.at(r, k);
    }
    return out;
}

Mask make_low_frequency_mask(int n, int budget) {
    require(budget >= 0 && budget <= n, ErrorKind::InvalidArgument,
            "make_low_frequency_mask: budget exceeds mask size");
    return base_mask(n, budget);
}

Mask make_uniform_random_mask(int n, int b, int s, std::uint64_t seed) {
    require(b >= 0 && s >= 0 && b + s <= n, ErrorKind::InvalidArgument,
            "make_uniform_random_mask: b + s exceeds mask size");
    Mask m = base_mask(n, b);
    std::vector<int> candidates;
    for (int j = 0; j < n; ++j) {
        if (!m.is_set(j)) candidates.push_back(j);
    }
    Rng rng(seed);
    for (int pick = 0; pick < s; ++pick) {
        std::size_t j = std::size_t(rng.uniform_below(candidates.size()));
        m.set(candidates[j]);
        candidates.erase(candidates.begin() + std::ptrdiff_t(j));
    }
    return m;
}

Mask make_energy_mask(int n, int b, int s, const std::vector<ComplexImage>& training_frames) {
    require(b >= 0 && s >= 0 && b + s <= n, ErrorKind::InvalidArgument,
            "make_energy_mask: b + s exceeds mask size");
    require(!training_frames.empty(), ErrorKind::InvalidArgument,
            "make_energy_mask: empty training set");

    std::vector<double> energy(std::size_t(n), 0.0);  // indexed by centered bin
    for (const auto& frame : training_frames) {
        require(frame.width == n, ErrorKind::InvalidArgument,
                "make_energy_mask: frame width does not match mask size");
        ComplexImage spec = fft2(frame);
        for (int k = 0; k < n; ++k) {
            double col = 0.0;
            for (int r = 0; r < spec.height; ++r) col += std::norm(spec.at(r, k));
            energy[std::size_t(dft_to_centered(k, n))] += col;
        }
    }

    Mask m = base_mask(n, b);
    std::vector<int> candidates;
    for (int j = 0; j < n; ++j) {
        if (!m.is_set(j)) candidates.push_back(j);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int c) {
        return energy[std::size_t(a)] > energy[std::size_t(c)];
    });
    for (int i = 0; i < s; ++i) m.set(candidates[std::size_t(i)]);
    return m;
}

}  // namespace ksamp
