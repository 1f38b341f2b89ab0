#pragma once

#include <complex>
#include <vector>

#include "ksamp/errors.hpp"

namespace ksamp {

using cplx = std::complex<double>;

// 2D complex field, row-major. Holds either an image frame or its spectrum;
// spectra are kept in DFT bin order (DC at bin 0). Frequency-domain indices
// exposed to users are centered (DC at floor(n/2)); centered_to_dft /
// dft_to_centered below own that mapping.
struct ComplexImage {
    int height = 0;
    int width = 0;
    std::vector<cplx> data;

    ComplexImage() = default;
    ComplexImage(int h, int w) : height(h), width(w), data(std::size_t(h) * std::size_t(w)) {
        require(h >= 1 && w >= 1, ErrorKind::InvalidArgument, "ComplexImage: dimensions must be >= 1");
    }

    cplx& at(int r, int c) { return data[std::size_t(r) * width + c]; }
    const cplx& at(int r, int c) const { return data[std::size_t(r) * width + c]; }

    std::size_t size() const { return data.size(); }

    bool same_shape(const ComplexImage& o) const { return height == o.height && width == o.width; }
};

// Centered index c (DC at floor(n/2)) of DFT bin k, and back.
inline int dft_to_centered(int k, int n) { return (k + n / 2) % n; }
inline int centered_to_dft(int c, int n) { return (c + (n + 1) / 2) % n; }

double l2_norm(const ComplexImage& img);
bool all_finite(const ComplexImage& img);

// Per-pixel complex modulus.
std::vector<double> magnitude(const ComplexImage& img);

}  // namespace ksamp
