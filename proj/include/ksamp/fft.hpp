#pragma once

#include "ksamp/complex_image.hpp"

namespace ksamp {

// Unitary 2D DFT (1/sqrt(n) scaling per dimension): ifft2(fft2(x)) == x and
// the transform preserves the l2 norm. Rejects non-finite input.
ComplexImage fft2(const ComplexImage& img);
ComplexImage ifft2(const ComplexImage& spec);

}  // namespace ksamp
