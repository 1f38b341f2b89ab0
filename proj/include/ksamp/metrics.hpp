#pragma once

#include <vector>

#include "ksamp/complex_image.hpp"

namespace ksamp {

struct MetricsRecord {
    double nrmse = 0.0;
    double ssim = 0.0;
};

// l2 error of |recon| against |truth|, normalized by || |truth| ||_2.
// Rejects zero-norm truth.
double nrmse(const ComplexImage& recon, const ComplexImage& truth);

// Mean local SSIM of |recon| against |truth|: 11x11 Gaussian window,
// sigma 1.5, K1=0.01, K2=0.03, dynamic range = max |truth|. Borders use
// symmetric edge padding, which also covers images smaller than the window.
double ssim(const ComplexImage& recon, const ComplexImage& truth);

// SSIM core on real-valued buffers (the post-modulus path above, shared with
// the differentiable reconstruction loss).
double ssim_real(const std::vector<double>& a, const std::vector<double>& b, int h, int w,
                 double dynamic_range);

// d ssim_real / d a, same Gaussian-window formulation. Written for the loss
// gradient; kept next to ssim_real so the two stay in lockstep.
std::vector<double> ssim_real_grad(const std::vector<double>& a, const std::vector<double>& b,
                                   int h, int w, double dynamic_range);

}  // namespace ksamp
