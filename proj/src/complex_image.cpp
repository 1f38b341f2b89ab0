#include "ksamp/complex_image.hpp"

#include <cmath>

namespace ksamp {

double l2_norm(const ComplexImage& img) {
    double s = 0.0;
    for (const auto& z : img.data) s += std::norm(z);
    return std::sqrt(s);
}

bool all_finite(const ComplexImage& img) {
    for (const auto& z : img.data) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
    return true;
}

std::vector<double> magnitude(const ComplexImage& img) {
    std::vector<double> out(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = std::abs(img.data[i]);
    return out;
}

}  // namespace ksamp
