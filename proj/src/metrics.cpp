#include "ksamp/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace ksamp {
namespace {

constexpr int kWindow = 11;
constexpr int kHalf = kWindow / 2;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

const std::array<double, kWindow>& gauss_kernel() {
    static const std::array<double, kWindow> k = [] {
        std::array<double, kWindow> g{};
        double sum = 0.0;
        for (int i = 0; i < kWindow; ++i) {
            double d = double(i - kHalf);
            g[std::size_t(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
            sum += g[std::size_t(i)];
        }
        for (auto& v : g) v /= sum;
        return g;
    }();
    return k;
}

// Symmetric edge padding: ...cba|abc...|cba... Folds until in range so it
// also works for images narrower than the window.
int reflect(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

// Separable Gaussian filter, x pass then y pass.
std::vector<double> gauss_filter(const std::vector<double>& f, int h, int w) {
    const auto& k = gauss_kernel();
    std::vector<double> tmp(f.size()), out(f.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int o = -kHalf; o <= kHalf; ++o)
                s += k[std::size_t(o + kHalf)] * f[std::size_t(y) * w + reflect(x + o, w)];
            tmp[std::size_t(y) * w + x] = s;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int o = -kHalf; o <= kHalf; ++o)
                s += k[std::size_t(o + kHalf)] * tmp[std::size_t(reflect(y + o, h)) * w + x];
            out[std::size_t(y) * w + x] = s;
        }
    }
    return out;
}

// Exact adjoint of gauss_filter (the padding makes the filter non-self-adjoint,
// so scatter instead of re-filtering).
std::vector<double> gauss_filter_adjoint(const std::vector<double>& g, int h, int w) {
    const auto& k = gauss_kernel();
    std::vector<double> tmp(g.size(), 0.0), out(g.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double v = g[std::size_t(y) * w + x];
            for (int o = -kHalf; o <= kHalf; ++o)
                tmp[std::size_t(reflect(y + o, h)) * w + x] += k[std::size_t(o + kHalf)] * v;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double v = tmp[std::size_t(y) * w + x];
            for (int o = -kHalf; o <= kHalf; ++o)
                out[std::size_t(y) * w + reflect(x + o, w)] += k[std::size_t(o + kHalf)] * v;
        }
    }
    return out;
}

struct SsimMaps {
    std::vector<double> mu_a, mu_b, s_aa, s_bb, s_ab;
    double c1 = 0.0, c2 = 0.0;
};

SsimMaps ssim_maps(const std::vector<double>& a, const std::vector<double>& b, int h, int w,
                   double dynamic_range) {
    const double range = dynamic_range > 0.0 ? dynamic_range : 1.0;
    SsimMaps m;
    m.c1 = (kK1 * range) * (kK1 * range);
    m.c2 = (kK2 * range) * (kK2 * range);
    std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    m.mu_a = gauss_filter(a, h, w);
    m.mu_b = gauss_filter(b, h, w);
    m.s_aa = gauss_filter(aa, h, w);
    m.s_bb = gauss_filter(bb, h, w);
    m.s_ab = gauss_filter(ab, h, w);
    return m;
}

}  // namespace

double ssim_real(const std::vector<double>& a, const std::vector<double>& b, int h, int w,
                 double dynamic_range) {
    require(a.size() == b.size() && a.size() == std::size_t(h) * std::size_t(w),
            ErrorKind::InvalidArgument, "ssim: shape mismatch");
    SsimMaps m = ssim_maps(a, b, h, w, dynamic_range);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double va = m.s_aa[i] - m.mu_a[i] * m.mu_a[i];
        double vb = m.s_bb[i] - m.mu_b[i] * m.mu_b[i];
        double cov = m.s_ab[i] - m.mu_a[i] * m.mu_b[i];
        double num = (2.0 * m.mu_a[i] * m.mu_b[i] + m.c1) * (2.0 * cov + m.c2);
        double den = (m.mu_a[i] * m.mu_a[i] + m.mu_b[i] * m.mu_b[i] + m.c1) * (va + vb + m.c2);
        acc += num / den;
    }
    return acc / double(a.size());
}

std::vector<double> ssim_real_grad(const std::vector<double>& a, const std::vector<double>& b,
                                   int h, int w, double dynamic_range) {
    require(a.size() == b.size() && a.size() == std::size_t(h) * std::size_t(w),
            ErrorKind::InvalidArgument, "ssim grad: shape mismatch");
    SsimMaps m = ssim_maps(a, b, h, w, dynamic_range);
    const std::size_t n = a.size();

    // Per-pixel partials of the local SSIM value with respect to the filtered
    // statistics (mu_a, sigma_aa, sigma_ab), holding the raw sums fixed.
    std::vector<double> c_mu(n), c_vaa(n), c_vab(n);
    for (std::size_t i = 0; i < n; ++i) {
        double mu_a = m.mu_a[i], mu_b = m.mu_b[i];
        double va = m.s_aa[i] - mu_a * mu_a;
        double vb = m.s_bb[i] - mu_b * mu_b;
        double cov = m.s_ab[i] - mu_a * mu_b;
        double a1 = 2.0 * mu_a * mu_b + m.c1;
        double a2 = 2.0 * cov + m.c2;
        double b1 = mu_a * mu_a + mu_b * mu_b + m.c1;
        double b2 = va + vb + m.c2;

        double d_mu_direct = 2.0 * mu_b * a2 / (b1 * b2) - 2.0 * mu_a * a1 * a2 / (b1 * b1 * b2);
        double d_vaa = -a1 * a2 / (b1 * b2 * b2);
        double d_vab = 2.0 * a1 / (b1 * b2);

        // sigma_aa = s_aa - mu_a^2 and sigma_ab = s_ab - mu_a mu_b couple the
        // mean into the variance terms.
        c_mu[i] = d_mu_direct - 2.0 * mu_a * d_vaa - mu_b * d_vab;
        c_vaa[i] = d_vaa;
        c_vab[i] = d_vab;
    }

    std::vector<double> t_mu = gauss_filter_adjoint(c_mu, h, w);
    std::vector<double> t_vaa = gauss_filter_adjoint(c_vaa, h, w);
    std::vector<double> t_vab = gauss_filter_adjoint(c_vab, h, w);

    std::vector<double> grad(n);
    const double inv_n = 1.0 / double(n);
    for (std::size_t i = 0; i < n; ++i)
        grad[i] = inv_n * (t_mu[i] + 2.0 * a[i] * t_vaa[i] + b[i] * t_vab[i]);
    return grad;
}

double nrmse(const ComplexImage& recon, const ComplexImage& truth) {
    require(recon.same_shape(truth), ErrorKind::InvalidArgument, "nrmse: shape mismatch");
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        double d = std::abs(recon.data[i]) - std::abs(truth.data[i]);
        err += d * d;
        ref += std::norm(truth.data[i]);
    }
    require(ref > 0.0, ErrorKind::InvalidArgument, "nrmse: zero-norm truth");
    return std::sqrt(err / ref);
}

double ssim(const ComplexImage& recon, const ComplexImage& truth) {
    require(recon.same_shape(truth), ErrorKind::InvalidArgument, "ssim: shape mismatch");
    std::vector<double> a = magnitude(recon);
    std::vector<double> b = magnitude(truth);
    double range = *std::max_element(b.begin(), b.end());
    return ssim_real(a, b, truth.height, truth.width, range);
}

}  // namespace ksamp
