#include "ksamp/phantom.hpp"

#include <cmath>

#include "ksamp/rng.hpp"

namespace ksamp {
namespace {

constexpr double kPi = 3.14159265358979323846;

struct Ellipse {
    double cx, cy;      // center, normalized [-1, 1] coordinates
    double ax, ay;      // semi-axes
    double value;       // additive intensity
};

// Soft indicator: 1 inside, 0 outside, smoothstep transition of `soft`
// pixels across the boundary.
double soft_inside(const Ellipse& e, double u, double v, double soft_norm) {
    double du = (u - e.cx) / e.ax;
    double dv = (v - e.cy) / e.ay;
    double rho = std::sqrt(du * du + dv * dv);
    // Transition width in rho units, approximated at the boundary.
    double width = soft_norm / std::min(e.ax, e.ay);
    double t = (1.0 + 0.5 * width - rho) / width;
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * (3.0 - 2.0 * t);
}

}  // namespace

CineSeries generate_cine(int height, int width, int frames, std::uint64_t seed,
                         const MotionSpec& motion) {
    require(height >= 16 && width >= 16, ErrorKind::InvalidArgument,
            "generate_cine: dimensions must be >= 16");
    require(frames >= 2, ErrorKind::InvalidArgument, "generate_cine: need at least 2 frames");

    Rng rng(seed);

    // Per-series randomness, drawn in a fixed order.
    const double jx = rng.uniform(-0.04, 0.04);
    const double jy = rng.uniform(-0.04, 0.04);
    const double brightness = rng.uniform(motion.brightness_min, motion.brightness_max);
    int tex_freq = rng.uniform_int(motion.texture_freq_min, motion.texture_freq_max);
    // Keep the banding below Nyquist for narrow geometries.
    tex_freq = std::min(tex_freq, width / 2 - 2);
    const double tex_phase = rng.uniform(0.0, 2.0 * kPi);
    const double tex_sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;

    const Ellipse torso{0.0, 0.0, 0.88, 0.82, 0.20};
    const Ellipse heart{0.05 + jx, -0.10 + jy, 0.47, 0.40, 0.40};
    const Ellipse blob_l{-0.52 + jx, 0.42, 0.13, 0.11, 0.08};
    const Ellipse blob_r{0.55 + jx, 0.40, 0.12, 0.10, -0.06};
    Ellipse ventricle{heart.cx, heart.cy, 0.30, 0.24, 0.30};

    const double soft_norm = 2.0 * motion.edge_softness / double(std::min(height, width));

    CineSeries series;
    series.frames.reserve(std::size_t(frames));

    for (int t = 0; t < frames; ++t) {
        const double phase = 2.0 * kPi * double(t) / motion.cycle_frames;
        const double contraction =
            1.0 - motion.contraction_amplitude * 0.5 * (1.0 - std::cos(phase));
        Ellipse v = ventricle;
        v.ax *= contraction;
        v.ay *= contraction;

        ComplexImage img(height, width);
        for (int r = 0; r < height; ++r) {
            const double vv = (2.0 * r - height + 1.0) / double(height);
            // Banding strip in the lower torso, clear of the heart.
            double strip = 0.0;
            if (vv > 0.30 && vv < 0.80) {
                double a = (vv - 0.30) / 0.10;
                double b = (0.80 - vv) / 0.10;
                strip = std::min(1.0, std::min(a, b));
            }
            for (int c = 0; c < width; ++c) {
                const double uu = (2.0 * c - width + 1.0) / double(width);
                double val = 0.0;
                const double in_torso = soft_inside(torso, uu, vv, soft_norm);
                val += torso.value * in_torso;
                val += heart.value * soft_inside(heart, uu, vv, soft_norm);
                val += v.value * soft_inside(v, uu, vv, soft_norm);
                val += blob_l.value * soft_inside(blob_l, uu, vv, soft_norm);
                val += blob_r.value * soft_inside(blob_r, uu, vv, soft_norm);
                if (motion.texture_amplitude > 0.0 && strip > 0.0) {
                    double band = std::sin(2.0 * kPi * tex_freq * double(c) / double(width) +
                                           tex_phase);
                    val += tex_sign * motion.texture_amplitude * band * strip * in_torso;
                }
                val *= brightness;
                if (val < 0.0) val = 0.0;
                if (val > 1.0) val = 1.0;
                img.at(r, c) = cplx(double(float(val)), 0.0);
            }
        }
        series.frames.push_back(std::move(img));
    }
    return series;
}

}  // namespace ksamp
