#pragma once

#include <cstdint>
#include <vector>

#include "ksamp/complex_image.hpp"

namespace ksamp {

// Synthetic dynamic series: a torso/heart ellipse phantom whose inner
// ellipse contracts periodically. Most spectral energy sits in the lowest
// columns of the subsampled (width) dimension. Each series additionally
// carries a faint horizontal banding texture at a per-series frequency and a
// per-series brightness factor, so per-column energy statistics gathered on
// one set of series do not carry over to another.
struct MotionSpec {
    double contraction_amplitude = 0.15;  // fractional radial contraction of the inner ellipse
    double cycle_frames = 12.0;           // frames per contraction cycle
    double texture_amplitude = 0.18;      // banding amplitude; 0 disables the texture
    int texture_freq_min = 10;            // centered column distance band for the texture
    int texture_freq_max = 21;
    double brightness_min = 0.55;         // per-series intensity scale range
    double brightness_max = 1.0;
    double edge_softness = 1.6;           // ellipse edge transition width, pixels
};

struct CineSeries {
    std::uint32_t id = 0;
    double frame_period = 1.0;
    std::vector<ComplexImage> frames;
};

// Deterministic per (dims, frames, seed, motion); output values lie in [0, 1],
// imaginary parts are exactly zero, and every value is f32-representable so
// disk round trips are lossless.
CineSeries generate_cine(int height, int width, int frames, std::uint64_t seed,
                         const MotionSpec& motion);

}  // namespace ksamp
