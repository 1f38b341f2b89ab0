#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ksamp/dataset.hpp"
#include "ksamp/mask.hpp"
#include "ksamp/net.hpp"

namespace ksamp {

enum class MaskScheme { LowFrequency, UniformRandom, EnergyBased };

std::string scheme_name(MaskScheme s);
MaskScheme parse_scheme(const std::string& name);

// The reconstruction operator: either plain zero-filling or a trained
// de-aliaser applied on top of it. The learned net sees the zero-filled
// inverse FFT as two channels (real, imaginary) and predicts a residual
// correction; `frozen` must be set before the spec is used for policy work.
struct ReconSpec {
    enum class Kind { ZeroFill, Learned };
    Kind kind = Kind::ZeroFill;
    MaskScheme scheme = MaskScheme::LowFrequency;
    NetParams net;
    bool frozen = true;
};

struct ReconTrainConfig {
    int epochs = 30;
    double learning_rate = 1e-5;
    double l2_weight = 1e-5;
    int batch_size = 10;
    double ssim_weight = 5.0;
    int depth = 2;     // encoder/decoder levels
    int channels = 8;  // width of the first level
};

// Inverse FFT of the masked spectrum.
ComplexImage zero_fill_recon(const ComplexImage& masked_spectrum);

// Full reconstruction path for a masked spectrum.
ComplexImage recon(const ReconSpec& spec, const ComplexImage& masked_spectrum);

// Convenience: mask the frame's spectrum, then reconstruct.
ComplexImage recon_frame(const ReconSpec& spec, const ComplexImage& frame, const Mask& mask);

// nrmse(recon, truth) + ssim_weight * (1 - ssim(recon, truth)), with the
// analytic gradient with respect to the (complex) reconstruction.
struct CompositeLoss {
    double value = 0.0;
    ComplexImage grad;
};
CompositeLoss composite_loss(const ComplexImage& recon, const ComplexImage& truth,
                             double ssim_weight);

// Encoder-decoder layer stack with skip concatenations; h and w must be
// divisible by 2^depth.
std::vector<LayerSpec> make_recon_layers(int h, int w, int depth, int channels);

struct PretrainResult {
    ReconSpec spec;
    std::vector<double> loss_trajectory;  // mean training loss per epoch, pre-update
};

// Trains a de-aliaser against aliases generated by the given mask scheme
// (fresh mask per frame per epoch for the uniform scheme, one fixed mask
// otherwise) and returns it frozen.
PretrainResult pretrain(MaskScheme scheme, const Dataset& ds, const ReconTrainConfig& cfg,
                        int base_b, int extra_s, std::uint64_t seed);

}  // namespace ksamp
