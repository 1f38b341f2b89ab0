#include "ksamp/recon.hpp"

#include <algorithm>
#include <cmath>

#include "ksamp/fft.hpp"
#include "ksamp/metrics.hpp"
#include "ksamp/rng.hpp"

namespace ksamp {

std::string scheme_name(MaskScheme s) {
    switch (s) {
        case MaskScheme::LowFrequency: return "lowfreq";
        case MaskScheme::UniformRandom: return "uniform";
        case MaskScheme::EnergyBased: return "energy";
    }
    return "?";
}

MaskScheme parse_scheme(const std::string& name) {
    if (name == "lowfreq") return MaskScheme::LowFrequency;
    if (name == "uniform") return MaskScheme::UniformRandom;
    if (name == "energy") return MaskScheme::EnergyBased;
    raise(ErrorKind::Config, "unknown mask scheme: " + name);
}

ComplexImage zero_fill_recon(const ComplexImage& masked_spectrum) {
    return ifft2(masked_spectrum);
}

namespace {

Tensor4 to_two_channel(const ComplexImage& img) {
    Tensor4 t(1, 2, img.height, img.width);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            t.at(0, 0, r, c) = img.at(r, c).real();
            t.at(0, 1, r, c) = img.at(r, c).imag();
        }
    }
    return t;
}

ComplexImage add_residual(const ComplexImage& base, const Tensor4& correction, int item) {
    ComplexImage out(base.height, base.width);
    for (int r = 0; r < base.height; ++r)
        for (int c = 0; c < base.width; ++c)
            out.at(r, c) = base.at(r, c) + cplx(correction.at(item, 0, r, c),
                                                correction.at(item, 1, r, c));
    return out;
}

}  // namespace

ComplexImage recon(const ReconSpec& spec, const ComplexImage& masked_spectrum) {
    ComplexImage zf = zero_fill_recon(masked_spectrum);
    if (spec.kind == ReconSpec::Kind::ZeroFill) return zf;
    require(spec.frozen, ErrorKind::InvalidArgument, "recon: learned net is not frozen");
    Tensor4 correction = net_forward(spec.net, to_two_channel(zf));
    return add_residual(zf, correction, 0);
}

ComplexImage recon_frame(const ReconSpec& spec, const ComplexImage& frame, const Mask& mask) {
    return recon(spec, apply_mask(fft2(frame), mask));
}

CompositeLoss composite_loss(const ComplexImage& rec, const ComplexImage& truth,
                             double ssim_weight) {
    require(rec.same_shape(truth), ErrorKind::InvalidArgument, "composite_loss: shape mismatch");
    const int h = truth.height, w = truth.width;
    const std::size_t n = truth.size();

    std::vector<double> a = magnitude(rec);
    std::vector<double> g = magnitude(truth);

    double ref_sq = 0.0;
    for (double v : g) ref_sq += v * v;
    require(ref_sq > 0.0, ErrorKind::InvalidArgument, "composite_loss: zero-norm truth");
    const double ref = std::sqrt(ref_sq);

    double err_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) err_sq += (a[i] - g[i]) * (a[i] - g[i]);
    const double err = std::sqrt(err_sq);
    const double nr = err / ref;

    const double range = *std::max_element(g.begin(), g.end());
    const double ss = ssim_real(a, g, h, w, range);

    CompositeLoss out;
    out.value = nr + ssim_weight * (1.0 - ss);

    // d(loss)/d|rec| first, then through the modulus to (re, im).
    std::vector<double> d_mag(n, 0.0);
    if (err > 0.0) {
        const double c = 1.0 / (err * ref);
        for (std::size_t i = 0; i < n; ++i) d_mag[i] = c * (a[i] - g[i]);
    }
    if (ssim_weight != 0.0) {
        std::vector<double> d_ssim = ssim_real_grad(a, g, h, w, range);
        for (std::size_t i = 0; i < n; ++i) d_mag[i] -= ssim_weight * d_ssim[i];
    }

    out.grad = ComplexImage(h, w);
    for (std::size_t i = 0; i < n; ++i) {
        const double m = a[i];
        if (m > 0.0) out.grad.data[i] = d_mag[i] / m * rec.data[i];
    }
    return out;
}

std::vector<LayerSpec> make_recon_layers(int h, int w, int depth, int channels) {
    require(depth >= 1, ErrorKind::Config, "recon depth must be >= 1");
    const int div = 1 << depth;
    require(h % div == 0 && w % div == 0, ErrorKind::Config,
            "recon: image dims must be divisible by 2^depth");

    std::vector<LayerSpec> layers;
    std::vector<int> skip_from;  // relu layer index per encoder level
    int ch = 2;
    // Encoder: conv-relu, remember the activation, then pool.
    for (int level = 0; level < depth; ++level) {
        int out_ch = channels << level;
        layers.push_back(LayerSpec::conv(ch, out_ch, 3));
        layers.push_back(LayerSpec::relu());
        skip_from.push_back(int(layers.size()) - 1);
        layers.push_back(LayerSpec::avg_pool2());
        ch = out_ch;
    }
    // Bottleneck.
    layers.push_back(LayerSpec::conv(ch, ch, 3));
    layers.push_back(LayerSpec::relu());
    // Decoder: upsample, concat the matching encoder activation, conv-relu.
    for (int level = depth - 1; level >= 0; --level) {
        int enc_ch = channels << level;
        layers.push_back(LayerSpec::upsample2());
        layers.push_back(LayerSpec::concat_skip(skip_from[std::size_t(level)]));
        layers.push_back(LayerSpec::conv(ch + enc_ch, enc_ch, 3));
        layers.push_back(LayerSpec::relu());
        ch = enc_ch;
    }
    layers.push_back(LayerSpec::conv(ch, 2, 3));  // residual correction, (re, im)
    return layers;
}

PretrainResult pretrain(MaskScheme scheme, const Dataset& ds, const ReconTrainConfig& cfg,
                        int base_b, int extra_s, std::uint64_t seed) {
    require(!ds.train.empty(), ErrorKind::InvalidArgument, "pretrain: empty train split");
    require(cfg.epochs >= 0 && cfg.batch_size >= 1, ErrorKind::Config,
            "pretrain: bad epochs/batch size");

    const ComplexImage& first = ds.train.front().frames.front();
    const int h = first.height, w = first.width;

    std::vector<const ComplexImage*> frames;
    for (const auto& s : ds.train)
        for (const auto& f : s.frames) frames.push_back(&f);

    PretrainResult result;
    result.spec.kind = ReconSpec::Kind::Learned;
    result.spec.scheme = scheme;
    result.spec.net = make_net(make_recon_layers(h, w, cfg.depth, cfg.channels), seed);
    result.spec.frozen = false;

    // Fixed mask for the deterministic schemes; the uniform scheme redraws
    // per frame per epoch below.
    Mask fixed_mask;
    if (scheme == MaskScheme::LowFrequency) {
        fixed_mask = make_low_frequency_mask(w, base_b + extra_s);
    } else if (scheme == MaskScheme::EnergyBased) {
        std::vector<ComplexImage> train_copy;
        train_copy.reserve(frames.size());
        for (const auto* f : frames) train_copy.push_back(*f);
        fixed_mask = make_energy_mask(w, base_b, extra_s, train_copy);
    }

    // Zero-filled inputs for fixed masks never change; compute once.
    std::vector<ComplexImage> spectra;
    spectra.reserve(frames.size());
    for (const auto* f : frames) spectra.push_back(fft2(*f));
    std::vector<ComplexImage> fixed_inputs;
    if (scheme != MaskScheme::UniformRandom) {
        fixed_inputs.reserve(frames.size());
        for (const auto& sp : spectra) fixed_inputs.push_back(ifft2(apply_mask(sp, fixed_mask)));
    }

    Rng order_rng(seed ^ 0x9e3779b97f4a7c15ull);
    Rng mask_rng(seed ^ 0x2545f4914f6cdd1dull);

    AdamConfig adam;
    adam.learning_rate = cfg.learning_rate;
    adam.weight_decay = cfg.l2_weight;

    NetParams& net = result.spec.net;
    std::vector<std::size_t> order(frames.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t seen = 0;

        for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
            const std::size_t count = std::min(order.size() - start, std::size_t(cfg.batch_size));

            std::vector<ComplexImage> zf(count);
            Tensor4 input(int(count), 2, h, w);
            for (std::size_t bi = 0; bi < count; ++bi) {
                const std::size_t fi = order[start + bi];
                if (scheme == MaskScheme::UniformRandom) {
                    Mask m = make_uniform_random_mask(w, base_b, extra_s, mask_rng.next_u64());
                    zf[bi] = ifft2(apply_mask(spectra[fi], m));
                } else {
                    zf[bi] = fixed_inputs[fi];
                }
                for (int r = 0; r < h; ++r) {
                    for (int c = 0; c < w; ++c) {
                        input.at(int(bi), 0, r, c) = zf[bi].at(r, c).real();
                        input.at(int(bi), 1, r, c) = zf[bi].at(r, c).imag();
                    }
                }
            }

            ForwardTrace trace;
            Tensor4 correction = net_forward(net, input, &trace);
            Tensor4 out_grad(int(count), 2, h, w);
            double batch_loss = 0.0;
            for (std::size_t bi = 0; bi < count; ++bi) {
                ComplexImage reconstructed = add_residual(zf[bi], correction, int(bi));
                CompositeLoss loss =
                    composite_loss(reconstructed, *frames[order[start + bi]], cfg.ssim_weight);
                batch_loss += loss.value;
                const double inv = 1.0 / double(count);
                for (int r = 0; r < h; ++r) {
                    for (int c = 0; c < w; ++c) {
                        out_grad.at(int(bi), 0, r, c) = inv * loss.grad.at(r, c).real();
                        out_grad.at(int(bi), 1, r, c) = inv * loss.grad.at(r, c).imag();
                    }
                }
            }
            require(std::isfinite(batch_loss), ErrorKind::Numeric,
                    "pretrain: loss diverged (NaN/Inf) at epoch " + std::to_string(epoch));
            epoch_loss += batch_loss;
            seen += count;

            net_backward(net, trace, out_grad);
            adam_step(net, adam);
        }
        result.loss_trajectory.push_back(epoch_loss / double(seen));
    }

    result.spec.frozen = true;
    return result;
}

}  // namespace ksamp
