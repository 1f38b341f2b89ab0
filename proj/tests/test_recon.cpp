#include <cmath>

#include "doctest.h"
#include "fd_check.hpp"
#include "ksamp/fft.hpp"
#include "ksamp/metrics.hpp"
#include "ksamp/recon.hpp"
#include "ksamp/rng.hpp"

using namespace ksamp;

namespace {

Dataset small_dataset(int h, int w, int n_series, int frames, std::uint64_t seed,
                      double texture = 0.18) {
    MotionSpec motion;
    motion.texture_amplitude = texture;
    std::vector<CineSeries> all;
    for (int i = 0; i < n_series; ++i) {
        CineSeries s = generate_cine(h, w, frames, seed + std::uint64_t(i), motion);
        s.id = std::uint32_t(i);
        all.push_back(std::move(s));
    }
    return split_dataset(all, 0.67, seed ^ 0xabc);
}

ComplexImage random_positive_image(int h, int w, Rng& rng) {
    ComplexImage img(h, w);
    for (auto& z : img.data) z = cplx(rng.uniform(0.3, 1.0), rng.uniform(-0.2, 0.2));
    return img;
}

}  // namespace

TEST_CASE("zero fill recovers exactly under a full mask") {
    Rng rng(1);
    ComplexImage truth = random_positive_image(12, 10, rng);
    Mask full(10, 0);
    for (int j = 0; j < 10; ++j) full.set(j);
    ComplexImage rec = zero_fill_recon(apply_mask(fft2(truth), full));
    CHECK(nrmse(rec, truth) <= 1e-12);
}

TEST_CASE("zero fill under an empty mask gives the zero image") {
    Rng rng(2);
    ComplexImage truth = random_positive_image(8, 8, rng);
    Mask empty(8, 0);
    ComplexImage rec = zero_fill_recon(apply_mask(fft2(truth), empty));
    for (const auto& z : rec.data) CHECK(std::abs(z) == 0.0);
    CHECK(nrmse(rec, truth) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("zero fill error is bounded by the out-of-mask energy") {
    // || |x~| - |x| ||_2 <= || x~ - x ||_2 = sqrt(energy outside the mask),
    // so per-frame nrmse is bounded by the measured out-of-band fraction.
    MotionSpec motion;
    CineSeries s = generate_cine(64, 48, 6, 31, motion);
    Mask band = make_low_frequency_mask(48, 12);  // lowest 25% of columns
    for (const auto& frame : s.frames) {
        ComplexImage spec = fft2(frame);
        double total = 0.0, out_band = 0.0;
        for (int k = 0; k < 48; ++k) {
            double col = 0.0;
            for (int r = 0; r < 64; ++r) col += std::norm(spec.at(r, k));
            total += col;
            if (!band.is_set(dft_to_centered(k, 48))) out_band += col;
        }
        const double rho = out_band / total;
        CHECK(rho <= 0.10);  // low-pass by construction
        ComplexImage rec = zero_fill_recon(apply_mask(spec, band));
        CHECK(nrmse(rec, frame) <= std::sqrt(rho) + 1e-9);
        CHECK(nrmse(rec, frame) <= std::sqrt(0.10));
    }
}

TEST_CASE("recon with zero-fill kind reduces to zero_fill_recon") {
    Rng rng(3);
    ComplexImage truth = random_positive_image(8, 8, rng);
    Mask m = make_low_frequency_mask(8, 4);
    ComplexImage masked = apply_mask(fft2(truth), m);
    ReconSpec spec;  // defaults to zero fill
    ComplexImage a = recon(spec, masked);
    ComplexImage b = zero_fill_recon(masked);
    CHECK(a.data == b.data);
}

TEST_CASE("learned recon with zero weights is the zero-filled input") {
    ReconSpec spec;
    spec.kind = ReconSpec::Kind::Learned;
    spec.net = make_net(make_recon_layers(16, 16, 2, 4), 5);
    for (auto& w : spec.net.weights) std::fill(w.begin(), w.end(), 0.0);
    spec.frozen = true;

    Rng rng(4);
    ComplexImage truth = random_positive_image(16, 16, rng);
    Mask m = make_low_frequency_mask(16, 8);
    ComplexImage masked = apply_mask(fft2(truth), m);
    ComplexImage out = recon(spec, masked);
    ComplexImage zf = zero_fill_recon(masked);
    for (std::size_t i = 0; i < out.size(); ++i)
        CHECK(std::abs(out.data[i] - zf.data[i]) == 0.0);
}

TEST_CASE("frozen learned recon is deterministic; unfrozen is rejected") {
    ReconSpec spec;
    spec.kind = ReconSpec::Kind::Learned;
    spec.net = make_net(make_recon_layers(16, 16, 1, 4), 6);
    spec.frozen = true;

    Rng rng(7);
    ComplexImage truth = random_positive_image(16, 16, rng);
    ComplexImage masked = apply_mask(fft2(truth), make_low_frequency_mask(16, 6));
    ComplexImage a = recon(spec, masked);
    ComplexImage b = recon(spec, masked);
    CHECK(a.data == b.data);

    spec.frozen = false;
    CHECK_THROWS_AS(recon(spec, masked), Error);
}

TEST_CASE("composite loss value") {
    Rng rng(8);
    ComplexImage truth = random_positive_image(16, 12, rng);

    SUBCASE("zero at the truth") {
        CompositeLoss l = composite_loss(truth, truth, 5.0);
        CHECK(l.value == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("reduces to nrmse when the ssim weight is zero") {
        ComplexImage rec = random_positive_image(16, 12, rng);
        CompositeLoss l = composite_loss(rec, truth, 0.0);
        CHECK(l.value == doctest::Approx(nrmse(rec, truth)).epsilon(1e-12));
    }
    SUBCASE("zero-norm truth rejected") {
        ComplexImage zero(16, 12);
        CHECK_THROWS_AS(composite_loss(truth, zero, 1.0), Error);
    }
    SUBCASE("nonnegative on random pairs") {
        for (int i = 0; i < 10; ++i) {
            ComplexImage rec = random_positive_image(16, 12, rng);
            CHECK(composite_loss(rec, truth, 5.0).value >= 0.0);
        }
    }
}

TEST_CASE("composite loss gradient matches finite differences on the image") {
    Rng rng(9);
    ComplexImage truth = random_positive_image(16, 12, rng);
    ComplexImage rec = random_positive_image(16, 12, rng);
    const double weight = 5.0;

    CompositeLoss analytic = composite_loss(rec, truth, weight);
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t i = 0; i < rec.size(); i += 7) {  // sample of pixels
        for (int part = 0; part < 2; ++part) {
            ComplexImage up = rec, down = rec;
            const cplx delta = part == 0 ? cplx(h, 0.0) : cplx(0.0, h);
            up.data[i] += delta;
            down.data[i] -= delta;
            const double fd = (composite_loss(up, truth, weight).value -
                               composite_loss(down, truth, weight).value) /
                              (2.0 * h);
            const double a =
                part == 0 ? analytic.grad.data[i].real() : analytic.grad.data[i].imag();
            worst = std::max(worst, testing::rel_err(a, fd));
        }
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("composite loss gradient propagates through a recon net") {
    // End-to-end: zero-filled input -> net residual -> composite loss, with
    // every parameter checked against central finite differences.
    const int h = 8, w = 8;
    Rng rng(10);
    ComplexImage truth = random_positive_image(h, w, rng);
    ComplexImage zf = zero_fill_recon(apply_mask(fft2(truth), make_low_frequency_mask(w, 5)));

    NetParams net = make_net(make_recon_layers(h, w, 1, 3), 11);

    Tensor4 input(1, 2, h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            input.at(0, 0, r, c) = zf.at(r, c).real();
            input.at(0, 1, r, c) = zf.at(r, c).imag();
        }

    auto reconstruct = [&](const Tensor4& correction) {
        ComplexImage out(h, w);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                out.at(r, c) = zf.at(r, c) + cplx(correction.at(0, 0, r, c),
                                                  correction.at(0, 1, r, c));
        return out;
    };
    auto loss = [&]() {
        return composite_loss(reconstruct(net_forward(net, input)), truth, 5.0).value;
    };
    auto analytic = [&]() {
        ForwardTrace trace;
        Tensor4 correction = net_forward(net, input, &trace);
        CompositeLoss l = composite_loss(reconstruct(correction), truth, 5.0);
        Tensor4 og(1, 2, h, w);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                og.at(0, 0, r, c) = l.grad.at(r, c).real();
                og.at(0, 1, r, c) = l.grad.at(r, c).imag();
            }
        net_backward(net, trace, og);
    };

    auto rep = testing::fd_check(net, loss, analytic);
    CHECK(rep.params_checked == net.param_count());
    CHECK(rep.max_rel_err <= 1e-4);
}

TEST_CASE("pretrain with zero epochs returns a usable frozen net") {
    Dataset ds = small_dataset(16, 16, 3, 3, 50);
    ReconTrainConfig cfg;
    cfg.epochs = 0;
    cfg.depth = 1;
    cfg.channels = 4;
    PretrainResult r = pretrain(MaskScheme::LowFrequency, ds, cfg, 2, 2, 99);
    CHECK(r.spec.frozen);
    CHECK(r.loss_trajectory.empty());
    ComplexImage frame = ds.test.front().frames.front();
    ComplexImage out = recon_frame(r.spec, frame, make_low_frequency_mask(16, 4));
    CHECK(all_finite(out));
}

TEST_CASE("pretraining reduces the training loss") {
    Dataset ds = small_dataset(16, 16, 4, 4, 60);
    ReconTrainConfig cfg;
    cfg.epochs = 8;
    cfg.depth = 1;
    cfg.channels = 4;
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 4;
    PretrainResult r = pretrain(MaskScheme::LowFrequency, ds, cfg, 2, 2, 42);
    REQUIRE(r.loss_trajectory.size() == 8);
    CHECK(r.loss_trajectory.back() < r.loss_trajectory.front());
}

TEST_CASE("pretraining is reproducible per seed") {
    Dataset ds = small_dataset(16, 16, 3, 3, 70);
    ReconTrainConfig cfg;
    cfg.epochs = 2;
    cfg.depth = 1;
    cfg.channels = 4;
    cfg.learning_rate = 1e-3;
    for (MaskScheme scheme :
         {MaskScheme::LowFrequency, MaskScheme::UniformRandom, MaskScheme::EnergyBased}) {
        PretrainResult a = pretrain(scheme, ds, cfg, 2, 2, 7);
        PretrainResult b = pretrain(scheme, ds, cfg, 2, 2, 7);
        CHECK(a.loss_trajectory == b.loss_trajectory);
        for (std::size_t i = 0; i < a.spec.net.weights.size(); ++i)
            CHECK(a.spec.net.weights[i] == b.spec.net.weights[i]);
    }
}
