#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ksamp/tensor.hpp"

namespace ksamp {

// Layer vocabulary for the small convolutional nets used here. Conv is
// stride-1 with zero padding that preserves the spatial size; AvgPool2 /
// Upsample2 halve and double it; ConcatSkip appends the output of an earlier
// layer along channels (encoder-decoder skips); Dense flattens its input.
enum class LayerKind : std::uint8_t {
    Conv = 0,
    Relu = 1,
    AvgPool2 = 2,
    Upsample2 = 3,
    ConcatSkip = 4,
    Dense = 5,
};

struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    int in_ch = 0, out_ch = 0, ksize = 0;        // Conv
    int in_features = 0, out_features = 0;       // Dense
    int skip_source = -1;                        // ConcatSkip: earlier layer index

    static LayerSpec conv(int in_ch, int out_ch, int ksize) {
        LayerSpec s;
        s.kind = LayerKind::Conv;
        s.in_ch = in_ch;
        s.out_ch = out_ch;
        s.ksize = ksize;
        return s;
    }
    static LayerSpec relu() { return LayerSpec{}; }
    static LayerSpec avg_pool2() {
        LayerSpec s;
        s.kind = LayerKind::AvgPool2;
        return s;
    }
    static LayerSpec upsample2() {
        LayerSpec s;
        s.kind = LayerKind::Upsample2;
        return s;
    }
    static LayerSpec concat_skip(int source_layer) {
        LayerSpec s;
        s.kind = LayerKind::ConcatSkip;
        s.skip_source = source_layer;
        return s;
    }
    static LayerSpec dense(int in_features, int out_features) {
        LayerSpec s;
        s.kind = LayerKind::Dense;
        s.in_features = in_features;
        s.out_features = out_features;
        return s;
    }
};

// Flat parameter store: weights/biases with matching gradient and Adam
// moment arrays. A single training loop owns an instance; frozen copies may
// run net_forward concurrently.
struct NetParams {
    std::vector<LayerSpec> layers;
    std::vector<std::vector<double>> weights, biases;
    std::vector<std::vector<double>> w_grad, b_grad;
    std::vector<std::vector<double>> w_m, w_v, b_m, b_v;
    std::int64_t step = 0;

    std::size_t param_count() const;
    void zero_grad();
};

// Kaiming-uniform weights, zero biases, seeded.
NetParams make_net(const std::vector<LayerSpec>& layers, std::uint64_t seed);

// Activations recorded by a forward pass for the matching backward pass.
struct ForwardTrace {
    Tensor4 input;
    std::vector<Tensor4> outputs;
    bool valid = false;
};

Tensor4 net_forward(const NetParams& net, const Tensor4& input, ForwardTrace* trace = nullptr);

// Accumulates d(loss)/d(params) into the gradient arrays given the trace of
// the forward pass that produced output_grad's shape.
void net_backward(NetParams& net, const ForwardTrace& trace, const Tensor4& output_grad);

struct AdamConfig {
    double learning_rate = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;  // l2 term added to the gradient
};

// Bias-corrected Adam update; clears gradients afterwards.
void adam_step(NetParams& net, const AdamConfig& cfg);

// Parameter copy for target-network syncs (shapes must already match).
void copy_params(const NetParams& src, NetParams& dst);

// Numerically stable softmax (max subtraction), optional temperature.
std::vector<double> softmax(const std::vector<double>& logits, double temperature = 1.0);

// Parameter checkpoint, magic "KNET1\0": layer specs then f64 arrays,
// little-endian, bit-exact round trip. Optimizer state is not persisted.
void write_net(const NetParams& net, const std::string& path);
NetParams read_net(const std::string& path);

}  // namespace ksamp
