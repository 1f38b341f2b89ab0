#include "ksamp/net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "ksamp/rng.hpp"

namespace ksamp {
namespace {

std::string layer_msg(const char* what, std::size_t index) {
    return std::string(what) + " at layer " + std::to_string(index);
}

struct ShapeCHW {
    int c, h, w;
};

// Output shape of layer `i` given its input shape; validates the wiring.
ShapeCHW infer_shape(const std::vector<LayerSpec>& layers, std::size_t i, ShapeCHW in,
                     const std::vector<ShapeCHW>& outputs) {
    const LayerSpec& spec = layers[i];
    switch (spec.kind) {
        case LayerKind::Conv:
            require(spec.in_ch == in.c, ErrorKind::InvalidArgument,
                    layer_msg("conv channel mismatch", i));
            require(spec.ksize >= 1 && spec.ksize % 2 == 1, ErrorKind::InvalidArgument,
                    layer_msg("conv kernel size must be odd", i));
            return {spec.out_ch, in.h, in.w};
        case LayerKind::Relu:
            return in;
        case LayerKind::AvgPool2:
            require(in.h % 2 == 0 && in.w % 2 == 0, ErrorKind::InvalidArgument,
                    layer_msg("pool needs even spatial dims", i));
            return {in.c, in.h / 2, in.w / 2};
        case LayerKind::Upsample2:
            return {in.c, in.h * 2, in.w * 2};
        case LayerKind::ConcatSkip: {
            require(spec.skip_source >= 0 && std::size_t(spec.skip_source) < i,
                    ErrorKind::InvalidArgument, layer_msg("bad skip source", i));
            ShapeCHW src = outputs[std::size_t(spec.skip_source)];
            require(src.h == in.h && src.w == in.w, ErrorKind::InvalidArgument,
                    layer_msg("skip spatial mismatch", i));
            return {in.c + src.c, in.h, in.w};
        }
        case LayerKind::Dense:
            require(in.c * in.h * in.w == spec.in_features, ErrorKind::InvalidArgument,
                    layer_msg("dense input size mismatch", i));
            return {spec.out_features, 1, 1};
    }
    raise(ErrorKind::InvalidArgument, layer_msg("unknown layer kind", i));
}

void conv_forward(const LayerSpec& s, const std::vector<double>& w, const std::vector<double>& b,
                  const Tensor4& in, Tensor4& out) {
    const int k = s.ksize, pad = k / 2;
    for (int i = 0; i < in.n; ++i) {
        for (int oc = 0; oc < s.out_ch; ++oc) {
            for (int y = 0; y < in.h; ++y) {
                for (int x = 0; x < in.w; ++x) {
                    double acc = b[std::size_t(oc)];
                    for (int ic = 0; ic < s.in_ch; ++ic) {
                        const std::size_t wbase = ((std::size_t(oc) * s.in_ch + ic) * k) * k;
                        for (int dy = 0; dy < k; ++dy) {
                            const int yy = y + dy - pad;
                            if (yy < 0 || yy >= in.h) continue;
                            for (int dx = 0; dx < k; ++dx) {
                                const int xx = x + dx - pad;
                                if (xx < 0 || xx >= in.w) continue;
                                acc += w[wbase + std::size_t(dy) * k + dx] * in.at(i, ic, yy, xx);
                            }
                        }
                    }
                    out.at(i, oc, y, x) = acc;
                }
            }
        }
    }
}

void conv_backward(const LayerSpec& s, const std::vector<double>& w, const Tensor4& in,
                   const Tensor4& d_out, Tensor4& d_in, std::vector<double>& dw,
                   std::vector<double>& db) {
    const int k = s.ksize, pad = k / 2;
    for (int i = 0; i < in.n; ++i) {
        for (int oc = 0; oc < s.out_ch; ++oc) {
            for (int y = 0; y < in.h; ++y) {
                for (int x = 0; x < in.w; ++x) {
                    const double g = d_out.at(i, oc, y, x);
                    if (g == 0.0) continue;
                    db[std::size_t(oc)] += g;
                    for (int ic = 0; ic < s.in_ch; ++ic) {
                        const std::size_t wbase = ((std::size_t(oc) * s.in_ch + ic) * k) * k;
                        for (int dy = 0; dy < k; ++dy) {
                            const int yy = y + dy - pad;
                            if (yy < 0 || yy >= in.h) continue;
                            for (int dx = 0; dx < k; ++dx) {
                                const int xx = x + dx - pad;
                                if (xx < 0 || xx >= in.w) continue;
                                const std::size_t wi = wbase + std::size_t(dy) * k + dx;
                                dw[wi] += g * in.at(i, ic, yy, xx);
                                d_in.at(i, ic, yy, xx) += g * w[wi];
                            }
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

std::size_t NetParams::param_count() const {
    std::size_t total = 0;
    for (std::size_t i = 0; i < layers.size(); ++i) total += weights[i].size() + biases[i].size();
    return total;
}

void NetParams::zero_grad() {
    for (auto& g : w_grad) std::fill(g.begin(), g.end(), 0.0);
    for (auto& g : b_grad) std::fill(g.begin(), g.end(), 0.0);
}

NetParams make_net(const std::vector<LayerSpec>& layers, std::uint64_t seed) {
    NetParams net;
    net.layers = layers;
    Rng rng(seed);
    for (const LayerSpec& s : layers) {
        std::size_t w_len = 0, b_len = 0, fan_in = 0;
        if (s.kind == LayerKind::Conv) {
            w_len = std::size_t(s.out_ch) * s.in_ch * s.ksize * s.ksize;
            b_len = std::size_t(s.out_ch);
            fan_in = std::size_t(s.in_ch) * s.ksize * s.ksize;
        } else if (s.kind == LayerKind::Dense) {
            w_len = std::size_t(s.out_features) * s.in_features;
            b_len = std::size_t(s.out_features);
            fan_in = std::size_t(s.in_features);
        }
        std::vector<double> w(w_len), b(b_len, 0.0);
        if (w_len > 0) {
            const double bound = std::sqrt(6.0 / double(fan_in));
            for (auto& v : w) v = rng.uniform(-bound, bound);
        }
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
        net.w_grad.emplace_back(w_len, 0.0);
        net.b_grad.emplace_back(b_len, 0.0);
        net.w_m.emplace_back(w_len, 0.0);
        net.w_v.emplace_back(w_len, 0.0);
        net.b_m.emplace_back(b_len, 0.0);
        net.b_v.emplace_back(b_len, 0.0);
    }
    return net;
}

Tensor4 net_forward(const NetParams& net, const Tensor4& input, ForwardTrace* trace) {
    require(!net.layers.empty(), ErrorKind::InvalidArgument, "net_forward: empty net");

    // Validate the whole wiring up front so errors carry the layer index.
    std::vector<ShapeCHW> shapes;
    ShapeCHW cur{input.c, input.h, input.w};
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        cur = infer_shape(net.layers, i, cur, shapes);
        shapes.push_back(cur);
    }

    std::vector<Tensor4> local;
    std::vector<Tensor4>& store = trace ? trace->outputs : local;
    store.clear();
    store.reserve(net.layers.size());  // no reallocation: pointers below stay valid
    if (trace) {
        trace->input = input;
        trace->valid = true;
    }

    const Tensor4* xp = &input;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& s = net.layers[i];
        const ShapeCHW os = shapes[i];
        const Tensor4& x = *xp;
        Tensor4 out(x.n, os.c, os.h, os.w);
        switch (s.kind) {
            case LayerKind::Conv:
                conv_forward(s, net.weights[i], net.biases[i], x, out);
                break;
            case LayerKind::Relu:
                for (std::size_t j = 0; j < x.size(); ++j)
                    out.data[j] = x.data[j] > 0.0 ? x.data[j] : 0.0;
                break;
            case LayerKind::AvgPool2:
                for (int b = 0; b < x.n; ++b)
                    for (int ch = 0; ch < x.c; ++ch)
                        for (int y = 0; y < os.h; ++y)
                            for (int xx = 0; xx < os.w; ++xx)
                                out.at(b, ch, y, xx) =
                                    0.25 * (x.at(b, ch, 2 * y, 2 * xx) +
                                            x.at(b, ch, 2 * y, 2 * xx + 1) +
                                            x.at(b, ch, 2 * y + 1, 2 * xx) +
                                            x.at(b, ch, 2 * y + 1, 2 * xx + 1));
                break;
            case LayerKind::Upsample2:
                for (int b = 0; b < x.n; ++b)
                    for (int ch = 0; ch < x.c; ++ch)
                        for (int y = 0; y < os.h; ++y)
                            for (int xx = 0; xx < os.w; ++xx)
                                out.at(b, ch, y, xx) = x.at(b, ch, y / 2, xx / 2);
                break;
            case LayerKind::ConcatSkip: {
                const Tensor4& src = store[std::size_t(s.skip_source)];
                for (int b = 0; b < x.n; ++b) {
                    for (int ch = 0; ch < x.c; ++ch)
                        for (int y = 0; y < os.h; ++y)
                            for (int xx = 0; xx < os.w; ++xx)
                                out.at(b, ch, y, xx) = x.at(b, ch, y, xx);
                    for (int ch = 0; ch < src.c; ++ch)
                        for (int y = 0; y < os.h; ++y)
                            for (int xx = 0; xx < os.w; ++xx)
                                out.at(b, x.c + ch, y, xx) = src.at(b, ch, y, xx);
                }
                break;
            }
            case LayerKind::Dense: {
                const int d = s.in_features;
                for (int b = 0; b < x.n; ++b) {
                    const double* xb = &x.data[std::size_t(b) * d];
                    for (int o = 0; o < s.out_features; ++o) {
                        double acc = net.biases[i][std::size_t(o)];
                        const double* row = &net.weights[i][std::size_t(o) * d];
                        for (int j = 0; j < d; ++j) acc += row[j] * xb[j];
                        out.at(b, o, 0, 0) = acc;
                    }
                }
                break;
            }
        }
        store.push_back(std::move(out));
        xp = &store.back();
    }
    return store.back();
}

void net_backward(NetParams& net, const ForwardTrace& trace, const Tensor4& output_grad) {
    require(trace.valid && trace.outputs.size() == net.layers.size(), ErrorKind::InvalidArgument,
            "net_backward: missing or stale forward trace");
    require(output_grad.same_shape(trace.outputs.back()), ErrorKind::InvalidArgument,
            "net_backward: output gradient shape mismatch");

    const std::size_t L = net.layers.size();
    std::vector<Tensor4> grads(L);  // d(loss)/d(layer output)
    grads[L - 1] = output_grad;

    auto layer_input = [&](std::size_t i) -> const Tensor4& {
        return i == 0 ? trace.input : trace.outputs[i - 1];
    };
    auto add_to = [](Tensor4& dst, const Tensor4& inc) {
        for (std::size_t j = 0; j < dst.size(); ++j) dst.data[j] += inc.data[j];
    };
    auto grad_slot = [&](std::size_t i) -> Tensor4& {
        if (grads[i].size() == 0) {
            const Tensor4& o = trace.outputs[i];
            grads[i] = Tensor4(o.n, o.c, o.h, o.w);
        }
        return grads[i];
    };

    for (std::size_t ii = L; ii-- > 0;) {
        const LayerSpec& s = net.layers[ii];
        const Tensor4& in = layer_input(ii);
        const Tensor4& d_out = grads[ii];
        if (d_out.size() == 0) continue;  // dead branch, nothing flowed back

        Tensor4 d_in(in.n, in.c, in.h, in.w);
        switch (s.kind) {
            case LayerKind::Conv:
                conv_backward(s, net.weights[ii], in, d_out, d_in, net.w_grad[ii],
                              net.b_grad[ii]);
                break;
            case LayerKind::Relu:
                for (std::size_t j = 0; j < in.size(); ++j)
                    d_in.data[j] = in.data[j] > 0.0 ? d_out.data[j] : 0.0;
                break;
            case LayerKind::AvgPool2:
                for (int b = 0; b < d_out.n; ++b)
                    for (int ch = 0; ch < d_out.c; ++ch)
                        for (int y = 0; y < d_out.h; ++y)
                            for (int xx = 0; xx < d_out.w; ++xx) {
                                const double g = 0.25 * d_out.at(b, ch, y, xx);
                                d_in.at(b, ch, 2 * y, 2 * xx) += g;
                                d_in.at(b, ch, 2 * y, 2 * xx + 1) += g;
                                d_in.at(b, ch, 2 * y + 1, 2 * xx) += g;
                                d_in.at(b, ch, 2 * y + 1, 2 * xx + 1) += g;
                            }
                break;
            case LayerKind::Upsample2:
                for (int b = 0; b < d_out.n; ++b)
                    for (int ch = 0; ch < d_out.c; ++ch)
                        for (int y = 0; y < d_out.h; ++y)
                            for (int xx = 0; xx < d_out.w; ++xx)
                                d_in.at(b, ch, y / 2, xx / 2) += d_out.at(b, ch, y, xx);
                break;
            case LayerKind::ConcatSkip: {
                const Tensor4& src = trace.outputs[std::size_t(s.skip_source)];
                Tensor4& d_src = grad_slot(std::size_t(s.skip_source));
                for (int b = 0; b < d_out.n; ++b) {
                    for (int ch = 0; ch < in.c; ++ch)
                        for (int y = 0; y < in.h; ++y)
                            for (int xx = 0; xx < in.w; ++xx)
                                d_in.at(b, ch, y, xx) = d_out.at(b, ch, y, xx);
                    for (int ch = 0; ch < src.c; ++ch)
                        for (int y = 0; y < src.h; ++y)
                            for (int xx = 0; xx < src.w; ++xx)
                                d_src.at(b, ch, y, xx) += d_out.at(b, in.c + ch, y, xx);
                }
                break;
            }
            case LayerKind::Dense: {
                const int d = s.in_features;
                for (int b = 0; b < d_out.n; ++b) {
                    const double* xb = &in.data[std::size_t(b) * d];
                    double* dxb = &d_in.data[std::size_t(b) * d];
                    for (int o = 0; o < s.out_features; ++o) {
                        const double g = d_out.at(b, o, 0, 0);
                        if (g == 0.0) continue;
                        net.b_grad[ii][std::size_t(o)] += g;
                        double* wrow = &net.w_grad[ii][std::size_t(o) * d];
                        const double* row = &net.weights[ii][std::size_t(o) * d];
                        for (int j = 0; j < d; ++j) {
                            wrow[j] += g * xb[j];
                            dxb[j] += g * row[j];
                        }
                    }
                }
                break;
            }
        }

        if (ii > 0) {
            Tensor4& upstream = grad_slot(ii - 1);
            add_to(upstream, d_in);
        }
    }
}

void adam_step(NetParams& net, const AdamConfig& cfg) {
    require(cfg.learning_rate > 0.0, ErrorKind::InvalidArgument, "adam: learning rate must be > 0");
    net.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(net.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(net.step));

    auto update = [&](std::vector<double>& p, std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v) {
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double grad = g[j] + cfg.weight_decay * p[j];
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * grad;
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * grad * grad;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
    };
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        update(net.weights[i], net.w_grad[i], net.w_m[i], net.w_v[i]);
        update(net.biases[i], net.b_grad[i], net.b_m[i], net.b_v[i]);
    }
    net.zero_grad();
}

void copy_params(const NetParams& src, NetParams& dst) {
    require(src.layers.size() == dst.layers.size(), ErrorKind::InvalidArgument,
            "copy_params: layer count mismatch");
    dst.weights = src.weights;
    dst.biases = src.biases;
}

std::vector<double> softmax(const std::vector<double>& logits, double temperature) {
    require(!logits.empty(), ErrorKind::InvalidArgument, "softmax: empty input");
    require(temperature > 0.0, ErrorKind::InvalidArgument, "softmax: temperature must be > 0");
    double top = *std::max_element(logits.begin(), logits.end());
    require(std::isfinite(top), ErrorKind::Numeric, "softmax: non-finite logits");
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp((logits[i] - top) / temperature);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

namespace {

constexpr char kNetMagic[6] = {'K', 'N', 'E', 'T', '1', '\0'};

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}
void put_i32(std::string& buf, std::int32_t v) { put_u32(buf, std::uint32_t(v)); }
void put_f64_array(std::string& buf, const std::vector<double>& a) {
    put_u64(buf, a.size());
    for (double d : a) put_u64(buf, std::bit_cast<std::uint64_t>(d));
}

struct NetReader {
    const std::string& bytes;
    std::size_t pos = 0;
    const std::string& path;

    void need(std::size_t n) {
        require(pos + n <= bytes.size(), ErrorKind::MissingArtifact,
                "truncated checkpoint: " + path);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(bytes[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(bytes[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    std::vector<double> f64_array() {
        std::uint64_t len = u64();
        std::vector<double> a(len);
        for (auto& d : a) d = std::bit_cast<double>(u64());
        return a;
    }
};

}  // namespace

void write_net(const NetParams& net, const std::string& path) {
    std::string buf;
    put_u32(buf, std::uint32_t(net.layers.size()));
    for (const auto& s : net.layers) {
        buf.push_back(char(s.kind));
        put_i32(buf, s.in_ch);
        put_i32(buf, s.out_ch);
        put_i32(buf, s.ksize);
        put_i32(buf, s.in_features);
        put_i32(buf, s.out_features);
        put_i32(buf, s.skip_source);
    }
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        put_f64_array(buf, net.weights[i]);
        put_f64_array(buf, net.biases[i]);
    }
    put_u64(buf, std::uint64_t(net.step));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::Io, "cannot open for writing: " + path);
    out.write(kNetMagic, sizeof(kNetMagic));
    out.write(buf.data(), std::streamsize(buf.size()));
    require(out.good(), ErrorKind::Io, "write failed: " + path);
}

NetParams read_net(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::MissingArtifact, "missing checkpoint: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    require(bytes.size() >= sizeof(kNetMagic) &&
                std::memcmp(bytes.data(), kNetMagic, sizeof(kNetMagic)) == 0,
            ErrorKind::MissingArtifact, "bad magic in checkpoint: " + path);
    std::string body = bytes.substr(sizeof(kNetMagic));
    NetReader r{body, 0, path};

    const std::uint32_t count = r.u32();
    std::vector<LayerSpec> layers;
    for (std::uint32_t i = 0; i < count; ++i) {
        r.need(1);
        LayerSpec s;
        s.kind = LayerKind(std::uint8_t(body[r.pos++]));
        require(std::uint8_t(s.kind) <= std::uint8_t(LayerKind::Dense), ErrorKind::MissingArtifact,
                "bad layer kind in checkpoint: " + path);
        s.in_ch = std::int32_t(r.u32());
        s.out_ch = std::int32_t(r.u32());
        s.ksize = std::int32_t(r.u32());
        s.in_features = std::int32_t(r.u32());
        s.out_features = std::int32_t(r.u32());
        s.skip_source = std::int32_t(r.u32());
        layers.push_back(s);
    }

    NetParams net = make_net(layers, 0);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::vector<double> w = r.f64_array();
        std::vector<double> b = r.f64_array();
        require(w.size() == net.weights[i].size() && b.size() == net.biases[i].size(),
                ErrorKind::MissingArtifact, "array size mismatch in checkpoint: " + path);
        net.weights[i] = std::move(w);
        net.biases[i] = std::move(b);
    }
    net.step = std::int64_t(r.u64());
    require(r.pos == body.size(), ErrorKind::MissingArtifact,
            "trailing bytes in checkpoint: " + path);
    return net;
}

}  // namespace ksamp
