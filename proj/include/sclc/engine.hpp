#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sclc/tensor.hpp"

namespace sclc {

// The six layer primitives. Conv is fixed to 3x3 / stride 1 / zero-pad 1,
// pooling to 2x2 max with stride 2.
enum class LayerKind { Conv2d, Relu, MaxPool2, Gap, Dense, Softmax };

inline const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::Relu: return "relu";
        case LayerKind::MaxPool2: return "maxpool2";
        case LayerKind::Gap: return "gap";
        case LayerKind::Dense: return "dense";
        case LayerKind::Softmax: return "softmax";
    }
    return "?";
}

struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    std::size_t in_channels = 0, out_channels = 0;  // conv2d
    std::size_t in_dim = 0, out_dim = 0;            // dense

    static LayerSpec conv2d(std::size_t in_ch, std::size_t out_ch) {
        LayerSpec s;
        s.kind = LayerKind::Conv2d;
        s.in_channels = in_ch;
        s.out_channels = out_ch;
        return s;
    }
    static LayerSpec relu() { return LayerSpec{LayerKind::Relu, 0, 0, 0, 0}; }
    static LayerSpec maxpool2() { return LayerSpec{LayerKind::MaxPool2, 0, 0, 0, 0}; }
    static LayerSpec gap() { return LayerSpec{LayerKind::Gap, 0, 0, 0, 0}; }
    static LayerSpec dense(std::size_t in, std::size_t out) {
        LayerSpec s;
        s.kind = LayerKind::Dense;
        s.in_dim = in;
        s.out_dim = out;
        return s;
    }
    static LayerSpec softmax() { return LayerSpec{LayerKind::Softmax, 0, 0, 0, 0}; }

    bool has_params() const { return kind == LayerKind::Conv2d || kind == LayerKind::Dense; }
};

struct Layer {
    LayerSpec spec;
    Tensor weight;  // conv: [oc,ic,3,3]; dense: [out,in]
    Tensor bias;    // conv: [oc]; dense: [out]
};

// An ordered chain of layers with parameters. Layer ids are vector indices.
class Network {
public:
    Network() = default;

    Network(std::string name, const std::vector<LayerSpec>& specs) : name_(std::move(name)) {
        layers_.reserve(specs.size());
        for (const LayerSpec& s : specs) {
            Layer layer;
            layer.spec = s;
            if (s.kind == LayerKind::Conv2d) {
                if (s.in_channels == 0 || s.out_channels == 0)
                    throw std::invalid_argument(name_ + ": conv2d layer needs channel counts");
                layer.weight = Tensor({s.out_channels, s.in_channels, 3, 3});
                layer.bias = Tensor({s.out_channels});
            } else if (s.kind == LayerKind::Dense) {
                if (s.in_dim == 0 || s.out_dim == 0)
                    throw std::invalid_argument(name_ + ": dense layer needs dimensions");
                layer.weight = Tensor({s.out_dim, s.in_dim});
                layer.bias = Tensor({s.out_dim});
            }
            layers_.push_back(std::move(layer));
        }
    }

    const std::string& name() const { return name_; }
    std::size_t size() const { return layers_.size(); }
    const Layer& layer(std::size_t i) const { return layers_.at(i); }
    Layer& layer(std::size_t i) { return layers_.at(i); }
    const std::vector<Layer>& layers() const { return layers_; }

    // Parameter mutation bumps the version; tapes from older versions go stale.
    std::uint64_t version() const { return version_; }
    void bump_version() { ++version_; }

    std::string layer_label(std::size_t i) const {
        return name_ + " layer " + std::to_string(i) + " (" +
               layer_kind_name(layers_[i].spec.kind) + ")";
    }

    /// Validate shape chaining from the given input shape; returns the output shape.
    std::vector<std::size_t> output_shape(std::vector<std::size_t> shape) const {
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const LayerSpec& s = layers_[i].spec;
            auto fail = [&](const std::string& msg) {
                throw std::invalid_argument(layer_label(i) + ": " + msg + " (input " +
                                            shape_string(shape) + ")");
            };
            switch (s.kind) {
                case LayerKind::Conv2d:
                    if (shape.size() != 4) fail("expects a [B,C,H,W] input");
                    if (shape[1] != s.in_channels)
                        fail("expects " + std::to_string(s.in_channels) + " input channels");
                    shape[1] = s.out_channels;
                    break;
                case LayerKind::Relu:
                    break;
                case LayerKind::MaxPool2:
                    if (shape.size() != 4) fail("expects a [B,C,H,W] input");
                    if (shape[2] < 2 || shape[3] < 2) fail("needs spatial extent >= 2");
                    shape[2] /= 2;
                    shape[3] /= 2;
                    break;
                case LayerKind::Gap:
                    if (shape.size() != 4) fail("expects a [B,C,H,W] input");
                    shape = {shape[0], shape[1]};
                    break;
                case LayerKind::Dense:
                    if (shape.size() != 2) fail("expects a [B,D] input");
                    if (shape[1] != s.in_dim)
                        fail("expects input dim " + std::to_string(s.in_dim) + ", got " +
                             std::to_string(shape[1]));
                    shape[1] = s.out_dim;
                    break;
                case LayerKind::Softmax:
                    if (shape.size() != 2) fail("expects a [B,K] input");
                    break;
            }
        }
        return shape;
    }

    /// Visit every parameter tensor in layer order: f(name, layer_index, is_weight, tensor).
    template <typename F>
    void for_each_param(F&& f) {
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            if (!layers_[i].spec.has_params()) continue;
            f(name_ + "." + std::to_string(i) + ".weight", i, true, layers_[i].weight);
            f(name_ + "." + std::to_string(i) + ".bias", i, false, layers_[i].bias);
        }
    }

    template <typename F>
    void for_each_param(F&& f) const {
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            if (!layers_[i].spec.has_params()) continue;
            f(name_ + "." + std::to_string(i) + ".weight", i, true, layers_[i].weight);
            f(name_ + "." + std::to_string(i) + ".bias", i, false, layers_[i].bias);
        }
    }

private:
    std::string name_;
    std::vector<Layer> layers_;
    std::uint64_t version_ = 0;
};

namespace detail {

// -------- layer kernels --------
// Conv works on an explicitly zero-padded copy of the input; that keeps the
// inner loops branch-free and the summation order fixed (deterministic).

inline Tensor pad1(const Tensor& in) {
    const std::size_t b = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
    Tensor out({b, c, h + 2, w + 2});
    for (std::size_t bi = 0; bi < b; ++bi)
        for (std::size_t ci = 0; ci < c; ++ci)
            for (std::size_t y = 0; y < h; ++y) {
                const double* src = in.data() + ((bi * c + ci) * h + y) * w;
                double* dst = out.data() + ((bi * c + ci) * (h + 2) + y + 1) * (w + 2) + 1;
                for (std::size_t x = 0; x < w; ++x) dst[x] = src[x];
            }
    return out;
}

inline Tensor conv2d_forward(const Tensor& padded, const Tensor& weight, const Tensor& bias,
                             std::size_t h, std::size_t w) {
    const std::size_t b = padded.dim(0), ic = padded.dim(1), oc = weight.dim(0);
    const std::size_t pw = w + 2;
    Tensor out({b, oc, h, w});
    for (std::size_t bi = 0; bi < b; ++bi) {
        for (std::size_t o = 0; o < oc; ++o) {
            double* oplane = out.data() + (bi * oc + o) * h * w;
            const double bv = bias[o];
            for (std::size_t i = 0; i < h * w; ++i) oplane[i] = bv;
            for (std::size_t c = 0; c < ic; ++c) {
                const double* iplane = padded.data() + (bi * ic + c) * (h + 2) * pw;
                const double* wk = weight.data() + (o * ic + c) * 9;
                for (std::size_t ky = 0; ky < 3; ++ky) {
                    for (std::size_t kx = 0; kx < 3; ++kx) {
                        const double wv = wk[ky * 3 + kx];
                        for (std::size_t y = 0; y < h; ++y) {
                            const double* irow = iplane + (y + ky) * pw + kx;
                            double* orow = oplane + y * w;
                            for (std::size_t x = 0; x < w; ++x) orow[x] += wv * irow[x];
                        }
                    }
                }
            }
        }
    }
    return out;
}

inline void conv2d_backward(const Tensor& padded, const Tensor& weight, const Tensor& dout,
                            Tensor& din, Tensor& dweight, Tensor& dbias) {
    const std::size_t b = dout.dim(0), oc = dout.dim(1), h = dout.dim(2), w = dout.dim(3);
    const std::size_t ic = weight.dim(1), pw = w + 2;
    dweight = Tensor({oc, ic, 3, 3});
    dbias = Tensor({oc});
    Tensor dpad({b, ic, h + 2, w + 2});

    for (std::size_t bi = 0; bi < b; ++bi) {
        for (std::size_t o = 0; o < oc; ++o) {
            const double* dplane = dout.data() + (bi * oc + o) * h * w;
            double s = 0.0;
            for (std::size_t i = 0; i < h * w; ++i) s += dplane[i];
            dbias[o] += s;
            for (std::size_t c = 0; c < ic; ++c) {
                const double* iplane = padded.data() + (bi * ic + c) * (h + 2) * pw;
                double* gplane = dpad.data() + (bi * ic + c) * (h + 2) * pw;
                const double* wk = weight.data() + (o * ic + c) * 9;
                double* dwk = dweight.data() + (o * ic + c) * 9;
                for (std::size_t ky = 0; ky < 3; ++ky) {
                    for (std::size_t kx = 0; kx < 3; ++kx) {
                        const double wv = wk[ky * 3 + kx];
                        double acc = 0.0;
                        for (std::size_t y = 0; y < h; ++y) {
                            const double* irow = iplane + (y + ky) * pw + kx;
                            double* grow = gplane + (y + ky) * pw + kx;
                            const double* drow = dplane + y * w;
                            for (std::size_t x = 0; x < w; ++x) {
                                acc += drow[x] * irow[x];
                                grow[x] += wv * drow[x];
                            }
                        }
                        dwk[ky * 3 + kx] += acc;
                    }
                }
            }
        }
    }
    // crop the padded input-gradient back to [B,C,H,W]
    din = Tensor({b, ic, h, w});
    for (std::size_t bi = 0; bi < b; ++bi)
        for (std::size_t c = 0; c < ic; ++c)
            for (std::size_t y = 0; y < h; ++y) {
                const double* src = dpad.data() + ((bi * ic + c) * (h + 2) + y + 1) * pw + 1;
                double* dst = din.data() + ((bi * ic + c) * h + y) * w;
                for (std::size_t x = 0; x < w; ++x) dst[x] = src[x];
            }
}

inline Tensor relu_forward(const Tensor& in) {
    Tensor out = in;
    for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
    return out;
}

inline Tensor relu_backward(const Tensor& in, const Tensor& dout) {
    Tensor din = dout;
    for (std::size_t i = 0; i < din.size(); ++i)
        if (in[i] <= 0.0) din[i] = 0.0;
    return din;
}

inline Tensor maxpool2_forward(const Tensor& in, std::vector<std::uint32_t>& argmax) {
    const std::size_t b = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
    const std::size_t oh = h / 2, ow = w / 2;
    Tensor out({b, c, oh, ow});
    argmax.assign(out.size(), 0);
    std::size_t oi = 0;
    for (std::size_t bi = 0; bi < b; ++bi)
        for (std::size_t ci = 0; ci < c; ++ci) {
            const double* plane = in.data() + (bi * c + ci) * h * w;
            for (std::size_t y = 0; y < oh; ++y)
                for (std::size_t x = 0; x < ow; ++x) {
                    // first max in scan order wins ties
                    std::uint32_t best = static_cast<std::uint32_t>(2 * y * w + 2 * x);
                    double bv = plane[best];
                    const std::uint32_t cand[3] = {
                        static_cast<std::uint32_t>(2 * y * w + 2 * x + 1),
                        static_cast<std::uint32_t>((2 * y + 1) * w + 2 * x),
                        static_cast<std::uint32_t>((2 * y + 1) * w + 2 * x + 1)};
                    for (std::uint32_t idx : cand)
                        if (plane[idx] > bv) {
                            bv = plane[idx];
                            best = idx;
                        }
                    out[oi] = bv;
                    argmax[oi] = best;
                    ++oi;
                }
        }
    return out;
}

inline Tensor maxpool2_backward(const Tensor& in, const Tensor& dout,
                                const std::vector<std::uint32_t>& argmax) {
    const std::size_t b = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
    Tensor din({b, c, h, w});
    const std::size_t planes = b * c, osize = dout.dim(2) * dout.dim(3);
    for (std::size_t p = 0; p < planes; ++p) {
        double* gplane = din.data() + p * h * w;
        const double* dplane = dout.data() + p * osize;
        const std::uint32_t* amax = argmax.data() + p * osize;
        for (std::size_t i = 0; i < osize; ++i) gplane[amax[i]] += dplane[i];
    }
    return din;
}

inline Tensor gap_forward(const Tensor& in) {
    const std::size_t b = in.dim(0), c = in.dim(1), hw = in.dim(2) * in.dim(3);
    Tensor out({b, c});
    for (std::size_t p = 0; p < b * c; ++p) {
        const double* plane = in.data() + p * hw;
        double s = 0.0;
        for (std::size_t i = 0; i < hw; ++i) s += plane[i];
        out[p] = s / static_cast<double>(hw);
    }
    return out;
}

inline Tensor gap_backward(const Tensor& in, const Tensor& dout) {
    const std::size_t b = in.dim(0), c = in.dim(1), hw = in.dim(2) * in.dim(3);
    Tensor din({b, c, in.dim(2), in.dim(3)});
    for (std::size_t p = 0; p < b * c; ++p) {
        const double g = dout[p] / static_cast<double>(hw);
        double* plane = din.data() + p * hw;
        for (std::size_t i = 0; i < hw; ++i) plane[i] = g;
    }
    return din;
}

inline Tensor dense_forward(const Tensor& in, const Tensor& weight, const Tensor& bias) {
    const std::size_t b = in.dim(0), din = in.dim(1), dout = weight.dim(0);
    Tensor out({b, dout});
    for (std::size_t bi = 0; bi < b; ++bi) {
        const double* x = in.data() + bi * din;
        for (std::size_t o = 0; o < dout; ++o) {
            const double* wrow = weight.data() + o * din;
            double s = bias[o];
            for (std::size_t i = 0; i < din; ++i) s += wrow[i] * x[i];
            out.at(bi, o) = s;
        }
    }
    return out;
}

inline void dense_backward(const Tensor& in, const Tensor& weight, const Tensor& dout,
                           Tensor& din, Tensor& dweight, Tensor& dbias) {
    const std::size_t b = in.dim(0), ni = in.dim(1), no = weight.dim(0);
    din = Tensor({b, ni});
    dweight = Tensor({no, ni});
    dbias = Tensor({no});
    for (std::size_t bi = 0; bi < b; ++bi) {
        const double* x = in.data() + bi * ni;
        const double* g = dout.data() + bi * no;
        double* dx = din.data() + bi * ni;
        for (std::size_t o = 0; o < no; ++o) {
            const double go = g[o];
            dbias[o] += go;
            const double* wrow = weight.data() + o * ni;
            double* dwrow = dweight.data() + o * ni;
            for (std::size_t i = 0; i < ni; ++i) {
                dx[i] += go * wrow[i];
                dwrow[i] += go * x[i];
            }
        }
    }
}

inline Tensor softmax_forward(const Tensor& in) {
    const std::size_t b = in.dim(0), k = in.dim(1);
    Tensor out({b, k});
    for (std::size_t bi = 0; bi < b; ++bi) {
        const double* x = in.data() + bi * k;
        double* y = out.data() + bi * k;
        double mx = x[0];
        for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, x[i]);
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            y[i] = std::exp(x[i] - mx);
            s += y[i];
        }
        for (std::size_t i = 0; i < k; ++i) y[i] /= s;
    }
    return out;
}

inline Tensor softmax_backward(const Tensor& out, const Tensor& dout) {
    const std::size_t b = out.dim(0), k = out.dim(1);
    Tensor din({b, k});
    for (std::size_t bi = 0; bi < b; ++bi) {
        const double* y = out.data() + bi * k;
        const double* g = dout.data() + bi * k;
        double dot = 0.0;
        for (std::size_t i = 0; i < k; ++i) dot += y[i] * g[i];
        double* d = din.data() + bi * k;
        for (std::size_t i = 0; i < k; ++i) d[i] = y[i] * (g[i] - dot);
    }
    return din;
}

}  // namespace detail

// Saved per-layer state for the backward pass. Conv entries keep the padded
// input; maxpool keeps argmax indices; softmax keeps its output.
struct TapeEntry {
    Tensor input;                      // layer input (padded copy for conv)
    std::size_t in_h = 0, in_w = 0;    // conv: unpadded spatial dims
    std::vector<std::uint32_t> argmax; // maxpool
    Tensor output;                     // softmax
};

class Tape {
public:
    const Network* net = nullptr;
    std::uint64_t version = 0;
    std::vector<TapeEntry> entries;
    std::vector<std::size_t> output_shape;

    void check_fresh() const {
        if (!net) throw std::runtime_error("backward: tape has no network");
        if (net->version() != version)
            throw std::runtime_error("backward: stale tape for '" + net->name() +
                                     "' (parameters mutated since forward)");
    }
};

struct ForwardResult {
    Tensor output;
    Tape tape;
    std::map<std::size_t, Tensor> activations;  // captured layer outputs
};

struct Gradients {
    std::vector<Tensor> weight_grads;  // per layer; empty tensor when layer has no params
    std::vector<Tensor> bias_grads;
    std::map<std::size_t, Tensor> activation_grads;  // captured layers only
    Tensor input_grad;
};

/// Run the network on a batch, recording a tape. `capture` lists layer ids whose
/// output activations should be kept (and differentiated on backward).
inline ForwardResult forward(const Network& net, const Tensor& batch,
                             const std::set<std::size_t>& capture = {}) {
    net.output_shape(batch.shape());  // validates chaining, throws naming the layer
    for (std::size_t id : capture)
        if (id >= net.size())
            throw std::invalid_argument(net.name() + ": capture id " + std::to_string(id) +
                                        " out of range");
    ForwardResult r;
    r.tape.net = &net;
    r.tape.version = net.version();
    r.tape.entries.resize(net.size());
    Tensor cur = batch;
    for (std::size_t i = 0; i < net.size(); ++i) {
        const Layer& layer = net.layer(i);
        TapeEntry& e = r.tape.entries[i];
        switch (layer.spec.kind) {
            case LayerKind::Conv2d: {
                e.in_h = cur.dim(2);
                e.in_w = cur.dim(3);
                e.input = detail::pad1(cur);
                cur = detail::conv2d_forward(e.input, layer.weight, layer.bias, e.in_h, e.in_w);
                break;
            }
            case LayerKind::Relu:
                e.input = cur;
                cur = detail::relu_forward(cur);
                break;
            case LayerKind::MaxPool2:
                e.input = cur;
                cur = detail::maxpool2_forward(cur, e.argmax);
                break;
            case LayerKind::Gap:
                e.input = cur;
                cur = detail::gap_forward(cur);
                break;
            case LayerKind::Dense:
                e.input = cur;
                cur = detail::dense_forward(cur, layer.weight, layer.bias);
                break;
            case LayerKind::Softmax:
                cur = detail::softmax_forward(cur);
                e.output = cur;
                break;
        }
        if (capture.count(i)) r.activations[i] = cur;
    }
    r.tape.output_shape = cur.shape();
    r.output = std::move(cur);
    return r;
}

/// Forward without a tape (inference).
inline Tensor forward_only(const Network& net, const Tensor& batch) {
    net.output_shape(batch.shape());
    Tensor cur = batch;
    std::vector<std::uint32_t> scratch;
    for (std::size_t i = 0; i < net.size(); ++i) {
        const Layer& layer = net.layer(i);
        switch (layer.spec.kind) {
            case LayerKind::Conv2d: {
                const std::size_t h = cur.dim(2), w = cur.dim(3);
                cur = detail::conv2d_forward(detail::pad1(cur), layer.weight, layer.bias, h, w);
                break;
            }
            case LayerKind::Relu: cur = detail::relu_forward(cur); break;
            case LayerKind::MaxPool2: cur = detail::maxpool2_forward(cur, scratch); break;
            case LayerKind::Gap: cur = detail::gap_forward(cur); break;
            case LayerKind::Dense: cur = detail::dense_forward(cur, layer.weight, layer.bias); break;
            case LayerKind::Softmax: cur = detail::softmax_forward(cur); break;
        }
    }
    return cur;
}

/// Run only layers [start, end) on an activation that is the input of `start`.
/// Used by tail-evaluation oracles; no tape.
inline Tensor forward_from(const Network& net, std::size_t start, const Tensor& activation) {
    Tensor cur = activation;
    std::vector<std::uint32_t> scratch;
    for (std::size_t i = start; i < net.size(); ++i) {
        const Layer& layer = net.layer(i);
        switch (layer.spec.kind) {
            case LayerKind::Conv2d: {
                const std::size_t h = cur.dim(2), w = cur.dim(3);
                cur = detail::conv2d_forward(detail::pad1(cur), layer.weight, layer.bias, h, w);
                break;
            }
            case LayerKind::Relu: cur = detail::relu_forward(cur); break;
            case LayerKind::MaxPool2: cur = detail::maxpool2_forward(cur, scratch); break;
            case LayerKind::Gap: cur = detail::gap_forward(cur); break;
            case LayerKind::Dense: cur = detail::dense_forward(cur, layer.weight, layer.bias); break;
            case LayerKind::Softmax: cur = detail::softmax_forward(cur); break;
        }
    }
    return cur;
}

/// Reverse pass seeded at the output of layer `start`. Returns parameter
/// gradients, gradients of captured activations, and the input gradient.
inline Gradients backward_from(const Tape& tape, const Tensor& seed_grad, std::size_t start,
                               const std::set<std::size_t>& capture = {}) {
    tape.check_fresh();
    const Network& net = *tape.net;
    if (start >= net.size()) throw std::invalid_argument("backward: start layer out of range");
    Gradients g;
    g.weight_grads.resize(net.size());
    g.bias_grads.resize(net.size());
    Tensor grad = seed_grad;
    for (std::size_t ii = start + 1; ii-- > 0;) {
        const Layer& layer = net.layer(ii);
        const TapeEntry& e = tape.entries[ii];
        if (capture.count(ii)) g.activation_grads[ii] = grad;
        switch (layer.spec.kind) {
            case LayerKind::Conv2d: {
                Tensor din;
                detail::conv2d_backward(e.input, layer.weight, grad, din, g.weight_grads[ii],
                                        g.bias_grads[ii]);
                grad = std::move(din);
                break;
            }
            case LayerKind::Relu:
                grad = detail::relu_backward(e.input, grad);
                break;
            case LayerKind::MaxPool2:
                grad = detail::maxpool2_backward(e.input, grad, e.argmax);
                break;
            case LayerKind::Gap:
                grad = detail::gap_backward(e.input, grad);
                break;
            case LayerKind::Dense: {
                Tensor din;
                detail::dense_backward(e.input, layer.weight, grad, din, g.weight_grads[ii],
                                       g.bias_grads[ii]);
                grad = std::move(din);
                break;
            }
            case LayerKind::Softmax:
                grad = detail::softmax_backward(e.output, grad);
                break;
        }
    }
    g.input_grad = std::move(grad);
    return g;
}

/// Reverse pass from the network output. `capture` must be (a subset of) the
/// set captured at forward time; gradients of uncaptured activations are not kept.
inline Gradients backward(const Tape& tape, const Tensor& output_grad,
                          const std::set<std::size_t>& capture = {}) {
    if (tape.net && output_grad.shape() != tape.output_shape)
        throw std::invalid_argument("backward: output gradient shape " +
                                    shape_string(output_grad.shape()) +
                                    " does not match forward output " +
                                    shape_string(tape.output_shape));
    if (tape.net == nullptr || tape.net->size() == 0)
        throw std::runtime_error("backward: empty tape");
    return backward_from(tape, output_grad, tape.net->size() - 1, capture);
}

}  // namespace sclc
