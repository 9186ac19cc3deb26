#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sclc/engine.hpp"
#include "sclc/optimizer.hpp"
#include "sclc/rng.hpp"
#include "sclc/tensor.hpp"

namespace sclc {

enum class Stage : std::uint8_t { Pretrained = 0, Finetuned = 1 };

inline const char* stage_name(Stage s) {
    return s == Stage::Pretrained ? "pretrained" : "finetuned";
}

// Architecture description. The encoder is conv/relu/pool blocks (one per
// channel entry) closed by global average pooling, so the embedding dim is
// the last conv's channel count.
struct ModelSpec {
    std::size_t input_channels = 3;
    std::size_t input_height = 32;
    std::size_t input_width = 32;
    std::vector<std::size_t> encoder_channels = {16, 32, 64};
    std::size_t projection_hidden = 64;
    std::size_t projection_dim = 32;
    std::size_t classes = 2;

    std::size_t embedding_dim() const { return encoder_channels.back(); }

    void validate() const {
        if (input_channels == 0 || input_height == 0 || input_width == 0)
            throw std::invalid_argument("ModelSpec: input dimensions must be positive");
        if (encoder_channels.empty())
            throw std::invalid_argument("ModelSpec: encoder needs at least one conv block");
        for (std::size_t c : encoder_channels)
            if (c == 0) throw std::invalid_argument("ModelSpec: encoder channel count of 0");
        const std::size_t div = std::size_t{1} << encoder_channels.size();
        if (input_height % div != 0 || input_width % div != 0)
            throw std::invalid_argument(
                "ModelSpec: input " + std::to_string(input_height) + "x" +
                std::to_string(input_width) + " not divisible by the pooling factor " +
                std::to_string(div));
        if (projection_hidden == 0 || projection_dim == 0)
            throw std::invalid_argument("ModelSpec: projection dims must be positive");
        if (classes < 2) throw std::invalid_argument("ModelSpec: needs at least 2 classes");
    }

    std::vector<LayerSpec> encoder_layers() const {
        std::vector<LayerSpec> out;
        std::size_t prev = input_channels;
        for (std::size_t c : encoder_channels) {
            out.push_back(LayerSpec::conv2d(prev, c));
            out.push_back(LayerSpec::relu());
            out.push_back(LayerSpec::maxpool2());
            prev = c;
        }
        out.push_back(LayerSpec::gap());
        return out;
    }

    std::vector<LayerSpec> projection_layers() const {
        return {LayerSpec::dense(embedding_dim(), projection_hidden), LayerSpec::relu(),
                LayerSpec::dense(projection_hidden, projection_dim)};
    }

    std::vector<LayerSpec> classifier_layers() const {
        return {LayerSpec::dense(embedding_dim(), classes), LayerSpec::softmax()};
    }

    /// Layer ids of the encoder's conv layers, shallowest first.
    std::vector<std::size_t> conv_layer_ids() const {
        std::vector<std::size_t> ids;
        for (std::size_t i = 0; i < encoder_channels.size(); ++i) ids.push_back(3 * i);
        return ids;
    }

    bool operator==(const ModelSpec&) const = default;
};

struct Model {
    ModelSpec spec;
    Network encoder;
    Network projection;
    Network classifier;
    Stage stage = Stage::Pretrained;
    bool encoder_frozen = false;
};

/// Build a model with all parameters zero (checkpoint loading fills them in).
inline Model make_model(const ModelSpec& spec) {
    spec.validate();
    Model m;
    m.spec = spec;
    m.encoder = Network("encoder", spec.encoder_layers());
    m.projection = Network("projection", spec.projection_layers());
    m.classifier = Network("classifier", spec.classifier_layers());
    return m;
}

/// Glorot-uniform weights, zero biases; one RNG substream per seed, consumed
/// in fixed parameter order, so the result is a pure function of (spec, seed).
inline Model init(const ModelSpec& spec, std::uint64_t seed) {
    Model m = make_model(spec);
    Rng rng(derive_seed(seed, 1));
    auto fill = [&](Network& net) {
        for (std::size_t i = 0; i < net.size(); ++i) {
            Layer& layer = net.layer(i);
            if (!layer.spec.has_params()) continue;
            double fan_in = 0.0, fan_out = 0.0;
            if (layer.spec.kind == LayerKind::Conv2d) {
                fan_in = static_cast<double>(layer.spec.in_channels * 9);
                fan_out = static_cast<double>(layer.spec.out_channels * 9);
            } else {
                fan_in = static_cast<double>(layer.spec.in_dim);
                fan_out = static_cast<double>(layer.spec.out_dim);
            }
            const double bound = std::sqrt(6.0 / (fan_in + fan_out));
            for (double& w : layer.weight.values()) w = rng.uniform(-bound, bound);
        }
    };
    fill(m.encoder);
    fill(m.projection);
    fill(m.classifier);
    return m;
}

/// Encoder features for a batch at the model's input resolution.
inline Tensor embed(const Model& m, const Tensor& batch) {
    require_shape(batch,
                  {batch.rank() == 4 ? batch.dim(0) : 0, m.spec.input_channels,
                   m.spec.input_height, m.spec.input_width},
                  "embed: batch");
    return forward_only(m.encoder, batch);
}

// -------- row L2 normalization (the projection head's final op) --------

struct RowNormalized {
    Tensor output;                       // unit-norm rows
    std::vector<double> norms;           // pre-normalization norms
    std::vector<std::size_t> zero_rows;  // rows replaced by the first basis vector
};

inline RowNormalized normalize_rows(const Tensor& x) {
    require_rank(x, 2, "normalize_rows: input");
    const std::size_t b = x.dim(0), p = x.dim(1);
    RowNormalized r;
    r.output = Tensor({b, p});
    r.norms.resize(b);
    for (std::size_t i = 0; i < b; ++i) {
        const double* row = x.data() + i * p;
        double s = 0.0;
        for (std::size_t j = 0; j < p; ++j) s += row[j] * row[j];
        const double norm = std::sqrt(s);
        r.norms[i] = norm;
        double* out = r.output.data() + i * p;
        if (norm == 0.0) {
            out[0] = 1.0;
            r.zero_rows.push_back(i);
        } else {
            for (std::size_t j = 0; j < p; ++j) out[j] = row[j] / norm;
        }
    }
    return r;
}

/// d(x/‖x‖)/dx applied to grad: (g − (g·y)y)/‖x‖; zero for replaced rows.
inline Tensor normalize_rows_backward(const RowNormalized& fwd, const Tensor& grad_out) {
    require_shape(grad_out, fwd.output.shape(), "normalize_rows_backward: gradient");
    const std::size_t b = fwd.output.dim(0), p = fwd.output.dim(1);
    Tensor din({b, p});
    for (std::size_t i = 0; i < b; ++i) {
        if (fwd.norms[i] == 0.0) continue;
        const double* y = fwd.output.data() + i * p;
        const double* g = grad_out.data() + i * p;
        double dot = 0.0;
        for (std::size_t j = 0; j < p; ++j) dot += g[j] * y[j];
        double* d = din.data() + i * p;
        for (std::size_t j = 0; j < p; ++j) d[j] = (g[j] - dot * y[j]) / fwd.norms[i];
    }
    return din;
}

/// Projection-head output with unit rows. `zero_rows`, when given, receives
/// the indices of rows that collapsed to zero before normalization.
inline Tensor project(const Model& m, const Tensor& embeddings,
                      std::vector<std::size_t>* zero_rows = nullptr) {
    RowNormalized r = normalize_rows(forward_only(m.projection, embeddings));
    if (zero_rows) *zero_rows = r.zero_rows;
    return r.output;
}

/// Class probabilities for a batch of embeddings.
inline Tensor classify(const Model& m, const Tensor& embeddings) {
    return forward_only(m.classifier, embeddings);
}

inline void freeze_encoder(Model& m) { m.encoder_frozen = true; }

// -------- optimizer wiring that honors the freeze flag --------

struct ModelOptimizer {
    AdamWOptions options;
    AdamWState encoder_state, projection_state, classifier_state;

    /// Contrastive-stage step. On a frozen model the encoder and projection
    /// are left bit-identical.
    void step_contrastive(Model& m, const Gradients& encoder_grads,
                          const Gradients& projection_grads) {
        if (m.encoder_frozen) return;
        adamw_step(m.encoder, encoder_grads, encoder_state, options);
        adamw_step(m.projection, projection_grads, projection_state, options);
    }

    void step_classifier(Model& m, const Gradients& classifier_grads) {
        adamw_step(m.classifier, classifier_grads, classifier_state, options);
    }
};

// -------- checkpoint persistence --------
//
// Layout: "SCLC", u32 version=1, u8 stage, u32 tensor count, then per tensor
// u16 name length, name, u8 ndim, ndim x u32 dims, product x f64 values.
// All integers and doubles little-endian. The model spec rides along as
// leading rank-1 "spec.*" tensors so one framing covers everything.

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

inline void put_tensor(std::string& out, const std::string& name, const Tensor& t) {
    if (name.size() > 0xffff)
        throw std::invalid_argument("checkpoint: tensor name too long: " + name);
    put_u16(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    out.push_back(static_cast<char>(t.rank()));
    for (std::size_t i = 0; i < t.rank(); ++i) {
        if (t.dim(i) > 0xffffffffull)
            throw std::invalid_argument("checkpoint: dimension too large in " + name);
        put_u32(out, static_cast<std::uint32_t>(t.dim(i)));
    }
    for (std::size_t i = 0; i < t.size(); ++i) put_f64(out, t[i]);
}

inline Tensor vector_tensor(const std::vector<std::size_t>& v) {
    Tensor t({v.size()});
    for (std::size_t i = 0; i < v.size(); ++i) t[i] = static_cast<double>(v[i]);
    return t;
}

struct ByteReader {
    const std::string& buf;
    const std::string& path;
    std::size_t pos = 0;

    void need(std::size_t n, const char* what) {
        if (pos + n > buf.size())
            throw std::runtime_error("checkpoint '" + path + "': truncated while reading " +
                                     what);
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return static_cast<std::uint8_t>(buf[pos++]);
    }
    std::uint16_t u16(const char* what) {
        need(2, what);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i)
            v |= static_cast<std::uint16_t>(static_cast<std::uint8_t>(buf[pos++])) << (8 * i);
        return v;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos++])) << (8 * i);
        return v;
    }
    double f64(const char* what) {
        need(8, what);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i)
            bits |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf[pos++])) << (8 * i);
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
    std::string bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace detail

inline void save_checkpoint(const Model& m, const std::string& path) {
    std::string out;
    out += "SCLC";
    detail::put_u32(out, 1);
    out.push_back(static_cast<char>(static_cast<std::uint8_t>(m.stage)));

    std::vector<std::pair<std::string, const Tensor*>> params;
    auto collect = [&](const Network& net) {
        net.for_each_param([&](const std::string& name, std::size_t, bool, const Tensor& t) {
            params.emplace_back(name, &t);
        });
    };
    collect(m.encoder);
    collect(m.projection);
    collect(m.classifier);

    const Tensor spec_input = detail::vector_tensor(
        {m.spec.input_channels, m.spec.input_height, m.spec.input_width});
    const Tensor spec_channels = detail::vector_tensor(m.spec.encoder_channels);
    const Tensor spec_projection =
        detail::vector_tensor({m.spec.projection_hidden, m.spec.projection_dim});
    const Tensor spec_classes = detail::vector_tensor({m.spec.classes});

    detail::put_u32(out, static_cast<std::uint32_t>(4 + params.size()));
    detail::put_tensor(out, "spec.input", spec_input);
    detail::put_tensor(out, "spec.encoder_channels", spec_channels);
    detail::put_tensor(out, "spec.projection", spec_projection);
    detail::put_tensor(out, "spec.classes", spec_classes);
    for (const auto& [name, t] : params) detail::put_tensor(out, name, *t);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("checkpoint '" + path + "': cannot open for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("checkpoint '" + path + "': write failed");
}

inline Model load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint '" + path + "': cannot open");
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    detail::ByteReader r{buf, path};
    if (r.bytes(4, "magic") != "SCLC")
        throw std::runtime_error("checkpoint '" + path + "': bad magic (not a checkpoint file)");
    const std::uint32_t version = r.u32("version");
    if (version != 1)
        throw std::runtime_error("checkpoint '" + path + "': unsupported version " +
                                 std::to_string(version));
    const std::uint8_t stage_tag = r.u8("stage tag");
    if (stage_tag > 1)
        throw std::runtime_error("checkpoint '" + path + "': unknown stage tag " +
                                 std::to_string(stage_tag));
    const std::uint32_t count = r.u32("tensor count");

    std::map<std::string, Tensor> tensors;
    for (std::uint32_t ti = 0; ti < count; ++ti) {
        const std::uint16_t name_len = r.u16("tensor name length");
        const std::string name = r.bytes(name_len, "tensor name");
        const std::uint8_t ndim = r.u8("tensor rank");
        std::vector<std::size_t> shape;
        std::size_t total = 1;
        for (std::uint8_t d = 0; d < ndim; ++d) {
            const std::uint32_t extent = r.u32("tensor dims");
            if (extent == 0)
                throw std::runtime_error("checkpoint '" + path + "': zero extent in tensor '" +
                                         name + "'");
            shape.push_back(extent);
            total *= extent;
        }
        std::vector<double> values(total);
        for (std::size_t i = 0; i < total; ++i) values[i] = r.f64("tensor values");
        if (!tensors.emplace(name, Tensor::from_data(shape, std::move(values))).second)
            throw std::runtime_error("checkpoint '" + path + "': duplicate tensor '" + name +
                                     "'");
    }
    if (r.pos != buf.size())
        throw std::runtime_error("checkpoint '" + path + "': trailing bytes after tensor data");

    auto meta = [&](const std::string& name) -> const Tensor& {
        auto it = tensors.find(name);
        if (it == tensors.end())
            throw std::runtime_error("checkpoint '" + path + "': missing tensor '" + name + "'");
        return it->second;
    };
    auto as_sizes = [](const Tensor& t) {
        std::vector<std::size_t> v(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) v[i] = static_cast<std::size_t>(t[i]);
        return v;
    };

    ModelSpec spec;
    const std::vector<std::size_t> input = as_sizes(meta("spec.input"));
    if (input.size() != 3)
        throw std::runtime_error("checkpoint '" + path + "': malformed spec.input");
    spec.input_channels = input[0];
    spec.input_height = input[1];
    spec.input_width = input[2];
    spec.encoder_channels = as_sizes(meta("spec.encoder_channels"));
    const std::vector<std::size_t> proj = as_sizes(meta("spec.projection"));
    if (proj.size() != 2)
        throw std::runtime_error("checkpoint '" + path + "': malformed spec.projection");
    spec.projection_hidden = proj[0];
    spec.projection_dim = proj[1];
    const std::vector<std::size_t> classes = as_sizes(meta("spec.classes"));
    if (classes.size() != 1)
        throw std::runtime_error("checkpoint '" + path + "': malformed spec.classes");
    spec.classes = classes[0];

    Model m;
    try {
        m = make_model(spec);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error("checkpoint '" + path + "': invalid stored spec: " + e.what());
    }
    m.stage = static_cast<Stage>(stage_tag);

    std::size_t used = 4;
    auto assign = [&](Network& net) {
        net.for_each_param([&](const std::string& name, std::size_t, bool, Tensor& param) {
            auto it = tensors.find(name);
            if (it == tensors.end())
                throw std::runtime_error("checkpoint '" + path + "': missing tensor '" + name +
                                         "'");
            if (it->second.shape() != param.shape())
                throw std::runtime_error("checkpoint '" + path + "': tensor '" + name +
                                         "' has shape " + shape_string(it->second.shape()) +
                                         ", expected " + shape_string(param.shape()));
            param = it->second;
            ++used;
        });
    };
    assign(m.encoder);
    assign(m.projection);
    assign(m.classifier);
    if (used != tensors.size())
        throw std::runtime_error("checkpoint '" + path + "': contains unexpected extra tensors");
    return m;
}

}  // namespace sclc
