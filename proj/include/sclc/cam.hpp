#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sclc/augment.hpp"
#include "sclc/engine.hpp"
#include "sclc/model.hpp"
#include "sclc/tensor.hpp"

namespace sclc {

enum class CamMethod { GradCam, GradCamPP, ScoreCamFast, LayerCam };

inline const char* cam_method_name(CamMethod m) {
    switch (m) {
        case CamMethod::GradCam: return "gradcam";
        case CamMethod::GradCamPP: return "gradcam++";
        case CamMethod::ScoreCamFast: return "scorecam-fast";
        case CamMethod::LayerCam: return "layercam";
    }
    return "?";
}

inline CamMethod parse_cam_method(const std::string& name) {
    if (name == "gradcam") return CamMethod::GradCam;
    if (name == "gradcam++") return CamMethod::GradCamPP;
    if (name == "scorecam-fast") return CamMethod::ScoreCamFast;
    if (name == "layercam") return CamMethod::LayerCam;
    throw std::invalid_argument("unknown CAM method '" + name +
                                "' (expected gradcam, gradcam++, scorecam-fast or layercam)");
}

struct CamRequest {
    CamMethod method = CamMethod::GradCam;
    std::optional<std::size_t> layer;         // default: last conv layer
    std::optional<std::size_t> target_class;  // default: argmax prediction
    std::size_t scorecam_budget = 16;
};

struct Heatmap {
    Tensor values;  // [H,W] in [0,1] at input resolution
    CamMethod method = CamMethod::GradCam;
    std::size_t target_class = 0;
    std::size_t layer = 0;
    bool empty_explanation = false;
};

// -------- raw map formulas on a captured activation A and gradient g --------
// A and g are [C,h,w]; results are [h,w] and nonnegative by construction.

/// Channel weights = spatial mean of g; map = ReLU(sum_k w_k A_k).
inline Tensor gradcam_map(const Tensor& a, const Tensor& g) {
    require_rank(a, 3, "gradcam: activation");
    require_shape(g, a.shape(), "gradcam: gradient");
    const std::size_t c = a.dim(0), hw = a.dim(1) * a.dim(2);
    Tensor map({a.dim(1), a.dim(2)});
    for (std::size_t k = 0; k < c; ++k) {
        const double* gp = g.data() + k * hw;
        double w = 0.0;
        for (std::size_t i = 0; i < hw; ++i) w += gp[i];
        w /= static_cast<double>(hw);
        const double* ap = a.data() + k * hw;
        for (std::size_t i = 0; i < hw; ++i) map[i] += w * ap[i];
    }
    for (double& v : map.values()) v = v > 0.0 ? v : 0.0;
    return map;
}

/// Higher-order weighting: alpha_ij = g_ij^2 / (2 g_ij^2 + sum_ab A_ab g_ab^3 + eps),
/// w_k = sum_ij alpha_ij ReLU(g_ij); map = ReLU(sum_k w_k A_k).
inline Tensor gradcam_pp_map(const Tensor& a, const Tensor& g) {
    require_rank(a, 3, "gradcam++: activation");
    require_shape(g, a.shape(), "gradcam++: gradient");
    constexpr double eps = 1e-8;
    const std::size_t c = a.dim(0), hw = a.dim(1) * a.dim(2);
    Tensor map({a.dim(1), a.dim(2)});
    for (std::size_t k = 0; k < c; ++k) {
        const double* ap = a.data() + k * hw;
        const double* gp = g.data() + k * hw;
        double s = 0.0;
        for (std::size_t i = 0; i < hw; ++i) s += ap[i] * gp[i] * gp[i] * gp[i];
        double w = 0.0;
        for (std::size_t i = 0; i < hw; ++i) {
            const double g2 = gp[i] * gp[i];
            const double denom = 2.0 * g2 + s + eps;
            const double alpha = denom != 0.0 ? g2 / denom : 0.0;
            if (gp[i] > 0.0) w += alpha * gp[i];
        }
        for (std::size_t i = 0; i < hw; ++i) map[i] += w * ap[i];
    }
    for (double& v : map.values()) v = v > 0.0 ? v : 0.0;
    return map;
}

/// Elementwise positive-gradient weighting: map_ij = ReLU(sum_k ReLU(g_kij) A_kij).
inline Tensor layercam_map(const Tensor& a, const Tensor& g) {
    require_rank(a, 3, "layercam: activation");
    require_shape(g, a.shape(), "layercam: gradient");
    const std::size_t c = a.dim(0), hw = a.dim(1) * a.dim(2);
    Tensor map({a.dim(1), a.dim(2)});
    for (std::size_t k = 0; k < c; ++k) {
        const double* ap = a.data() + k * hw;
        const double* gp = g.data() + k * hw;
        for (std::size_t i = 0; i < hw; ++i)
            if (gp[i] > 0.0) map[i] += gp[i] * ap[i];
    }
    for (double& v : map.values()) v = v > 0.0 ? v : 0.0;
    return map;
}

/// Weighted channel combination for ScoreCAM: map = ReLU(sum over selected w_k A_k).
inline Tensor scorecam_combine(const Tensor& a, const std::vector<std::size_t>& channels,
                               const std::vector<double>& weights) {
    require_rank(a, 3, "scorecam: activation");
    if (channels.size() != weights.size())
        throw std::invalid_argument("scorecam: channel/weight count mismatch");
    const std::size_t hw = a.dim(1) * a.dim(2);
    Tensor map({a.dim(1), a.dim(2)});
    for (std::size_t s = 0; s < channels.size(); ++s) {
        const double* ap = a.data() + channels[s] * hw;
        for (std::size_t i = 0; i < hw; ++i) map[i] += weights[s] * ap[i];
    }
    for (double& v : map.values()) v = v > 0.0 ? v : 0.0;
    return map;
}

struct NormalizedMap {
    Tensor values;  // [H,W] in [0,1]
    bool degenerate = false;
};

/// Min-max normalize, then bilinearly upsample to the requested resolution.
/// A constant map (max = min) normalizes to all zeros and is flagged.
inline NormalizedMap normalize_heatmap(const Tensor& raw, std::size_t out_h, std::size_t out_w) {
    require_rank(raw, 2, "normalize_heatmap: map");
    NormalizedMap r;
    const double lo = raw.min_value(), hi = raw.max_value();
    if (hi == lo) {
        r.values = Tensor({out_h, out_w});
        r.degenerate = true;
        return r;
    }
    Tensor norm({1, raw.dim(0), raw.dim(1)});
    for (std::size_t i = 0; i < raw.size(); ++i) norm[i] = (raw[i] - lo) / (hi - lo);
    const Tensor up = resize_bilinear(norm, out_h, out_w);
    r.values = Tensor({out_h, out_w});
    std::copy(up.data(), up.data() + up.size(), r.values.data());
    return r;
}

namespace detail {

struct CamContext {
    Tensor activation;     // [C,h,w] rectified output of the explained conv block
    Tensor probabilities;  // [K]
    Tensor logits;         // [K]
    std::size_t target = 0;
    std::size_t layer = 0;
};

inline Tensor squeeze_batch(const Tensor& t) {
    std::vector<std::size_t> shape(t.shape().begin() + 1, t.shape().end());
    return Tensor::from_data(shape, std::vector<double>(t.data(), t.data() + t.size()));
}

inline std::size_t resolve_layer(const Model& m, const CamRequest& req) {
    const std::vector<std::size_t> convs = m.spec.conv_layer_ids();
    if (!req.layer) return convs.back();
    for (std::size_t id : convs)
        if (id == *req.layer) return id;
    std::string valid;
    for (std::size_t id : convs) valid += (valid.empty() ? "" : ", ") + std::to_string(id);
    throw std::invalid_argument("cam: layer " + std::to_string(*req.layer) +
                                " is not a conv layer (valid: " + valid + ")");
}

inline void check_explainable(const Model& m, const Tensor& image) {
    if (m.stage != Stage::Finetuned)
        throw std::invalid_argument("cam: model must be fine-tuned before explanation");
    require_shape(image, {m.spec.input_channels, m.spec.input_height, m.spec.input_width},
                  "cam: image");
}

inline Tensor as_batch(const Tensor& image) {
    std::vector<std::size_t> shape{1};
    shape.insert(shape.end(), image.shape().begin(), image.shape().end());
    return Tensor::from_data(shape, std::vector<double>(image.data(), image.data() + image.size()));
}

inline std::size_t argmax_row(const Tensor& row) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < row.size(); ++i)
        if (row[i] > row[best]) best = i;
    return best;
}

/// Forward the image, resolve target class, and (optionally) pull the
/// gradient of the target logit at the explained activation. The explained
/// layer names a conv block; the activation is its rectified output (the
/// relu that follows the conv), so maps combine nonnegative feature maps.
inline CamContext cam_context(const Model& m, const Tensor& image, const CamRequest& req,
                              Tensor* gradient) {
    check_explainable(m, image);
    CamContext ctx;
    ctx.layer = resolve_layer(m, req);
    const std::size_t captured = ctx.layer + 1;

    const Tensor batch = as_batch(image);
    ForwardResult enc = forward(m.encoder, batch, {captured});
    ForwardResult cls = forward(m.classifier, enc.output, {0});
    ctx.activation = squeeze_batch(enc.activations.at(captured));
    ctx.probabilities = squeeze_batch(cls.output);
    ctx.logits = squeeze_batch(cls.activations.at(0));
    ctx.target = req.target_class ? *req.target_class : argmax_row(ctx.probabilities);
    if (ctx.target >= m.spec.classes)
        throw std::invalid_argument("cam: target class " + std::to_string(ctx.target) +
                                    " out of range for " + std::to_string(m.spec.classes) +
                                    " classes");
    if (gradient) {
        Tensor seed({std::size_t{1}, m.spec.classes});
        seed.at(0, ctx.target) = 1.0;
        // seeding below the softmax differentiates the raw logit
        Gradients gc = backward_from(cls.tape, seed, 0);
        Gradients ge = backward(enc.tape, gc.input_grad, {captured});
        *gradient = squeeze_batch(ge.activation_grads.at(captured));
    }
    return ctx;
}

/// Pre-softmax logits for a batch of images (encoder + classifier dense layer).
inline Tensor batch_logits(const Model& m, const Tensor& batch) {
    const Tensor emb = forward_only(m.encoder, batch);
    ForwardResult cls = forward(m.classifier, emb, {0});
    return cls.activations.at(0);
}

}  // namespace detail

/// Full ScoreCAM machinery, exposed for oracle comparison: explicit channel
/// subset, per-channel normalized-mask scores from one batched forward.
inline Tensor scorecam_raw_map(const Model& m, const Tensor& image, const Tensor& activation,
                               std::size_t target, const std::vector<std::size_t>& channels) {
    const std::size_t h = activation.dim(1), w = activation.dim(2);
    const std::size_t ih = m.spec.input_height, iw = m.spec.input_width;
    const std::size_t n = channels.size();

    Tensor batch({n + 1, m.spec.input_channels, ih, iw});  // last row: zero baseline
    for (std::size_t s = 0; s < n; ++s) {
        Tensor chan({1, h, w});
        const double* ap = activation.data() + channels[s] * h * w;
        std::copy(ap, ap + h * w, chan.data());
        Tensor up = resize_bilinear(chan, ih, iw);
        const double lo = up.min_value(), hi = up.max_value();
        double* dst = batch.data() + s * m.spec.input_channels * ih * iw;
        if (hi > lo) {
            for (std::size_t c = 0; c < m.spec.input_channels; ++c)
                for (std::size_t i = 0; i < ih * iw; ++i)
                    dst[c * ih * iw + i] = image[c * ih * iw + i] * (up[i] - lo) / (hi - lo);
        }
        // constant channel: mask is all zero, row stays the zero image
    }

    const Tensor logits = detail::batch_logits(m, batch);
    const double base = logits.at(n, target);
    std::vector<double> scores(n);
    for (std::size_t s = 0; s < n; ++s) scores[s] = logits.at(s, target) - base;

    double mx = scores.empty() ? 0.0 : *std::max_element(scores.begin(), scores.end());
    double denom = 0.0;
    std::vector<double> weights(n);
    for (std::size_t s = 0; s < n; ++s) denom += std::exp(scores[s] - mx);
    for (std::size_t s = 0; s < n; ++s) weights[s] = std::exp(scores[s] - mx) / denom;

    return scorecam_combine(activation, channels, weights);
}

/// Channels ordered by descending spatial variance (index breaks ties), cut
/// to the requested budget.
inline std::vector<std::size_t> scorecam_select_channels(const Tensor& activation,
                                                         std::size_t budget) {
    if (budget == 0) throw std::invalid_argument("scorecam: channel budget must be >= 1");
    const std::size_t c = activation.dim(0), hw = activation.dim(1) * activation.dim(2);
    std::vector<double> var(c);
    for (std::size_t k = 0; k < c; ++k) {
        const double* ap = activation.data() + k * hw;
        double mean = 0.0;
        for (std::size_t i = 0; i < hw; ++i) mean += ap[i];
        mean /= static_cast<double>(hw);
        double v = 0.0;
        for (std::size_t i = 0; i < hw; ++i) v += (ap[i] - mean) * (ap[i] - mean);
        var[k] = v / static_cast<double>(hw);
    }
    std::vector<std::size_t> order(c);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return var[x] > var[y]; });
    order.resize(std::min(budget, c));
    std::sort(order.begin(), order.end());
    return order;
}

/// Compute a saliency map for one image with the requested method.
inline Heatmap compute_cam(const Model& m, const Tensor& image, const CamRequest& req) {
    Heatmap out;
    out.method = req.method;

    Tensor raw;
    if (req.method == CamMethod::ScoreCamFast) {
        detail::CamContext ctx = detail::cam_context(m, image, req, nullptr);
        const std::vector<std::size_t> channels =
            scorecam_select_channels(ctx.activation, req.scorecam_budget);
        raw = scorecam_raw_map(m, image, ctx.activation, ctx.target, channels);
        out.target_class = ctx.target;
        out.layer = ctx.layer;
    } else {
        Tensor gradient;
        detail::CamContext ctx = detail::cam_context(m, image, req, &gradient);
        switch (req.method) {
            case CamMethod::GradCam: raw = gradcam_map(ctx.activation, gradient); break;
            case CamMethod::GradCamPP: raw = gradcam_pp_map(ctx.activation, gradient); break;
            case CamMethod::LayerCam: raw = layercam_map(ctx.activation, gradient); break;
            case CamMethod::ScoreCamFast: break;  // handled above
        }
        out.target_class = ctx.target;
        out.layer = ctx.layer;
    }

    NormalizedMap norm = normalize_heatmap(raw, m.spec.input_height, m.spec.input_width);
    out.values = std::move(norm.values);
    out.empty_explanation = norm.degenerate;
    return out;
}

/// Five-stop linear color ramp: blue, cyan, green, yellow, red.
inline void heat_color(double v, double& r, double& g, double& b) {
    v = std::clamp(v, 0.0, 1.0);
    static constexpr double stops[5][3] = {
        {0.0, 0.0, 1.0}, {0.0, 1.0, 1.0}, {0.0, 1.0, 0.0}, {1.0, 1.0, 0.0}, {1.0, 0.0, 0.0}};
    const double scaled = v * 4.0;
    std::size_t lo = static_cast<std::size_t>(scaled);
    if (lo >= 4) lo = 3;
    const double t = scaled - static_cast<double>(lo);
    r = (1.0 - t) * stops[lo][0] + t * stops[lo + 1][0];
    g = (1.0 - t) * stops[lo][1] + t * stops[lo + 1][1];
    b = (1.0 - t) * stops[lo][2] + t * stops[lo + 1][2];
}

/// Alpha-blend the colormapped heatmap over the image.
inline Tensor overlay(const Tensor& image, const Tensor& heatmap, double alpha = 0.5) {
    require_rank(image, 3, "overlay: image");
    if (image.dim(0) != 3) throw std::invalid_argument("overlay: expects a [3,H,W] image");
    require_shape(heatmap, {image.dim(1), image.dim(2)}, "overlay: heatmap");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("overlay: alpha must lie in [0,1]");
    const std::size_t h = image.dim(1), w = image.dim(2);
    Tensor out({3, h, w});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double r, g, b;
            heat_color(heatmap.at(y, x), r, g, b);
            const double c[3] = {r, g, b};
            for (std::size_t ch = 0; ch < 3; ++ch)
                out.at(ch, y, x) = std::clamp(
                    (1.0 - alpha) * image.at(ch, y, x) + alpha * c[ch], 0.0, 1.0);
        }
    return out;
}

}  // namespace sclc
