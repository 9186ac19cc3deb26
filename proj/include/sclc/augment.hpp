#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "sclc/rng.hpp"
#include "sclc/tensor.hpp"

namespace sclc {

struct AugmentPolicy {
    double crop_min = 0.7, crop_max = 1.0;
    double hflip_prob = 0.5;
    double vflip_prob = 0.5;
    double color_drop_prob = 0.2;
    double brightness = 0.2;
    double contrast = 0.2;
    double saturation = 0.2;
    std::size_t target_height = 32;
    std::size_t target_width = 32;

    void validate() const {
        auto prob = [](double p, const char* what) {
            if (!(p >= 0.0 && p <= 1.0))
                throw std::invalid_argument(std::string("AugmentPolicy: ") + what +
                                            " must lie in [0,1]");
        };
        prob(hflip_prob, "hflip probability");
        prob(vflip_prob, "vflip probability");
        prob(color_drop_prob, "color-drop probability");
        if (!(crop_min > 0.0 && crop_min <= crop_max && crop_max <= 1.0))
            throw std::invalid_argument("AugmentPolicy: crop fractions must satisfy 0 < min <= max <= 1");
        if (brightness < 0.0 || contrast < 0.0 || saturation < 0.0)
            throw std::invalid_argument("AugmentPolicy: jitter strengths must be >= 0");
        if (brightness >= 1.0 || contrast >= 1.0 || saturation >= 1.0)
            throw std::invalid_argument("AugmentPolicy: jitter strengths must be < 1");
        if (target_height == 0 || target_width == 0)
            throw std::invalid_argument("AugmentPolicy: target resolution must be positive");
    }
};

inline Tensor hflip(const Tensor& img) {
    require_rank(img, 3, "hflip: image");
    const std::size_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
    Tensor out({c, h, w});
    for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) out.at(ci, y, x) = img.at(ci, y, w - 1 - x);
    return out;
}

inline Tensor vflip(const Tensor& img) {
    require_rank(img, 3, "vflip: image");
    const std::size_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
    Tensor out({c, h, w});
    for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) out.at(ci, y, x) = img.at(ci, h - 1 - y, x);
    return out;
}

/// Luma-weighted grayscale; all three channels receive the gray value.
inline Tensor grayscale(const Tensor& img) {
    require_rank(img, 3, "grayscale: image");
    if (img.dim(0) != 3) throw std::invalid_argument("grayscale: expects 3 channels");
    const std::size_t h = img.dim(1), w = img.dim(2);
    Tensor out({3, h, w});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const double g =
                0.299 * img.at(0, y, x) + 0.587 * img.at(1, y, x) + 0.114 * img.at(2, y, x);
            out.at(0, y, x) = g;
            out.at(1, y, x) = g;
            out.at(2, y, x) = g;
        }
    return out;
}

/// Half-pixel-centered bilinear resize: output pixel i samples the source at
/// (i+0.5)*scale - 0.5, clamped to the border.
inline Tensor resize_bilinear(const Tensor& img, std::size_t target_h, std::size_t target_w) {
    require_rank(img, 3, "resize_bilinear: image");
    if (target_h == 0 || target_w == 0)
        throw std::invalid_argument("resize_bilinear: zero target extent");
    const std::size_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
    if (h == 0 || w == 0) throw std::invalid_argument("resize_bilinear: empty source");
    if (h == target_h && w == target_w) return img;

    const double sy = static_cast<double>(h) / static_cast<double>(target_h);
    const double sx = static_cast<double>(w) / static_cast<double>(target_w);
    Tensor out({c, target_h, target_w});
    for (std::size_t y = 0; y < target_h; ++y) {
        double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
        const std::size_t y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t x = 0; x < target_w; ++x) {
            double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
            const std::size_t x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - static_cast<double>(x0);
            for (std::size_t ci = 0; ci < c; ++ci) {
                const double top =
                    (1.0 - wx) * img.at(ci, y0, x0) + wx * img.at(ci, y0, x1);
                const double bot =
                    (1.0 - wx) * img.at(ci, y1, x0) + wx * img.at(ci, y1, x1);
                out.at(ci, y, x) = (1.0 - wy) * top + wy * bot;
            }
        }
    }
    return out;
}

/// Stochastic training augmentation: crop, flips, color drop, color jitter,
/// clamp, resize. Every random quantity is drawn in a fixed order whether or
/// not the transform fires, so the rng advances identically on every path.
inline Tensor augment(const Tensor& img, const AugmentPolicy& policy, Rng& rng) {
    require_rank(img, 3, "augment: image");
    policy.validate();
    if (img.dim(0) != 3) throw std::invalid_argument("augment: expects a [3,H,W] image");
    const std::size_t h = img.dim(1), w = img.dim(2);
    if (h < 2 || w < 2)
        throw std::invalid_argument("augment: image " + std::to_string(h) + "x" +
                                    std::to_string(w) + " is smaller than 2x2");

    const double frac = rng.uniform(policy.crop_min, policy.crop_max);
    std::size_t ch = static_cast<std::size_t>(
        std::lround(frac * static_cast<double>(h)));
    std::size_t cw = static_cast<std::size_t>(
        std::lround(frac * static_cast<double>(w)));
    ch = std::clamp<std::size_t>(ch, 1, h);
    cw = std::clamp<std::size_t>(cw, 1, w);
    const std::size_t y0 = static_cast<std::size_t>(rng.below(h - ch + 1));
    const std::size_t x0 = static_cast<std::size_t>(rng.below(w - cw + 1));
    const bool do_hflip = rng.bernoulli(policy.hflip_prob);
    const bool do_vflip = rng.bernoulli(policy.vflip_prob);
    const bool do_drop = rng.bernoulli(policy.color_drop_prob);
    const double db = rng.uniform(-policy.brightness, policy.brightness);
    const double dc = rng.uniform(-policy.contrast, policy.contrast);
    const double ds = rng.uniform(-policy.saturation, policy.saturation);

    Tensor cur({3, ch, cw});
    for (std::size_t ci = 0; ci < 3; ++ci)
        for (std::size_t y = 0; y < ch; ++y)
            for (std::size_t x = 0; x < cw; ++x)
                cur.at(ci, y, x) = img.at(ci, y0 + y, x0 + x);

    if (do_hflip) cur = hflip(cur);
    if (do_vflip) cur = vflip(cur);
    if (do_drop) cur = grayscale(cur);

    if (db != 0.0)
        for (double& v : cur.values()) v *= 1.0 + db;
    if (dc != 0.0) {
        double mean = 0.0;
        for (std::size_t y = 0; y < ch; ++y)
            for (std::size_t x = 0; x < cw; ++x)
                mean += 0.299 * cur.at(0, y, x) + 0.587 * cur.at(1, y, x) +
                        0.114 * cur.at(2, y, x);
        mean /= static_cast<double>(ch * cw);
        for (double& v : cur.values()) v = mean + (1.0 + dc) * (v - mean);
    }
    if (ds != 0.0)
        for (std::size_t y = 0; y < ch; ++y)
            for (std::size_t x = 0; x < cw; ++x) {
                const double g = 0.299 * cur.at(0, y, x) + 0.587 * cur.at(1, y, x) +
                                 0.114 * cur.at(2, y, x);
                for (std::size_t ci = 0; ci < 3; ++ci)
                    cur.at(ci, y, x) = g + (1.0 + ds) * (cur.at(ci, y, x) - g);
            }

    for (double& v : cur.values()) v = std::clamp(v, 0.0, 1.0);
    return resize_bilinear(cur, policy.target_height, policy.target_width);
}

}  // namespace sclc
