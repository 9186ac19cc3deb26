#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sclc/tensor.hpp"

namespace sclc {

enum class LossKind { MaxMargin, TripletMargin, NPairs, NTXent, CrossEntropy };

inline const char* loss_kind_name(LossKind k) {
    switch (k) {
        case LossKind::MaxMargin: return "max-margin";
        case LossKind::TripletMargin: return "triplet-margin";
        case LossKind::NPairs: return "npairs";
        case LossKind::NTXent: return "ntxent";
        case LossKind::CrossEntropy: return "cross-entropy";
    }
    return "?";
}

inline LossKind parse_loss_kind(const std::string& name) {
    if (name == "max-margin") return LossKind::MaxMargin;
    if (name == "triplet-margin") return LossKind::TripletMargin;
    if (name == "npairs") return LossKind::NPairs;
    if (name == "ntxent") return LossKind::NTXent;
    if (name == "cross-entropy") return LossKind::CrossEntropy;
    throw std::invalid_argument(
        "unknown loss '" + name +
        "' (expected max-margin, triplet-margin, npairs, ntxent or cross-entropy)");
}

struct LossSpec {
    LossKind kind = LossKind::MaxMargin;
    double margin = 1.0;
    double temperature = 0.1;
    std::vector<double> class_weights;  // empty = unweighted cross-entropy

    static LossSpec for_kind(LossKind k) {
        LossSpec s;
        s.kind = k;
        s.margin = (k == LossKind::TripletMargin) ? 0.5 : 1.0;
        return s;
    }

    void validate() const {
        if (margin <= 0.0) throw std::invalid_argument("LossSpec: margin must be > 0");
        if (temperature <= 0.0) throw std::invalid_argument("LossSpec: temperature must be > 0");
        for (double w : class_weights)
            if (w <= 0.0)
                throw std::invalid_argument("LossSpec: class weights must all be > 0");
    }
};

struct LossResult {
    double value = 0.0;
    Tensor grad;  // w.r.t. the loss input (projections, or logits for cross-entropy)
    std::vector<std::string> warnings;
};

namespace detail {

inline void check_batch(const Tensor& z, const std::vector<std::size_t>& labels,
                        const char* what) {
    require_rank(z, 2, what);
    if (labels.size() != z.dim(0))
        throw std::invalid_argument(std::string(what) + ": " + std::to_string(labels.size()) +
                                    " labels for " + std::to_string(z.dim(0)) + " rows");
    if (z.dim(0) < 2)
        throw std::invalid_argument(std::string(what) + ": batch must hold at least 2 rows");
}

}  // namespace detail

/// Symmetric Euclidean distance matrix with an exactly zero diagonal.
inline Tensor pairwise_distances(const Tensor& z) {
    require_rank(z, 2, "pairwise_distances: input");
    const std::size_t b = z.dim(0), p = z.dim(1);
    if (b < 2) throw std::invalid_argument("pairwise_distances: needs at least 2 rows");
    Tensor d({b, b});
    for (std::size_t i = 0; i < b; ++i) {
        const double* zi = z.data() + i * p;
        for (std::size_t j = i + 1; j < b; ++j) {
            const double* zj = z.data() + j * p;
            double s = 0.0;
            for (std::size_t k = 0; k < p; ++k) {
                const double diff = zi[k] - zj[k];
                s += diff * diff;
            }
            const double dist = std::sqrt(s);
            d.at(i, j) = dist;
            d.at(j, i) = dist;
        }
    }
    return d;
}

/// Mean squared distance over positive pairs plus mean squared hinge
/// max(0, m - d) over negative pairs; pairs are unordered (i < j).
inline LossResult max_margin_loss(const Tensor& z, const std::vector<std::size_t>& labels,
                                  double margin) {
    detail::check_batch(z, labels, "max_margin_loss");
    const std::size_t b = z.dim(0), p = z.dim(1);
    const Tensor d = pairwise_distances(z);

    std::size_t npos = 0, nneg = 0;
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = i + 1; j < b; ++j)
            (labels[i] == labels[j] ? npos : nneg)++;

    LossResult r;
    r.grad = Tensor({b, p});
    if (npos == 0) r.warnings.push_back("max-margin: batch has no positive pairs");
    if (nneg == 0) r.warnings.push_back("max-margin: batch has no negative pairs");

    double pos_term = 0.0, neg_term = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        const double* zi = z.data() + i * p;
        for (std::size_t j = i + 1; j < b; ++j) {
            const double* zj = z.data() + j * p;
            const double dist = d.at(i, j);
            if (labels[i] == labels[j]) {
                pos_term += dist * dist;
                const double c = 2.0 / static_cast<double>(npos);
                for (std::size_t k = 0; k < p; ++k) {
                    const double diff = zi[k] - zj[k];
                    r.grad.at(i, k) += c * diff;
                    r.grad.at(j, k) -= c * diff;
                }
            } else {
                const double gap = margin - dist;
                if (gap > 0.0) {
                    neg_term += gap * gap;
                    if (dist > 0.0) {
                        const double c = -2.0 * gap / (dist * static_cast<double>(nneg));
                        for (std::size_t k = 0; k < p; ++k) {
                            const double diff = zi[k] - zj[k];
                            r.grad.at(i, k) += c * diff;
                            r.grad.at(j, k) -= c * diff;
                        }
                    }
                }
            }
        }
    }
    if (npos > 0) r.value += pos_term / static_cast<double>(npos);
    if (nneg > 0) r.value += neg_term / static_cast<double>(nneg);
    return r;
}

/// Mean hinge max(0, d_ap - d_an + m) over every ordered (anchor, positive)
/// pair combined with every negative.
inline LossResult triplet_margin_loss(const Tensor& z, const std::vector<std::size_t>& labels,
                                      double margin) {
    detail::check_batch(z, labels, "triplet_margin_loss");
    const std::size_t b = z.dim(0), p = z.dim(1);
    const Tensor d = pairwise_distances(z);

    std::size_t total = 0;
    for (std::size_t a = 0; a < b; ++a)
        for (std::size_t i = 0; i < b; ++i) {
            if (i == a || labels[i] != labels[a]) continue;
            for (std::size_t n = 0; n < b; ++n)
                if (labels[n] != labels[a]) ++total;
        }
    if (total == 0) throw std::invalid_argument("triplet_margin_loss: degenerate batch (no valid triplet)");

    LossResult r;
    r.grad = Tensor({b, p});
    const double inv = 1.0 / static_cast<double>(total);
    auto add_dist_grad = [&](std::size_t i, std::size_t j, double coeff) {
        // coeff * d(d_ij)/dz, with subgradient 0 at d_ij = 0
        const double dist = d.at(i, j);
        if (dist == 0.0) return;
        const double* zi = z.data() + i * p;
        const double* zj = z.data() + j * p;
        const double c = coeff / dist;
        for (std::size_t k = 0; k < p; ++k) {
            const double diff = zi[k] - zj[k];
            r.grad.at(i, k) += c * diff;
            r.grad.at(j, k) -= c * diff;
        }
    };

    for (std::size_t a = 0; a < b; ++a)
        for (std::size_t i = 0; i < b; ++i) {
            if (i == a || labels[i] != labels[a]) continue;
            for (std::size_t n = 0; n < b; ++n) {
                if (labels[n] == labels[a]) continue;
                const double v = d.at(a, i) - d.at(a, n) + margin;
                if (v > 0.0) {
                    r.value += v * inv;
                    add_dist_grad(a, i, inv);
                    add_dist_grad(a, n, -inv);
                }
            }
        }
    return r;
}

/// Per anchor with an in-batch positive: softmax cross-entropy over the dot
/// products to every other row, the positive being the lowest-index same-class
/// row. Mean over counted anchors.
inline LossResult npairs_loss(const Tensor& z, const std::vector<std::size_t>& labels) {
    detail::check_batch(z, labels, "npairs_loss");
    const std::size_t b = z.dim(0), p = z.dim(1);

    Tensor dots({b, b});
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < b; ++j) {
            double s = 0.0;
            const double* zi = z.data() + i * p;
            const double* zj = z.data() + j * p;
            for (std::size_t k = 0; k < p; ++k) s += zi[k] * zj[k];
            dots.at(i, j) = s;
        }

    std::vector<std::size_t> positive(b, b);  // b = none
    std::size_t counted = 0;
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j)
            if (j != i && labels[j] == labels[i]) {
                positive[i] = j;
                break;
            }
        if (positive[i] != b) ++counted;
    }
    if (counted == 0) throw std::invalid_argument("npairs_loss: no anchor has an in-batch positive");

    LossResult r;
    r.grad = Tensor({b, p});
    const double inv = 1.0 / static_cast<double>(counted);
    for (std::size_t i = 0; i < b; ++i) {
        if (positive[i] == b) continue;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < b; ++j)
            if (j != i) mx = std::max(mx, dots.at(i, j));
        double denom = 0.0;
        for (std::size_t j = 0; j < b; ++j)
            if (j != i) denom += std::exp(dots.at(i, j) - mx);
        r.value += inv * (std::log(denom) - (dots.at(i, positive[i]) - mx));
        for (std::size_t j = 0; j < b; ++j) {
            if (j == i) continue;
            double g = std::exp(dots.at(i, j) - mx) / denom;
            if (j == positive[i]) g -= 1.0;
            g *= inv;
            const double* zi = z.data() + i * p;
            const double* zj = z.data() + j * p;
            for (std::size_t k = 0; k < p; ++k) {
                r.grad.at(i, k) += g * zj[k];
                r.grad.at(j, k) += g * zi[k];
            }
        }
    }
    return r;
}

/// Supervised normalized-temperature cross-entropy, summed over anchors:
/// L = sum_i (-1/|P(i)|) sum_{p in P(i)} log( exp(z_i.z_p/t) / sum_{a!=i} exp(z_i.z_a/t) ).
inline LossResult ntxent_supervised_loss(const Tensor& z, const std::vector<std::size_t>& labels,
                                         double temperature) {
    detail::check_batch(z, labels, "ntxent_supervised_loss");
    if (temperature <= 0.0)
        throw std::invalid_argument("ntxent_supervised_loss: temperature must be > 0");
    const std::size_t b = z.dim(0), p = z.dim(1);

    Tensor s({b, b});
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < b; ++j) {
            double dot = 0.0;
            const double* zi = z.data() + i * p;
            const double* zj = z.data() + j * p;
            for (std::size_t k = 0; k < p; ++k) dot += zi[k] * zj[k];
            s.at(i, j) = dot / temperature;
        }

    std::vector<std::size_t> pos_count(b, 0);
    std::size_t counted = 0;
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j)
            if (j != i && labels[j] == labels[i]) ++pos_count[i];
        if (pos_count[i] > 0) ++counted;
    }
    if (counted == 0)
        throw std::invalid_argument("ntxent_supervised_loss: no anchor has an in-batch positive");

    LossResult r;
    r.grad = Tensor({b, p});
    Tensor ds({b, b});  // dL/ds_ij
    for (std::size_t i = 0; i < b; ++i) {
        if (pos_count[i] == 0) continue;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < b; ++j)
            if (j != i) mx = std::max(mx, s.at(i, j));
        double denom = 0.0;
        for (std::size_t j = 0; j < b; ++j)
            if (j != i) denom += std::exp(s.at(i, j) - mx);
        const double log_denom = std::log(denom) + mx;
        const double invp = 1.0 / static_cast<double>(pos_count[i]);
        for (std::size_t j = 0; j < b; ++j) {
            if (j == i) continue;
            const double q = std::exp(s.at(i, j) - mx) / denom;
            double g = q;
            if (labels[j] == labels[i]) {
                r.value += invp * (log_denom - s.at(i, j));
                g -= invp;
            }
            ds.at(i, j) = g;
        }
    }
    const double inv_t = 1.0 / temperature;
    for (std::size_t i = 0; i < b; ++i) {
        if (pos_count[i] == 0) continue;
        for (std::size_t j = 0; j < b; ++j) {
            if (j == i) continue;
            const double g = ds.at(i, j) * inv_t;
            const double* zi = z.data() + i * p;
            const double* zj = z.data() + j * p;
            for (std::size_t k = 0; k < p; ++k) {
                r.grad.at(i, k) += g * zj[k];
                r.grad.at(j, k) += g * zi[k];
            }
        }
    }
    return r;
}

/// Class-weighted cross-entropy on softmax probabilities. The gradient is
/// taken with respect to the pre-softmax logits, so the engine's backward
/// pass starts below the softmax layer.
inline LossResult weighted_cross_entropy(const Tensor& probs,
                                         const std::vector<std::size_t>& labels,
                                         const std::vector<double>& weights) {
    require_rank(probs, 2, "weighted_cross_entropy: probabilities");
    const std::size_t b = probs.dim(0), k = probs.dim(1);
    if (labels.size() != b)
        throw std::invalid_argument("weighted_cross_entropy: label count mismatch");
    if (!weights.empty() && weights.size() != k)
        throw std::invalid_argument("weighted_cross_entropy: expected " + std::to_string(k) +
                                    " class weights, got " + std::to_string(weights.size()));
    for (double w : weights)
        if (w <= 0.0)
            throw std::invalid_argument("weighted_cross_entropy: class weights must be > 0");

    LossResult r;
    r.grad = Tensor({b, k});
    const double invb = 1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
        const std::size_t y = labels[i];
        if (y >= k)
            throw std::invalid_argument("weighted_cross_entropy: label " + std::to_string(y) +
                                        " out of range for " + std::to_string(k) + " classes");
        const double w = weights.empty() ? 1.0 : weights[y];
        double py = probs.at(i, y);
        if (py < 1e-12) {
            r.warnings.push_back("cross-entropy: clamped zero probability at sample " +
                                 std::to_string(i));
            py = 1e-12;
        }
        r.value += invb * w * (-std::log(py));
        const double c = invb * w;
        for (std::size_t j = 0; j < k; ++j)
            r.grad.at(i, j) = c * (probs.at(i, j) - (j == y ? 1.0 : 0.0));
    }
    return r;
}

/// Dispatch a contrastive loss by spec. Cross-entropy has a different
/// signature and is rejected here.
inline LossResult contrastive_loss(const LossSpec& spec, const Tensor& z,
                                   const std::vector<std::size_t>& labels) {
    spec.validate();
    switch (spec.kind) {
        case LossKind::MaxMargin: return max_margin_loss(z, labels, spec.margin);
        case LossKind::TripletMargin: return triplet_margin_loss(z, labels, spec.margin);
        case LossKind::NPairs: return npairs_loss(z, labels);
        case LossKind::NTXent: return ntxent_supervised_loss(z, labels, spec.temperature);
        case LossKind::CrossEntropy:
            throw std::invalid_argument("contrastive_loss: cross-entropy is not a contrastive objective");
    }
    throw std::logic_error("contrastive_loss: unreachable");
}

}  // namespace sclc
