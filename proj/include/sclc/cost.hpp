#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sclc {

enum class CostMode { Uniform, Balanced, Explicit };

inline const char* cost_mode_name(CostMode m) {
    switch (m) {
        case CostMode::Uniform: return "uniform";
        case CostMode::Balanced: return "balanced";
        case CostMode::Explicit: return "explicit";
    }
    return "?";
}

inline CostMode parse_cost_mode(const std::string& name) {
    if (name == "uniform") return CostMode::Uniform;
    if (name == "balanced") return CostMode::Balanced;
    if (name == "explicit") return CostMode::Explicit;
    throw std::invalid_argument("unknown cost mode '" + name +
                                "' (expected uniform, balanced or explicit)");
}

struct ClassWeights {
    std::vector<double> values;
    CostMode mode = CostMode::Uniform;
};

/// Uniform: all ones. Balanced: w_c = N / (K * n_c), which makes every class
/// contribute equal total weight (sum of w_c * n_c = N).
inline ClassWeights compute_class_weights(const std::vector<std::size_t>& counts,
                                          CostMode mode) {
    if (counts.empty()) throw std::invalid_argument("compute_class_weights: no classes");
    if (mode == CostMode::Explicit)
        throw std::invalid_argument(
            "compute_class_weights: explicit weights are supplied, not computed");
    ClassWeights w;
    w.mode = mode;
    if (mode == CostMode::Uniform) {
        w.values.assign(counts.size(), 1.0);
        return w;
    }
    std::size_t total = 0;
    for (std::size_t c : counts) total += c;
    const double k = static_cast<double>(counts.size());
    w.values.resize(counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0)
            throw std::invalid_argument("compute_class_weights: class " + std::to_string(c) +
                                        " has zero samples in balanced mode");
        w.values[c] = static_cast<double>(total) / (k * static_cast<double>(counts[c]));
    }
    return w;
}

}  // namespace sclc
