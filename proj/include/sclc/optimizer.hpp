#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sclc/engine.hpp"
#include "sclc/tensor.hpp"

namespace sclc {

struct AdamWOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
};

// First/second moment buffers, keyed by parameter name. The step counter is
// shared by every parameter updated through the same state object.
struct AdamWState {
    struct Slot {
        std::vector<double> m, v;
    };
    std::map<std::string, Slot> slots;
    std::uint64_t step = 0;
};

namespace detail {

inline void adamw_update(const std::string& name, Tensor& param, const Tensor& grad,
                         AdamWState::Slot& slot, std::uint64_t step, const AdamWOptions& o) {
    if (param.shape() != grad.shape())
        throw std::invalid_argument("adamw: gradient shape " + shape_string(grad.shape()) +
                                    " does not match parameter '" + name + "' " +
                                    shape_string(param.shape()));
    if (!grad.all_finite())
        throw std::runtime_error("adamw: non-finite gradient for parameter '" + name + "'");
    const std::size_t n = param.size();
    if (slot.m.empty()) {
        slot.m.assign(n, 0.0);
        slot.v.assign(n, 0.0);
    }
    const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i];
        slot.m[i] = o.beta1 * slot.m[i] + (1.0 - o.beta1) * g;
        slot.v[i] = o.beta2 * slot.v[i] + (1.0 - o.beta2) * g * g;
        const double mhat = slot.m[i] / bc1;
        const double vhat = slot.v[i] / bc2;
        param[i] -= o.lr * (mhat / (std::sqrt(vhat) + o.eps) + o.weight_decay * param[i]);
    }
}

}  // namespace detail

/// One decoupled-weight-decay Adam step over every parameter of the network.
/// Gradients come from backward() on a tape of this network.
inline void adamw_step(Network& net, const Gradients& grads, AdamWState& state,
                       const AdamWOptions& opts) {
    if (grads.weight_grads.size() != net.size() || grads.bias_grads.size() != net.size())
        throw std::invalid_argument("adamw: gradients do not cover network '" + net.name() + "'");
    ++state.step;
    net.for_each_param([&](const std::string& name, std::size_t layer, bool is_weight,
                           Tensor& param) {
        const Tensor& g = is_weight ? grads.weight_grads[layer] : grads.bias_grads[layer];
        if (g.size() == 0)
            throw std::invalid_argument("adamw: missing gradient for parameter '" + name + "'");
        detail::adamw_update(name, param, g, state.slots[name], state.step, opts);
    });
    net.bump_version();
}

}  // namespace sclc
