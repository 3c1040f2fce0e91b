// amsgrad.hpp
// AMSGrad: Adam with a running elementwise maximum of the second-moment
// estimate. Both first and max-second moments are bias-corrected.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "qgaze/errors.hpp"

namespace qgaze {

struct AmsgradState {
    double alpha = 0.002;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::vector<double> m;     // first moment
    std::vector<double> v;     // second moment
    std::vector<double> v_hat; // elementwise running max of v, nondecreasing
    std::size_t t = 0;

    static AmsgradState init(std::size_t n, double alpha = 0.002, double beta1 = 0.9,
                             double beta2 = 0.999, double epsilon = 1e-8) {
        AmsgradState s;
        s.alpha = alpha;
        s.beta1 = beta1;
        s.beta2 = beta2;
        s.epsilon = epsilon;
        s.m.assign(n, 0.0);
        s.v.assign(n, 0.0);
        s.v_hat.assign(n, 0.0);
        return s;
    }
};

// One update step; params are modified in place.
//   m <- b1 m + (1-b1) g        v <- b2 v + (1-b2) g^2      vhat <- max(vhat, v)
//   param -= alpha * (m / (1-b1^t)) / (sqrt(vhat / (1-b2^t)) + eps)
inline void amsgrad_step(AmsgradState& state, std::span<double> params, std::span<const double> grads) {
    if (params.size() != state.m.size() || grads.size() != state.m.size()) {
        throw config_error("amsgrad_step: shape mismatch");
    }
    for (double g : grads) {
        if (!std::isfinite(g)) {
            throw numeric_error("amsgrad_step: non-finite gradient");
        }
    }
    ++state.t;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        if (state.v[i] > state.v_hat[i]) state.v_hat[i] = state.v[i];
        const double m_hat = state.m[i] / bc1;
        const double v_corr = state.v_hat[i] / bc2;
        params[i] -= state.alpha * m_hat / (std::sqrt(v_corr) + state.epsilon);
    }
}

} // namespace qgaze
