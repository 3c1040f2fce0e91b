// generator.hpp
// Variational quantum generator: a ring-entangled RY/RZ ansatz, its output
// distribution over the 2^N computational basis states, the adversarial
// generator loss, and analytic gradients via the parameter-shift rule.

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "qgaze/errors.hpp"
#include "qgaze/rng.hpp"
#include "qgaze/statevector.hpp"

namespace qgaze {

// Circuit topology. The circuit is an initial rotation layer followed by
// `layers` blocks of [ring CX entanglement + rotation layer]. A rotation
// layer applies RY then RZ to every qubit, so there are 2*N*(layers+1)
// trainable angles. The entanglement ring connects qubit q (control) to
// qubit (q+1) mod N (target); a single qubit has no ring.
struct AnsatzConfig {
    std::size_t n_qubits = 3;
    std::size_t layers = 1;

    std::size_t parameter_count() const { return 2 * n_qubits * (layers + 1); }
    std::size_t levels() const { return std::size_t{1} << n_qubits; }
};

// Angle layout: layer-major, qubit-major within a layer, RY before RZ.
using ParameterVector = std::vector<double>;

namespace detail {
inline std::atomic<std::uint64_t> circuit_evals{0};
}

// Number of build_state invocations since the last reset. Used to verify
// gradient-evaluation budgets.
inline std::uint64_t circuit_eval_count() { return detail::circuit_evals.load(); }
inline void reset_circuit_eval_count() { detail::circuit_evals.store(0); }

inline ParameterVector init_generator_params(const AnsatzConfig& config, Rng& rng) {
    ParameterVector theta(config.parameter_count());
    for (double& t : theta) t = rng.uniform(-std::numbers::pi, std::numbers::pi);
    return theta;
}

// G_theta |0...0>.
inline StateVector build_state(const AnsatzConfig& config, const ParameterVector& theta) {
    if (theta.size() != config.parameter_count()) {
        throw config_error("parameter vector has " + std::to_string(theta.size()) +
                           " angles, ansatz needs " + std::to_string(config.parameter_count()));
    }
    detail::circuit_evals.fetch_add(1, std::memory_order_relaxed);
    const std::size_t n = config.n_qubits;
    StateVector state = init_zero(n);
    std::size_t idx = 0;
    auto rotation_layer = [&](StateVector s) {
        for (std::size_t q = 0; q < n; ++q) {
            s = apply_rotation(std::move(s), Axis::Y, q, theta[idx++]);
            s = apply_rotation(std::move(s), Axis::Z, q, theta[idx++]);
        }
        return s;
    };
    state = rotation_layer(std::move(state));
    for (std::size_t l = 0; l < config.layers; ++l) {
        if (n > 1) {
            for (std::size_t q = 0; q < n; ++q) {
                state = apply_cx(std::move(state), q, (q + 1) % n);
            }
        }
        state = rotation_layer(std::move(state));
    }
    return state;
}

inline ProbVector output_distribution(const AnsatzConfig& config, const ParameterVector& theta) {
    return probabilities(build_state(config, theta));
}

// L_G = -sum_j p_j log D(g^j). disc_outputs holds one score per basis value
// and must be strictly inside (0,1); the trainer clamps before calling.
inline double generator_loss(const ProbVector& probs, const std::vector<double>& disc_outputs) {
    if (disc_outputs.size() != probs.size()) {
        throw config_error("need one discriminator score per basis state");
    }
    double loss = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        const double d = disc_outputs[j];
        if (!(d > 0.0 && d < 1.0)) {
            throw std::domain_error("discriminator score outside (0,1) at basis " + std::to_string(j));
        }
        loss -= probs[j] * std::log(d);
    }
    return loss;
}

// Parameter-shift rule: dp/dtheta_i = (p(theta + pi/2 e_i) - p(theta - pi/2 e_i)) / 2.
// Costs exactly two circuit evaluations.
inline std::vector<double> shift_prob_gradient(const AnsatzConfig& config, const ParameterVector& theta,
                                               std::size_t param_index) {
    if (param_index >= config.parameter_count()) {
        throw std::out_of_range("parameter index out of range");
    }
    ParameterVector shifted = theta;
    shifted[param_index] = theta[param_index] + std::numbers::pi / 2.0;
    const ProbVector plus = output_distribution(config, shifted);
    shifted[param_index] = theta[param_index] - std::numbers::pi / 2.0;
    const ProbVector minus = output_distribution(config, shifted);
    std::vector<double> grad(plus.size());
    for (std::size_t j = 0; j < grad.size(); ++j) {
        grad[j] = 0.5 * (plus[j] - minus[j]);
    }
    return grad;
}

// dL_G/dtheta_i = -sum_j (dp_j/dtheta_i) log D(g^j), assembled from the
// parameter-shift rule; 2 * parameter_count circuit evaluations in total.
inline ParameterVector generator_gradient(const AnsatzConfig& config, const ParameterVector& theta,
                                          const std::vector<double>& disc_outputs) {
    if (disc_outputs.size() != config.levels()) {
        throw config_error("need one discriminator score per basis state");
    }
    std::vector<double> log_d(disc_outputs.size());
    for (std::size_t j = 0; j < disc_outputs.size(); ++j) {
        const double d = disc_outputs[j];
        if (!(d > 0.0 && d < 1.0)) {
            throw std::domain_error("discriminator score outside (0,1) at basis " + std::to_string(j));
        }
        log_d[j] = std::log(d);
    }
    ParameterVector grad(config.parameter_count());
    for (std::size_t i = 0; i < grad.size(); ++i) {
        const std::vector<double> dp = shift_prob_gradient(config, theta, i);
        double g = 0.0;
        for (std::size_t j = 0; j < dp.size(); ++j) g -= dp[j] * log_d[j];
        grad[i] = g;
    }
    return grad;
}

} // namespace qgaze
