// statevector.hpp
// Dense complex statevector simulation of small qubit registers with the
// three gate types the variational ansatz needs: RY, RZ and CNOT.
//
// Basis convention: qubit 0 is the MOST significant bit of the basis
// index, so for N qubits the index of |b0 b1 ... b(N-1)> is
// b0*2^(N-1) + ... + b(N-1). Every module that maps basis states to
// discretization bins relies on this ordering.

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "qgaze/errors.hpp"
#include "qgaze/rng.hpp"

namespace qgaze {

inline constexpr std::size_t kMaxQubits = 20;

enum class Axis { Y, Z };

struct StateVector {
    std::size_t n_qubits = 0;
    std::vector<std::complex<double>> amplitudes;

    std::size_t dim() const { return amplitudes.size(); }
};

using ProbVector = std::vector<double>;

// |0...0>: amplitude 1 on basis index 0.
inline StateVector init_zero(std::size_t n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw config_error("n_qubits must be in [1, " + std::to_string(kMaxQubits) +
                           "], got " + std::to_string(n_qubits));
    }
    StateVector state;
    state.n_qubits = n_qubits;
    state.amplitudes.assign(std::size_t{1} << n_qubits, {0.0, 0.0});
    state.amplitudes[0] = {1.0, 0.0};
    return state;
}

// Single-qubit rotation by angle theta about Y or Z:
//   RY(t) = [[cos(t/2), -sin(t/2)], [sin(t/2), cos(t/2)]]
//   RZ(t) = diag(e^{-it/2}, e^{+it/2})
inline StateVector apply_rotation(StateVector state, Axis axis, std::size_t qubit, double theta) {
    if (qubit >= state.n_qubits) {
        throw std::out_of_range("qubit index " + std::to_string(qubit) + " out of range for " +
                                std::to_string(state.n_qubits) + " qubits");
    }
    if (!std::isfinite(theta)) {
        throw config_error("rotation angle must be finite");
    }
    const std::size_t stride = std::size_t{1} << (state.n_qubits - 1 - qubit);
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    auto& a = state.amplitudes;
    if (axis == Axis::Y) {
        for (std::size_t j = 0; j < a.size(); ++j) {
            if ((j & stride) == 0) {
                const std::complex<double> lo = a[j];
                const std::complex<double> hi = a[j | stride];
                a[j] = c * lo - s * hi;
                a[j | stride] = s * lo + c * hi;
            }
        }
    } else {
        const std::complex<double> phase_lo{c, -s};
        const std::complex<double> phase_hi{c, s};
        for (std::size_t j = 0; j < a.size(); ++j) {
            a[j] *= (j & stride) ? phase_hi : phase_lo;
        }
    }
    return state;
}

// CNOT: flips the target bit on every basis state whose control bit is set.
inline StateVector apply_cx(StateVector state, std::size_t control, std::size_t target) {
    if (control == target) {
        throw config_error("cx control and target must differ");
    }
    if (control >= state.n_qubits || target >= state.n_qubits) {
        throw std::out_of_range("cx qubit index out of range");
    }
    const std::size_t cbit = std::size_t{1} << (state.n_qubits - 1 - control);
    const std::size_t tbit = std::size_t{1} << (state.n_qubits - 1 - target);
    auto& a = state.amplitudes;
    for (std::size_t j = 0; j < a.size(); ++j) {
        if ((j & cbit) && !(j & tbit)) {
            std::swap(a[j], a[j | tbit]);
        }
    }
    return state;
}

inline ProbVector probabilities(const StateVector& state) {
    ProbVector probs(state.dim());
    for (std::size_t j = 0; j < probs.size(); ++j) {
        probs[j] = std::norm(state.amplitudes[j]);
    }
    return probs;
}

inline double norm_squared(const StateVector& state) {
    double total = 0.0;
    for (const auto& amp : state.amplitudes) total += std::norm(amp);
    return total;
}

// count i.i.d. basis-index draws from probs; deterministic for a fixed rng.
inline std::vector<std::size_t> sample_outcomes(const ProbVector& probs, std::size_t count, Rng& rng) {
    if (probs.empty()) {
        throw config_error("cannot sample from an empty distribution");
    }
    if (count < 1) {
        throw config_error("sample count must be >= 1");
    }
    std::vector<double> cdf(probs.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        acc += probs[j];
        cdf[j] = acc;
    }
    std::vector<std::size_t> out(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double u = rng.uniform() * acc;
        std::size_t lo = 0, hi = cdf.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (u < cdf[mid]) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        out[k] = lo;
    }
    return out;
}

} // namespace qgaze
