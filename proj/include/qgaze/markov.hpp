// markov.hpp
// Markov-chain baseline: Gaussian-KDE estimate of the one-step joint and
// conditional densities over consecutive sample pairs, a discretized
// row-stochastic transition matrix, and chain simulation.
//
// Matrix orientation: row r is the conditioning (current) state, so
// entry (r, c) is Pr(next in bin c | current in bin r) and each row sums
// to one. Series generation draws the next state from row T[current].

#pragma once

#include <cmath>
#include <cstddef>
#include <iostream>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qgaze/errors.hpp"
#include "qgaze/metrics.hpp"
#include "qgaze/rng.hpp"

namespace qgaze {

// Silverman's rule: h = 1.06 * sigma * (N - 1)^(-1/5).
// The fifth root goes through exp2/log2 so that power-of-two counts
// evaluate exactly (pow() is off by one ulp for e.g. 1024^(-1/5)).
inline double silverman_bandwidth(std::span<const double> samples) {
    const std::size_t n = samples.size();
    if (n < 2) {
        throw config_error("silverman_bandwidth: need at least 2 samples");
    }
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    const double sigma = std::sqrt(ss / static_cast<double>(n - 1));
    // numerically constant series: variance at rounding-noise level
    if (!(sigma > 1e-12 * (std::abs(mean) + 1.0))) {
        throw degenerate_data_error("silverman_bandwidth: constant series has zero variance");
    }
    return 1.06 * sigma * std::exp2(std::log2(static_cast<double>(n - 1)) * -0.2);
}

inline double gaussian_kernel(double u) {
    return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
}

struct KdeModel {
    std::vector<double> samples; // training series; consecutive pairs feed the joint
    double bandwidth = 0.0;
    double sample_std = 0.0;

    static KdeModel fit(std::vector<double> series) {
        KdeModel model;
        model.bandwidth = silverman_bandwidth(series);
        model.sample_std = compute_std(series);
        model.samples = std::move(series);
        return model;
    }

    // Explicit bandwidth override.
    static KdeModel fit(std::vector<double> series, double bandwidth) {
        if (!(bandwidth > 0.0)) {
            throw config_error("KdeModel: bandwidth must be positive");
        }
        if (series.size() < 2) {
            throw config_error("KdeModel: need at least 2 samples");
        }
        KdeModel model;
        model.bandwidth = bandwidth;
        model.sample_std = compute_std(series);
        model.samples = std::move(series);
        return model;
    }

    std::size_t pair_count() const { return samples.size() - 1; }

private:
    static double compute_std(const std::vector<double>& v) {
        if (v.size() < 2) return 0.0;
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        return std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
};

// Product-kernel estimate of Pr(X_{t+1} = x_next, X_t = x_cur) over the
// N-1 consecutive pairs of the training series.
inline double joint_density(const KdeModel& model, double x_next, double x_cur) {
    if (model.samples.size() < 2) {
        throw config_error("joint_density: model needs at least 2 samples");
    }
    const double h = model.bandwidth;
    const std::size_t pairs = model.pair_count();
    double sum = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        sum += gaussian_kernel((x_next - model.samples[i + 1]) / h) *
               gaussian_kernel((x_cur - model.samples[i]) / h);
    }
    return sum / (static_cast<double>(pairs) * h * h);
}

// Marginal of the conditioning coordinate, estimated with the same kernel
// and bandwidth over the first N-1 samples.
inline double marginal_density(const KdeModel& model, double x_cur) {
    if (model.samples.size() < 2) {
        throw config_error("marginal_density: model needs at least 2 samples");
    }
    const double h = model.bandwidth;
    const std::size_t pairs = model.pair_count();
    double sum = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        sum += gaussian_kernel((x_cur - model.samples[i]) / h);
    }
    return sum / (static_cast<double>(pairs) * h);
}

inline double conditional_density(const KdeModel& model, double x_next, double x_cur) {
    const double marginal = marginal_density(model, x_cur);
    if (marginal < 1e-300) {
        throw out_of_support_error("conditional_density: no data mass at x_cur = " +
                                   std::to_string(x_cur));
    }
    return joint_density(model, x_next, x_cur) / marginal;
}

struct TransitionMatrix {
    std::size_t n_states = 0;
    std::vector<double> bin_edges; // n_states + 1, strictly increasing
    std::vector<double> probs;     // row-major n_states x n_states

    double at(std::size_t cur, std::size_t next) const { return probs[cur * n_states + next]; }
    std::span<const double> row(std::size_t cur) const {
        return std::span<const double>(probs).subspan(cur * n_states, n_states);
    }
    double bin_midpoint(std::size_t state) const {
        return 0.5 * (bin_edges[state] + bin_edges[state + 1]);
    }
};

// T[cur][next] = Pr(X_{t+1} in bin next | X_t at the midpoint of bin cur),
// integrated over the target bin with a 64-point composite midpoint rule
// and row-normalized. Bin edges are uniform over the observed data range.
// A conditioning bin with no data mass at its midpoint falls back to the
// marginal histogram of the training samples (with a warning on stderr).
inline TransitionMatrix build_transition_matrix(const KdeModel& model, std::size_t n_states) {
    if (n_states < 2) {
        throw config_error("build_transition_matrix: need n_states >= 2");
    }
    double lo = model.samples[0], hi = model.samples[0];
    for (double x : model.samples) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (!(hi > lo)) {
        throw degenerate_data_error("build_transition_matrix: constant training series");
    }
    TransitionMatrix tm;
    tm.n_states = n_states;
    tm.bin_edges = uniform_edges(lo, hi, n_states);
    tm.probs.assign(n_states * n_states, 0.0);

    constexpr std::size_t kQuadPoints = 64;
    for (std::size_t cur = 0; cur < n_states; ++cur) {
        const double x_cur = tm.bin_midpoint(cur);
        const double marginal = marginal_density(model, x_cur);
        double* row = &tm.probs[cur * n_states];
        if (marginal < 1e-300) {
            std::cerr << "qgaze: transition bin " << cur
                      << " has no data mass; using marginal histogram for its row\n";
            Histogram h = histogram(model.samples, tm.bin_edges);
            for (std::size_t next = 0; next < n_states; ++next) row[next] = h.normalized[next];
            continue;
        }
        double row_sum = 0.0;
        for (std::size_t next = 0; next < n_states; ++next) {
            const double a = tm.bin_edges[next];
            const double b = tm.bin_edges[next + 1];
            const double step = (b - a) / static_cast<double>(kQuadPoints);
            double integral = 0.0;
            for (std::size_t k = 0; k < kQuadPoints; ++k) {
                const double x = a + (static_cast<double>(k) + 0.5) * step;
                integral += joint_density(model, x, x_cur);
            }
            row[next] = integral * step / marginal;
            row_sum += row[next];
        }
        for (std::size_t next = 0; next < n_states; ++next) row[next] /= row_sum;
    }
    return tm;
}

struct GeneratedSeries {
    std::vector<std::size_t> states;
    std::vector<double> values; // bin midpoints of the visited states
};

// X_0 = start_state, X_{t+1} ~ row T[X_t]; `length` states in total.
inline GeneratedSeries generate_series(const TransitionMatrix& tm, std::size_t start_state,
                                       std::size_t length, Rng& rng) {
    if (start_state >= tm.n_states) {
        throw config_error("generate_series: start state out of range");
    }
    if (length < 1) {
        throw config_error("generate_series: length must be >= 1");
    }
    GeneratedSeries out;
    out.states.resize(length);
    out.values.resize(length);
    std::size_t state = start_state;
    out.states[0] = state;
    out.values[0] = tm.bin_midpoint(state);
    for (std::size_t t = 1; t < length; ++t) {
        const auto row = tm.row(state);
        const double u = rng.uniform();
        double acc = 0.0;
        std::size_t next = tm.n_states - 1;
        for (std::size_t c = 0; c < tm.n_states; ++c) {
            acc += row[c];
            if (u < acc) {
                next = c;
                break;
            }
        }
        state = next;
        out.states[t] = state;
        out.values[t] = tm.bin_midpoint(state);
    }
    return out;
}

} // namespace qgaze
