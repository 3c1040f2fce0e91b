// metrics.hpp
// Distribution comparison (KL, Jensen-Shannon), histogramming and moment
// statistics. All divergences use the natural logarithm.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qgaze/errors.hpp"

namespace qgaze {

struct Histogram {
    std::vector<double> bin_edges;       // size bins + 1, strictly increasing
    std::vector<std::size_t> counts;     // size bins
    std::vector<double> normalized;      // empty when no data was counted
    std::size_t clamped_low = 0;         // out-of-range values folded into the first bin
    std::size_t clamped_high = 0;        // ... and into the last bin

    std::size_t total() const {
        std::size_t n = 0;
        for (std::size_t c : counts) n += c;
        return n;
    }
    bool empty() const { return normalized.empty(); }
};

struct MomentReport {
    double mean = 0.0;
    double std_dev = 0.0;   // sample standard deviation (N-1)
    double skewness = 0.0;  // g1 = m3 / m2^{3/2}, central moments over N
    double kurtosis = 0.0;  // excess: m4 / m2^2 - 3
};

// KL(P || Q) = sum_i P_i log(P_i / Q_i), natural log. Zero-probability bins
// of P contribute nothing. Bins where P > 0 but Q = 0 get Q floored at
// 1e-12 and Q renormalized, so the result stays finite.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw config_error("kl_divergence: distributions must have equal length");
    }
    bool needs_floor = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0 && q[i] <= 0.0) {
            needs_floor = true;
            break;
        }
    }
    std::vector<double> q_smoothed;
    std::span<const double> qq = q;
    if (needs_floor) {
        q_smoothed.assign(q.begin(), q.end());
        double total = 0.0;
        for (double& v : q_smoothed) {
            if (v < 1e-12) v = 1e-12;
            total += v;
        }
        for (double& v : q_smoothed) v /= total;
        qq = q_smoothed;
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) kl += p[i] * std::log(p[i] / qq[i]);
    }
    return kl;
}

inline double kl_divergence(std::initializer_list<double> p, std::initializer_list<double> q) {
    return kl_divergence(std::span<const double>(p.begin(), p.size()),
                         std::span<const double>(q.begin(), q.size()));
}

// D_JS(P, Q) = KL(P || M)/2 + KL(Q || M)/2 with M = (P + Q)/2.
// Symmetric, bounded by log 2.
inline double js_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw config_error("js_divergence: distributions must have equal length");
    }
    std::vector<double> m(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
    return 0.5 * kl_divergence(p, m) + 0.5 * kl_divergence(q, m);
}

inline double js_divergence(std::initializer_list<double> p, std::initializer_list<double> q) {
    return js_divergence(std::span<const double>(p.begin(), p.size()),
                         std::span<const double>(q.begin(), q.size()));
}

inline std::vector<double> uniform_edges(double lo, double hi, std::size_t bins) {
    if (bins < 1 || !(hi > lo)) {
        throw config_error("uniform_edges: need bins >= 1 and hi > lo");
    }
    std::vector<double> edges(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
        edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    }
    edges.back() = hi;
    return edges;
}

// Counts into half-open bins [e_i, e_{i+1}); the last bin is closed.
// Out-of-range values are clamped into the boundary bins and tallied.
inline Histogram histogram(std::span<const double> data, std::vector<double> bin_edges) {
    if (bin_edges.size() < 2) {
        throw config_error("histogram: need at least two bin edges");
    }
    for (std::size_t i = 1; i < bin_edges.size(); ++i) {
        if (!(bin_edges[i] > bin_edges[i - 1])) {
            throw config_error("histogram: bin edges must be strictly increasing");
        }
    }
    Histogram h;
    h.bin_edges = std::move(bin_edges);
    h.counts.assign(h.bin_edges.size() - 1, 0);
    for (double x : data) {
        std::size_t bin;
        if (x < h.bin_edges.front()) {
            bin = 0;
            ++h.clamped_low;
        } else if (x > h.bin_edges.back()) {
            bin = h.counts.size() - 1;
            ++h.clamped_high;
        } else if (x == h.bin_edges.back()) {
            bin = h.counts.size() - 1; // closed last bin
        } else {
            const auto it = std::upper_bound(h.bin_edges.begin(), h.bin_edges.end(), x);
            bin = static_cast<std::size_t>(it - h.bin_edges.begin()) - 1;
        }
        ++h.counts[bin];
    }
    const std::size_t n = h.total();
    if (n > 0) {
        h.normalized.resize(h.counts.size());
        for (std::size_t i = 0; i < h.counts.size(); ++i) {
            h.normalized[i] = static_cast<double>(h.counts[i]) / static_cast<double>(n);
        }
    }
    return h;
}

inline MomentReport moment_report(std::span<const double> data) {
    const std::size_t n = data.size();
    if (n < 4) {
        throw config_error("moment_report: need at least 4 data points");
    }
    double mean = 0.0;
    for (double x : data) mean += x;
    mean /= static_cast<double>(n);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0, ss = 0.0;
    for (double x : data) {
        const double d = x - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        ss += d2;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    MomentReport r;
    r.mean = mean;
    r.std_dev = std::sqrt(ss / static_cast<double>(n - 1));
    r.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    r.kurtosis = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
    return r;
}

// Elementwise log with a floor, for histogram views of heavy-tailed data.
inline std::vector<double> log_transform_view(std::span<const double> data, double epsilon_floor = 1e-9) {
    if (!(epsilon_floor > 0.0)) {
        throw config_error("log_transform_view: epsilon_floor must be positive");
    }
    std::vector<double> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        out[i] = std::log(std::max(data[i], epsilon_floor));
    }
    return out;
}

} // namespace qgaze
