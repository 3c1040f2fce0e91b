// data.hpp
// Gaze-log ingestion and the preprocessing pipeline: velocity from
// consecutive positions, mean-resampling, MinMax scaling to [0,1],
// discretization onto 2^N levels and fixed-length sequence windows.
// Also provides the synthetic heavy-tailed series used by the test and
// acceptance suites in place of recorded data.

#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qgaze/errors.hpp"
#include "qgaze/rng.hpp"

namespace qgaze {

struct GazeRecord {
    double t = 0.0; // seconds
    std::optional<double> x_left, y_left; // screen pixels; empty = missing sample
    std::optional<double> x_right, y_right;

    bool has_left() const { return x_left && y_left; }
    bool has_right() const { return x_right && y_right; }
};

enum class Eye { left, right };

struct VelocitySeries {
    std::vector<double> values;  // px/s before scaling, [0,1] after
    double sample_rate = 200.0;  // Hz
    bool scaled = false;
    double scale_min = 0.0;
    double scale_max = 0.0;
};

inline double bin_center(std::size_t index, std::size_t levels) {
    return (static_cast<double>(index) + 0.5) / static_cast<double>(levels);
}

struct DiscreteSeries {
    std::vector<std::size_t> indices; // each in [0, levels)
    std::size_t levels = 8;
    std::vector<double> bin_centers;  // (i + 0.5) / levels

    std::vector<double> values() const {
        std::vector<double> v(indices.size());
        for (std::size_t i = 0; i < indices.size(); ++i) v[i] = bin_centers[indices[i]];
        return v;
    }
};

namespace detail {

inline std::optional<double> parse_field(std::string_view field) {
    if (field.empty()) return std::nullopt;
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        throw data_error("unparseable numeric field '" + std::string(field) + "'");
    }
    return value;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

} // namespace detail

// Schema: header `t,x_left,y_left,x_right,y_right`, comma separator,
// empty field = missing sample. Rows must be in nondecreasing time order.
inline std::vector<GazeRecord> load_gaze_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw config_error("cannot open gaze file " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw data_error("empty gaze file " + path.string());
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,x_left,y_left,x_right,y_right") {
        throw data_error(path.string() + ": expected header 't,x_left,y_left,x_right,y_right', got '" +
                         line + "'");
    }
    std::vector<GazeRecord> records;
    std::vector<std::string_view> fields;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        detail::split_csv_line(line, fields);
        if (fields.size() != 5) {
            throw parse_error(path.string(), line_no,
                              "expected 5 fields, got " + std::to_string(fields.size()));
        }
        GazeRecord rec;
        try {
            const auto t = detail::parse_field(fields[0]);
            if (!t) throw data_error("timestamp missing");
            rec.t = *t;
            rec.x_left = detail::parse_field(fields[1]);
            rec.y_left = detail::parse_field(fields[2]);
            rec.x_right = detail::parse_field(fields[3]);
            rec.y_right = detail::parse_field(fields[4]);
        } catch (const data_error& e) {
            throw parse_error(path.string(), line_no, e.what());
        }
        if (!records.empty() && rec.t < records.back().t) {
            throw data_error(path.string() + ":" + std::to_string(line_no) +
                             ": timestamps out of order");
        }
        records.push_back(rec);
    }
    if (records.empty()) {
        throw data_error("gaze file " + path.string() + " has no data rows");
    }
    return records;
}

// v_i = |p_{i+1} - p_i| / dt for the chosen eye. Runs of missing samples
// split the series; no velocity is computed across a gap.
inline VelocitySeries compute_velocity(const std::vector<GazeRecord>& records, Eye eye,
                                       double dt = 1.0 / 200.0) {
    if (!(dt > 0.0)) {
        throw config_error("compute_velocity: dt must be positive");
    }
    VelocitySeries series;
    series.sample_rate = 1.0 / dt;
    bool have_prev = false;
    double px = 0.0, py = 0.0;
    for (const GazeRecord& rec : records) {
        const bool present = (eye == Eye::left) ? rec.has_left() : rec.has_right();
        if (!present) {
            have_prev = false;
            continue;
        }
        const double x = (eye == Eye::left) ? *rec.x_left : *rec.x_right;
        const double y = (eye == Eye::left) ? *rec.y_left : *rec.y_right;
        if (have_prev) {
            series.values.push_back(std::hypot(x - px, y - py) / dt);
        }
        px = x;
        py = y;
        have_prev = true;
    }
    if (series.values.empty()) {
        throw data_error("fewer than 2 usable records for the requested eye");
    }
    return series;
}

// Means over consecutive non-overlapping windows of interval * sample_rate
// points; a trailing partial window is averaged and kept.
inline VelocitySeries resample_mean(const VelocitySeries& series, double interval_seconds = 10.0) {
    if (!(interval_seconds > 0.0)) {
        throw config_error("resample_mean: interval must be positive");
    }
    std::size_t window = static_cast<std::size_t>(interval_seconds * series.sample_rate);
    if (window < 1) window = 1;
    VelocitySeries out = series;
    out.values.clear();
    const auto& v = series.values;
    for (std::size_t start = 0; start < v.size(); start += window) {
        const std::size_t end = std::min(start + window, v.size());
        double sum = 0.0;
        for (std::size_t i = start; i < end; ++i) sum += v[i];
        out.values.push_back(sum / static_cast<double>(end - start));
    }
    out.sample_rate = series.sample_rate / static_cast<double>(window);
    return out;
}

// (x - min) / (max - min); the scale parameters are kept for inversion.
inline VelocitySeries minmax_scale(const VelocitySeries& series) {
    if (series.values.empty()) {
        throw data_error("minmax_scale: empty series");
    }
    double lo = series.values[0], hi = series.values[0];
    for (double x : series.values) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (!(hi > lo)) {
        throw degenerate_data_error("minmax_scale: constant series");
    }
    VelocitySeries out = series;
    for (double& x : out.values) x = (x - lo) / (hi - lo);
    out.scaled = true;
    out.scale_min = lo;
    out.scale_max = hi;
    return out;
}

inline std::vector<double> minmax_invert(const VelocitySeries& series) {
    if (!series.scaled) {
        throw config_error("minmax_invert: series is not scaled");
    }
    std::vector<double> out(series.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = series.values[i] * (series.scale_max - series.scale_min) + series.scale_min;
    }
    return out;
}

// index = min(floor(x * levels), levels - 1), so x = 1.0 lands in the top bin.
inline DiscreteSeries discretize(const VelocitySeries& series, std::size_t levels) {
    if (!series.scaled) {
        throw config_error("discretize: series must be MinMax-scaled first");
    }
    if (levels < 2 || (levels & (levels - 1)) != 0) {
        throw config_error("discretize: levels must be a power of two >= 2");
    }
    DiscreteSeries out;
    out.levels = levels;
    out.bin_centers.resize(levels);
    for (std::size_t i = 0; i < levels; ++i) out.bin_centers[i] = bin_center(i, levels);
    out.indices.reserve(series.values.size());
    for (double x : series.values) {
        auto idx = static_cast<std::size_t>(std::max(0.0, std::floor(x * static_cast<double>(levels))));
        out.indices.push_back(std::min(idx, levels - 1));
    }
    return out;
}

// Non-overlapping (or strided) fixed-length windows; the trailing
// remainder is dropped. stride = 0 means stride = length.
inline std::vector<std::vector<double>> make_sequences(std::span<const double> values,
                                                       std::size_t length = 100,
                                                       std::size_t stride = 0) {
    if (length < 1) {
        throw config_error("make_sequences: length must be >= 1");
    }
    if (stride == 0) stride = length;
    if (values.size() < length) {
        throw data_error("make_sequences: series of " + std::to_string(values.size()) +
                         " points is shorter than window length " + std::to_string(length));
    }
    std::vector<std::vector<double>> windows;
    for (std::size_t start = 0; start + length <= values.size(); start += stride) {
        windows.emplace_back(values.begin() + start, values.begin() + start + length);
    }
    return windows;
}

// Heavy-tailed synthetic stand-in for gaze-speed data: lognormal marginals
// (mu = -3, sigma = 1.2) driven by a stationary AR(1) Gaussian with
// phi = 0.7, so the series has both the fat tail and temporal dependence.
inline VelocitySeries synth_heavytail(std::size_t n, std::uint64_t seed) {
    if (n < 1) {
        throw config_error("synth_heavytail: n must be >= 1");
    }
    Rng rng(seed, "synth_heavytail");
    const double phi = 0.7;
    const double mu = -3.0;
    const double sigma = 1.2;
    VelocitySeries series;
    series.sample_rate = 200.0;
    series.values.resize(n);
    double z = rng.normal(); // stationary start: z ~ N(0, 1)
    series.values[0] = std::exp(mu + sigma * z);
    const double noise_scale = std::sqrt(1.0 - phi * phi);
    for (std::size_t i = 1; i < n; ++i) {
        z = phi * z + noise_scale * rng.normal();
        series.values[i] = std::exp(mu + sigma * z);
    }
    return series;
}

} // namespace qgaze
