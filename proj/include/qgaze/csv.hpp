// csv.hpp
// CSV readers/writers for every file format the library exchanges:
// continuous and discrete series, training logs, transition matrices,
// histogram dumps and the moment/divergence reports. All files are UTF-8
// with LF line endings; writers are deterministic given identical inputs.

#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qgaze/data.hpp"
#include "qgaze/errors.hpp"
#include "qgaze/markov.hpp"
#include "qgaze/metrics.hpp"

namespace qgaze {

// Shortest-faithful decimal at the given significant-digit count.
inline std::string fmt_g(double v, int digits = 17) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw data_error("cannot open " + path.string() + " for writing");
    }
    return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw config_error("cannot open " + path.string());
    }
    return in;
}

inline double parse_double(std::string_view field, const std::string& file, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw parse_error(file, line, "expected a number, got '" + std::string(field) + "'");
    }
    return v;
}

inline std::size_t parse_index(std::string_view field, const std::string& file, std::size_t line) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw parse_error(file, line, "expected an integer, got '" + std::string(field) + "'");
    }
    return v;
}

} // namespace detail

// --- continuous series: `index,value` ---

inline void write_series_csv(const std::filesystem::path& path, std::span<const double> values) {
    auto out = detail::open_out(path);
    out << "index,value\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        out << i << ',' << fmt_g(values[i]) << '\n';
    }
}

inline std::vector<double> read_series_csv(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    std::string line;
    if (!std::getline(in, line) || line != "index,value") {
        throw parse_error(path.string(), 1, "expected header 'index,value'");
    }
    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) {
            throw parse_error(path.string(), line_no, "expected 'index,value'");
        }
        values.push_back(detail::parse_double(std::string_view(line).substr(comma + 1),
                                              path.string(), line_no));
    }
    if (values.empty()) {
        throw data_error("series file " + path.string() + " has no data rows");
    }
    return values;
}

// --- discrete series: `index,level` ---

inline void write_discrete_csv(const std::filesystem::path& path, const DiscreteSeries& series) {
    auto out = detail::open_out(path);
    out << "index,level\n";
    for (std::size_t i = 0; i < series.indices.size(); ++i) {
        out << i << ',' << series.indices[i] << '\n';
    }
}

inline DiscreteSeries read_discrete_csv(const std::filesystem::path& path, std::size_t levels) {
    auto in = detail::open_in(path);
    std::string line;
    if (!std::getline(in, line) || line != "index,level") {
        throw parse_error(path.string(), 1, "expected header 'index,level'");
    }
    DiscreteSeries series;
    series.levels = levels;
    series.bin_centers.resize(levels);
    for (std::size_t i = 0; i < levels; ++i) series.bin_centers[i] = bin_center(i, levels);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) {
            throw parse_error(path.string(), line_no, "expected 'index,level'");
        }
        const std::size_t level = detail::parse_index(std::string_view(line).substr(comma + 1),
                                                      path.string(), line_no);
        if (level >= levels) {
            throw parse_error(path.string(), line_no,
                              "level " + std::to_string(level) + " out of range for " +
                                  std::to_string(levels) + " levels");
        }
        series.indices.push_back(level);
    }
    if (series.indices.empty()) {
        throw data_error("discrete series file " + path.string() + " has no data rows");
    }
    return series;
}

// --- transition matrix: `n_states`, bin edges, then one row per line ---

inline void write_transition_csv(const std::filesystem::path& path, const TransitionMatrix& tm) {
    auto out = detail::open_out(path);
    out << tm.n_states << '\n';
    for (std::size_t i = 0; i < tm.bin_edges.size(); ++i) {
        out << (i ? "," : "") << fmt_g(tm.bin_edges[i], 12);
    }
    out << '\n';
    for (std::size_t r = 0; r < tm.n_states; ++r) {
        for (std::size_t c = 0; c < tm.n_states; ++c) {
            out << (c ? "," : "") << fmt_g(tm.at(r, c), 12);
        }
        out << '\n';
    }
}

inline TransitionMatrix read_transition_csv(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    std::string line;
    if (!std::getline(in, line)) {
        throw parse_error(path.string(), 1, "missing n_states line");
    }
    TransitionMatrix tm;
    tm.n_states = detail::parse_index(line, path.string(), 1);
    if (tm.n_states < 2) {
        throw parse_error(path.string(), 1, "n_states must be >= 2");
    }
    auto read_row = [&](std::size_t line_no, std::size_t expected) {
        std::vector<double> row;
        std::string_view rest(line);
        while (true) {
            const std::size_t comma = rest.find(',');
            const std::string_view field = rest.substr(0, comma);
            row.push_back(detail::parse_double(field, path.string(), line_no));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        if (row.size() != expected) {
            throw parse_error(path.string(), line_no,
                              "expected " + std::to_string(expected) + " fields, got " +
                                  std::to_string(row.size()));
        }
        return row;
    };
    if (!std::getline(in, line)) {
        throw parse_error(path.string(), 2, "missing bin edges line");
    }
    tm.bin_edges = read_row(2, tm.n_states + 1);
    for (std::size_t r = 0; r < tm.n_states; ++r) {
        if (!std::getline(in, line)) {
            throw parse_error(path.string(), 3 + r, "missing matrix row " + std::to_string(r));
        }
        const auto row = read_row(3 + r, tm.n_states);
        tm.probs.insert(tm.probs.end(), row.begin(), row.end());
    }
    return tm;
}

// --- markov generated series: `index,state,value` ---

inline void write_generated_csv(const std::filesystem::path& path, const GeneratedSeries& series) {
    auto out = detail::open_out(path);
    out << "index,state,value\n";
    for (std::size_t i = 0; i < series.states.size(); ++i) {
        out << i << ',' << series.states[i] << ',' << fmt_g(series.values[i]) << '\n';
    }
}

// --- histogram dump: `label,bin_left,bin_right,count,probability` ---

inline void write_histogram_csv(const std::filesystem::path& path, const std::string& label,
                                const Histogram& hist) {
    auto out = detail::open_out(path);
    out << "label,bin_left,bin_right,count,probability\n";
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        const double p = hist.empty() ? 0.0 : hist.normalized[i];
        out << label << ',' << fmt_g(hist.bin_edges[i], 12) << ',' << fmt_g(hist.bin_edges[i + 1], 12)
            << ',' << hist.counts[i] << ',' << fmt_g(p, 12) << '\n';
    }
}

// --- reports mirroring the summary tables ---

struct MomentRow {
    std::string label;
    MomentReport moments;
};

inline void write_moments_report(const std::filesystem::path& path, std::span<const MomentRow> rows) {
    auto out = detail::open_out(path);
    out << "# std: sample (N-1); skewness: g1; kurtosis: excess (Fisher)\n";
    out << "series_label,mean,std,skewness,kurtosis_excess\n";
    for (const auto& row : rows) {
        out << row.label << ',' << fmt_g(row.moments.mean, 9) << ',' << fmt_g(row.moments.std_dev, 9)
            << ',' << fmt_g(row.moments.skewness, 9) << ',' << fmt_g(row.moments.kurtosis, 9) << '\n';
    }
}

struct JsdRow {
    std::string model_label;
    std::string qubits;  // "-" for non-circuit models
    std::string layers;
    double jsd = 0.0;
};

inline void write_jsd_report(const std::filesystem::path& path, std::span<const JsdRow> rows) {
    auto out = detail::open_out(path);
    out << "# divergence: Jensen-Shannon, natural log\n";
    out << "model_label,qubits,layers,jsd\n";
    for (const auto& row : rows) {
        out << row.model_label << ',' << row.qubits << ',' << row.layers << ','
            << fmt_g(row.jsd, 9) << '\n';
    }
}

// FNV-1a over raw file bytes, for provenance sidecars.
inline std::string file_hash_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw config_error("cannot open " + path.string());
    }
    std::uint64_t h = 14695981039346656037ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<std::uint8_t>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

} // namespace qgaze
