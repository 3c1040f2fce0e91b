// qgaze: train a quantum-circuit generator on gaze-speed data, fit the
// KDE Markov baseline, and compare both against the empirical
// distribution. Subcommands: ingest, train-qgan, fit-markov, generate,
// evaluate. Every command is deterministic under --seed and echoes its
// effective configuration into the output directory.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qgaze/qgaze.hpp"

namespace fs = std::filesystem;
using namespace qgaze;

namespace {

// ---------------------------------------------------------------------------
// Flat key-value run configuration. File lines are `key value`; CLI flags
// override file entries; unknown keys are rejected.

struct RunConfig {
    std::map<std::string, std::string> kv = {
        {"qubits", "3"},
        {"layers", "1"},
        {"epochs", "300"},
        {"batch_size", "500"},
        {"seq_len", "auto"},
        {"states", "auto"},
        {"seed", "0"},
        {"levels", "8"},
        {"eye", "both"},
        {"resample_interval", "10"},
        {"disc_arch", "mlp"},
        {"penalty_weight", "10"},
        {"dropout", "auto"},
        {"learning_rate", "0.002"},
        {"beta1", "0.9"},
        {"beta2", "0.999"},
        {"epsilon", "1e-8"},
        {"gen_updates", "1"},
        {"disc_updates", "1"},
        {"hidden_size", "128"},
        {"recurrent_layers", "3"},
        {"bidirectional", "1"},
        {"mlp_hidden", "64:32"},
        {"track_jsd", "1"},
        {"gen_length", "100000"},
        {"start_state", "auto"},
    };

    void set(const std::string& key, const std::string& value) {
        if (!kv.count(key)) {
            throw config_error("unknown configuration key '" + key + "'");
        }
        kv[key] = value;
    }

    const std::string& get(const std::string& key) const { return kv.at(key); }
    double get_real(const std::string& key) const { return std::stod(kv.at(key)); }
    std::size_t get_uint(const std::string& key) const { return std::stoul(kv.at(key)); }
    bool get_flag(const std::string& key) const { return kv.at(key) != "0"; }

    void load_file(const fs::path& path) {
        std::ifstream in(path);
        if (!in) {
            throw config_error("cannot open config file " + path.string());
        }
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const auto start = line.find_first_not_of(" \t");
            if (start == std::string::npos || line[start] == '#') continue;
            const auto sep = line.find_first_of(" \t", start);
            if (sep == std::string::npos) {
                throw config_error(path.string() + ":" + std::to_string(line_no) +
                                   ": expected 'key value'");
            }
            const std::string key = line.substr(start, sep - start);
            const auto vstart = line.find_first_not_of(" \t", sep);
            if (vstart == std::string::npos) {
                throw config_error(path.string() + ":" + std::to_string(line_no) +
                                   ": missing value for '" + key + "'");
            }
            set(key, line.substr(vstart));
        }
    }

    void echo(const fs::path& out_dir) const {
        fs::create_directories(out_dir);
        std::ofstream out(out_dir / "config.txt");
        for (const auto& [key, value] : kv) out << key << ' ' << value << '\n';
    }
};

// Resolved per-run settings derived from the key-value document.
DiscriminatorConfig disc_config_from(const RunConfig& cfg) {
    DiscriminatorConfig disc;
    const std::string arch = cfg.get("disc_arch");
    if (arch == "mlp") {
        disc = DiscriminatorConfig::mlp_default();
    } else if (arch == "lstm") {
        disc = DiscriminatorConfig::lstm_default();
    } else {
        throw config_error("disc_arch must be 'mlp' or 'lstm', got '" + arch + "'");
    }
    if (cfg.get("seq_len") != "auto") disc.input_length = cfg.get_uint("seq_len");
    if (cfg.get("dropout") != "auto") disc.dropout_rate = cfg.get_real("dropout");
    disc.hidden_size = cfg.get_uint("hidden_size");
    disc.num_recurrent_layers = cfg.get_uint("recurrent_layers");
    disc.bidirectional = cfg.get_flag("bidirectional");
    disc.mlp_hidden.clear();
    const std::string widths = cfg.get("mlp_hidden");
    std::size_t pos = 0;
    while (pos < widths.size()) {
        const std::size_t colon = widths.find(':', pos);
        const std::string field =
            widths.substr(pos, colon == std::string::npos ? colon : colon - pos);
        if (!field.empty()) disc.mlp_hidden.push_back(std::stoul(field));
        if (colon == std::string::npos) break;
        pos = colon + 1;
    }
    disc.validate();
    return disc;
}

TrainingConfig training_config_from(const RunConfig& cfg) {
    TrainingConfig tc;
    tc.epochs = cfg.get_uint("epochs");
    tc.batch_size = cfg.get_uint("batch_size");
    tc.seed = cfg.get_uint("seed");
    tc.disc_updates_per_batch = cfg.get_uint("disc_updates");
    tc.gen_updates_per_batch = cfg.get_uint("gen_updates");
    tc.penalty_weight = cfg.get_real("penalty_weight");
    tc.track_jsd = cfg.get_flag("track_jsd");
    const OptimizerHyper opt{cfg.get_real("learning_rate"), cfg.get_real("beta1"),
                             cfg.get_real("beta2"), cfg.get_real("epsilon")};
    tc.gen_opt = opt;
    tc.disc_opt = opt;
    return tc;
}

// "3", "3,4" or "1..5"
std::vector<std::size_t> parse_grid(const std::string& text) {
    std::vector<std::size_t> out;
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        const std::size_t lo = std::stoul(text.substr(0, dots));
        const std::size_t hi = std::stoul(text.substr(dots + 2));
        if (hi < lo) throw config_error("bad range '" + text + "'");
        for (std::size_t v = lo; v <= hi; ++v) out.push_back(v);
        return out;
    }
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string field =
            text.substr(pos, comma == std::string::npos ? comma : comma - pos);
        if (field.empty()) throw config_error("bad list '" + text + "'");
        out.push_back(std::stoul(field));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<double> empirical_distribution(const DiscreteSeries& series) {
    std::vector<double> p(series.levels, 0.0);
    for (std::size_t idx : series.indices) p[idx] += 1.0;
    for (double& x : p) x /= static_cast<double>(series.indices.size());
    return p;
}

// Reads `index,value` or `index,state,value` files into a value series.
std::vector<double> read_values_any(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw config_error("cannot open " + path.string());
    }
    std::string header;
    std::getline(in, header);
    in.close();
    if (header == "index,value") {
        return read_series_csv(path);
    }
    if (header == "index,state,value") {
        std::ifstream again(path);
        std::string line;
        std::getline(again, line);
        std::vector<double> values;
        std::size_t line_no = 1;
        while (std::getline(again, line)) {
            ++line_no;
            if (line.empty()) continue;
            const auto last_comma = line.rfind(',');
            if (last_comma == std::string::npos) {
                throw parse_error(path.string(), line_no, "expected 'index,state,value'");
            }
            values.push_back(std::stod(line.substr(last_comma + 1)));
        }
        if (values.empty()) {
            throw data_error(path.string() + " has no data rows");
        }
        return values;
    }
    throw data_error(path.string() + ": unrecognized series header '" + header + "'");
}

VelocitySeries as_scaled_series(std::vector<double> values) {
    VelocitySeries s;
    for (double v : values) {
        if (v < -1e-9 || v > 1.0 + 1e-9) {
            throw data_error("series value " + fmt_g(v) +
                             " outside [0,1]; run ingest (MinMax scaling) first");
        }
    }
    s.values = std::move(values);
    s.scaled = true;
    s.scale_min = 0.0;
    s.scale_max = 1.0;
    return s;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_ingest(const RunConfig& cfg, const fs::path& input, const fs::path& out_dir,
               const std::vector<std::string>& argv_flags) {
    const auto records = load_gaze_csv(input);
    const double interval = cfg.get_real("resample_interval");
    const std::string eye = cfg.get("eye");
    if (eye != "left" && eye != "right" && eye != "both") {
        throw config_error("eye must be left, right or both");
    }

    // both eyes are processed independently and concatenated
    std::vector<double> velocity;
    for (const Eye e : {Eye::left, Eye::right}) {
        if (eye == "left" && e != Eye::left) continue;
        if (eye == "right" && e != Eye::right) continue;
        const VelocitySeries v = compute_velocity(records, e);
        const VelocitySeries r = resample_mean(v, interval);
        velocity.insert(velocity.end(), r.values.begin(), r.values.end());
    }
    VelocitySeries series;
    series.values = velocity;

    const VelocitySeries scaled = minmax_scale(series);
    const DiscreteSeries discrete = discretize(scaled, cfg.get_uint("levels"));

    write_series_csv(out_dir / "velocity.csv", series.values);
    write_series_csv(out_dir / "scaled.csv", scaled.values);
    write_discrete_csv(out_dir / "discrete.csv", discrete);

    std::ofstream prov(out_dir / "provenance.txt");
    prov << "input " << input.string() << '\n';
    prov << "input_fnv1a " << file_hash_hex(input) << '\n';
    prov << "flags";
    for (const auto& f : argv_flags) prov << ' ' << f;
    prov << '\n';
    prov << "scale_min " << fmt_g(scaled.scale_min) << '\n';
    prov << "scale_max " << fmt_g(scaled.scale_max) << '\n';

    cfg.echo(out_dir);
    std::cout << "ingest: " << records.size() << " records -> " << series.values.size()
              << " velocity samples -> " << discrete.indices.size() << " discrete samples ("
              << discrete.levels << " levels)\n";
    return 0;
}

int run_one_training(const RunConfig& cfg, const VelocitySeries& scaled, std::size_t qubits,
                     std::size_t layers, const fs::path& run_dir) {
    const AnsatzConfig gen_cfg{qubits, layers};
    const DiscriminatorConfig disc_cfg = disc_config_from(cfg);
    const TrainingConfig train_cfg = training_config_from(cfg);
    const DiscreteSeries dataset = discretize(scaled, gen_cfg.levels());

    const TrainResult result = train(gen_cfg, disc_cfg, train_cfg, dataset);

    write_checkpoint(run_dir / "checkpoint.txt", gen_cfg, result.theta, disc_cfg, result.phi);
    result.log.write_csv(run_dir / "training_log.csv");

    const double final_jsd =
        js_divergence(output_distribution(gen_cfg, result.theta), empirical_distribution(dataset));
    const JsdRow row{"qgan", std::to_string(qubits), std::to_string(layers), final_jsd};
    write_jsd_report(run_dir / "jsd_report.csv", std::span(&row, 1));

    RunConfig echoed = cfg;
    echoed.set("qubits", std::to_string(qubits));
    echoed.set("layers", std::to_string(layers));
    echoed.echo(run_dir);

    std::cout << "train-qgan: q=" << qubits << " L=" << layers << " epochs=" << train_cfg.epochs
              << " final_jsd=" << fmt_g(final_jsd, 6) << " -> " << run_dir.string() << '\n';
    return 0;
}

int cmd_train_qgan(const RunConfig& cfg, const fs::path& input, const fs::path& out_dir) {
    const VelocitySeries scaled = as_scaled_series(read_series_csv(input));
    const auto qubit_grid = parse_grid(cfg.get("qubits"));
    const auto layer_grid = parse_grid(cfg.get("layers"));

    if (qubit_grid.size() == 1 && layer_grid.size() == 1) {
        fs::create_directories(out_dir);
        return run_one_training(cfg, scaled, qubit_grid[0], layer_grid[0], out_dir);
    }
    for (std::size_t q : qubit_grid) {
        for (std::size_t l : layer_grid) {
            const fs::path run_dir = out_dir / ("q" + std::to_string(q) + "_l" + std::to_string(l));
            fs::create_directories(run_dir);
            run_one_training(cfg, scaled, q, l, run_dir);
        }
    }
    return 0;
}

int cmd_fit_markov(const RunConfig& cfg, const fs::path& input, const fs::path& out_dir) {
    const std::vector<double> values = read_values_any(input);
    const std::size_t states = cfg.get("states") == "auto"
                                   ? (std::size_t{1} << parse_grid(cfg.get("qubits"))[0])
                                   : cfg.get_uint("states");

    const KdeModel model = KdeModel::fit(values);
    const TransitionMatrix tm = build_transition_matrix(model, states);
    write_transition_csv(out_dir / "transition_matrix.csv", tm);

    std::size_t start;
    if (cfg.get("start_state") == "auto") {
        // bin of the first training sample
        start = states - 1;
        for (std::size_t s = 0; s < states; ++s) {
            if (values.front() < tm.bin_edges[s + 1]) {
                start = s;
                break;
            }
        }
    } else {
        start = cfg.get_uint("start_state");
    }

    Rng rng(cfg.get_uint("seed"), "markov_generate");
    const GeneratedSeries series = generate_series(tm, start, cfg.get_uint("gen_length"), rng);
    write_generated_csv(out_dir / "generated.csv", series);

    cfg.echo(out_dir);
    std::cout << "fit-markov: " << values.size() << " samples, " << states
              << " states, bandwidth=" << fmt_g(model.bandwidth, 6) << ", generated "
              << series.states.size() << " steps -> " << out_dir.string() << '\n';
    return 0;
}

int cmd_generate(const RunConfig& cfg, const std::string& checkpoint, const std::string& matrix,
                 std::size_t count, const fs::path& out_dir) {
    if (checkpoint.empty() == matrix.empty()) {
        throw config_error("generate needs exactly one of --checkpoint or --matrix");
    }
    if (count < 1) {
        throw config_error("generate: count must be >= 1");
    }
    Rng rng(cfg.get_uint("seed"), "generate");
    if (!checkpoint.empty()) {
        const Checkpoint ckpt = read_checkpoint(checkpoint);
        const auto batch = make_fake_batch(ckpt.gen_config, ckpt.theta, count, rng);
        DiscreteSeries series;
        series.levels = ckpt.gen_config.levels();
        series.bin_centers.resize(series.levels);
        for (std::size_t i = 0; i < series.levels; ++i) {
            series.bin_centers[i] = bin_center(i, series.levels);
        }
        std::vector<double> values(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            series.indices.push_back(batch[i].basis_index);
            values[i] = batch[i].value;
        }
        write_discrete_csv(out_dir / "generated_levels.csv", series);
        write_series_csv(out_dir / "generated_values.csv", values);
        std::cout << "generate: " << count << " draws from " << checkpoint << " -> "
                  << out_dir.string() << '\n';
    } else {
        const TransitionMatrix tm = read_transition_csv(matrix);
        const std::size_t start =
            cfg.get("start_state") == "auto" ? 0 : cfg.get_uint("start_state");
        const GeneratedSeries series = generate_series(tm, start, count, rng);
        write_generated_csv(out_dir / "generated.csv", series);
        std::cout << "generate: " << count << "-step chain from " << matrix << " -> "
                  << out_dir.string() << '\n';
    }
    cfg.echo(out_dir);
    return 0;
}

struct ModelSpec {
    std::string label;
    std::string qubits;
    std::string layers;
    fs::path path;
};

ModelSpec parse_model_spec(const std::string& text) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) {
        const auto comma = text.find(',', pos);
        if (comma == std::string::npos) {
            throw config_error("model spec must be 'label,qubits,layers,path', got '" + text + "'");
        }
        fields.push_back(text.substr(pos, comma - pos));
        pos = comma + 1;
    }
    fields.push_back(text.substr(pos));
    return {fields[0], fields[1], fields[2], fields[3]};
}

int cmd_evaluate(const fs::path& real_path, const std::vector<std::string>& model_specs,
                 std::size_t bins, const std::string& support, const fs::path& out_dir) {
    if (model_specs.empty()) {
        throw config_error("evaluate needs at least one --model");
    }
    if (support != "auto" && support != "unit" && support != "pooled") {
        throw config_error("support must be auto, unit or pooled");
    }
    const std::vector<double> real = read_values_any(real_path);

    struct Series {
        std::string label;
        std::string qubits, layers;
        std::vector<double> values;
    };
    std::vector<Series> models;
    for (const auto& spec_text : model_specs) {
        const ModelSpec spec = parse_model_spec(spec_text);
        models.push_back({spec.label, spec.qubits, spec.layers, read_values_any(spec.path)});
    }

    // shared support: unit interval for scaled data, pooled range otherwise
    double lo = 0.0, hi = 1.0;
    bool unit = support != "pooled";
    if (support == "auto") {
        for (double v : real) unit = unit && v >= -1e-9 && v <= 1.0 + 1e-9;
        for (const auto& m : models) {
            for (double v : m.values) unit = unit && v >= -1e-9 && v <= 1.0 + 1e-9;
        }
    }
    if (!unit) {
        lo = real[0];
        hi = real[0];
        for (double v : real) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        for (const auto& m : models) {
            for (double v : m.values) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        if (!(hi > lo)) {
            throw degenerate_data_error("evaluate: all series are constant");
        }
    }
    const auto edges = uniform_edges(lo, hi, bins);
    const Histogram real_hist = histogram(real, edges);

    std::vector<MomentRow> moment_rows;
    moment_rows.push_back({"real", moment_report(real)});
    std::vector<JsdRow> jsd_rows;
    std::vector<std::pair<std::string, const std::vector<double>*>> labeled;
    labeled.emplace_back("real", &real);

    for (const auto& m : models) {
        const Histogram h = histogram(m.values, edges);
        jsd_rows.push_back(
            {m.label, m.qubits, m.layers, js_divergence(h.normalized, real_hist.normalized)});
        moment_rows.push_back({m.label, moment_report(m.values)});
        labeled.emplace_back(m.label, &m.values);
    }

    write_moments_report(out_dir / "report_moments.csv", moment_rows);
    write_jsd_report(out_dir / "report_jsd.csv", jsd_rows);

    for (const auto& [label, vals] : labeled) {
        const Histogram h = histogram(*vals, edges);
        write_histogram_csv(out_dir / ("hist_" + label + ".csv"), label, h);
        if (h.clamped_low + h.clamped_high > 0) {
            std::cerr << "qgaze: " << label << ": " << h.clamped_low + h.clamped_high
                      << " values clamped into boundary bins\n";
        }
        // log-transformed view for heavy-tailed data
        const auto logged = log_transform_view(*vals);
        double llo = logged[0], lhi = logged[0];
        for (double v : logged) {
            llo = std::min(llo, v);
            lhi = std::max(lhi, v);
        }
        if (!(lhi > llo)) lhi = llo + 1.0;
        write_histogram_csv(out_dir / ("hist_" + label + "_log.csv"), label,
                            histogram(logged, uniform_edges(llo, lhi, bins)));
    }
    std::cout << "evaluate: wrote reports for " << models.size() << " model series vs "
              << real_path.string() << " -> " << out_dir.string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"QGAN and Markov-chain modeling of gaze-speed series"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_file;
    std::string input, out_dir = ".";

    // option values land in the key-value document so that the echoed
    // config is the single source of truth
    std::map<std::string, std::string> overrides;
    auto add_kv_flag = [&](CLI::App* cmd, const std::string& flag, const std::string& key,
                           const std::string& help) {
        cmd->add_option_function<std::string>(
            flag, [&overrides, key](const std::string& v) { overrides[key] = v; }, help);
    };

    auto add_common = [&](CLI::App* cmd, bool needs_input) {
        if (needs_input) {
            cmd->add_option("--input", input, "input file")->required();
        }
        cmd->add_option("--out-dir", out_dir, "output directory")->required();
        cmd->add_option("--config", config_file, "key-value configuration file");
        add_kv_flag(cmd, "--seed", "seed", "random seed");
    };

    CLI::App* ingest = app.add_subcommand("ingest", "preprocess a gaze CSV");
    add_common(ingest, true);
    add_kv_flag(ingest, "--eye", "eye", "left, right or both");
    add_kv_flag(ingest, "--resample-interval", "resample_interval", "mean-resampling window (s)");
    add_kv_flag(ingest, "--levels", "levels", "discretization levels (power of two)");

    CLI::App* train_cmd = app.add_subcommand("train-qgan", "train the quantum generator");
    add_common(train_cmd, true);
    add_kv_flag(train_cmd, "--qubits", "qubits", "qubit count, list or range (3 | 3,4 | 1..5)");
    add_kv_flag(train_cmd, "--layers", "layers", "entangling layers, list or range");
    add_kv_flag(train_cmd, "--epochs", "epochs", "training epochs");
    add_kv_flag(train_cmd, "--batch-size", "batch_size", "samples per batch");
    add_kv_flag(train_cmd, "--seq-len", "seq_len",
                "discriminator window length (auto = arch default)");
    add_kv_flag(train_cmd, "--disc-arch", "disc_arch", "mlp or lstm");
    add_kv_flag(train_cmd, "--penalty-weight", "penalty_weight", "gradient penalty weight");
    add_kv_flag(train_cmd, "--dropout", "dropout", "dropout rate (auto = arch default)");
    add_kv_flag(train_cmd, "--learning-rate", "learning_rate", "optimizer step size");

    CLI::App* markov_cmd = app.add_subcommand("fit-markov", "fit the KDE Markov baseline");
    add_common(markov_cmd, true);
    add_kv_flag(markov_cmd, "--states", "states", "number of states (auto = 2^qubits)");
    add_kv_flag(markov_cmd, "--qubits", "qubits", "companion run qubit count for auto states");
    add_kv_flag(markov_cmd, "--gen-length", "gen_length", "length of the generated series");
    add_kv_flag(markov_cmd, "--start-state", "start_state",
                "initial state (auto = first sample's bin)");

    CLI::App* gen_cmd = app.add_subcommand("generate", "sample from a trained model");
    std::string checkpoint, matrix;
    std::size_t count = 1000;
    gen_cmd->add_option("--checkpoint", checkpoint, "generator checkpoint file");
    gen_cmd->add_option("--matrix", matrix, "transition matrix file");
    gen_cmd->add_option("--count", count, "number of draws / chain steps");
    add_common(gen_cmd, false);
    add_kv_flag(gen_cmd, "--start-state", "start_state", "initial chain state");

    CLI::App* eval_cmd =
        app.add_subcommand("evaluate", "compare model outputs against a real series");
    std::string real_path;
    std::vector<std::string> model_specs;
    std::size_t bins = 8;
    std::string support = "auto";
    eval_cmd->add_option("--real", real_path, "reference series file")->required();
    eval_cmd->add_option("--model", model_specs, "model series as label,qubits,layers,path");
    eval_cmd->add_option("--bins", bins, "histogram bin count");
    eval_cmd->add_option("--support", support, "auto, unit or pooled histogram support");
    eval_cmd->add_option("--out-dir", out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_file.empty()) cfg.load_file(config_file);
        for (const auto& [key, value] : overrides) cfg.set(key, value);

        if (app.got_subcommand(ingest)) {
            std::vector<std::string> flags(argv + 2, argv + argc);
            return cmd_ingest(cfg, input, out_dir, flags);
        }
        if (app.got_subcommand(train_cmd)) {
            return cmd_train_qgan(cfg, input, out_dir);
        }
        if (app.got_subcommand(markov_cmd)) {
            return cmd_fit_markov(cfg, input, out_dir);
        }
        if (app.got_subcommand(gen_cmd)) {
            return cmd_generate(cfg, checkpoint, matrix, count, out_dir);
        }
        if (app.got_subcommand(eval_cmd)) {
            return cmd_evaluate(real_path, model_specs, bins, support, out_dir);
        }
    } catch (const std::logic_error& e) { // config and precondition errors
        std::cerr << "qgaze: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) { // data, parse and numeric errors
        std::cerr << "qgaze: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
