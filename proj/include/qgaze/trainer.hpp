// trainer.hpp
// Adversarial training loop: per batch, one or more discriminator updates
// on real and freshly sampled fake data, then one or more generator updates
// using the analytic expectation loss over all basis states (exact at the
// register sizes used here) with parameter-shift gradients. Also provides
// fake-batch sampling and text checkpoints for both parameter sets.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qgaze/amsgrad.hpp"
#include "qgaze/csv.hpp"
#include "qgaze/data.hpp"
#include "qgaze/discriminator.hpp"
#include "qgaze/errors.hpp"
#include "qgaze/generator.hpp"
#include "qgaze/metrics.hpp"
#include "qgaze/rng.hpp"

namespace qgaze {

struct OptimizerHyper {
    double alpha = 0.002;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainingConfig {
    std::size_t epochs = 300;
    std::size_t batch_size = 500;
    std::uint64_t seed = 0;
    std::size_t disc_updates_per_batch = 1;
    std::size_t gen_updates_per_batch = 1;
    double penalty_weight = 10.0;
    OptimizerHyper gen_opt;
    OptimizerHyper disc_opt;
    bool track_jsd = true; // per-epoch JSD against the training distribution

    void validate() const {
        if (epochs < 1) throw config_error("epochs must be >= 1");
        if (batch_size < 1) throw config_error("batch_size must be >= 1");
        if (disc_updates_per_batch < 1 || gen_updates_per_batch < 1) {
            throw config_error("updates per batch must be >= 1");
        }
        if (penalty_weight < 0.0) throw config_error("penalty_weight must be >= 0");
    }
};

struct TrainingLog {
    struct Record {
        std::size_t epoch = 0; // 1-based
        double gen_loss = 0.0;
        double disc_loss = 0.0;
        double wall_time_s = 0.0;
        std::optional<double> jsd;
        std::uint64_t gen_circuit_evals = 0; // not serialized; budget checks only
    };
    std::vector<Record> records;

    void write_csv(const std::filesystem::path& path) const {
        auto out = detail::open_out(path);
        const bool with_jsd = !records.empty() && records.front().jsd.has_value();
        out << "epoch,gen_loss,disc_loss,wall_time_s" << (with_jsd ? ",jsd" : "") << "\n";
        for (const auto& r : records) {
            out << r.epoch << ',' << fmt_g(r.gen_loss, 9) << ',' << fmt_g(r.disc_loss, 9) << ','
                << fmt_g(r.wall_time_s, 6);
            if (with_jsd) out << ',' << fmt_g(r.jsd.value_or(0.0), 9);
            out << '\n';
        }
    }
};

struct GeneratorSample {
    std::size_t basis_index = 0;
    double value = 0.0; // bin center of the active discretization
};

// m i.i.d. measurement draws from the generator's output distribution,
// mapped to the [0,1] bin centers of the 2^N-level discretization.
inline std::vector<GeneratorSample> make_fake_batch(const AnsatzConfig& config,
                                                    const ParameterVector& theta, std::size_t m,
                                                    Rng& rng) {
    if (m < 1) throw config_error("make_fake_batch: m must be >= 1");
    const ProbVector probs = output_distribution(config, theta);
    const std::vector<std::size_t> draws = sample_outcomes(probs, m, rng);
    std::vector<GeneratorSample> batch(m);
    for (std::size_t i = 0; i < m; ++i) {
        batch[i] = {draws[i], bin_center(draws[i], config.levels())};
    }
    return batch;
}

struct TrainResult {
    ParameterVector theta;
    DiscriminatorParams phi;
    TrainingLog log;
};

namespace detail {

inline double clamp_score(double s) {
    return s < kScoreClamp ? kScoreClamp : (s > 1.0 - kScoreClamp ? 1.0 - kScoreClamp : s);
}

// Discriminator scores for every basis value, clamped into (0,1). The
// basis value is presented as a constant sequence when the discriminator
// consumes windows longer than one sample.
inline std::vector<double> basis_scores(std::span<const double> phi, const DiscriminatorConfig& cfg,
                                        std::size_t levels) {
    std::vector<double> scores(levels);
    std::vector<double> seq(cfg.input_length);
    for (std::size_t j = 0; j < levels; ++j) {
        std::fill(seq.begin(), seq.end(), bin_center(j, levels));
        scores[j] = clamp_score(score_eval(phi, cfg, seq));
    }
    return scores;
}

} // namespace detail

// Trains generator and discriminator on a discretized series. The dataset's
// level count must equal 2^n_qubits. Deterministic for a fixed seed.
inline TrainResult train(const AnsatzConfig& gen_cfg, const DiscriminatorConfig& disc_cfg,
                         const TrainingConfig& train_cfg, const DiscreteSeries& dataset) {
    train_cfg.validate();
    disc_cfg.validate();
    if (dataset.indices.empty()) {
        throw config_error("train: empty dataset");
    }
    if (dataset.levels != gen_cfg.levels()) {
        throw config_error("train: dataset has " + std::to_string(dataset.levels) +
                           " levels but the generator produces " +
                           std::to_string(gen_cfg.levels()));
    }
    const std::size_t lin = disc_cfg.input_length;
    const std::size_t seqs_per_batch = std::max<std::size_t>(1, train_cfg.batch_size / lin);
    const std::size_t n_windows = dataset.indices.size() / lin;
    const std::size_t batches = n_windows / seqs_per_batch;
    if (batches == 0) {
        throw config_error("train: dataset too small for one batch of " +
                           std::to_string(seqs_per_batch) + " windows of length " +
                           std::to_string(lin));
    }

    Rng base(train_cfg.seed);
    Rng rng_gen_init = base.substream("gen_init");
    Rng rng_disc_init = base.substream("disc_init");
    Rng rng_sampling = base.substream("sampling");
    Rng rng_shuffle = base.substream("shuffle");
    Rng rng_dropout = base.substream("dropout");
    Rng rng_penalty = base.substream("penalty");

    ParameterVector theta = init_generator_params(gen_cfg, rng_gen_init);
    DiscriminatorParams phi = init_discriminator_params(disc_cfg, rng_disc_init);
    AmsgradState gen_state = AmsgradState::init(theta.size(), train_cfg.gen_opt.alpha,
                                                train_cfg.gen_opt.beta1, train_cfg.gen_opt.beta2,
                                                train_cfg.gen_opt.epsilon);
    AmsgradState disc_state = AmsgradState::init(phi.size(), train_cfg.disc_opt.alpha,
                                                 train_cfg.disc_opt.beta1, train_cfg.disc_opt.beta2,
                                                 train_cfg.disc_opt.epsilon);

    const std::size_t levels = dataset.levels;
    const std::vector<double> real_values = dataset.values();

    std::vector<double> target_dist;
    if (train_cfg.track_jsd) {
        target_dist.assign(levels, 0.0);
        for (std::size_t idx : dataset.indices) target_dist[idx] += 1.0;
        for (double& p : target_dist) p /= static_cast<double>(dataset.indices.size());
    }

    // Identical samples produce identical scores when dropout is off, so
    // single-sample batches collapse to one forward/backward per level
    // with count-weighted seeds. Exact same gradients, far fewer tapes.
    const bool grouped = (lin == 1 && disc_cfg.dropout_rate == 0.0);

    std::vector<std::size_t> window_order(n_windows);
    for (std::size_t i = 0; i < n_windows; ++i) window_order[i] = i;

    TrainingLog log;
    Tape tape;
    const double inv_m = 1.0 / static_cast<double>(seqs_per_batch);

    for (std::size_t epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        rng_shuffle.shuffle(window_order);
        double epoch_gen_loss = 0.0, epoch_disc_loss = 0.0;
        std::uint64_t epoch_gen_evals = 0;
        std::size_t gen_loss_count = 0, disc_loss_count = 0;

        for (std::size_t batch = 0; batch < batches; ++batch) {
            try {
                // --- discriminator updates ---
                for (std::size_t du = 0; du < train_cfg.disc_updates_per_batch; ++du) {
                    const auto fake =
                        make_fake_batch(gen_cfg, theta, seqs_per_batch * lin, rng_sampling);
                    std::vector<double> grad(phi.size(), 0.0);
                    double batch_loss = 0.0;

                    if (grouped) {
                        std::vector<std::size_t> real_counts(levels, 0), fake_counts(levels, 0);
                        for (std::size_t s = 0; s < seqs_per_batch; ++s) {
                            ++real_counts[dataset.indices[window_order[batch * seqs_per_batch + s]]];
                        }
                        for (const auto& sample : fake) ++fake_counts[sample.basis_index];
                        for (std::size_t j = 0; j < levels; ++j) {
                            const double center = bin_center(j, levels);
                            if (real_counts[j] > 0) {
                                tape.reset();
                                auto score = forward_on(tape, phi, disc_cfg, {&center, 1},
                                                        DropoutMode::train, &rng_dropout);
                                const double s = tape.scalar(score);
                                append_log_score(tape, score);
                                const double w = static_cast<double>(real_counts[j]);
                                const auto g = tape.backward(-inv_m * w, phi.size());
                                for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += g[p];
                                batch_loss -= inv_m * w * std::log(detail::clamp_score(s));
                            }
                            if (fake_counts[j] > 0) {
                                tape.reset();
                                auto score = forward_on(tape, phi, disc_cfg, {&center, 1},
                                                        DropoutMode::train, &rng_dropout);
                                const double s = tape.scalar(score);
                                append_log_one_minus(tape, score);
                                const double w = static_cast<double>(fake_counts[j]);
                                const auto g = tape.backward(-inv_m * w, phi.size());
                                for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += g[p];
                                batch_loss -= inv_m * w * std::log(detail::clamp_score(1.0 - s));
                            }
                        }
                    } else {
                        for (std::size_t s = 0; s < seqs_per_batch; ++s) {
                            const std::size_t w0 = window_order[batch * seqs_per_batch + s] * lin;
                            tape.reset();
                            auto score = forward_on(tape, phi, disc_cfg,
                                                    std::span(real_values).subspan(w0, lin),
                                                    DropoutMode::train, &rng_dropout);
                            const double sc = tape.scalar(score);
                            append_log_score(tape, score);
                            const auto g = tape.backward(-inv_m, phi.size());
                            for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += g[p];
                            batch_loss -= inv_m * std::log(detail::clamp_score(sc));
                        }
                        std::vector<double> seq(lin);
                        for (std::size_t s = 0; s < seqs_per_batch; ++s) {
                            for (std::size_t k = 0; k < lin; ++k) seq[k] = fake[s * lin + k].value;
                            tape.reset();
                            auto score = forward_on(tape, phi, disc_cfg, seq, DropoutMode::train,
                                                    &rng_dropout);
                            const double sc = tape.scalar(score);
                            append_log_one_minus(tape, score);
                            const auto g = tape.backward(-inv_m, phi.size());
                            for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += g[p];
                            batch_loss -= inv_m * std::log(detail::clamp_score(1.0 - sc));
                        }
                    }

                    if (train_cfg.penalty_weight > 0.0) {
                        std::vector<std::vector<double>> real_seqs(seqs_per_batch);
                        for (std::size_t s = 0; s < seqs_per_batch; ++s) {
                            const std::size_t w0 = window_order[batch * seqs_per_batch + s] * lin;
                            real_seqs[s].assign(real_values.begin() + w0,
                                                real_values.begin() + w0 + lin);
                        }
                        PenaltyResult pen = gradient_penalty(phi, disc_cfg, real_seqs, rng_penalty,
                                                             train_cfg.penalty_weight);
                        for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += pen.grad[p];
                        batch_loss += pen.penalty;
                    }

                    if (!std::isfinite(batch_loss)) {
                        throw numeric_error("non-finite discriminator loss");
                    }
                    amsgrad_step(disc_state, phi, grad);
                    epoch_disc_loss += batch_loss;
                    ++disc_loss_count;
                }

                // --- generator updates (analytic loss over all basis states) ---
                const std::uint64_t evals_before = circuit_eval_count();
                for (std::size_t gu = 0; gu < train_cfg.gen_updates_per_batch; ++gu) {
                    const std::vector<double> scores = detail::basis_scores(phi, disc_cfg, levels);
                    const ProbVector probs = output_distribution(gen_cfg, theta);
                    const double loss = generator_loss(probs, scores);
                    if (!std::isfinite(loss)) {
                        throw numeric_error("non-finite generator loss");
                    }
                    const ParameterVector grad = generator_gradient(gen_cfg, theta, scores);
                    amsgrad_step(gen_state, theta, grad);
                    epoch_gen_loss += loss;
                    ++gen_loss_count;
                }
                epoch_gen_evals += circuit_eval_count() - evals_before;
            } catch (const numeric_error& e) {
                throw numeric_error("epoch " + std::to_string(epoch) + " batch " +
                                    std::to_string(batch) + ": " + e.what());
            }
        }

        TrainingLog::Record rec;
        rec.epoch = epoch;
        rec.gen_loss = epoch_gen_loss / static_cast<double>(gen_loss_count);
        rec.disc_loss = epoch_disc_loss / static_cast<double>(disc_loss_count);
        rec.gen_circuit_evals = epoch_gen_evals;
        if (train_cfg.track_jsd) {
            rec.jsd = js_divergence(output_distribution(gen_cfg, theta), target_dist);
        }
        rec.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log.records.push_back(rec);
    }
    return {std::move(theta), std::move(phi), std::move(log)};
}

// --- checkpoints -----------------------------------------------------------
// One text file with two sections. Angles and weights are printed with 17
// significant digits, which round-trips doubles bit-exactly.
//
//   [generator]
//   <n_qubits>,<layers>
//   <angle per line>
//   [discriminator]
//   mlp,<input_length>,<w1:w2:...>,<dropout>        (or lstm,<input_length>,
//   <weight per line>                                <hidden>,<layers>,<bidir>,<dropout>)

struct Checkpoint {
    AnsatzConfig gen_config;
    ParameterVector theta;
    DiscriminatorConfig disc_config;
    DiscriminatorParams phi;
};

namespace detail {

inline std::string disc_header(const DiscriminatorConfig& cfg) {
    if (cfg.architecture == DiscArch::mlp) {
        std::string widths;
        for (std::size_t i = 0; i < cfg.mlp_hidden.size(); ++i) {
            widths += (i ? ":" : "") + std::to_string(cfg.mlp_hidden[i]);
        }
        return "mlp," + std::to_string(cfg.input_length) + "," + widths + "," +
               fmt_g(cfg.dropout_rate);
    }
    return "lstm," + std::to_string(cfg.input_length) + "," + std::to_string(cfg.hidden_size) +
           "," + std::to_string(cfg.num_recurrent_layers) + "," +
           (cfg.bidirectional ? "1" : "0") + "," + fmt_g(cfg.dropout_rate);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t p = s.find(sep, start);
        if (p == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, p - start));
        start = p + 1;
    }
    return out;
}

inline DiscriminatorConfig parse_disc_header(const std::string& line, const std::string& file,
                                             std::size_t line_no) {
    const auto fields = split(line, ',');
    DiscriminatorConfig cfg;
    try {
        if (fields.at(0) == "mlp") {
            if (fields.size() != 4) throw data_error("expected 4 fields");
            cfg.architecture = DiscArch::mlp;
            cfg.input_length = std::stoul(fields[1]);
            cfg.mlp_hidden.clear();
            if (!fields[2].empty()) {
                for (const auto& w : split(fields[2], ':')) cfg.mlp_hidden.push_back(std::stoul(w));
            }
            cfg.dropout_rate = std::stod(fields[3]);
        } else if (fields.at(0) == "lstm") {
            if (fields.size() != 6) throw data_error("expected 6 fields");
            cfg.architecture = DiscArch::lstm;
            cfg.input_length = std::stoul(fields[1]);
            cfg.hidden_size = std::stoul(fields[2]);
            cfg.num_recurrent_layers = std::stoul(fields[3]);
            cfg.bidirectional = fields[4] == "1";
            cfg.dropout_rate = std::stod(fields[5]);
        } else {
            throw data_error("unknown architecture '" + fields.at(0) + "'");
        }
    } catch (const std::exception& e) {
        throw parse_error(file, line_no, std::string("bad discriminator header: ") + e.what());
    }
    return cfg;
}

} // namespace detail

inline void write_checkpoint(const std::filesystem::path& path, const AnsatzConfig& gen_cfg,
                             const ParameterVector& theta, const DiscriminatorConfig& disc_cfg,
                             std::span<const double> phi) {
    auto out = detail::open_out(path);
    out << "[generator]\n";
    out << gen_cfg.n_qubits << ',' << gen_cfg.layers << '\n';
    for (double t : theta) out << fmt_g(t) << '\n';
    out << "[discriminator]\n";
    out << detail::disc_header(disc_cfg) << '\n';
    for (double w : phi) out << fmt_g(w) << '\n';
}

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    const std::string file = path.string();
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };

    if (!next_line() || line != "[generator]") {
        throw parse_error(file, 1, "missing section [generator]");
    }
    if (!next_line()) {
        throw parse_error(file, line_no + 1, "missing generator header 'n_qubits,layers'");
    }
    Checkpoint ckpt;
    {
        const auto fields = detail::split(line, ',');
        if (fields.size() != 2) {
            throw parse_error(file, line_no, "expected 'n_qubits,layers'");
        }
        try {
            ckpt.gen_config.n_qubits = std::stoul(fields[0]);
            ckpt.gen_config.layers = std::stoul(fields[1]);
        } catch (const std::exception&) {
            throw parse_error(file, line_no, "expected 'n_qubits,layers'");
        }
    }
    const std::size_t n_theta = ckpt.gen_config.parameter_count();
    ckpt.theta.reserve(n_theta);
    while (ckpt.theta.size() < n_theta) {
        if (!next_line() || line == "[discriminator]") {
            throw parse_error(file, line_no, "generator section ends after " +
                                                 std::to_string(ckpt.theta.size()) + " of " +
                                                 std::to_string(n_theta) + " angles");
        }
        ckpt.theta.push_back(detail::parse_double(line, file, line_no));
    }
    if (!next_line() || line != "[discriminator]") {
        throw parse_error(file, line_no, "missing section [discriminator]");
    }
    if (!next_line()) {
        throw parse_error(file, line_no + 1, "missing discriminator header");
    }
    ckpt.disc_config = detail::parse_disc_header(line, file, line_no);
    const std::size_t n_phi = ckpt.disc_config.parameter_count();
    ckpt.phi.reserve(n_phi);
    while (ckpt.phi.size() < n_phi) {
        if (!next_line()) {
            throw parse_error(file, line_no, "discriminator section ends after " +
                                                 std::to_string(ckpt.phi.size()) + " of " +
                                                 std::to_string(n_phi) + " weights");
        }
        ckpt.phi.push_back(detail::parse_double(line, file, line_no));
    }
    return ckpt;
}

// Restore with an expected shape; mismatches are configuration errors.
inline Checkpoint restore_checkpoint(const std::filesystem::path& path,
                                     const AnsatzConfig& expect_gen,
                                     const DiscriminatorConfig& expect_disc) {
    Checkpoint ckpt = read_checkpoint(path);
    if (ckpt.gen_config.n_qubits != expect_gen.n_qubits ||
        ckpt.gen_config.layers != expect_gen.layers) {
        throw config_error("checkpoint " + path.string() + " holds a " +
                           std::to_string(ckpt.gen_config.n_qubits) + "-qubit, " +
                           std::to_string(ckpt.gen_config.layers) +
                           "-layer generator; configuration expects " +
                           std::to_string(expect_gen.n_qubits) + "," +
                           std::to_string(expect_gen.layers));
    }
    if (detail::disc_header(ckpt.disc_config) != detail::disc_header(expect_disc)) {
        throw config_error("checkpoint " + path.string() +
                           " discriminator architecture does not match the configuration");
    }
    return ckpt;
}

} // namespace qgaze
