// discriminator.hpp
// Classical discriminator networks built on the autodiff tape: a small MLP
// for desk-scale runs and an LSTM (optionally multi-layer, bidirectional)
// matching the reference architecture. Scores are sigmoid outputs in (0,1).
//
// Parameters live in one flat array. The layout is canonical:
//   mlp:  per layer [W (out x in) | b (out)]
//   lstm: per layer, per direction, per gate {i,f,g,o}: [W (H x in) | U (H x H) | b (H)]
//         then the readout [W1 (64 x H*dirs) | b1 | W2 (1 x 64) | b2]
// (gate order i = input, f = forget, g = cell candidate, o = output).

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qgaze/amsgrad.hpp"
#include "qgaze/autodiff.hpp"
#include "qgaze/errors.hpp"
#include "qgaze/rng.hpp"

namespace qgaze {

enum class DiscArch { mlp, lstm };
enum class DropoutMode { train, eval };

inline constexpr double kScoreClamp = 1e-7;
inline constexpr std::size_t kReadoutWidth = 64;

struct DiscriminatorConfig {
    DiscArch architecture = DiscArch::mlp;
    std::size_t input_length = 100;
    std::size_t hidden_size = 128;
    std::size_t num_recurrent_layers = 3;
    bool bidirectional = true;
    double dropout_rate = 0.3;
    std::vector<std::size_t> mlp_hidden = {64, 32};

    // Desk-scale preset: samples are scored individually, no dropout.
    static DiscriminatorConfig mlp_default() {
        DiscriminatorConfig cfg;
        cfg.architecture = DiscArch::mlp;
        cfg.input_length = 1;
        cfg.dropout_rate = 0.0;
        return cfg;
    }

    // Reference-scale preset: 3-layer bidirectional LSTM, 128 hidden units,
    // dropout 0.3 after the first readout linear, sequence length 100.
    static DiscriminatorConfig lstm_default() {
        DiscriminatorConfig cfg;
        cfg.architecture = DiscArch::lstm;
        return cfg;
    }

    std::size_t directions() const {
        return (architecture == DiscArch::lstm && bidirectional) ? 2 : 1;
    }

    void validate() const {
        if (input_length < 1) throw config_error("discriminator input_length must be >= 1");
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
            throw config_error("dropout_rate must be in [0, 1)");
        }
        if (architecture == DiscArch::mlp) {
            for (std::size_t w : mlp_hidden) {
                if (w < 1) throw config_error("mlp hidden widths must be >= 1");
            }
        } else {
            if (hidden_size < 1) throw config_error("hidden_size must be >= 1");
            if (num_recurrent_layers < 1) throw config_error("num_recurrent_layers must be >= 1");
        }
    }

    std::size_t parameter_count() const;
};

using DiscriminatorParams = std::vector<double>;

namespace detail {

// Walks every tensor of the flat layout in canonical order.
// visit(offset, rows, cols, fan_in); biases have cols == 1.
template <class F>
void for_each_tensor(const DiscriminatorConfig& cfg, F&& visit) {
    std::size_t off = 0;
    auto tensor = [&](std::size_t rows, std::size_t cols, std::size_t fan_in) {
        visit(off, rows, cols, fan_in);
        off += rows * cols;
    };
    if (cfg.architecture == DiscArch::mlp) {
        std::vector<std::size_t> widths;
        widths.push_back(cfg.input_length);
        widths.insert(widths.end(), cfg.mlp_hidden.begin(), cfg.mlp_hidden.end());
        widths.push_back(1);
        for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
            tensor(widths[k + 1], widths[k], widths[k]); // W
            tensor(widths[k + 1], 1, widths[k]);         // b
        }
    } else {
        const std::size_t h = cfg.hidden_size;
        const std::size_t dirs = cfg.directions();
        for (std::size_t layer = 0; layer < cfg.num_recurrent_layers; ++layer) {
            const std::size_t in = (layer == 0) ? 1 : h * dirs;
            for (std::size_t dir = 0; dir < dirs; ++dir) {
                for (int gate = 0; gate < 4; ++gate) {
                    tensor(h, in, in);    // W
                    tensor(h, h, h);      // U
                    tensor(h, 1, in + h); // b
                }
            }
        }
        tensor(kReadoutWidth, h * dirs, h * dirs); // readout W1
        tensor(kReadoutWidth, 1, h * dirs);        // readout b1
        tensor(1, kReadoutWidth, kReadoutWidth);   // readout W2
        tensor(1, 1, kReadoutWidth);               // readout b2
    }
}

} // namespace detail

inline std::size_t DiscriminatorConfig::parameter_count() const {
    std::size_t total = 0;
    detail::for_each_tensor(*this, [&](std::size_t, std::size_t rows, std::size_t cols, std::size_t) {
        total += rows * cols;
    });
    return total;
}

// Uniform on [-1/sqrt(fan_in), +1/sqrt(fan_in)] per tensor.
inline DiscriminatorParams init_discriminator_params(const DiscriminatorConfig& cfg, Rng& rng) {
    cfg.validate();
    DiscriminatorParams params(cfg.parameter_count());
    detail::for_each_tensor(cfg, [&](std::size_t off, std::size_t rows, std::size_t cols,
                                     std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < rows * cols; ++i) {
            params[off + i] = rng.uniform(-bound, bound);
        }
    });
    return params;
}

namespace detail {

// Sequential reader over the flat layout; forward passes consume tensors
// in the same canonical order as for_each_tensor.
struct ParamCursor {
    Tape& tape;
    std::span<const double> params;
    std::size_t pos = 0;

    Tape::NodeId take(std::size_t rows, std::size_t cols) {
        const std::size_t len = rows * cols;
        Tape::NodeId id = tape.param(params, pos, len);
        pos += len;
        return id;
    }
};

inline Tape::NodeId mlp_forward(Tape& tape, ParamCursor& cur, const DiscriminatorConfig& cfg,
                                Tape::NodeId x, DropoutMode mode, Rng* rng) {
    std::vector<std::size_t> widths;
    widths.push_back(cfg.input_length);
    widths.insert(widths.end(), cfg.mlp_hidden.begin(), cfg.mlp_hidden.end());
    widths.push_back(1);
    Tape::NodeId a = x;
    for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
        Tape::NodeId w = cur.take(widths[k + 1], widths[k]);
        Tape::NodeId b = cur.take(widths[k + 1], 1);
        Tape::NodeId z = tape.add(tape.matvec(w, widths[k + 1], widths[k], a), b);
        const bool last = (k + 2 == widths.size());
        if (last) {
            a = tape.sigmoid(z);
        } else {
            a = tape.tanh(z);
            if (mode == DropoutMode::train && cfg.dropout_rate > 0.0) {
                a = tape.dropout(a, cfg.dropout_rate, *rng);
            }
        }
    }
    return a;
}

inline Tape::NodeId lstm_forward(Tape& tape, ParamCursor& cur, const DiscriminatorConfig& cfg,
                                 const std::vector<Tape::NodeId>& inputs, DropoutMode mode,
                                 Rng* rng) {
    const std::size_t h = cfg.hidden_size;
    const std::size_t dirs = cfg.directions();
    const std::size_t steps = inputs.size();

    std::vector<Tape::NodeId> layer_in = inputs;
    std::size_t in_size = 1;
    Tape::NodeId final_fwd = Tape::npos, final_bwd = Tape::npos;

    for (std::size_t layer = 0; layer < cfg.num_recurrent_layers; ++layer) {
        std::vector<std::vector<Tape::NodeId>> dir_outputs(dirs);
        for (std::size_t dir = 0; dir < dirs; ++dir) {
            struct Gate {
                Tape::NodeId w, u, b;
            };
            Gate gates[4];
            for (auto& g : gates) {
                g.w = cur.take(h, in_size);
                g.u = cur.take(h, h);
                g.b = cur.take(h, 1);
            }
            Tape::NodeId hidden = tape.zeros(h);
            Tape::NodeId cell = tape.zeros(h);
            dir_outputs[dir].resize(steps);
            for (std::size_t step = 0; step < steps; ++step) {
                const std::size_t t = (dir == 0) ? step : steps - 1 - step;
                const Tape::NodeId x = layer_in[t];
                auto gate_pre = [&](const Gate& g) {
                    return tape.add(tape.add(tape.matvec(g.w, h, in_size, x),
                                             tape.matvec(g.u, h, h, hidden)),
                                    g.b);
                };
                Tape::NodeId gi = tape.sigmoid(gate_pre(gates[0]));
                Tape::NodeId gf = tape.sigmoid(gate_pre(gates[1]));
                Tape::NodeId gg = tape.tanh(gate_pre(gates[2]));
                Tape::NodeId go = tape.sigmoid(gate_pre(gates[3]));
                cell = tape.add(tape.hadamard(gf, cell), tape.hadamard(gi, gg));
                hidden = tape.hadamard(go, tape.tanh(cell));
                dir_outputs[dir][t] = hidden;
            }
            if (dir == 0) {
                final_fwd = hidden;
            } else {
                final_bwd = hidden;
            }
        }
        layer_in.resize(steps);
        for (std::size_t t = 0; t < steps; ++t) {
            layer_in[t] = (dirs == 2) ? tape.concat(dir_outputs[0][t], dir_outputs[1][t])
                                      : dir_outputs[0][t];
        }
        in_size = h * dirs;
    }

    Tape::NodeId features = (dirs == 2) ? tape.concat(final_fwd, final_bwd) : final_fwd;
    Tape::NodeId w1 = cur.take(kReadoutWidth, h * dirs);
    Tape::NodeId b1 = cur.take(kReadoutWidth, 1);
    Tape::NodeId z1 = tape.add(tape.matvec(w1, kReadoutWidth, h * dirs, features), b1);
    if (mode == DropoutMode::train && cfg.dropout_rate > 0.0) {
        z1 = tape.dropout(z1, cfg.dropout_rate, *rng);
    }
    Tape::NodeId w2 = cur.take(1, kReadoutWidth);
    Tape::NodeId b2 = cur.take(1, 1);
    return tape.sigmoid(tape.add(tape.matvec(w2, 1, kReadoutWidth, z1), b2));
}

} // namespace detail

// Records the full forward pass on `tape` and returns the score node.
// In train mode dropout masks are drawn from rng (required unless the rate
// is zero); eval mode is deterministic. If input_nodes is given it receives
// the ids of the raw input leaves (one per time step for the LSTM).
inline Tape::NodeId forward_on(Tape& tape, std::span<const double> params,
                               const DiscriminatorConfig& cfg, std::span<const double> sequence,
                               DropoutMode mode, Rng* rng = nullptr,
                               std::vector<Tape::NodeId>* input_nodes = nullptr) {
    cfg.validate();
    if (sequence.size() != cfg.input_length) {
        throw config_error("sequence length " + std::to_string(sequence.size()) +
                           " does not match discriminator input_length " +
                           std::to_string(cfg.input_length));
    }
    if (params.size() != cfg.parameter_count()) {
        throw config_error("discriminator parameter vector has wrong size");
    }
    if (mode == DropoutMode::train && cfg.dropout_rate > 0.0 && rng == nullptr) {
        throw config_error("train-mode forward with dropout needs an rng");
    }
    detail::ParamCursor cur{tape, params, 0};
    Tape::NodeId score;
    if (cfg.architecture == DiscArch::mlp) {
        Tape::NodeId x = tape.input(sequence);
        if (input_nodes) *input_nodes = {x};
        score = detail::mlp_forward(tape, cur, cfg, x, mode, rng);
    } else {
        std::vector<Tape::NodeId> xs(sequence.size());
        for (std::size_t t = 0; t < sequence.size(); ++t) {
            xs[t] = tape.input(sequence.subspan(t, 1));
        }
        if (input_nodes) *input_nodes = xs;
        score = detail::lstm_forward(tape, cur, cfg, xs, mode, rng);
    }
    const double s = tape.scalar(score);
    if (!std::isfinite(s)) {
        throw numeric_error("discriminator produced a non-finite score");
    }
    tape.set_output(score);
    return score;
}

struct ForwardResult {
    double score = 0.0;
    Tape tape;
    Tape::NodeId score_node = Tape::npos;
};

inline ForwardResult forward(std::span<const double> params, const DiscriminatorConfig& cfg,
                             std::span<const double> sequence, DropoutMode mode, Rng* rng = nullptr) {
    ForwardResult r;
    r.score_node = forward_on(r.tape, params, cfg, sequence, mode, rng);
    r.score = r.tape.scalar(r.score_node);
    return r;
}

// Eval-mode score without keeping the tape around.
inline double score_eval(std::span<const double> params, const DiscriminatorConfig& cfg,
                         std::span<const double> sequence) {
    thread_local Tape scratch;
    scratch.reset();
    return scratch.scalar(forward_on(scratch, params, cfg, sequence, DropoutMode::eval));
}

// Loss-node builders: the per-sample BCE terms, with scores clamped to
// [kScoreClamp, 1 - kScoreClamp] before the log.
inline Tape::NodeId append_log_score(Tape& tape, Tape::NodeId score) {
    Tape::NodeId node = tape.log(tape.clamp(score, kScoreClamp, 1.0 - kScoreClamp));
    tape.set_output(node);
    return node;
}

inline Tape::NodeId append_log_one_minus(Tape& tape, Tape::NodeId score) {
    Tape::NodeId node = tape.log(tape.clamp(tape.one_minus(score), kScoreClamp, 1.0 - kScoreClamp));
    tape.set_output(node);
    return node;
}

// Batch binary cross-entropy, scores clamped before the log:
//   -(1/m) sum_l [log D(x^l) + log(1 - D(g^l))]
inline double bce_loss(std::span<const double> real_scores, std::span<const double> fake_scores) {
    if (real_scores.empty() || fake_scores.empty()) {
        throw config_error("bce_loss: empty batch");
    }
    if (real_scores.size() != fake_scores.size()) {
        throw config_error("bce_loss: real and fake batches must have equal size");
    }
    auto clamp = [](double s) {
        return s < kScoreClamp ? kScoreClamp : (s > 1.0 - kScoreClamp ? 1.0 - kScoreClamp : s);
    };
    double loss = 0.0;
    for (std::size_t i = 0; i < real_scores.size(); ++i) {
        loss -= std::log(clamp(real_scores[i])) + std::log(1.0 - clamp(fake_scores[i]));
    }
    return loss / static_cast<double>(real_scores.size());
}

// Gradients of a recorded scalar with respect to the flat parameters.
inline std::vector<double> backward(Tape& tape, double seed_adjoint, std::size_t param_count) {
    return tape.backward(seed_adjoint, param_count);
}

struct PenaltyResult {
    double penalty = 0.0;
    std::vector<double> grad;
};

// Stability penalty on the discriminator: lambda * mean over the batch of
// (||grad_input D(x~)|| - 1)^2, where x~ is the real sample perturbed by
// uniform noise of scale 0.1 * (batch std). The input gradient is exact
// (reverse mode); its parameter derivative uses a central-difference
// surrogate in the input, which the chain rule then propagates exactly.
inline PenaltyResult gradient_penalty(std::span<const double> params, const DiscriminatorConfig& cfg,
                                      const std::vector<std::vector<double>>& real_batch, Rng& rng,
                                      double lambda) {
    if (lambda < 0.0) {
        throw config_error("gradient_penalty: lambda must be >= 0");
    }
    PenaltyResult result;
    result.grad.assign(cfg.parameter_count(), 0.0);
    if (lambda == 0.0 || real_batch.empty()) {
        return result;
    }

    double mean = 0.0;
    std::size_t n = 0;
    for (const auto& seq : real_batch) {
        for (double v : seq) {
            mean += v;
            ++n;
        }
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (const auto& seq : real_batch) {
        for (double v : seq) ss += (v - mean) * (v - mean);
    }
    const double noise_scale = n > 1 ? 0.1 * std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;

    constexpr double kFdEps = 1e-5;
    const double inv_batch = 1.0 / static_cast<double>(real_batch.size());
    Tape tape;
    std::vector<double> perturbed;
    std::vector<Tape::NodeId> input_nodes;
    std::vector<double> input_grad;
    for (const auto& seq : real_batch) {
        perturbed.assign(seq.begin(), seq.end());
        for (double& v : perturbed) v += rng.uniform(-noise_scale, noise_scale);

        tape.reset();
        forward_on(tape, params, cfg, perturbed, DropoutMode::eval, nullptr, &input_nodes);
        tape.backward(1.0, params.size());
        input_grad.clear();
        for (Tape::NodeId id : input_nodes) {
            for (double g : tape.adjoint(id)) input_grad.push_back(g);
        }
        double norm_sq = 0.0;
        for (double g : input_grad) norm_sq += g * g;
        const double norm = std::sqrt(norm_sq);
        result.penalty += lambda * inv_batch * (norm - 1.0) * (norm - 1.0);

        if (norm < 1e-12) continue; // flat at the origin; no direction to push
        const double coeff = 2.0 * lambda * inv_batch * (norm - 1.0) / norm;
        for (std::size_t k = 0; k < perturbed.size(); ++k) {
            const double saved = perturbed[k];
            perturbed[k] = saved + kFdEps;
            tape.reset();
            forward_on(tape, params, cfg, perturbed, DropoutMode::eval);
            std::vector<double> gp = tape.backward(1.0, params.size());
            perturbed[k] = saved - kFdEps;
            tape.reset();
            forward_on(tape, params, cfg, perturbed, DropoutMode::eval);
            std::vector<double> gm = tape.backward(1.0, params.size());
            perturbed[k] = saved;
            const double w = coeff * input_grad[k] / (2.0 * kFdEps);
            for (std::size_t p = 0; p < result.grad.size(); ++p) {
                result.grad[p] += w * (gp[p] - gm[p]);
            }
        }
    }
    return result;
}

} // namespace qgaze
