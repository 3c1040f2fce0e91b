#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "qgaze/discriminator.hpp"

using namespace qgaze;
using Catch::Approx;

namespace {

DiscriminatorConfig tiny_mlp(std::size_t input_length, std::vector<std::size_t> hidden) {
    DiscriminatorConfig cfg = DiscriminatorConfig::mlp_default();
    cfg.input_length = input_length;
    cfg.mlp_hidden = std::move(hidden);
    return cfg;
}

DiscriminatorConfig tiny_lstm(std::size_t input_length, std::size_t hidden) {
    DiscriminatorConfig cfg;
    cfg.architecture = DiscArch::lstm;
    cfg.input_length = input_length;
    cfg.hidden_size = hidden;
    cfg.num_recurrent_layers = 1;
    cfg.bidirectional = false;
    cfg.dropout_rate = 0.0;
    return cfg;
}

// max |a - b| / max |b|
double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max(den, std::abs(b[i]));
    }
    return num / std::max(den, 1e-300);
}

} // namespace

TEST_CASE("parameter counts follow the layout", "[discriminator]") {
    CHECK(tiny_mlp(2, {2}).parameter_count() == 9); // (2*2+2) + (1*2+1)
    CHECK(DiscriminatorConfig::mlp_default().parameter_count() ==
          (64 * 1 + 64) + (32 * 64 + 32) + (1 * 32 + 1));
    // 1-layer unidirectional lstm, hidden 3: 4 gates * (3 + 9 + 3) = 60,
    // readout 64*3 + 64 + 64 + 1
    CHECK(tiny_lstm(5, 3).parameter_count() == 60 + 64 * 3 + 64 + 64 + 1);
}

TEST_CASE("config validation", "[discriminator]") {
    DiscriminatorConfig bad = DiscriminatorConfig::mlp_default();
    bad.dropout_rate = 1.0;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = tiny_mlp(1, {0});
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = DiscriminatorConfig::lstm_default();
    bad.num_recurrent_layers = 0;
    CHECK_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("zero weights score one half", "[discriminator]") {
    for (const auto& cfg : {tiny_mlp(3, {4}), tiny_lstm(4, 3)}) {
        const DiscriminatorParams params(cfg.parameter_count(), 0.0);
        const std::vector<double> seq(cfg.input_length, 0.7);
        CHECK(score_eval(params, cfg, seq) == Approx(0.5));
    }
}

TEST_CASE("eval mode is deterministic and ignores the rng", "[discriminator]") {
    DiscriminatorConfig cfg = tiny_mlp(2, {8});
    cfg.dropout_rate = 0.4; // present but inert in eval mode
    Rng init(3);
    const auto params = init_discriminator_params(cfg, init);
    const std::vector<double> seq = {0.2, 0.9};
    const double a = score_eval(params, cfg, seq);
    const double b = score_eval(params, cfg, seq);
    CHECK(a == b);

    Rng r1(1), r2(999);
    const auto fa = forward(params, cfg, seq, DropoutMode::eval, &r1);
    const auto fb = forward(params, cfg, seq, DropoutMode::eval, &r2);
    CHECK(fa.score == fb.score);
    CHECK(fa.score == a);
}

TEST_CASE("train-mode dropout draws masks from the rng", "[discriminator]") {
    DiscriminatorConfig cfg = tiny_mlp(2, {32});
    cfg.dropout_rate = 0.5;
    Rng init(3);
    const auto params = init_discriminator_params(cfg, init);
    const std::vector<double> seq = {0.2, 0.9};
    Rng r1(7), r1b(7), r2(8);
    const double a = forward(params, cfg, seq, DropoutMode::train, &r1).score;
    const double a_again = forward(params, cfg, seq, DropoutMode::train, &r1b).score;
    const double b = forward(params, cfg, seq, DropoutMode::train, &r2).score;
    CHECK(a == a_again); // same rng stream, same masks
    CHECK(a != b);

    CHECK_THROWS_AS(forward(params, cfg, seq, DropoutMode::train, nullptr), config_error);
}

TEST_CASE("scores stay strictly inside (0,1)", "[discriminator][property]") {
    Rng rng(17);
    const auto cfg = tiny_mlp(4, {16, 8});
    for (int rep = 0; rep < 25; ++rep) {
        Rng init(rep);
        const auto params = init_discriminator_params(cfg, init);
        std::vector<double> seq(4);
        for (double& x : seq) x = rng.uniform(-3.0, 3.0);
        const double s = score_eval(params, cfg, seq);
        CHECK(s > 0.0);
        CHECK(s < 1.0);
    }
}

TEST_CASE("frozen 2-2-1 fixture forward value", "[discriminator]") {
    // tanh hidden, sigmoid output; value frozen from a by-hand forward pass.
    const auto cfg = tiny_mlp(2, {2});
    const DiscriminatorParams params = {0.5, -0.25, 0.1, 0.3, // W1
                                        0.05, -0.1,           // b1
                                        0.7,  -0.6,           // W2
                                        0.2};                 // b2
    const std::vector<double> seq = {1.0, -1.0};
    CHECK(score_eval(params, cfg, seq) == Approx(0.6983837676656399).margin(1e-15));
}

TEST_CASE("sequence length is checked", "[discriminator]") {
    const auto cfg = tiny_mlp(3, {2});
    const DiscriminatorParams params(cfg.parameter_count(), 0.0);
    CHECK_THROWS_AS(score_eval(params, cfg, std::vector<double>{1.0}), config_error);
    CHECK_THROWS_AS(score_eval(DiscriminatorParams(3, 0.0), cfg, std::vector<double>(3, 0.0)),
                    config_error);
}

TEST_CASE("bce loss values", "[discriminator]") {
    CHECK(bce_loss(std::vector<double>{1.0 - 1e-7}, std::vector<double>{1e-7}) ==
          Approx(0.0).margin(1e-6));
    CHECK(bce_loss(std::vector<double>{0.5}, std::vector<double>{0.5}) ==
          Approx(1.3862943611198906).margin(1e-12));
    // frozen from direct evaluation of -(1/2) sum [log r + log(1 - f)]
    CHECK(bce_loss(std::vector<double>{0.9, 0.8}, std::vector<double>{0.1, 0.3}) ==
          Approx(0.39526976328429736).margin(1e-12));
    CHECK_THROWS_AS(bce_loss(std::vector<double>{}, std::vector<double>{}), config_error);
    CHECK_THROWS_AS(bce_loss(std::vector<double>{0.5}, std::vector<double>{0.5, 0.5}),
                    config_error);
    // clamping keeps even saturated scores finite
    CHECK(std::isfinite(bce_loss(std::vector<double>{0.0}, std::vector<double>{1.0})));
}

TEST_CASE("mlp gradients match finite differences", "[discriminator][property]") {
    const auto cfg = tiny_mlp(2, {4});
    const std::vector<double> seq = {0.8, -0.3};
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng init(seed);
        const auto params = init_discriminator_params(cfg, init);
        Tape tape;
        auto score = forward_on(tape, params, cfg, seq, DropoutMode::eval);
        append_log_score(tape, score);
        const auto analytic = tape.backward(1.0, params.size());
        const auto fd = oracle::fd_gradient(
            [&](const std::vector<double>& p) {
                return std::log(score_eval(p, cfg, seq));
            },
            params, 1e-5);
        CHECK(rel_error(analytic, fd) < 1e-4);
    }
}

TEST_CASE("recurrent gradients match finite differences", "[discriminator][property]") {
    const auto cfg = tiny_lstm(3, 4);
    const std::vector<double> seq = {0.1, 0.9, 0.4};
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng init(100 + seed);
        const auto params = init_discriminator_params(cfg, init);
        Tape tape;
        forward_on(tape, params, cfg, seq, DropoutMode::eval);
        const auto analytic = tape.backward(1.0, params.size());
        const auto fd = oracle::fd_gradient(
            [&](const std::vector<double>& p) { return score_eval(p, cfg, seq); }, params, 1e-5);
        CHECK(rel_error(analytic, fd) < 1e-4);
    }
}

TEST_CASE("bidirectional stacked lstm gradients", "[discriminator]") {
    DiscriminatorConfig cfg = tiny_lstm(3, 3);
    cfg.num_recurrent_layers = 2;
    cfg.bidirectional = true;
    const std::vector<double> seq = {0.3, 0.7, 0.2};
    Rng init(5);
    const auto params = init_discriminator_params(cfg, init);
    Tape tape;
    forward_on(tape, params, cfg, seq, DropoutMode::eval);
    const auto analytic = tape.backward(1.0, params.size());
    const auto fd = oracle::fd_gradient(
        [&](const std::vector<double>& p) { return score_eval(p, cfg, seq); }, params, 1e-5);
    CHECK(rel_error(analytic, fd) < 1e-4);
}

TEST_CASE("gradient penalty disabled and constant cases", "[discriminator]") {
    const auto cfg = tiny_mlp(1, {4});
    Rng rng(3);
    const auto params = init_discriminator_params(cfg, rng);
    const std::vector<std::vector<double>> batch = {{0.2}, {0.5}, {0.8}};

    const PenaltyResult off = gradient_penalty(params, cfg, batch, rng, 0.0);
    CHECK(off.penalty == 0.0);
    for (double g : off.grad) CHECK(g == 0.0);

    // all-zero weights: input gradient is identically zero, penalty = lambda
    const DiscriminatorParams zeros(cfg.parameter_count(), 0.0);
    const PenaltyResult flat = gradient_penalty(zeros, cfg, batch, rng, 10.0);
    CHECK(flat.penalty == Approx(10.0));
    for (double g : flat.grad) CHECK(g == 0.0);
}

TEST_CASE("input gradient norm matches finite differences", "[discriminator]") {
    const auto cfg = tiny_mlp(2, {6});
    Rng rng(11);
    const auto params = init_discriminator_params(cfg, rng);
    const std::vector<double> x = {0.4, 0.6};

    Tape tape;
    std::vector<Tape::NodeId> inputs;
    forward_on(tape, params, cfg, x, DropoutMode::eval, nullptr, &inputs);
    tape.backward(1.0, params.size());
    const auto g = tape.adjoint(inputs[0]);

    const auto fd = oracle::fd_gradient(
        [&](const std::vector<double>& xin) { return score_eval(params, cfg, xin); }, x, 1e-5);
    const double norm_tape = std::hypot(g[0], g[1]);
    const double norm_fd = std::hypot(fd[0], fd[1]);
    CHECK(std::abs(norm_tape - norm_fd) < 1e-4);
}

TEST_CASE("gradient penalty parameter gradient matches finite differences", "[discriminator]") {
    const auto cfg = tiny_mlp(1, {4});
    Rng rng(23);
    const auto params = init_discriminator_params(cfg, rng);
    // identical sequences: batch std is zero, so no noise is added and the
    // penalty is a deterministic function of the parameters
    const std::vector<std::vector<double>> batch = {{0.6}, {0.6}};
    const double lambda = 5.0;

    Rng noise(1);
    const PenaltyResult pen = gradient_penalty(params, cfg, batch, noise, lambda);

    auto penalty_value = [&](const std::vector<double>& p) {
        Tape tape;
        std::vector<Tape::NodeId> inputs;
        forward_on(tape, p, cfg, batch[0], DropoutMode::eval, nullptr, &inputs);
        tape.backward(1.0, p.size());
        const double g = tape.adjoint(inputs[0])[0];
        const double norm = std::abs(g);
        return lambda * (norm - 1.0) * (norm - 1.0);
    };
    const auto fd = oracle::fd_gradient(penalty_value, params, 1e-5);
    CHECK(rel_error(pen.grad, fd) < 1e-4);
}

TEST_CASE("amsgrad first step and frozen two-step oracle", "[discriminator]") {
    AmsgradState st = AmsgradState::init(1);
    std::vector<double> p = {0.0};
    amsgrad_step(st, p, std::vector<double>{1.0});
    CHECK(p[0] == Approx(-0.0019999999800000006).margin(1e-15));
    amsgrad_step(st, p, std::vector<double>{-1.0});
    CHECK(p[0] == Approx(-0.001894736823157896).margin(1e-15));
    CHECK(st.t == 2);
}

TEST_CASE("amsgrad leaves params alone on zero gradients", "[discriminator]") {
    AmsgradState st = AmsgradState::init(3);
    std::vector<double> p = {1.0, -2.0, 0.5};
    const auto before = p;
    for (int i = 0; i < 5; ++i) amsgrad_step(st, p, std::vector<double>(3, 0.0));
    CHECK(p == before);
}

TEST_CASE("amsgrad vhat never decreases", "[discriminator][property]") {
    Rng rng(9);
    AmsgradState st = AmsgradState::init(4);
    std::vector<double> p(4, 0.0);
    std::vector<double> prev_vhat(4, 0.0);
    for (int step = 0; step < 200; ++step) {
        std::vector<double> g(4);
        for (double& x : g) x = rng.normal() * rng.uniform(0.0, 3.0);
        amsgrad_step(st, p, g);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(st.v_hat[i] >= prev_vhat[i]);
            prev_vhat[i] = st.v_hat[i];
        }
    }
}

TEST_CASE("amsgrad rejects non-finite gradients", "[discriminator]") {
    AmsgradState st = AmsgradState::init(1);
    std::vector<double> p = {0.0};
    CHECK_THROWS_AS(amsgrad_step(st, p, std::vector<double>{std::nan("")}), numeric_error);
    CHECK_THROWS_AS(amsgrad_step(st, p, std::vector<double>{1.0, 2.0}), config_error);
}

TEST_CASE("init_discriminator_params stays within the fan-in bound", "[discriminator]") {
    const auto cfg = tiny_mlp(4, {8});
    Rng rng(2);
    const auto params = init_discriminator_params(cfg, rng);
    REQUIRE(params.size() == cfg.parameter_count());
    // widest fan-in here is 4 -> bound 0.5 for the first layer, 1/sqrt(8)
    // afterwards; everything must stay under the loosest bound
    for (double w : params) CHECK(std::abs(w) <= 1.0);
    Rng rng2(2);
    CHECK(init_discriminator_params(cfg, rng2) == params);
}
