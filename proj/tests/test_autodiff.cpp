#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "qgaze/autodiff.hpp"

using namespace qgaze;
using Catch::Approx;

TEST_CASE("matvec forward and backward", "[autodiff]") {
    const std::vector<double> params = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0}; // 2x3 row-major
    Tape tape;
    auto w = tape.param(params, 0, 6);
    auto x = tape.input(std::vector<double>{1.0, -1.0, 2.0});
    auto y = tape.matvec(w, 2, 3, x);
    CHECK(tape.value(y)[0] == Approx(5.0));  // 1 - 2 + 6
    CHECK(tape.value(y)[1] == Approx(11.0)); // 4 - 5 + 12

    // reduce to a scalar through another matvec to exercise both rules
    const std::vector<double> all = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 0.5, -0.25};
    Tape t2;
    auto w1 = t2.param(all, 0, 6);
    auto x2 = t2.input(std::vector<double>{1.0, -1.0, 2.0});
    auto h = t2.matvec(w1, 2, 3, x2);
    auto w2 = t2.param(all, 6, 2);
    auto out = t2.matvec(w2, 1, 2, h);
    t2.set_output(out);
    CHECK(t2.scalar(out) == Approx(0.5 * 5.0 - 0.25 * 11.0));
    const auto grads = t2.backward(1.0, all.size());
    // d out / d w1[r][c] = w2[r] * x[c]
    CHECK(grads[0] == Approx(0.5 * 1.0));
    CHECK(grads[1] == Approx(0.5 * -1.0));
    CHECK(grads[2] == Approx(0.5 * 2.0));
    CHECK(grads[3] == Approx(-0.25 * 1.0));
    CHECK(grads[5] == Approx(-0.25 * 2.0));
    // d out / d w2 = h
    CHECK(grads[6] == Approx(5.0));
    CHECK(grads[7] == Approx(11.0));
    // input adjoint: columns of W1 weighted by the upstream row vector
    const auto xadj = t2.adjoint(x2);
    CHECK(xadj[0] == Approx(0.5 * 1.0 - 0.25 * 4.0));
    CHECK(xadj[2] == Approx(0.5 * 3.0 - 0.25 * 6.0));
}

TEST_CASE("sigmoid gradient at zero is a quarter", "[autodiff]") {
    const std::vector<double> params = {0.0};
    Tape tape;
    auto w = tape.param(params, 0, 1);
    auto x = tape.input(std::vector<double>{1.0});
    auto s = tape.sigmoid(tape.matvec(w, 1, 1, x));
    tape.set_output(s);
    CHECK(tape.scalar(s) == Approx(0.5));
    const auto grads = tape.backward(1.0, 1);
    CHECK(grads[0] == Approx(0.25));
}

TEST_CASE("elementwise ops match finite differences", "[autodiff][property]") {
    // scalar chain: log(clamp(1 - sigmoid(tanh(w0 * x) * w1)))
    const std::vector<double> x0 = {0.7, -0.4};
    auto eval = [&](const std::vector<double>& p) {
        Tape tape;
        auto w0 = tape.param(p, 0, 1);
        auto w1 = tape.param(p, 1, 1);
        auto x = tape.input(std::vector<double>{0.9});
        auto t = tape.tanh(tape.matvec(w0, 1, 1, x));
        auto s = tape.sigmoid(tape.hadamard(t, w1));
        auto l = tape.log(tape.clamp(tape.one_minus(s), 1e-7, 1.0 - 1e-7));
        tape.set_output(l);
        return tape;
    };
    Tape tape = eval(x0);
    const double val = tape.scalar(tape.output_node());
    CHECK(std::isfinite(val));
    const auto analytic = tape.backward(1.0, 2);
    const auto fd = oracle::fd_gradient(
        [&](const std::vector<double>& p) {
            Tape t = eval(p);
            return t.scalar(t.output_node());
        },
        x0, 1e-6);
    CHECK(analytic[0] == Approx(fd[0]).margin(1e-7));
    CHECK(analytic[1] == Approx(fd[1]).margin(1e-7));
}

TEST_CASE("concat routes adjoints to both operands", "[autodiff]") {
    const std::vector<double> params = {1.5, -2.0, 0.5};
    Tape tape;
    auto a = tape.param(params, 0, 2);
    auto b = tape.param(params, 2, 1);
    auto c = tape.concat(a, b);
    auto out = tape.matvec(tape.input(std::vector<double>{2.0, 3.0, 4.0}), 1, 3, c);
    tape.set_output(out);
    CHECK(tape.scalar(out) == Approx(2.0 * 1.5 - 3.0 * 2.0 + 4.0 * 0.5));
    const auto grads = tape.backward(1.0, 3);
    CHECK(grads[0] == Approx(2.0));
    CHECK(grads[1] == Approx(3.0));
    CHECK(grads[2] == Approx(4.0));
}

TEST_CASE("clamp blocks gradients outside the window", "[autodiff]") {
    const std::vector<double> params = {2.0};
    Tape tape;
    auto w = tape.param(params, 0, 1);
    auto c = tape.clamp(w, -1.0, 1.0);
    tape.set_output(c);
    CHECK(tape.scalar(c) == 1.0);
    const auto grads = tape.backward(1.0, 1);
    CHECK(grads[0] == 0.0);
}

TEST_CASE("dropout scales survivors and stores the mask", "[autodiff]") {
    const std::vector<double> params(64, 1.0);
    Rng rng(5);
    Tape tape;
    auto a = tape.param(params, 0, 64);
    auto d = tape.dropout(a, 0.5, rng);
    std::size_t kept = 0;
    for (double v : tape.value(d)) {
        if (v != 0.0) {
            CHECK(v == Approx(2.0)); // 1 / (1 - 0.5)
            ++kept;
        }
    }
    CHECK(kept > 10);
    CHECK(kept < 54);

    // rate 0 is the identity and consumes no randomness
    Tape t2;
    Rng r3(1);
    auto a2 = t2.param(params, 0, 64);
    auto d2 = t2.dropout(a2, 0.0, r3);
    for (double v : t2.value(d2)) CHECK(v == 1.0);
    CHECK(r3.next_u64() == Rng(1).next_u64());

    CHECK_THROWS_AS(t2.dropout(a2, 1.0, rng), config_error);
}

TEST_CASE("tape is consumed by backward and rearmed by reset", "[autodiff]") {
    const std::vector<double> params = {0.3};
    Tape tape;
    auto w = tape.param(params, 0, 1);
    auto s = tape.sigmoid(w);
    tape.set_output(s);
    CHECK_THROWS_AS(tape.adjoint(s), state_error); // nothing swept yet
    tape.backward(1.0, 1);
    CHECK(tape.consumed());
    CHECK_THROWS_AS(tape.backward(1.0, 1), state_error);
    tape.reset();
    CHECK_FALSE(tape.consumed());
    CHECK(tape.node_count() == 0);
    auto w2 = tape.param(params, 0, 1);
    auto s2 = tape.sigmoid(w2);
    tape.set_output(s2);
    const auto grads = tape.backward(1.0, 1);
    const double sv = 1.0 / (1.0 + std::exp(-0.3));
    CHECK(grads[0] == Approx(sv * (1.0 - sv)));
}

TEST_CASE("tape argument validation", "[autodiff]") {
    Tape tape;
    const std::vector<double> params = {1.0, 2.0};
    auto a = tape.param(params, 0, 2);
    CHECK_THROWS_AS(tape.param(params, 1, 2), config_error); // slice past the end
    CHECK_THROWS_AS(tape.matvec(a, 2, 2, a), config_error);  // dimension mismatch
    auto b = tape.input(std::vector<double>{1.0});
    CHECK_THROWS_AS(tape.add(a, b), config_error);
    Tape no_out;
    CHECK_THROWS_AS(no_out.backward(1.0, 0), state_error);
    // non-scalar output
    tape.set_output(a);
    CHECK_THROWS_AS(tape.backward(1.0, 2), config_error);
}
