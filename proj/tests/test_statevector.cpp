#include <cmath>
#include <complex>
#include <numbers>

#include <catch2/catch_amalgamated.hpp>

#include "qgaze/statevector.hpp"

using namespace qgaze;
using Catch::Approx;

namespace {

StateVector random_state(std::size_t n, Rng& rng) {
    StateVector s = init_zero(n);
    for (auto& a : s.amplitudes) a = {rng.normal(), rng.normal()};
    const double norm = std::sqrt(norm_squared(s));
    for (auto& a : s.amplitudes) a /= norm;
    return s;
}

} // namespace

TEST_CASE("init_zero places all amplitude on |0...0>", "[statevector]") {
    const StateVector s2 = init_zero(2);
    REQUIRE(s2.dim() == 4);
    CHECK(s2.amplitudes[0] == std::complex<double>{1.0, 0.0});
    for (std::size_t j = 1; j < 4; ++j) CHECK(s2.amplitudes[j] == std::complex<double>{0.0, 0.0});

    const ProbVector p3 = probabilities(init_zero(3));
    REQUIRE(p3.size() == 8);
    CHECK(p3[0] == 1.0);
    for (std::size_t j = 1; j < 8; ++j) CHECK(p3[j] == 0.0);
}

TEST_CASE("init_zero rejects out-of-range register sizes", "[statevector]") {
    CHECK_THROWS_AS(init_zero(0), config_error);
    CHECK_THROWS_AS(init_zero(21), config_error);
}

TEST_CASE("RY rotations on a single qubit", "[statevector]") {
    const double pi = std::numbers::pi;
    auto p = probabilities(apply_rotation(init_zero(1), Axis::Y, 0, pi / 2));
    CHECK(p[0] == Approx(0.5).margin(1e-12));
    CHECK(p[1] == Approx(0.5).margin(1e-12));

    p = probabilities(apply_rotation(init_zero(1), Axis::Y, 0, pi));
    CHECK(p[0] == Approx(0.0).margin(1e-12));
    CHECK(p[1] == Approx(1.0).margin(1e-12));
}

TEST_CASE("RZ leaves every outcome distribution invariant", "[statevector]") {
    Rng rng(31);
    for (int rep = 0; rep < 20; ++rep) {
        const StateVector s = random_state(3, rng);
        const ProbVector before = probabilities(s);
        const double theta = rng.uniform(-6.0, 6.0);
        const std::size_t q = rng.uniform_index(3);
        const ProbVector after = probabilities(apply_rotation(s, Axis::Z, q, theta));
        for (std::size_t j = 0; j < before.size(); ++j) {
            CHECK(after[j] == Approx(before[j]).margin(1e-14));
        }
    }
}

TEST_CASE("CNOT truth table with qubit 0 as the most significant bit", "[statevector]") {
    // |10>: qubit 0 set -> index 2; control on qubit 0 flips the target.
    StateVector s = init_zero(2);
    s.amplitudes[0] = {0.0, 0.0};
    s.amplitudes[2] = {1.0, 0.0};
    const StateVector flipped = apply_cx(s, 0, 1);
    CHECK(std::abs(flipped.amplitudes[3] - std::complex<double>{1.0, 0.0}) < 1e-15);

    // |00> is fixed.
    const StateVector fixed = apply_cx(init_zero(2), 0, 1);
    CHECK(std::abs(fixed.amplitudes[0] - std::complex<double>{1.0, 0.0}) < 1e-15);
}

TEST_CASE("CNOT on (|00>+|10>)/sqrt(2) builds a Bell state", "[statevector]") {
    StateVector s = init_zero(2);
    const double r = 1.0 / std::sqrt(2.0);
    s.amplitudes[0] = {r, 0.0};
    s.amplitudes[2] = {r, 0.0};
    const ProbVector p = probabilities(apply_cx(s, 0, 1));
    CHECK(p[0] == Approx(0.5).margin(1e-12));
    CHECK(p[1] == Approx(0.0).margin(1e-12));
    CHECK(p[2] == Approx(0.0).margin(1e-12));
    CHECK(p[3] == Approx(0.5).margin(1e-12));
}

TEST_CASE("gate argument validation", "[statevector]") {
    CHECK_THROWS_AS(apply_cx(init_zero(2), 1, 1), config_error);
    CHECK_THROWS_AS(apply_cx(init_zero(2), 0, 2), std::out_of_range);
    CHECK_THROWS_AS(apply_rotation(init_zero(2), Axis::Y, 2, 0.1), std::out_of_range);
    CHECK_THROWS_AS(apply_rotation(init_zero(1), Axis::Y, 0, std::nan("")), config_error);
}

TEST_CASE("probabilities are squared moduli", "[statevector]") {
    StateVector s = init_zero(1);
    ProbVector p = probabilities(s);
    CHECK(p[0] == 1.0);
    CHECK(p[1] == 0.0);

    const double r = 1.0 / std::sqrt(2.0);
    s.amplitudes[0] = {r, 0.0};
    s.amplitudes[1] = {0.0, r}; // phase must not matter
    p = probabilities(s);
    CHECK(p[0] == Approx(0.5).margin(1e-15));
    CHECK(p[1] == Approx(0.5).margin(1e-15));

    // Random 8-amplitude state against an elementwise oracle.
    Rng rng(7);
    const StateVector rnd = random_state(3, rng);
    p = probabilities(rnd);
    for (std::size_t j = 0; j < 8; ++j) {
        const double re = rnd.amplitudes[j].real();
        const double im = rnd.amplitudes[j].imag();
        CHECK(p[j] == Approx(re * re + im * im).margin(1e-15));
    }
}

TEST_CASE("sample_outcomes respects the distribution and the seed", "[statevector]") {
    ProbVector degenerate(8, 0.0);
    degenerate[0] = 1.0;
    Rng rng(5);
    for (std::size_t idx : sample_outcomes(degenerate, 10, rng)) CHECK(idx == 0);

    // 3-sigma binomial bound: sqrt(0.25 / 1e5) ~ 0.0016.
    Rng rng2(17);
    const auto draws = sample_outcomes({0.5, 0.5}, 100000, rng2);
    std::size_t zeros = 0;
    for (std::size_t idx : draws) zeros += idx == 0;
    const double freq = static_cast<double>(zeros) / 1e5;
    CHECK(freq > 0.495);
    CHECK(freq < 0.505);

    Rng a(99), b(99);
    CHECK(sample_outcomes({0.3, 0.2, 0.5}, 1000, a) == sample_outcomes({0.3, 0.2, 0.5}, 1000, b));
}

TEST_CASE("norm is preserved through random circuits", "[statevector][property]") {
    Rng rng(2024);
    for (int circuit = 0; circuit < 200; ++circuit) {
        const std::size_t n = 1 + rng.uniform_index(4);
        StateVector s = init_zero(n);
        const std::size_t gates = 5 + rng.uniform_index(20);
        for (std::size_t g = 0; g < gates; ++g) {
            const std::size_t kind = rng.uniform_index(n > 1 ? 3 : 2);
            if (kind == 2) {
                const std::size_t c = rng.uniform_index(n);
                std::size_t t = rng.uniform_index(n - 1);
                if (t >= c) ++t;
                s = apply_cx(std::move(s), c, t);
            } else {
                s = apply_rotation(std::move(s), kind == 0 ? Axis::Y : Axis::Z,
                                   rng.uniform_index(n), rng.uniform(-10.0, 10.0));
            }
            CHECK(std::abs(norm_squared(s) - 1.0) < 1e-10);
        }
    }
}

TEST_CASE("cx is an involution and rotations invert with negated angles", "[statevector][property]") {
    Rng rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        const StateVector s = random_state(3, rng);

        const StateVector twice = apply_cx(apply_cx(s, 0, 2), 0, 2);
        for (std::size_t j = 0; j < s.dim(); ++j) {
            CHECK(std::abs(twice.amplitudes[j] - s.amplitudes[j]) < 1e-12);
        }

        const double theta = rng.uniform(-6.0, 6.0);
        const std::size_t q = rng.uniform_index(3);
        const Axis axis = rng.uniform_index(2) == 0 ? Axis::Y : Axis::Z;
        const StateVector back = apply_rotation(apply_rotation(s, axis, q, theta), axis, q, -theta);
        for (std::size_t j = 0; j < s.dim(); ++j) {
            CHECK(std::abs(back.amplitudes[j] - s.amplitudes[j]) < 1e-12);
        }
    }
}
