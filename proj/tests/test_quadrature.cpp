#include "doctest.h"

#include <cmath>

#include "linearize/errors.hpp"
#include "linearize/quadrature.hpp"

using namespace linearize;

namespace {

Vec vec1(double v) {
    Vec x(1);
    x << v;
    return x;
}

}  // namespace

TEST_CASE("forward exponential integral") {
    QuadratureConfig cfg;
    auto f = [](double s) { return vec1(std::exp(-2.0 * s)); };
    QuadResult r = quad_expdecay(f, 1, TimeDirection::forward, {1.0, 2.0}, cfg);
    CHECK(std::abs(r.value[0] - 0.5) <= cfg.tol);
    CHECK(r.err_bound <= cfg.tol);
}

TEST_CASE("the printed saddle integral evaluates to 8/15 at (1, 1)") {
    // int_0^inf e^{-s} (e^{-s}(x2 + x3^2) - e^{-2s} x3^2)^2 ds at x2 = x3 = 1
    // has the closed value 1/3 + 1/6 + 1/30
    QuadratureConfig cfg;
    auto f = [](double s) {
        double inner = std::exp(-s) * 2.0 - std::exp(-2.0 * s);
        return vec1(std::exp(-s) * inner * inner);
    };
    QuadResult r = quad_expdecay(f, 1, TimeDirection::forward, {4.0, 1.0}, cfg);
    CHECK(std::abs(r.value[0] - (1.0 / 3 + 1.0 / 6 + 1.0 / 30)) <= cfg.tol);
}

TEST_CASE("backward exponential integral") {
    QuadratureConfig cfg;
    auto f = [](double s) { return vec1(std::exp(s)); };  // s <= 0
    QuadResult r = quad_expdecay(f, 1, TimeDirection::backward, {1.0, 1.0}, cfg);
    CHECK(std::abs(r.value[0] - 1.0) <= cfg.tol);
}

TEST_CASE("an integrand violating its envelope tenfold is rejected") {
    QuadratureConfig cfg;
    auto f = [](double) { return vec1(1.0); };  // constant, claimed to decay
    CHECK_THROWS_AS(quad_expdecay(f, 1, TimeDirection::forward, {1.0, 1.0}, cfg), Error);
    try {
        quad_expdecay(f, 1, TimeDirection::forward, {1.0, 1.0}, cfg);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::non_decay);
    }
}

TEST_CASE("horizons beyond max_horizon are rejected") {
    QuadratureConfig cfg;  // max_horizon 200
    auto f = [](double s) { return vec1(std::exp(-0.05 * s)); };
    CHECK_THROWS_AS(quad_expdecay(f, 1, TimeDirection::forward, {1.0, 0.05}, cfg), Error);
    try {
        quad_expdecay(f, 1, TimeDirection::forward, {1.0, 0.05}, cfg);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::horizon_exceeded);
    }
}

TEST_CASE("a capped horizon reports the envelope tail honestly") {
    QuadratureConfig cfg;
    auto f = [](double s) { return vec1(std::exp(-s)); };
    QuadResult r =
        quad_expdecay(f, 1, TimeDirection::forward, {1.0, 1.0}, cfg, /*available=*/5.0);
    CHECK(r.flow_truncated);
    CHECK(r.value[0] == doctest::Approx(1.0 - std::exp(-5.0)).epsilon(1e-8));
    CHECK(r.err_bound >= std::exp(-5.0));  // the true missing tail
    CHECK(r.err_bound <= 2.0 * std::exp(-5.0) + cfg.tol);
}

TEST_CASE("interval panels hit the requested absolute tolerance") {
    auto f = [](double s) { return vec1(std::cos(3.0 * s)); };
    for (double tol : {1e-6, 1e-9, 1e-12}) {
        QuadResult r = integrate_interval(f, 1, 0.0, 2.0, tol, 4000);
        double exact = std::sin(6.0) / 3.0;
        CHECK(std::abs(r.value[0] - exact) <= tol);
    }
}

TEST_CASE("interval panels resolve a jump") {
    auto f = [](double s) { return vec1(s < 1.0 ? 1.0 : 0.0); };
    QuadResult r = integrate_interval(f, 1, 0.0, 3.0, 1e-9, 4000);
    CHECK(std::abs(r.value[0] - 1.0) <= 1e-9);
}

TEST_CASE("envelope probe fits a clean exponential") {
    auto norm_at = [](double s) { return 3.0 * std::exp(-1.7 * s); };
    EnvelopeProbe p = probe_envelope(norm_at, 12.0);
    CHECK(p.decaying);
    CHECK(p.mu == doctest::Approx(1.7).epsilon(0.05));
    CHECK(p.C >= 3.0);
    CHECK(p.C <= 6.0);
}

TEST_CASE("envelope probe flags non-decay and zero") {
    EnvelopeProbe flat = probe_envelope([](double) { return 2.0; }, 10.0);
    CHECK_FALSE(flat.decaying);
    CHECK_FALSE(flat.identically_zero);

    EnvelopeProbe grow = probe_envelope([](double s) { return std::exp(0.3 * s); }, 10.0);
    CHECK_FALSE(grow.decaying);

    EnvelopeProbe zero = probe_envelope([](double) { return 0.0; }, 10.0);
    CHECK(zero.identically_zero);
}
