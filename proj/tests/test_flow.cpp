#include "doctest.h"

#include <cmath>

#include "linearize/errors.hpp"
#include "linearize/examples.hpp"
#include "linearize/flow.hpp"

using namespace linearize;

namespace {

Vec vec1(double v) {
    Vec x(1);
    x << v;
    return x;
}

}  // namespace

TEST_CASE("flow of a linear saddle") {
    Mat A = Vec::Zero(3).asDiagonal();
    A.diagonal() << 1, -1, -1;
    VectorField f;
    f.dim = 3;
    f.jacobian_origin = A;
    f.eval = [A](const Vec& x) { return Vec(A * x); };
    Vec x = Vec::Ones(3);
    Vec y = flow(f, x, 1.0, 1e-10);
    CHECK(y[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-9));
    CHECK(y[1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
    CHECK(y[2] == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
}

TEST_CASE("flow reproduces example1's closed flow") {
    const auto* ex = find_example("example1");
    Vec x = Vec::Ones(3);
    Vec y = flow(ex->field, x, 1.0, 1e-10);
    CHECK((y - ex->closed_flow(1.0, x)).norm() <= 1e-8);
}

TEST_CASE("sin1d flow satisfies the half-angle ratio identity") {
    const auto* ex = find_example("sin1d");
    Vec x = vec1(2.0);
    for (double t : {0.5, 1.0}) {
        double phi = flow(ex->field, x, t, 1e-10)[0];
        double lhs = std::sin(phi) / (1.0 - std::cos(phi));
        double rhs = std::exp(t) / std::tan(1.0);
        CHECK(std::abs(lhs - rhs) <= 1e-6);
    }
}

TEST_CASE("trajectory keeps the initial state bit-exact and small ODE residuals") {
    const auto* ex = find_example("example1");
    Vec x(3);
    x << 0.4, -0.7, 0.9;
    for (double tol : {1e-6, 1e-8, 1e-10}) {
        FlowConfig cfg;
        cfg.tol = tol;
        Trajectory traj = integrate(ex->field, x, 1.5, cfg);
        CHECK(traj.at(0.0) == x);  // exact, not approximate
        for (const auto& seg : traj.segments()) {
            double tm = 0.5 * (seg.t0 + seg.t1);
            Vec resid = traj.deriv_at(tm) - ex->field.eval(traj.at(tm));
            CHECK(resid.norm() <= 10.0 * tol);
        }
    }
}

TEST_CASE("flow semigroup and reversibility") {
    const auto* ex = find_example("example2");
    std::mt19937_64 gen(41);
    FlowConfig cfg;
    cfg.tol = 1e-10;
    for (int i = 0; i < 10; ++i) {
        Vec x = ball_point(gen, 3, 0.5);
        double s = uniform(gen, 0.1, 1.0), t = uniform(gen, 0.1, 1.0);
        Vec once = flow(ex->field, x, s + t, cfg);
        Vec twice = flow(ex->field, flow(ex->field, x, s, cfg), t, cfg);
        CHECK((once - twice).norm() <= 100 * cfg.tol * (1 + once.norm()));

        Vec back = flow(ex->field, flow(ex->field, x, t, cfg), -t, cfg);
        CHECK((back - x).norm() <= 100 * cfg.tol);
    }
}

TEST_CASE("tolerance ladder tightens the flow error down to the floor") {
    const auto* ex = find_example("example1");
    Vec x = Vec::Ones(3);
    double prev = -1;
    // quartering the tolerance must at least halve the error until the
    // 1e-12 floor
    for (double tol = 1e-5; tol >= 1e-11; tol /= 4) {
        double err = (flow(ex->field, x, 1.0, tol) - ex->closed_flow(1.0, x)).norm();
        if (prev > 0) CHECK(err <= std::max(prev / 2.0, 1e-12 * (1 + x.norm())));
        prev = err;
    }
}

TEST_CASE("flow_until_ball") {
    const auto* cub = find_example("cubic1d");

    // already inside
    auto inside = flow_until_ball(cub->field, vec1(0.05), 0.1, 10.0);
    REQUIRE(inside.has_value());
    CHECK(inside->t_entry == 0.0);
    CHECK(inside->state[0] == 0.05);

    // decaying orbit enters in finite time, located to the event tolerance
    auto entry = flow_until_ball(cub->field, vec1(0.9), 0.1, 50.0);
    REQUIRE(entry.has_value());
    CHECK(entry->t_entry > 0.0);
    CHECK(std::abs(entry->state.norm() - 0.1) <= 1e-9);
    // independent check: the closed flow at the entry time sits on the sphere
    CHECK(std::abs(cub->closed_flow(entry->t_entry, vec1(0.9))[0]) ==
          doctest::Approx(0.1).epsilon(1e-7));

    // orbit beyond the region of attraction blows up
    CHECK_THROWS_AS(flow_until_ball(cub->field, vec1(1.5), 0.1, 50.0), Error);
    try {
        flow_until_ball(cub->field, vec1(1.5), 0.1, 50.0);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::diverged);
    }

    // horizon too short
    CHECK_FALSE(flow_until_ball(cub->field, vec1(0.9), 0.1, 0.5).has_value());
}

TEST_CASE("certify_dominance_ball") {
    Mat A = (-Mat::Identity(2, 2)).eval();
    VectorField lin;
    lin.dim = 2;
    lin.jacobian_origin = A;
    lin.eval = [A](const Vec& x) { return Vec(A * x); };
    RoaCertificate c1 = certify_dominance_ball(lin, 1.0);
    CHECK(c1.radius_r == doctest::Approx(1.0));
    CHECK(c1.decay_checked);

    const auto* cub = find_example("cubic1d");
    RoaCertificate c2 = certify_dominance_ball(cub->field, 2.0);
    CHECK(c2.radius_r < 1.0);
    CHECK(c2.decay_checked);
    CHECK(dominance_on_sphere(cub->field, c2.radius_r, 256, 42));

    const auto* sin1 = find_example("sin1d");
    RoaCertificate c3 = certify_dominance_ball(sin1->field, 3.0);
    CHECK(c3.radius_r < M_PI);
    CHECK(c3.decay_checked);

    // pure expansion has no dominance ball at any radius
    VectorField rep;
    rep.dim = 1;
    rep.eval = [](const Vec& x) { return Vec(x); };
    CHECK_THROWS_AS(certify_dominance_ball(rep, 1.0), Error);
}

TEST_CASE("region-of-attraction membership") {
    const auto* sin1 = find_example("sin1d");
    RoaCertificate cert = certify_dominance_ball(sin1->field, 1.0);

    CHECK(in_region_of_attraction(sin1->field, vec1(0.0), cert, 50.0) == RoaStatus::inside);
    CHECK(in_region_of_attraction(sin1->field, vec1(3.0), cert, 50.0) == RoaStatus::inside);
    // 3.2 > pi settles at the remote equilibrium 2 pi
    CHECK(in_region_of_attraction(sin1->field, vec1(3.2), cert, 50.0) == RoaStatus::outside);
    // an undecided short horizon is inconclusive, distinct from outside
    CHECK(in_region_of_attraction(sin1->field, vec1(3.0), cert, 0.5) ==
          RoaStatus::inconclusive);

    const auto* cub = find_example("cubic1d");
    RoaCertificate cc = certify_dominance_ball(cub->field, 2.0);
    CHECK(in_region_of_attraction(cub->field, vec1(1.5), cc, 50.0) == RoaStatus::outside);
}

TEST_CASE("divergence and domain exit are reported") {
    const auto* cub = find_example("cubic1d");
    CHECK_THROWS_AS(flow(cub->field, vec1(1.5), 50.0, 1e-10), Error);

    VectorField capped = cub->field;
    capped.domain_radius = 1.2;
    try {
        flow(capped, vec1(1.1), 5.0, 1e-10);
        FAIL("expected left_domain");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::left_domain);
    }
}
