#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "linearize/errors.hpp"
#include "linearize/examples.hpp"
#include "linearize/vector_field.hpp"

using namespace linearize;

namespace {

Vec vec1(double v) {
    Vec x(1);
    x << v;
    return x;
}

VectorField affine_1d() {
    // f(x) = -x + 1, equilibrium at 1
    VectorField f;
    f.dim = 1;
    f.eval = [](const Vec& x) { return vec1(-x[0] + 1.0); };
    return f;
}

}  // namespace

TEST_CASE("translate_to_origin shifts an affine equilibrium") {
    VectorField g = translate_to_origin(affine_1d(), vec1(1.0));
    CHECK(g.eval(vec1(0.0))[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(g.eval(vec1(0.3))[0] == doctest::Approx(-0.3).epsilon(1e-14));
    CHECK(g.eval(vec1(-2.0))[0] == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("translate_to_origin with x0 = 0 is the identity") {
    const auto* sin1 = find_example("sin1d");
    VectorField g = translate_to_origin(sin1->field, vec1(0.0));
    for (double x : {0.1, 1.0, 2.5})
        CHECK(g.eval(vec1(x))[0] == sin1->field.eval(vec1(x))[0]);
    CHECK(g.jacobian_origin.has_value());
}

TEST_CASE("translate_to_origin rejects non-equilibria") {
    const auto* cub = find_example("cubic1d");
    CHECK_THROWS_AS(translate_to_origin(cub->field, vec1(0.5)), Error);
    try {
        translate_to_origin(cub->field, vec1(0.5));
    } catch (const Error& e) {
        CHECK(e.code() == Errc::not_equilibrium);
    }
}

TEST_CASE("finite-difference Jacobian is exact on linear fields") {
    Mat A(2, 2);
    A << 0.3, -1.2, 0.7, 2.0;
    VectorField f;
    f.dim = 2;
    f.eval = [A](const Vec& x) { return Vec(A * x); };
    Vec p(2);
    p << 0.4, -1.1;
    CHECK((jacobian_fd(f, p) - A).norm() < 1e-10);
}

TEST_CASE("finite-difference Jacobian of example1 at the origin") {
    const auto* ex1 = find_example("example1");
    Mat J = jacobian_fd(ex1->field, Vec::Zero(3));
    Mat expect = Vec::Zero(3).asDiagonal();
    expect.diagonal() << 1, -1, -1;
    CHECK((J - expect).norm() < 1e-9);
}

TEST_CASE("finite-difference Jacobian of -sin at 0 is [-1]") {
    const auto* sin1 = find_example("sin1d");
    Mat J = jacobian_fd(sin1->field, Vec::Zero(1));
    CHECK(J(0, 0) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("Jacobian stencil respects the domain ball") {
    VectorField f = affine_1d();
    f.domain_radius = 0.5;
    CHECK_THROWS_AS(jacobian_fd(f, vec1(0.5), 0.1), Error);
}

TEST_CASE("finite-difference Jacobian is stable under step halving") {
    for (const char* name : {"example1", "example2", "sin1d", "cubic1d"}) {
        const auto* ex = find_example(name);
        Vec p = Vec::Constant(ex->field.dim, 0.05);
        double h = default_fd_step(p);
        Mat J1 = jacobian_fd(ex->field, p, h);
        Mat J2 = jacobian_fd(ex->field, p, 0.5 * h);
        CHECK((J1 - J2).norm() < 1e-6);
    }
}

TEST_CASE("nonlinear part of the registry saddles") {
    const auto* ex1 = find_example("example1");
    NonlinearPart W1 = nonlinear_part(ex1->field);
    Vec x(3);
    x << 0.3, -0.5, 0.7;
    Vec w = W1.w(x);
    CHECK(w[0] == doctest::Approx(0.25).epsilon(1e-10));   // x2^2
    CHECK(w[1] == doctest::Approx(0.49).epsilon(1e-10));   // x3^2
    CHECK(w[2] == doctest::Approx(0.0).epsilon(1e-12));

    const auto* ex2 = find_example("example2");
    NonlinearPart W2 = nonlinear_part(ex2->field);
    Vec w2 = W2.w(x);
    CHECK(w2[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(w2[1] == doctest::Approx(0.3 * 0.49).epsilon(1e-10));  // x1 x3^2
    CHECK(w2[2] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("nonlinear part of a linear field vanishes") {
    Mat A(2, 2);
    A << -1, 0.5, 0, -2;
    VectorField f;
    f.dim = 2;
    f.jacobian_origin = A;
    f.eval = [A](const Vec& x) { return Vec(A * x); };
    NonlinearPart W = nonlinear_part(f);
    std::mt19937_64 gen(5);
    for (int i = 0; i < 20; ++i)
        CHECK(W.w(ball_point(gen, 2, 2.0)).norm() < 1e-12);
}

TEST_CASE("nonlinear part vanishes to second order at the origin") {
    std::mt19937_64 gen(17);
    for (const char* name : {"example1", "example2", "sin1d", "cubic1d"}) {
        const auto* ex = find_example(name);
        NonlinearPart W = nonlinear_part(ex->field);
        CHECK(W.w(Vec::Zero(ex->field.dim)).norm() == doctest::Approx(0.0).epsilon(1e-14));

        VectorField wf;
        wf.dim = ex->field.dim;
        wf.eval = [&W](const Vec& x) { return W.w(x); };
        CHECK(jacobian_fd(wf, Vec::Zero(wf.dim)).norm() < 1e-5);

        // ||W(x)|| <= c ||x||^2 near 0, field-specific constant
        double c = 0;
        for (int i = 0; i < 100; ++i) {
            Vec x = ball_point(gen, ex->field.dim, 0.1);
            double nx = x.norm();
            if (nx > 1e-4) c = std::max(c, W.w(x).norm() / (nx * nx));
        }
        CHECK(c < 5.0);
    }
}

TEST_CASE("polynomial field JSON round trip") {
    const char* text = R"({
        "dimension": 2,
        "terms": [
            {"component": 0, "coeff": 1.0, "exponents": [1, 0]},
            {"component": 1, "coeff": -1.0, "exponents": [0, 1]},
            {"component": 1, "coeff": 0.25, "exponents": [2, 0]}
        ],
        "domain_radius": 3.5
    })";
    VectorField f = parse_field_json(text, "inline");
    CHECK(f.dim == 2);
    CHECK(f.domain_radius == doctest::Approx(3.5));
    Vec x(2);
    x << 0.5, 2.0;
    Vec v = f.eval(x);
    CHECK(v[0] == doctest::Approx(0.5));
    CHECK(v[1] == doctest::Approx(-2.0 + 0.25 * 0.25));
    REQUIRE(f.jacobian_origin.has_value());
    CHECK((*f.jacobian_origin)(0, 0) == doctest::Approx(1.0));
    CHECK((*f.jacobian_origin)(1, 1) == doctest::Approx(-1.0));
    CHECK((*f.jacobian_origin)(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("polynomial field JSON accepts an explicit jacobian, flat or nested") {
    const char* flat = R"({"dimension": 1,
        "terms": [{"component": 0, "coeff": -1.0, "exponents": [1]}],
        "jacobian": [-1.0]})";
    const char* nested = R"({"dimension": 1,
        "terms": [{"component": 0, "coeff": -1.0, "exponents": [1]}],
        "jacobian": [[-1.0]]})";
    CHECK((*parse_field_json(flat, "flat").jacobian_origin)(0, 0) == doctest::Approx(-1.0));
    CHECK((*parse_field_json(nested, "nested").jacobian_origin)(0, 0) == doctest::Approx(-1.0));
}

TEST_CASE("polynomial field JSON rejects malformed input") {
    CHECK_THROWS_AS(parse_field_json("{", "bad"), Error);
    CHECK_THROWS_AS(parse_field_json(R"({"dimension": 0, "terms": []})", "bad"), Error);
    CHECK_THROWS_AS(parse_field_json(
                        R"({"dimension": 2, "terms": [{"component": 5, "coeff": 1.0,
                            "exponents": [0, 0]}]})",
                        "bad"),
                    Error);
    CHECK_THROWS_AS(parse_field_json(
                        R"({"dimension": 2, "terms": [{"component": 0, "coeff": 1.0,
                            "exponents": [1]}]})",
                        "bad"),
                    Error);
    CHECK_THROWS_AS(load_field_json("/nonexistent/field.json"), Error);
}
