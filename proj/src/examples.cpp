#include "linearize/examples.hpp"

#include <cmath>
#include <limits>

#include "linearize/errors.hpp"

namespace linearize {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Vec vec1(double v) {
    Vec x(1);
    x << v;
    return x;
}

// (p - sin p) / (1 - cos p), the removable singularity at 0 handled by its
// leading series p/3 + p^3/90
double sin_weight_integrand(double p) {
    if (std::abs(p) < 1e-4) return p / 3.0 + p * p * p / 90.0;
    return (p - std::sin(p)) / (1.0 - std::cos(p));
}

double simpson(double (*f)(double), double a, double b) {
    double c = 0.5 * (a + b);
    return (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b));
}

double adaptive_simpson(double (*f)(double), double a, double b, double whole,
                        double tol, int depth) {
    double c = 0.5 * (a + b);
    double left = simpson(f, a, c);
    double right = simpson(f, c, b);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson(f, a, c, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, c, b, right, 0.5 * tol, depth - 1);
}

std::vector<AnalyticExample> build_registry() {
    std::vector<AnalyticExample> reg;

    {
        // 3-D saddle: x1' = x1 + x2^2, x2' = -x2 + x3^2, x3' = -x3
        AnalyticExample ex;
        ex.name = "example1";
        ex.field = make_polynomial_field(
            3,
            {
                {0, 1.0, {1, 0, 0}},
                {0, 1.0, {0, 2, 0}},
                {1, -1.0, {0, 1, 0}},
                {1, 1.0, {0, 0, 2}},
                {2, -1.0, {0, 0, 1}},
            },
            std::nullopt, kInf, "example1");
        ex.closed_flow = [](double t, const Vec& x) {
            double x1 = x[0], x2 = x[1], x3 = x[2];
            Vec p(3);
            p[0] = std::exp(t) * (x1 + x2 * x2 / 3.0 + x3 * x3 * x2 / 6.0 +
                                  x3 * x3 * x3 * x3 / 30.0) -
                   std::exp(-2.0 * t) / 3.0 *
                       (x2 * x2 + 2.0 * x3 * x3 * x2 + x3 * x3 * x3 * x3) +
                   std::exp(-3.0 * t) / 2.0 * (x3 * x3 * x2 + x3 * x3 * x3 * x3) -
                   std::exp(-4.0 * t) / 5.0 * x3 * x3 * x3 * x3;
            p[1] = std::exp(-t) * (x2 + x3 * x3) - std::exp(-2.0 * t) * x3 * x3;
            p[2] = std::exp(-t) * x3;
            return p;
        };
        ex.closed_H = [](const Vec& x) {
            double x1 = x[0], x2 = x[1], x3 = x[2];
            Vec y(3);
            y[0] = x1 + x2 * x2 / 3.0 + x2 * x3 * x3 / 6.0 +
                   x3 * x3 * x3 * x3 / 30.0;
            y[1] = x2 + x3 * x3;
            y[2] = x3;
            return y;
        };
        reg.push_back(std::move(ex));
    }

    {
        // 3-D saddle whose raw stable-block integrals diverge:
        // x1' = x1, x2' = -x2 + x1 x3^2, x3' = -x3
        AnalyticExample ex;
        ex.name = "example2";
        ex.field = make_polynomial_field(
            3,
            {
                {0, 1.0, {1, 0, 0}},
                {1, -1.0, {0, 1, 0}},
                {1, 1.0, {1, 0, 2}},
                {2, -1.0, {0, 0, 1}},
            },
            std::nullopt, kInf, "example2");
        ex.closed_flow = [](double t, const Vec& x) {
            Vec p(3);
            p[0] = std::exp(t) * x[0];
            p[1] = std::exp(-t) * (x[1] + x[0] * x[2] * x[2] * t);
            p[2] = std::exp(-t) * x[2];
            return p;
        };
        ex.closed_H = [](const Vec& x) { return example2_closed_map(x, 1.0); };
        reg.push_back(std::move(ex));
    }

    {
        // x' = -sin x, region of attraction (-pi, pi)
        AnalyticExample ex;
        ex.name = "sin1d";
        VectorField f;
        f.dim = 1;
        f.name = "sin1d";
        f.domain_radius = kInf;
        f.eval = [](const Vec& x) { return vec1(-std::sin(x[0])); };
        Mat A(1, 1);
        A << -1.0;
        f.jacobian_origin = A;
        ex.field = std::move(f);
        ex.closed_flow = [](double t, const Vec& x) {
            if (std::abs(x[0]) >= M_PI) return vec1(kNaN);
            return vec1(2.0 * std::atan(std::tan(0.5 * x[0]) * std::exp(-t)));
        };
        ex.closed_H = [](const Vec& x) { return vec1(sin1d_closed_map(x[0])); };
        ex.roa_descriptor = "(-pi, pi)";
        ex.known_equilibria = {vec1(-M_PI), vec1(M_PI)};
        reg.push_back(std::move(ex));
    }

    {
        // x' = -x + x^3, region of attraction (-1, 1); H(x) = x / sqrt(1 - x^2)
        AnalyticExample ex;
        ex.name = "cubic1d";
        ex.field = make_polynomial_field(
            1, {{0, -1.0, {1}}, {0, 1.0, {3}}}, std::nullopt, kInf, "cubic1d");
        ex.closed_flow = [](double t, const Vec& x) {
            double x0 = x[0];
            if (x0 == 0.0) return vec1(0.0);
            double u = 1.0 + (1.0 / (x0 * x0) - 1.0) * std::exp(2.0 * t);
            if (u <= 0.0) return vec1(kNaN);  // past blow-up time
            return vec1((x0 > 0 ? 1.0 : -1.0) / std::sqrt(u));
        };
        ex.closed_H = [](const Vec& x) {
            double s = 1.0 - x[0] * x[0];
            if (s <= 0.0) return vec1(kNaN);
            return vec1(x[0] / std::sqrt(s));
        };
        ex.roa_descriptor = "(-1, 1)";
        ex.known_equilibria = {vec1(-1.0), vec1(1.0)};
        reg.push_back(std::move(ex));
    }

    return reg;
}

}  // namespace

const std::vector<AnalyticExample>& builtin_examples() {
    static const std::vector<AnalyticExample> registry = build_registry();
    return registry;
}

const AnalyticExample* find_example(const std::string& name) {
    for (const auto& ex : builtin_examples())
        if (ex.name == name) return &ex;
    return nullptr;
}

Vec example2_closed_map(const Vec& x, double M) {
    if (M <= 0) raise(Errc::config_error, "threshold cap must be positive");
    Vec y = x;
    double q = x[0] * x[2] * x[2];
    if (q != 0.0 && std::abs(q) <= M) y[1] = x[1] - q * std::log(M / std::abs(q));
    return y;
}

double sin1d_closed_map(double x) {
    if (std::abs(x) >= M_PI) return kNaN;
    if (x == 0.0) return 0.0;
    double whole = simpson(sin_weight_integrand, 0.0, x);
    double integral =
        adaptive_simpson(sin_weight_integrand, 0.0, x, whole, 1e-13, 48);
    return x + std::tan(0.5 * x) * integral;
}

}  // namespace linearize
