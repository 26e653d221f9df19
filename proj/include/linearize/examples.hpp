#pragma once

#include <functional>
#include <string>
#include <vector>

#include "linearize/vector_field.hpp"

namespace linearize {

/// Benchmark system with analytically known flow and/or linearizing map,
/// used as oracle for the numerical construction.
struct AnalyticExample {
    std::string name;
    VectorField field;
    std::function<Vec(double, const Vec&)> closed_flow;  // may be empty
    std::function<Vec(const Vec&)> closed_H;             // may be empty
    std::string roa_descriptor;                          // may be empty
    std::vector<Vec> known_equilibria;                   // besides the origin
};

/// Registry of the built-in systems: example1, example2, sin1d, cubic1d.
const std::vector<AnalyticExample>& builtin_examples();

/// Lookup by name; nullptr when absent.
const AnalyticExample* find_example(const std::string& name);

/// Closed-form map for example2 under the value-threshold modification with
/// cap M. Piecewise: the printed log expression where 0 < |x1*x3^2| <= M,
/// the identity where the product vanishes or exceeds the cap.
Vec example2_closed_map(const Vec& x, double M);

/// Closed-form map for sin1d, x + tan(x/2) * int_0^x (p - sin p)/(1 - cos p) dp,
/// evaluated with a self-contained adaptive Simpson rule (independent of the
/// panel quadrature used by the conjugacy evaluator). Valid on (-pi, pi).
double sin1d_closed_map(double x);

}  // namespace linearize
