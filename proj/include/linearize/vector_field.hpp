#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "linearize/types.hpp"

namespace linearize {

/// Autonomous vector field x' = f(x) with the origin as equilibrium
/// (after translation), an optional exact Jacobian at the origin and a
/// radius of validity. Immutable after construction; eval must be pure.
struct VectorField {
    int dim = 0;
    std::function<Vec(const Vec&)> eval;
    std::optional<Mat> jacobian_origin;
    double domain_radius = std::numeric_limits<double>::infinity();
    std::string name;

    Vec operator()(const Vec& x) const { return eval(x); }
};

/// ||f(0)||, for equilibrium validation.
double origin_residual(const VectorField& field);

/// Central-difference step (machine eps)^(1/3) * (1 + ||point||).
double default_fd_step(const Vec& point);

/// Central-difference Jacobian. Throws domain_exceeded when the stencil
/// leaves the domain ball.
Mat jacobian_fd(const VectorField& field, const Vec& point, double step);
Mat jacobian_fd(const VectorField& field, const Vec& point);

/// Stored Jacobian at the origin if present, else the central-difference one.
Mat jacobian_origin_or_fd(const VectorField& field);

/// Shifts coordinates so the equilibrium x0 moves to the origin:
/// g(u) = f(u + x0). Throws not_equilibrium when ||f(x0)|| is too large.
VectorField translate_to_origin(const VectorField& field, const Vec& x0);

/// f(x) = A x + W(x) with A = Df(0); W vanishes to second order at 0.
struct NonlinearPart {
    VectorField field;
    Mat A;

    int dim() const { return field.dim; }
    Vec w(const Vec& x) const { return field.eval(x) - A * x; }
};

NonlinearPart nonlinear_part(const VectorField& field);

/// One monomial of a polynomial vector field:
/// contributes coeff * prod_i x_i^exponents[i] to component `component`.
struct PolyTerm {
    int component = 0;
    double coeff = 0;
    std::vector<int> exponents;
};

/// Polynomial vector field; the Jacobian at the origin is read off the
/// linear terms when not supplied.
VectorField make_polynomial_field(
    int dim, std::vector<PolyTerm> terms,
    std::optional<Mat> jacobian = std::nullopt,
    double domain_radius = std::numeric_limits<double>::infinity(),
    std::string name = "polynomial");

/// Loads a polynomial field from JSON with keys
///   dimension, terms = [{component, coeff, exponents}],
///   jacobian (optional, row-major flat array or array of rows),
///   domain_radius (optional).
VectorField load_field_json(const std::string& path);
VectorField parse_field_json(const std::string& text, const std::string& origin_label);

}  // namespace linearize
