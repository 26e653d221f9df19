#pragma once

#include "linearize/types.hpp"
#include "linearize/vector_field.hpp"

namespace linearize {

/// How the nonlinear part W is modified into the globally bounded W_hat:
///  - ball: W_hat(x) = W(alpha(x) x) with a smooth radial cutoff that is 1
///    on ||x|| <= M and 0 on ||x|| >= M + eps;
///  - value_threshold: componentwise, W_hat_i = W_i when |W_i| <= M, else 0;
///  - none: W_hat = W.
struct CutoffSpec {
    enum class Kind { ball, value_threshold, none };
    Kind kind = Kind::none;
    double M = 0;
    double eps = 0;

    static CutoffSpec ball(double M, double eps) {
        return {Kind::ball, M, eps};
    }
    static CutoffSpec value_threshold(double M) {
        return {Kind::value_threshold, M, 0};
    }
    static CutoffSpec none() { return {Kind::none, 0, 0}; }
};

/// Smooth transition built from g(t) = exp(-1/t):
/// alpha = g(u) / (g(u) + g(1-u)) with u = (M + eps - r) / eps.
/// Exactly 1 for r <= M, exactly 0 for r >= M + eps, nonincreasing between.
double alpha_radial(double r, double M, double eps);
double alpha(const Vec& x, double M, double eps);

/// Modified nonlinear part at x under the given cutoff.
Vec w_hat(const NonlinearPart& W, const CutoffSpec& spec, const Vec& x);

/// Sampled sup of ||W_hat|| (exact M * sqrt(n) for the value threshold,
/// deterministic dense ball sampling for the ball variant). Throws
/// unbounded_modification when spec is none and samples keep growing.
double w_hat_bound(const NonlinearPart& W, const CutoffSpec& spec);

/// Checks the ball-variant geometry against the field domain
/// (M + eps must not exceed domain_radius). Throws config_error.
void validate_cutoff(const CutoffSpec& spec, const VectorField& field);

}  // namespace linearize
