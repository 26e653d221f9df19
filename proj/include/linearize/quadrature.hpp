#pragma once

#include <functional>
#include <limits>

#include "linearize/spectral.hpp"
#include "linearize/types.hpp"

namespace linearize {

struct QuadratureConfig {
    double tol = 1e-8;           // target absolute error per improper integral
    double max_horizon = 200.0;  // largest admissible truncation horizon
    std::string panel_rule = "gk15_adaptive";
    int max_panels = 4000;
    // accepted absolute truncation floor when the orbit terminates (blow-up)
    // before the decay horizon
    double truncation_slack = 1e-7;
};

struct QuadResult {
    Vec value;
    double err_bound = 0;      // panel estimate plus truncation tail
    double horizon = 0;        // |s| actually integrated
    int panels = 0;
    bool flow_truncated = false;  // horizon capped by trajectory extent
    bool exact_tail = false;      // integrand identically zero beyond horizon
};

using VecIntegrand = std::function<Vec(double)>;

/// Adaptive Gauss-Kronrod 15(7) over [a, b] to an absolute tolerance in the
/// max norm. Deterministic refinement order.
QuadResult integrate_interval(const VecIntegrand& f, int dim, double a, double b,
                              double abs_tol, int max_panels);

/// Truncation horizon T with C e^{-mu T} / mu <= tail_budget.
double horizon_for(const DecayRate& rate, double tail_budget);

/// Improper integral over [0, inf) (forward) or (-inf, 0] (backward) of an
/// integrand obeying ||f(s)|| <= C e^{-mu |s|}:
/// truncates at T with tail <= tol/2, then adaptive panels to tol/2.
/// available_horizon caps |s| when the integrand is only computable that far
/// (the reported err_bound then includes the envelope tail at the cap);
/// exact_tail_at_cap marks caps beyond which the integrand vanishes
/// identically, contributing no tail at all.
/// Throws horizon_exceeded when T would pass cfg.max_horizon, and non_decay
/// when samples violate the envelope tenfold.
QuadResult quad_expdecay(const VecIntegrand& f, int dim, TimeDirection direction,
                         DecayRate rate, const QuadratureConfig& cfg,
                         double available_horizon = std::numeric_limits<double>::infinity(),
                         bool exact_tail_at_cap = false);

/// Decay diagnostics of ||f|| sampled uniformly on [0, span].
struct EnvelopeProbe {
    double C = 0;
    double mu = 0;
    double peak = 0;
    double tail_ratio = 1;  // max over the trailing quarter / peak
    double tail_abs = 0;    // max over the trailing quarter
    bool identically_zero = false;
    bool decaying = false;
};

EnvelopeProbe probe_envelope(const std::function<double(double)>& norm_at,
                             double span, int n_samples = 129);

}  // namespace linearize
