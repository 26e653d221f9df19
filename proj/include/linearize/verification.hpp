#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "linearize/conjugacy.hpp"
#include "linearize/examples.hpp"

namespace linearize {

struct CheckRecord {
    std::string name;
    int samples = 0;
    double max_residual = 0;
    double mean_residual = 0;
    double tolerance = 0;
    bool pass = false;
};

struct ReportMetadata {
    std::string system;
    std::string mode;
    std::string cutoff;
    double quad_tol = 0;
    double flow_tol = 0;
    double wall_time_seconds = 0;  // summary line only, kept out of the JSON
                                   // so reruns stay byte-identical
};

struct VerificationReport {
    std::vector<CheckRecord> checks;
    ReportMetadata metadata;

    bool all_pass() const;
};

using MapFn = std::function<Vec(const Vec&)>;

CheckRecord make_check(std::string name, const std::vector<double>& residuals,
                       double tolerance);

/// max over points x grid of ||H(phi_t(x)) - e^{At} H(x)||. When
/// restrict_to_ball is set, (x, t) pairs whose orbit segment leaves that
/// ball are skipped (the local construction only linearizes inside it).
CheckRecord check_conjugacy(const MapFn& H, const VectorField& field, const Mat& A,
                            const std::vector<Vec>& points,
                            const std::vector<double>& t_grid,
                            std::optional<double> restrict_to_ball, double tolerance,
                            const FlowConfig& flow);

/// ||H(x_eq)|| for each equilibrium, cross-checked against the closed form
/// x_eq + A^{-1} W(x_eq). Throws not_equilibrium when f(x_eq) is not small.
CheckRecord check_equilibrium_collapse(const MapFn& H, const NonlinearPart& nl,
                                       const std::vector<Vec>& equilibria,
                                       double tolerance);

/// || FD-Jacobian of H at 0 - I ||_F with a central difference tuned to the
/// evaluator's noise floor.
CheckRecord check_identity_jacobian(const MapFn& H, int dim, double tolerance);

CheckRecord check_oracle(const MapFn& H, const MapFn& closed_map,
                         const std::vector<Vec>& grid, double tolerance);

CheckRecord check_roundtrip(const MapFn& H, const MapFn& H_inverse,
                            const std::vector<Vec>& x_points,
                            const std::vector<Vec>& y_points, double tolerance);

/// || A h(x) - W(x) - Dh(x)(A x + W(x)) || / (1 + ||x||) with Dh by central
/// differences.
CheckRecord check_pde_residual(const MapFn& h, const NonlinearPart& nl,
                               const std::vector<Vec>& points, double tolerance);

std::string report_to_json(const VerificationReport& report);
VerificationReport report_from_json(const std::string& text);

struct SuiteOptions {
    std::uint64_t seed = 42;
    int n_points = 50;
    std::vector<double> t_grid = {0.25, 0.5, 1.0, 2.0};
    double conjugacy_tol = 1e-4;
    double collapse_tol = 1e-6;
    double identity_tol = 1e-4;
    double oracle_tol = 1e-5;
    double roundtrip_tol = 1e-6;
    double pde_tol = 1e-3;
};

/// Standard check suite for a local context. The identity-Jacobian check is
/// included for the orbit-decay configurations (cutoff none / threshold);
/// the ball-cutoff construction does not satisfy DH(0) = I (the escape
/// boundary layer contributes a first-order term), so it is not asserted
/// there. The oracle check runs when the registry's closed map corresponds
/// to this configuration.
VerificationReport run_suite_local(const LocalConjugacy& ctx,
                                   const AnalyticExample* example,
                                   const SuiteOptions& opts, ReportMetadata meta);

VerificationReport run_suite_global(const GlobalConjugacy& ctx,
                                    const AnalyticExample* example,
                                    const SuiteOptions& opts, ReportMetadata meta);

}  // namespace linearize
