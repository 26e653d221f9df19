#pragma once

#include <optional>

#include "linearize/cutoff.hpp"
#include "linearize/flow.hpp"
#include "linearize/quadrature.hpp"
#include "linearize/spectral.hpp"
#include "linearize/vector_field.hpp"

namespace linearize {

/// Direction used for the stable-block integral of the local map.
/// backward is the construction default,
///   y_2 = u_2 - int_{-inf}^0 e^{-N s} W_hat_2(phi_s) ds;
/// forward is the convergent alternative
///   y_2 = u_2 + int_0^inf e^{-N s} W_hat_2(phi_s) ds,
/// the form the analytic saddle examples print. auto_select resolves to
/// forward when no cutoff is attached (only orbit decay can make the
/// integrals converge then) and to backward otherwise.
enum class StableBlockForm { auto_select, backward, forward };

/// Evaluation context for the local linearizing map
///   H(x) = T_inv [ u + (int_0^inf e^{-P s} W_hat_1(phi_s(u)) ds,
///                      -int_{-inf}^0 e^{-N s} W_hat_2(phi_s(u)) ds) ],
/// u = T x, built on any bounded ball via the cutoff. Immutable; evaluation
/// is pure and thread-safe.
struct LocalConjugacy {
    VectorField field;  // original coordinates
    NonlinearPart nl;   // A = Df(0) in original coordinates
    SpectralSplit split;
    CutoffSpec cutoff;
    QuadratureConfig quad;
    FlowConfig flow;
    StableBlockForm stable_form = StableBlockForm::backward;

    // derived at construction
    VectorField split_field;  // u' = T f(T_inv u)
    NonlinearPart nl_split;   // nonlinear part in split coordinates
    double what_bound = 0;    // sup ||W_hat||, cutoff-active only
    std::optional<DecayRate> rate_P;      // kernel margin x bound, P forward
    std::optional<DecayRate> rate_N_bwd;  // kernel margin x bound, N backward
};

LocalConjugacy make_local_conjugacy(const VectorField& field, CutoffSpec cutoff,
                                    QuadratureConfig quad = {}, FlowConfig flow = {},
                                    StableBlockForm form = StableBlockForm::auto_select,
                                    double hyperbolicity_tol = -1);

Vec local_H(const LocalConjugacy& ctx, const Vec& x);

/// Newton inverse of the local map; valid for y near the origin.
Vec inverse_local_H(const LocalConjugacy& ctx, const Vec& y);

/// Evaluation context for the global map on the region of attraction of a
/// fully stable equilibrium, H = id + h with
///   h(x) = -int_{-inf}^0 e^{-tau A} W_hat(phi_tau(x)) dtau
///          + int_0^inf e^{-tau A} (W - W_hat)(phi_tau(x)) dtau.
/// cutoff = ball runs that two-piece form; cutoff = none runs the
/// simplified convergent form h = int_0^inf e^{-tau A} W(phi_tau(x)) dtau
/// (the M = eps = 0 case). The two choices are different, equally valid
/// linearizing maps; closed-form oracles belong to specific cutoffs.
struct GlobalConjugacy {
    VectorField field;
    NonlinearPart nl;
    Mat A;
    CutoffSpec cutoff;  // ball or none
    QuadratureConfig quad;
    FlowConfig flow;
    RoaCertificate cert;
    double t_max = 0;

    // derived at construction
    DecayRate kernel_bwd;  // envelope of e^{-tau A}, tau <= 0
    DecayRate kernel_fwd;  // envelope of e^{tau A}, tau >= 0
    double what_bound = 0; // ball only
    double mu_stable = 0;  // -max Re(lambda)
};

GlobalConjugacy make_global_conjugacy(const VectorField& field, CutoffSpec cutoff,
                                      QuadratureConfig quad = {}, FlowConfig flow = {},
                                      double t_max = 0 /* auto */,
                                      double r_init = 1.0);

/// Region-of-attraction gate used by the global evaluators.
RoaStatus roa_status(const GlobalConjugacy& ctx, const Vec& x);

/// h(x); throws not_in_region_of_attraction / horizon_exceeded outside the
/// certified region.
Vec global_h(const GlobalConjugacy& ctx, const Vec& x);

/// H(x) = x + h(x).
Vec global_H(const GlobalConjugacy& ctx, const Vec& x);

/// The Remark's single-integral forms, without the region gate:
/// forward  h = +int_0^inf  e^{-tau A} W(phi_tau(x)) dtau,
/// backward h = -int_{-inf}^0 e^{-tau A} W(phi_tau(x)) dtau.
/// Throws non_decay when the sampled integrand does not decay.
Vec simplified_h(const GlobalConjugacy& ctx, const Vec& x, TimeDirection form);

/// Flow-relay inverse: pick t with ||e^{A t} y|| inside a small certified
/// ball, Newton-invert there, then flow backward. Residual contract
/// ||H(x) - y|| <= 1e-8 (1 + ||y||).
Vec inverse_global_H(const GlobalConjugacy& ctx, const Vec& y);

}  // namespace linearize
