#include "linearize/conjugacy.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "linearize/errors.hpp"

namespace linearize {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double stable_margin(const Mat& A) {
    double worst = -kInf;
    for (const auto& ev : eigenvalues(A)) worst = std::max(worst, ev.real());
    return -worst;
}

void check_origin_equilibrium(const VectorField& field) {
    double res = origin_residual(field);
    if (res > 1e-9)
        raise(Errc::not_equilibrium,
              "||f(0)|| = " + fmt_g17(res) + "; translate the equilibrium first");
}

// Improper integral of integrand(s, phi_s(x0)) over [0, inf) or (-inf, 0],
// with the trajectory integrated on demand. Either a rigorous envelope
// (kernel margin x sup-bound, cutoff-active paths) or an empirically fitted
// one (convergence supplied by orbit decay).
struct ImproperSpec {
    const VectorField* fld = nullptr;
    Vec x0;
    TimeDirection dir = TimeDirection::forward;
    std::function<Vec(double, const Vec&)> integrand;  // (signed s, state)
    int out_dim = 0;
    const QuadratureConfig* quad = nullptr;
    const FlowConfig* flow = nullptr;
    double mu_hint = 1.0;
    std::optional<DecayRate> rigorous;
    std::optional<RadiusEvent> stop_event;  // integrand vanishes beyond it
};

QuadResult improper_integral(const ImproperSpec& spec) {
    const double sgn = spec.dir == TimeDirection::forward ? 1.0 : -1.0;
    const QuadratureConfig& quad = *spec.quad;
    QuadResult res;

    auto make_f = [&](const Trajectory& traj) {
        return [&traj, &spec](double s) { return spec.integrand(s, traj.at(s)); };
    };

    // A trajectory that escapes to the blow-up bound in finite time carries
    // no further integral: once the cutoff has annihilated the integrand on
    // the trailing stretch, the truncation is exact, not an error.
    auto dead_at_cap = [&](const Trajectory& traj) {
        if (traj.termination() != Termination::diverged) return false;
        double span = traj.extent();
        if (span <= 0) return false;
        for (int i = 0; i <= 16; ++i) {
            double s = sgn * span * (0.85 + 0.15 * i / 16.0);
            if (spec.integrand(s, traj.at(s)).norm() > 1e-250) return false;
        }
        return true;
    };

    if (spec.rigorous) {
        const DecayRate rate = *spec.rigorous;
        if (rate.C == 0) {
            res.value = Vec::Zero(spec.out_dim);
            return res;
        }
        double T_target = horizon_for(rate, 0.5 * quad.tol);
        if (T_target > quad.max_horizon)
            raise(Errc::horizon_exceeded,
                  "decay horizon " + fmt_g17(T_target) + " exceeds max_horizon");
        Trajectory traj =
            integrate(*spec.fld, spec.x0, sgn * T_target, *spec.flow, spec.stop_event);
        bool stopped = traj.termination() == Termination::entered_ball ||
                       traj.termination() == Termination::exited_ball;
        bool exact_cap = stopped || dead_at_cap(traj);
        auto f = make_f(traj);
        res = quad_expdecay(f, spec.out_dim, spec.dir, rate, quad, traj.extent(),
                            exact_cap);
    } else {
        // Convergence is supplied by orbit decay here, and the kernel may
        // grow along the way: the integrand is a growing factor times powers
        // of a decaying state. Pure relative error control keeps those tiny
        // states accurate at any magnitude; an absolute floor would turn the
        // tail into amplified noise.
        FlowConfig flow = *spec.flow;
        flow.atol = 1e-290;

        const double W0 = std::clamp(8.0 / std::max(spec.mu_hint, 0.05), 4.0, 64.0);
        double W = std::min(W0, quad.max_horizon);
        Trajectory traj = integrate(*spec.fld, spec.x0, sgn * W, flow);
        EnvelopeProbe probe;
        bool death = false;
        for (;;) {
            double span = std::min(W, traj.extent());
            auto norm_at = [&](double sigma) {
                return spec.integrand(sgn * sigma, traj.at(sgn * sigma)).norm();
            };
            probe = probe_envelope(norm_at, span);
            if (probe.identically_zero) {
                res.value = Vec::Zero(spec.out_dim);
                return res;
            }
            death = traj.extent() < W * (1.0 - 1e-9);
            if (probe.decaying) {
                double Tt = horizon_for({probe.C, probe.mu}, 0.5 * quad.tol);
                // settled once the fitted envelope's own horizon is covered
                // or the tail is negligible
                if (Tt <= span * (1.0 + 1e-12) || probe.tail_ratio <= 1e-6 ||
                    probe.tail_abs <= 0.01 * quad.tol)
                    break;
            }
            if (death || W >= quad.max_horizon) break;
            W = std::min(2.0 * W, quad.max_horizon);
            traj = integrate(*spec.fld, spec.x0, sgn * W, flow);
        }
        if (!probe.decaying) {
            // roundoff jitter (say basis-change residue on an invariant
            // subspace) neither decays nor matters; a genuinely growing
            // integrand would have exploded the peak during window doubling
            double span = std::min(W, traj.extent());
            if (probe.peak * std::max(span, 1.0) <= 1e-3 * quad.tol) {
                res.value = Vec::Zero(spec.out_dim);
                res.err_bound = probe.peak * std::max(span, 1.0);
                return res;
            }
            raise(Errc::non_decay, "sampled integrand does not decay; the integral diverges");
        }
        DecayRate rate{probe.C, probe.mu};
        double T_target = horizon_for(rate, 0.5 * quad.tol);
        if (T_target > quad.max_horizon)
            raise(Errc::horizon_exceeded,
                  "fitted decay horizon " + fmt_g17(T_target) + " exceeds max_horizon");
        if (T_target > traj.extent() && !death)
            traj = integrate(*spec.fld, spec.x0, sgn * T_target, flow);
        auto f = make_f(traj);
        res = quad_expdecay(f, spec.out_dim, spec.dir, rate, quad, traj.extent(),
                            dead_at_cap(traj));
    }

    if (res.err_bound > std::max(25.0 * quad.tol, quad.truncation_slack))
        raise(Errc::quadrature_accuracy,
              "integral error bound " + fmt_g17(res.err_bound) +
                  " not attainable (orbit terminated at |s| = " + fmt_g17(res.horizon) + ")");
    return res;
}

Vec newton_inverse(const std::function<Vec(const Vec&)>& map, const Vec& target,
                   const Vec& x0, double fd_step, double resid_tol, int max_iter) {
    const int n = static_cast<int>(target.size());
    Vec x = x0;
    Vec r = map(x) - target;
    for (int iter = 0; iter < max_iter; ++iter) {
        if (r.norm() <= resid_tol) return x;
        Mat J(n, n);
        for (int j = 0; j < n; ++j) {
            Vec xp = x, xm = x;
            xp[j] += fd_step;
            xm[j] -= fd_step;
            J.col(j) = (map(xp) - map(xm)) / (2.0 * fd_step);
        }
        Vec dx = J.colPivHouseholderQr().solve(r);
        if (!dx.allFinite()) raise(Errc::newton_diverged, "singular Jacobian in Newton");
        double lambda = 1.0;
        Vec xn, rn;
        bool improved = false;
        for (int halve = 0; halve < 8; ++halve) {
            xn = x - lambda * dx;
            rn = map(xn) - target;
            if (rn.norm() < r.norm()) {
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved) {
            x = x - lambda * dx;
            r = map(x) - target;
            continue;
        }
        x = xn;
        r = rn;
    }
    if (r.norm() <= resid_tol) return x;
    raise(Errc::newton_diverged,
          "Newton residual " + fmt_g17(r.norm()) + " above " + fmt_g17(resid_tol));
}

int block_row(const SpectralSplit& split, SpectralBlock block) {
    return block == SpectralBlock::unstable ? 0 : split.k;
}

int block_size(const SpectralSplit& split, SpectralBlock block) {
    return block == SpectralBlock::unstable ? split.k : split.m;
}

// integrand e^{-B s} W_hat_block(state) for one block of the local map
std::function<Vec(double, const Vec&)> block_integrand(const LocalConjugacy& ctx,
                                                       SpectralBlock block) {
    const Mat B = block == SpectralBlock::unstable ? ctx.split.P : ctx.split.N;
    const int row = block_row(ctx.split, block);
    const int size = block_size(ctx.split, block);
    return [&ctx, B, row, size](double s, const Vec& state) {
        Vec wh = w_hat(ctx.nl_split, ctx.cutoff, state);
        return Vec(expm(B, -s) * wh.segment(row, size));
    };
}

Vec local_block_integral(const LocalConjugacy& ctx, const Vec& u, SpectralBlock block,
                         TimeDirection dir) {
    ImproperSpec spec;
    spec.fld = &ctx.split_field;
    spec.x0 = u;
    spec.dir = dir;
    spec.integrand = block_integrand(ctx, block);
    spec.out_dim = block_size(ctx.split, block);
    spec.quad = &ctx.quad;
    spec.flow = &ctx.flow;

    double hint = kInf;
    if (ctx.split.k > 0) hint = std::min(hint, ctx.split.mu_P);
    if (ctx.split.m > 0) hint = std::min(hint, -ctx.split.mu_N);
    spec.mu_hint = std::clamp(hint, 0.05, 10.0);

    // kernel-margin envelopes only hold where the kernel itself decays and
    // W_hat is bounded by the cutoff
    if (ctx.cutoff.kind != CutoffSpec::Kind::none) {
        if (block == SpectralBlock::unstable && dir == TimeDirection::forward)
            spec.rigorous = ctx.rate_P;
        if (block == SpectralBlock::stable && dir == TimeDirection::backward)
            spec.rigorous = ctx.rate_N_bwd;
    }
    return improper_integral(spec).value;
}

}  // namespace

LocalConjugacy make_local_conjugacy(const VectorField& field, CutoffSpec cutoff,
                                    QuadratureConfig quad, FlowConfig flow,
                                    StableBlockForm form, double hyperbolicity_tol) {
    check_origin_equilibrium(field);
    validate_cutoff(cutoff, field);

    LocalConjugacy ctx;
    ctx.field = field;
    ctx.nl = nonlinear_part(field);
    ctx.split = hyperbolicity_tol > 0 ? split_spectrum(ctx.nl.A, hyperbolicity_tol)
                                      : split_spectrum(ctx.nl.A);
    ctx.cutoff = cutoff;
    ctx.quad = quad;
    flow.tol = std::min(flow.tol, 0.1 * quad.tol);
    ctx.flow = flow;
    ctx.stable_form = form == StableBlockForm::auto_select
                          ? (cutoff.kind == CutoffSpec::Kind::none
                                 ? StableBlockForm::forward
                                 : StableBlockForm::backward)
                          : form;

    const Mat T = ctx.split.T, T_inv = ctx.split.T_inv;
    VectorField sf;
    sf.dim = field.dim;
    sf.name = field.name + "|split";
    auto inner = field.eval;
    sf.eval = [inner, T, T_inv](const Vec& u) { return Vec(T * inner(T_inv * u)); };
    sf.jacobian_origin = ctx.split.block_diagonal();
    if (std::isfinite(field.domain_radius)) {
        Eigen::JacobiSVD<Mat> svd(T_inv);
        sf.domain_radius = field.domain_radius / svd.singularValues()(0);
    }
    ctx.split_field = std::move(sf);
    ctx.nl_split = NonlinearPart{ctx.split_field, ctx.split.block_diagonal()};

    if (cutoff.kind != CutoffSpec::Kind::none) {
        validate_cutoff(cutoff, ctx.split_field);
        ctx.what_bound = w_hat_bound(ctx.nl_split, cutoff);
        if (ctx.split.k > 0) {
            DecayRate k = decay_margin(ctx.split, TimeDirection::forward, SpectralBlock::unstable);
            ctx.rate_P = DecayRate{k.C * ctx.what_bound, k.mu};
        }
        if (ctx.split.m > 0) {
            DecayRate k = decay_margin(ctx.split, TimeDirection::backward, SpectralBlock::stable);
            ctx.rate_N_bwd = DecayRate{k.C * ctx.what_bound, k.mu};
        }
    }
    return ctx;
}

Vec local_H(const LocalConjugacy& ctx, const Vec& x) {
    if (x.size() != ctx.field.dim) raise(Errc::config_error, "point has wrong dimension");
    Vec u = ctx.split.T * x;
    Vec y = u;
    if (ctx.split.k > 0)
        y.head(ctx.split.k) +=
            local_block_integral(ctx, u, SpectralBlock::unstable, TimeDirection::forward);
    if (ctx.split.m > 0) {
        if (ctx.stable_form == StableBlockForm::forward)
            y.tail(ctx.split.m) +=
                local_block_integral(ctx, u, SpectralBlock::stable, TimeDirection::forward);
        else
            y.tail(ctx.split.m) -=
                local_block_integral(ctx, u, SpectralBlock::stable, TimeDirection::backward);
    }
    return ctx.split.T_inv * y;
}

Vec inverse_local_H(const LocalConjugacy& ctx, const Vec& y) {
    LocalConjugacy tight = ctx;
    tight.quad.tol = std::max(ctx.quad.tol * 1e-2, 1e-12);
    tight.flow.tol = std::max(tight.quad.tol * 0.1, 1e-13);
    auto map = [&tight](const Vec& p) { return local_H(tight, p); };
    double scale = 1.0 + y.norm();
    Vec x = newton_inverse(map, y, y, 1e-6 * scale,
                           std::max(2e-11, 3.0 * tight.quad.tol) * scale, 50);
    double res = (local_H(tight, x) - y).norm();
    if (res > 1e-8 * scale)
        raise(Errc::newton_diverged,
              "inverse residual " + fmt_g17(res) + " violates the contract");
    return x;
}

GlobalConjugacy make_global_conjugacy(const VectorField& field, CutoffSpec cutoff,
                                      QuadratureConfig quad, FlowConfig flow,
                                      double t_max, double r_init) {
    check_origin_equilibrium(field);
    if (cutoff.kind == CutoffSpec::Kind::value_threshold)
        raise(Errc::config_error, "the global map uses a ball cutoff or none");

    GlobalConjugacy ctx;
    ctx.field = field;
    ctx.nl = nonlinear_part(field);
    ctx.A = ctx.nl.A;
    if (!spectrum_all_stable(ctx.A, default_hyperbolicity_tol(ctx.A)))
        raise(Errc::not_stable_spectrum,
              "the global construction needs all eigenvalues in the open left half-plane");
    ctx.cutoff = cutoff;
    ctx.quad = quad;
    flow.tol = std::min(flow.tol, 0.1 * quad.tol);
    ctx.flow = flow;
    ctx.mu_stable = stable_margin(ctx.A);
    ctx.kernel_bwd = kernel_margin(ctx.A, TimeDirection::backward);
    ctx.kernel_fwd = kernel_margin(-ctx.A, TimeDirection::forward);
    ctx.t_max = t_max > 0 ? t_max : std::clamp(50.0 / ctx.mu_stable, 10.0, 1000.0);

    if (cutoff.kind == CutoffSpec::Kind::ball) {
        validate_cutoff(cutoff, field);
        double ring = cutoff.M + cutoff.eps;
        ctx.cert = certify_dominance_ball(field, std::max(r_init, ring));
        if (ctx.cert.radius_r < ring * (1.0 - 1e-12)) {
            // the halving sequence may have stepped over the ring radius
            ctx.cert = certify_dominance_ball(field, ring);
        }
        if (ctx.cert.radius_r < ring * (1.0 - 1e-12))
            raise(Errc::no_certified_ball,
                  "cutoff support radius " + fmt_g17(ring) +
                      " is not inside a certified dominance ball (got " +
                      fmt_g17(ctx.cert.radius_r) + ")");
        if (!ctx.cert.decay_checked)
            raise(Errc::no_certified_ball,
                  "dominance failed on an interior sphere; capture into the cutoff "
                  "ball is not certified");
        // forward invariance of N_M and of the support ring
        for (double rho : {cutoff.M, ring}) {
            if (!dominance_on_sphere(field, rho, 256, 42))
                raise(Errc::no_certified_ball,
                      "dominance fails on the sphere of radius " + fmt_g17(rho));
        }
        ctx.what_bound = w_hat_bound(ctx.nl, cutoff);
    } else {
        ctx.cert = certify_dominance_ball(field, r_init);
    }
    return ctx;
}

RoaStatus roa_status(const GlobalConjugacy& ctx, const Vec& x) {
    return in_region_of_attraction(ctx.field, x, ctx.cert, ctx.t_max, ctx.flow);
}

namespace {

Vec simplified_forward_raw(const GlobalConjugacy& ctx, const Vec& x, TimeDirection dir) {
    ImproperSpec spec;
    spec.fld = &ctx.field;
    spec.x0 = x;
    spec.dir = dir;
    const Mat& A = ctx.A;
    const NonlinearPart& nl = ctx.nl;
    spec.integrand = [&A, &nl](double s, const Vec& state) {
        return Vec(expm(A, -s) * nl.w(state));
    };
    spec.out_dim = ctx.field.dim;
    spec.quad = &ctx.quad;
    spec.flow = &ctx.flow;
    spec.mu_hint = std::clamp(ctx.mu_stable, 0.05, 10.0);
    QuadResult res = improper_integral(spec);
    return dir == TimeDirection::forward ? res.value : Vec(-res.value);
}

}  // namespace

Vec simplified_h(const GlobalConjugacy& ctx, const Vec& x, TimeDirection form) {
    if (x.size() != ctx.field.dim) raise(Errc::config_error, "point has wrong dimension");
    return simplified_forward_raw(ctx, x, form);
}

Vec global_h(const GlobalConjugacy& ctx, const Vec& x) {
    if (x.size() != ctx.field.dim) raise(Errc::config_error, "point has wrong dimension");
    switch (roa_status(ctx, x)) {
        case RoaStatus::inside: break;
        case RoaStatus::outside:
            raise(Errc::not_in_region_of_attraction,
                  "point is not in the region of attraction of the origin");
        case RoaStatus::inconclusive:
            raise(Errc::horizon_exceeded,
                  "orbit did not reach the certified ball by t_max; region "
                  "membership undecided");
    }

    if (ctx.cutoff.kind == CutoffSpec::Kind::none)
        return simplified_forward_raw(ctx, x, TimeDirection::forward);

    const double M = ctx.cutoff.M;
    const double ring = ctx.cutoff.M + ctx.cutoff.eps;
    const Mat& A = ctx.A;
    const NonlinearPart& nl = ctx.nl;
    const CutoffSpec& cut = ctx.cutoff;
    double err_total = 0;

    // forward piece: integrand (W - W_hat)(phi_tau) vanishes once the orbit
    // enters N_M, which is forward invariant (dominance checked on its sphere)
    Vec fwd = Vec::Zero(ctx.field.dim);
    if (x.norm() > M) {
        Trajectory traj = integrate(ctx.field, x, ctx.t_max, ctx.flow, RadiusEvent{M, false});
        if (traj.termination() != Termination::entered_ball) {
            if (traj.termination() == Termination::reached_horizon)
                raise(Errc::horizon_exceeded, "orbit did not enter the cutoff ball by t_max");
            raise(Errc::not_in_region_of_attraction, "orbit escaped while approaching N_M");
        }
        double t_entry = traj.t_end();
        auto f = [&](double tau) {
            Vec state = traj.at(tau);
            return Vec(expm(A, -tau) * (nl.w(state) - w_hat(nl, cut, state)));
        };
        QuadResult r = integrate_interval(f, ctx.field.dim, 0.0, t_entry, 0.5 * ctx.quad.tol,
                                          ctx.quad.max_panels);
        fwd = r.value;
        err_total += r.err_bound;
    }

    // backward piece: beyond the first exit from the certified ball the orbit
    // stays outside the cutoff support (re-entry would contradict dominance),
    // so the integrand is identically zero there
    ImproperSpec spec;
    spec.fld = &ctx.field;
    spec.x0 = x;
    spec.dir = TimeDirection::backward;
    spec.integrand = [&A, &nl, &cut](double s, const Vec& state) {
        return Vec(expm(A, -s) * w_hat(nl, cut, state));
    };
    spec.out_dim = ctx.field.dim;
    spec.quad = &ctx.quad;
    spec.flow = &ctx.flow;
    spec.mu_hint = std::clamp(ctx.mu_stable, 0.05, 10.0);
    spec.rigorous = DecayRate{ctx.kernel_bwd.C * ctx.what_bound, ctx.kernel_bwd.mu};
    spec.stop_event = RadiusEvent{std::max(ctx.cert.radius_r, ring), true};
    QuadResult bwd = improper_integral(spec);
    err_total += bwd.err_bound;

    if (err_total > std::max(25.0 * ctx.quad.tol, ctx.quad.truncation_slack))
        raise(Errc::quadrature_accuracy,
              "combined error bound " + fmt_g17(err_total) + " too large");
    return Vec(-bwd.value + fwd);
}

Vec global_H(const GlobalConjugacy& ctx, const Vec& x) {
    return x + global_h(ctx, x);
}

Vec inverse_global_H(const GlobalConjugacy& ctx, const Vec& y) {
    if (y.size() != ctx.field.dim) raise(Errc::config_error, "point has wrong dimension");
    GlobalConjugacy tight = ctx;
    tight.quad.tol = std::min(ctx.quad.tol * 1e-2, 1e-11);
    tight.flow.tol = std::max(tight.quad.tol * 0.1, 1e-13);
    auto map = [&tight](const Vec& p) { return global_H(tight, p); };
    const double yscale = 1.0 + y.norm();

    double r_small = 0.25 * std::min(1.0, ctx.cert.radius_r);
    Error last(Errc::newton_diverged, "relay not attempted");
    for (int attempt = 0; attempt < 5; ++attempt, r_small *= 0.5) {
        // relay time: e^{A t} y certified inside the Newton ball
        double t = 0;
        if (y.norm() > 0.5 * r_small) {
            t = std::log(ctx.kernel_fwd.C * y.norm() / (0.5 * r_small)) / ctx.kernel_fwd.mu;
            t = std::max(t, 0.0);
        }
        if (t > 1e4) raise(Errc::newton_diverged, "relay time out of range");
        try {
            Vec ytil = expm(ctx.A, t) * y;
            double sc = 1.0 + ytil.norm();
            Vec xtil = newton_inverse(map, ytil, ytil, 1e-6 * sc,
                                      std::max(2e-11, 3.0 * tight.quad.tol) * sc, 50);
            Vec x = t > 0 ? flow(ctx.field, xtil, -t, tight.flow) : xtil;
            double res = (global_H(tight, x) - y).norm();
            if (res > 1e-8 * yscale)
                raise(Errc::newton_diverged,
                      "relay residual " + fmt_g17(res) + " violates the contract");
            return x;
        } catch (const Error& e) {
            if (e.code() != Errc::newton_diverged && e.code() != Errc::diverged) throw;
            last = e;
        }
    }
    throw last;
}

}  // namespace linearize
