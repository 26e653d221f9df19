#include "linearize/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "linearize/errors.hpp"

namespace linearize {

namespace {

// Gauss-Kronrod 15(7) nodes and weights on [-1, 1] (QUADPACK values).
constexpr double xgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
};
constexpr double wgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
};
// Gauss-7 weights attach to xgk[1], xgk[3], xgk[5], xgk[7]
constexpr double wg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
};

struct Panel {
    double a, b;
    Vec value;
    double err;
};

Panel gk15(const VecIntegrand& f, int dim, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double hl = 0.5 * (b - a);
    Vec resk = Vec::Zero(dim), resg = Vec::Zero(dim);
    Vec fc = f(mid);
    resk += wgk[7] * fc;
    resg += wg[3] * fc;
    for (int i = 0; i < 7; ++i) {
        Vec fsum = f(mid - hl * xgk[i]) + f(mid + hl * xgk[i]);
        resk += wgk[i] * fsum;
        if (i % 2 == 1) resg += wg[i / 2] * fsum;
    }
    Panel p;
    p.a = a;
    p.b = b;
    p.value = hl * resk;
    p.err = std::abs(hl) * (resk - resg).cwiseAbs().maxCoeff();
    return p;
}

// refinement queue ordered by error, ties broken by position for determinism
struct PanelOrder {
    bool operator()(const Panel& x, const Panel& y) const {
        if (x.err != y.err) return x.err > y.err;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    }
};

}  // namespace

QuadResult integrate_interval(const VecIntegrand& f, int dim, double a, double b,
                              double abs_tol, int max_panels) {
    QuadResult out;
    out.value = Vec::Zero(dim);
    if (a == b) return out;

    std::multiset<Panel, PanelOrder> panels;
    const int initial = std::clamp(static_cast<int>(std::ceil(std::abs(b - a) / 4.0)), 4, 64);
    for (int i = 0; i < initial; ++i) {
        double pa = a + (b - a) * i / initial;
        double pb = a + (b - a) * (i + 1) / initial;
        panels.insert(gk15(f, dim, pa, pb));
    }

    auto total_err = [&] {
        double e = 0;
        for (const auto& p : panels) e += p.err;
        return e;
    };

    double err = total_err();
    while (err > abs_tol && static_cast<int>(panels.size()) < max_panels) {
        Panel worst = *panels.begin();
        panels.erase(panels.begin());
        double mid = 0.5 * (worst.a + worst.b);
        if (mid == worst.a || mid == worst.b) {
            // interval at roundoff resolution, keep its estimate
            worst.err = 0;
            panels.insert(worst);
            err = total_err();
            continue;
        }
        panels.insert(gk15(f, dim, worst.a, mid));
        panels.insert(gk15(f, dim, mid, worst.b));
        err = total_err();
    }

    for (const auto& p : panels) out.value += p.value;
    out.err_bound = err;
    out.panels = static_cast<int>(panels.size());
    if (err > abs_tol)
        raise(Errc::quadrature_accuracy,
              "panel budget exhausted with error " + fmt_g17(err) +
                  " above tolerance " + fmt_g17(abs_tol));
    return out;
}

double horizon_for(const DecayRate& rate, double tail_budget) {
    if (rate.C <= 0) return 0.0;
    double T = std::log(rate.C / (rate.mu * tail_budget)) / rate.mu;
    return std::max(T, 0.0);
}

QuadResult quad_expdecay(const VecIntegrand& f, int dim, TimeDirection direction,
                         DecayRate rate, const QuadratureConfig& cfg,
                         double available_horizon, bool exact_tail_at_cap) {
    if (rate.C < 0 || rate.mu <= 0) raise(Errc::config_error, "invalid decay rate");
    QuadResult out;
    out.value = Vec::Zero(dim);
    if (rate.C == 0) return out;

    const double T_target = horizon_for(rate, 0.5 * cfg.tol);
    if (T_target > cfg.max_horizon)
        raise(Errc::horizon_exceeded,
              "decay horizon " + fmt_g17(T_target) + " exceeds max_horizon " +
                  fmt_g17(cfg.max_horizon));
    const double T = std::min(T_target, available_horizon);
    out.horizon = T;
    out.flow_truncated = T < T_target;
    if (T <= 0) {
        out.err_bound = rate.C / rate.mu;
        return out;
    }

    const double sgn = direction == TimeDirection::forward ? 1.0 : -1.0;
    auto g = [&](double s) { return f(sgn * s); };

    // envelope sanity: a tenfold violation means the claimed decay is wrong
    for (int i = 0; i <= 32; ++i) {
        double s = T * i / 32;
        double bound = 10.0 * rate.C * std::exp(-rate.mu * s) + 1e-280;
        if (g(s).norm() > bound)
            raise(Errc::non_decay, "integrand exceeds its decay envelope at |s| = " +
                                       fmt_g17(s));
    }

    // backward case: int_{-T}^0 f(s) ds = int_0^T f(-sigma) dsigma
    QuadResult inner = integrate_interval(g, dim, 0.0, T, 0.5 * cfg.tol, cfg.max_panels);
    out.value = inner.value;
    out.panels = inner.panels;
    double tail = rate.C * std::exp(-rate.mu * T) / rate.mu;
    if (out.flow_truncated && exact_tail_at_cap) {
        tail = 0.0;
        out.exact_tail = true;
    }
    out.err_bound = inner.err_bound + tail;
    return out;
}

EnvelopeProbe probe_envelope(const std::function<double(double)>& norm_at,
                             double span, int n_samples) {
    EnvelopeProbe probe;
    if (span <= 0 || n_samples < 8) raise(Errc::config_error, "bad probe window");

    std::vector<double> s(n_samples), v(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        s[i] = span * i / (n_samples - 1);
        v[i] = norm_at(s[i]);
    }
    int ipeak = 0;
    for (int i = 0; i < n_samples; ++i)
        if (v[i] > v[ipeak]) ipeak = i;
    probe.peak = v[ipeak];
    if (probe.peak <= 1e-280) {
        probe.identically_zero = true;
        return probe;
    }

    double tail_max = 0;
    for (int i = (3 * n_samples) / 4; i < n_samples; ++i) tail_max = std::max(tail_max, v[i]);
    probe.tail_ratio = tail_max / probe.peak;
    probe.tail_abs = tail_max;

    // least-squares slope of log||f|| over the decaying run past the peak;
    // the run stops at the first sample 8 decades below the peak so that a
    // noise floor rising under a growing kernel cannot pollute the fit
    int end_run = n_samples;
    for (int i = ipeak + 1; i < n_samples; ++i) {
        if (v[i] < probe.peak * 1e-8) {
            end_run = i;
            break;
        }
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (int i = ipeak; i < end_run; ++i) {
        if (v[i] <= 0) continue;
        double x = s[i], y = std::log(v[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
    }
    if (cnt < 6) {
        // everything past the peak collapsed to the floor within a few
        // samples; decay faster than resolvable, treat as steep
        probe.mu = 0;
        probe.decaying = probe.tail_ratio < 1e-6;
        if (probe.decaying) {
            probe.mu = std::log(1.0 / std::max(probe.tail_ratio, 1e-280)) / span;
            probe.C = probe.peak * 1.25;
        }
        return probe;
    }
    double denom = cnt * sxx - sx * sx;
    double slope = denom != 0 ? (cnt * sxy - sx * sy) / denom : 0.0;
    probe.mu = -slope;
    probe.decaying = probe.mu > 1e-3 && probe.tail_ratio < 0.5;
    if (probe.decaying) {
        double C = 0;
        for (int i = 0; i < n_samples; ++i)
            C = std::max(C, v[i] * std::exp(probe.mu * s[i]));
        probe.C = 1.25 * C;
        // a wildly inflated constant signals a poor single-exponential fit;
        // clamp by re-fitting mu to the sampled endpoints of the decay
        if (probe.C > probe.peak * 1e12) {
            probe.decaying = false;
            probe.C = 0;
        }
    }
    return probe;
}

}  // namespace linearize
