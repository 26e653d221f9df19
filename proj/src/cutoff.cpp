#include "linearize/cutoff.hpp"

#include <cmath>

#include "linearize/errors.hpp"

namespace linearize {

namespace {

double bump(double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; }

}  // namespace

double alpha_radial(double r, double M, double eps) {
    if (M <= 0 || eps <= 0) raise(Errc::config_error, "cutoff requires M > 0 and eps > 0");
    if (r <= M) return 1.0;
    if (r >= M + eps) return 0.0;
    double u = (M + eps - r) / eps;
    double g = bump(u);
    return g / (g + bump(1.0 - u));
}

double alpha(const Vec& x, double M, double eps) {
    return alpha_radial(x.norm(), M, eps);
}

Vec w_hat(const NonlinearPart& W, const CutoffSpec& spec, const Vec& x) {
    switch (spec.kind) {
        case CutoffSpec::Kind::none:
            return W.w(x);
        case CutoffSpec::Kind::ball: {
            double a = alpha(x, spec.M, spec.eps);
            if (a == 1.0) return W.w(x);
            if (a == 0.0) return W.w(Vec::Zero(x.size()));
            return W.w(a * x);
        }
        case CutoffSpec::Kind::value_threshold: {
            Vec v = W.w(x);
            for (int i = 0; i < v.size(); ++i)
                if (std::abs(v[i]) > spec.M) v[i] = 0.0;
            return v;
        }
    }
    raise(Errc::config_error, "unknown cutoff kind");
}

double w_hat_bound(const NonlinearPart& W, const CutoffSpec& spec) {
    const int n = W.dim();
    switch (spec.kind) {
        case CutoffSpec::Kind::value_threshold:
            return spec.M * std::sqrt(static_cast<double>(n));
        case CutoffSpec::Kind::ball: {
            // W_hat vanishes outside the closed ball of radius M + eps, so a
            // dense sample of that ball reaches the sup; coordinate axes are
            // included since monomial fields peak there
            const double R = spec.M + spec.eps;
            std::mt19937_64 gen(0x5eedb411u);
            std::vector<Vec> dirs;
            for (int i = 0; i < n; ++i) {
                Vec e = Vec::Zero(n);
                e[i] = 1.0;
                dirs.push_back(e);
                dirs.push_back(-e);
            }
            for (int i = 0; i < 512; ++i) dirs.push_back(sphere_point(gen, n, 1.0));
            double sup = 0;
            const int radii = 48;
            for (const Vec& dir : dirs)
                for (int j = 1; j <= radii; ++j)
                    sup = std::max(sup, w_hat(W, spec, (R * j / radii) * dir).norm());
            return sup;
        }
        case CutoffSpec::Kind::none: {
            std::mt19937_64 gen(0x5eedb412u);
            std::vector<double> shells;
            for (int j = 1; j <= 8; ++j) {
                double r = std::pow(2.0, j - 3);  // 0.25 .. 32
                if (std::isfinite(W.field.domain_radius) && r > W.field.domain_radius) break;
                double shell = 0;
                for (int i = 0; i < 128; ++i) {
                    Vec x = sphere_point(gen, n, r);
                    shell = std::max(shell, W.w(x).norm());
                }
                shells.push_back(shell);
            }
            double sup = 0;
            for (double s : shells) sup = std::max(sup, s);
            if (shells.size() >= 4) {
                double early = shells[shells.size() - 4];
                double late = shells.back();
                if (late > 2.0 * std::max(early, 1e-12) && late > 1e-10)
                    raise(Errc::unbounded_modification,
                          "unmodified W grows with radius; no global bound");
            }
            return sup;
        }
    }
    raise(Errc::config_error, "unknown cutoff kind");
}

void validate_cutoff(const CutoffSpec& spec, const VectorField& field) {
    if (spec.kind == CutoffSpec::Kind::ball) {
        if (spec.M <= 0 || spec.eps <= 0)
            raise(Errc::config_error, "ball cutoff requires M > 0 and eps > 0");
        if (std::isfinite(field.domain_radius) &&
            spec.M + spec.eps > field.domain_radius)
            raise(Errc::config_error,
                  "ball cutoff needs M + eps <= domain radius of the field");
    }
    if (spec.kind == CutoffSpec::Kind::value_threshold && spec.M <= 0)
        raise(Errc::config_error, "value threshold requires M > 0");
}

}  // namespace linearize
