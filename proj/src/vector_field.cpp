#include "linearize/vector_field.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "linearize/errors.hpp"

namespace linearize {

double origin_residual(const VectorField& field) {
    return field.eval(Vec::Zero(field.dim)).norm();
}

double default_fd_step(const Vec& point) {
    constexpr double eps = 2.220446049250313e-16;
    return std::cbrt(eps) * (1.0 + point.norm());
}

Mat jacobian_fd(const VectorField& field, const Vec& point, double step) {
    if (step <= 0) raise(Errc::config_error, "finite-difference step must be positive");
    if (std::isfinite(field.domain_radius) &&
        point.norm() + step > field.domain_radius)
        raise(Errc::domain_exceeded, "difference stencil leaves the domain ball");
    const int n = field.dim;
    Mat J(n, n);
    Vec xp = point, xm = point;
    for (int j = 0; j < n; ++j) {
        xp[j] = point[j] + step;
        xm[j] = point[j] - step;
        J.col(j) = (field.eval(xp) - field.eval(xm)) / (2.0 * step);
        xp[j] = point[j];
        xm[j] = point[j];
    }
    return J;
}

Mat jacobian_fd(const VectorField& field, const Vec& point) {
    return jacobian_fd(field, point, default_fd_step(point));
}

Mat jacobian_origin_or_fd(const VectorField& field) {
    if (field.jacobian_origin) return *field.jacobian_origin;
    return jacobian_fd(field, Vec::Zero(field.dim));
}

VectorField translate_to_origin(const VectorField& field, const Vec& x0) {
    if (x0.size() != field.dim) raise(Errc::config_error, "x0 has wrong dimension");
    double res = field.eval(x0).norm();
    double scale = 1.0 + x0.norm();
    if (res > 1e-8 * scale)
        raise(Errc::not_equilibrium,
              "||f(x0)|| = " + fmt_g17(res) + " exceeds tolerance");

    VectorField out;
    out.dim = field.dim;
    out.name = field.name.empty() ? "translated" : field.name + "@shifted";
    auto inner = field.eval;
    Vec shift = x0;
    out.eval = [inner, shift](const Vec& u) { return inner(u + shift); };
    if (x0.norm() == 0.0) {
        out.jacobian_origin = field.jacobian_origin;
        out.domain_radius = field.domain_radius;
    } else {
        out.jacobian_origin = std::nullopt;
        if (std::isfinite(field.domain_radius)) {
            double r = field.domain_radius - x0.norm();
            if (r <= 0)
                raise(Errc::domain_exceeded, "translated origin leaves the domain ball");
            out.domain_radius = r;
        }
    }
    return out;
}

NonlinearPart nonlinear_part(const VectorField& field) {
    return NonlinearPart{field, jacobian_origin_or_fd(field)};
}

VectorField make_polynomial_field(int dim, std::vector<PolyTerm> terms,
                                  std::optional<Mat> jacobian,
                                  double domain_radius, std::string name) {
    if (dim <= 0) raise(Errc::config_error, "dimension must be positive");
    for (const auto& t : terms) {
        if (t.component < 0 || t.component >= dim)
            raise(Errc::config_error, "term component out of range");
        if (static_cast<int>(t.exponents.size()) != dim)
            raise(Errc::config_error, "term exponent multi-index has wrong length");
        for (int e : t.exponents)
            if (e < 0) raise(Errc::config_error, "negative exponent");
    }

    Mat A;
    if (jacobian) {
        if (jacobian->rows() != dim || jacobian->cols() != dim)
            raise(Errc::config_error, "jacobian has wrong shape");
        A = *jacobian;
    } else {
        A = Mat::Zero(dim, dim);
        for (const auto& t : terms) {
            int degree = 0, var = -1;
            for (int i = 0; i < dim; ++i) {
                degree += t.exponents[i];
                if (t.exponents[i] > 0) var = i;
            }
            if (degree == 1) A(t.component, var) += t.coeff;
        }
    }

    VectorField out;
    out.dim = dim;
    out.name = std::move(name);
    out.domain_radius = domain_radius;
    out.jacobian_origin = A;
    out.eval = [dim, terms = std::move(terms)](const Vec& x) {
        Vec f = Vec::Zero(dim);
        for (const auto& t : terms) {
            double v = t.coeff;
            for (int i = 0; i < dim; ++i)
                for (int e = 0; e < t.exponents[i]; ++e) v *= x[i];
            f[t.component] += v;
        }
        return f;
    };
    return out;
}

VectorField parse_field_json(const std::string& text, const std::string& origin_label) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        raise(Errc::config_error, origin_label + ": " + e.what());
    }
    try {
        int dim = j.at("dimension").get<int>();
        std::vector<PolyTerm> terms;
        for (const auto& tj : j.at("terms")) {
            PolyTerm t;
            t.component = tj.at("component").get<int>();
            t.coeff = tj.at("coeff").get<double>();
            t.exponents = tj.at("exponents").get<std::vector<int>>();
            terms.push_back(std::move(t));
        }
        std::optional<Mat> jac;
        if (j.contains("jacobian") && !j["jacobian"].is_null()) {
            Mat A(dim, dim);
            const auto& ja = j["jacobian"];
            if (!ja.is_array()) raise(Errc::config_error, "jacobian must be an array");
            if (!ja.empty() && ja[0].is_array()) {
                if (static_cast<int>(ja.size()) != dim)
                    raise(Errc::config_error, "jacobian row count mismatch");
                for (int r = 0; r < dim; ++r)
                    for (int c = 0; c < dim; ++c) A(r, c) = ja[r][c].get<double>();
            } else {
                if (static_cast<int>(ja.size()) != dim * dim)
                    raise(Errc::config_error, "jacobian length mismatch");
                for (int r = 0; r < dim; ++r)
                    for (int c = 0; c < dim; ++c) A(r, c) = ja[r * dim + c].get<double>();
            }
            jac = A;
        }
        double radius = std::numeric_limits<double>::infinity();
        if (j.contains("domain_radius") && !j["domain_radius"].is_null())
            radius = j["domain_radius"].get<double>();
        if (!(radius > 0)) raise(Errc::config_error, "domain_radius must be positive");
        return make_polynomial_field(dim, std::move(terms), jac, radius, origin_label);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        raise(Errc::config_error, origin_label + ": " + e.what());
    }
}

VectorField load_field_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open field file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_field_json(buf.str(), path);
}

}  // namespace linearize
