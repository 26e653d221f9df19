#pragma once

#include <Eigen/Core>

#include <charconv>
#include <cstdint>
#include <random>
#include <string>

namespace linearize {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class TimeDirection { forward, backward };

/// Formats a double with 17 significant digits, locale-independent.
/// Used everywhere machine-readable output must be byte-reproducible.
inline std::string fmt_g17(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v,
                             std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

// Deterministic sampling helpers. std::mt19937_64 is portable bit-for-bit;
// the distributions below avoid std::*_distribution, whose output is
// implementation-defined.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& gen, double a, double b) {
    return a + (b - a) * uniform01(gen);
}

inline double gaussian(std::mt19937_64& gen) {
    // Box-Muller, no state carried between calls
    double u1 = uniform01(gen);
    double u2 = uniform01(gen);
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

/// Point on the sphere of the given radius (n = 1 gives +-radius).
inline Vec sphere_point(std::mt19937_64& gen, int dim, double radius) {
    Vec v(dim);
    do {
        for (int i = 0; i < dim; ++i) v[i] = gaussian(gen);
    } while (v.norm() < 1e-12);
    return radius / v.norm() * v;
}

/// Uniform point in the closed ball of the given radius.
inline Vec ball_point(std::mt19937_64& gen, int dim, double radius) {
    Vec dir = sphere_point(gen, dim, 1.0);
    double r = radius * std::pow(uniform01(gen), 1.0 / dim);
    return r * dir;
}

}  // namespace linearize
