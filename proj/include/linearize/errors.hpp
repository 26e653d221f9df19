#pragma once

#include <stdexcept>
#include <string>

namespace linearize {

enum class Errc {
    not_equilibrium,
    domain_exceeded,
    not_hyperbolic,
    expm_overflow,
    empty_block,
    diverged,
    left_domain,
    step_underflow,
    too_many_steps,
    no_certified_ball,
    unbounded_modification,
    horizon_exceeded,
    non_decay,
    quadrature_accuracy,
    not_in_region_of_attraction,
    not_stable_spectrum,
    newton_diverged,
    config_error,
    io_error,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::not_equilibrium: return "not_equilibrium";
        case Errc::domain_exceeded: return "domain_exceeded";
        case Errc::not_hyperbolic: return "not_hyperbolic";
        case Errc::expm_overflow: return "expm_overflow";
        case Errc::empty_block: return "empty_block";
        case Errc::diverged: return "diverged";
        case Errc::left_domain: return "left_domain";
        case Errc::step_underflow: return "step_underflow";
        case Errc::too_many_steps: return "too_many_steps";
        case Errc::no_certified_ball: return "no_certified_ball";
        case Errc::unbounded_modification: return "unbounded_modification";
        case Errc::horizon_exceeded: return "horizon_exceeded";
        case Errc::non_decay: return "non_decay";
        case Errc::quadrature_accuracy: return "quadrature_accuracy";
        case Errc::not_in_region_of_attraction: return "not_in_region_of_attraction";
        case Errc::not_stable_spectrum: return "not_stable_spectrum";
        case Errc::newton_diverged: return "newton_diverged";
        case Errc::config_error: return "config_error";
        case Errc::io_error: return "io_error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace linearize
