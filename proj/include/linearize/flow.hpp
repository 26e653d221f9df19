#pragma once

#include <array>
#include <optional>
#include <vector>

#include "linearize/types.hpp"
#include "linearize/vector_field.hpp"

namespace linearize {

struct FlowConfig {
    double tol = 1e-10;          // local error control (absolute and relative)
    double atol = -1.0;          // absolute component; negative means = tol.
                                 // Near-zero values give pure relative control,
                                 // which keeps exponentially decaying states
                                 // accurate in relative terms at any magnitude.
    double blowup_norm = 1e8;    // state norm treated as divergence
    double event_tol = 1e-10;    // tolerance in the event function ||x|| - radius
    long max_steps = 2000000;
};

enum class Termination { reached_horizon, entered_ball, exited_ball, diverged, left_domain };

/// Fires when the orbit crosses the sphere of the given radius in the given
/// direction (on the integration clock).
struct RadiusEvent {
    double radius = 0;
    bool outward = false;  // false: crossing into the ball, true: out of it
};

/// One accepted integrator step with its interpolation polynomial.
struct DenseSegment {
    double t0 = 0, t1 = 0;  // t1 < t0 on backward integrations
    std::array<Vec, 8> c;

    Vec eval(double t) const;
    Vec deriv(double t) const;
};

/// Dense-output solution of x' = f(x) over [t_start, t_end] (or
/// [t_end, t_start] backward). States are interpolable anywhere in between.
class Trajectory {
public:
    Trajectory(Vec x0, double t0, double tol);

    double t_start() const { return t_start_; }
    double t_end() const { return t_end_; }
    double extent() const { return std::abs(t_end_ - t_start_); }
    bool covers(double t) const;
    Termination termination() const { return termination_; }
    double tol() const { return tol_; }
    const Vec& initial_state() const { return x0_; }
    const Vec& final_state() const { return xend_; }
    const std::vector<DenseSegment>& segments() const { return segments_; }

    /// Interpolated state; exact initial state at t_start. Throws outside
    /// the covered range (beyond a small roundoff slack).
    Vec at(double t) const;
    /// Time derivative of the interpolant.
    Vec deriv_at(double t) const;

private:
    friend Trajectory integrate(const VectorField&, const Vec&, double,
                                const FlowConfig&, const std::optional<RadiusEvent>&);
    Vec x0_, xend_;
    double t_start_, t_end_;
    double tol_;
    Termination termination_ = Termination::reached_horizon;
    std::vector<DenseSegment> segments_;
};

/// Integrates x' = f(x) from x0 over [0, t_target] (t_target may be
/// negative). Divergence and domain exit end the trajectory without
/// throwing; step underflow and step-budget exhaustion throw.
Trajectory integrate(const VectorField& field, const Vec& x0, double t_target,
                     const FlowConfig& cfg,
                     const std::optional<RadiusEvent>& event = std::nullopt);

/// phi_t(x). Throws diverged / left_domain / step_underflow.
Vec flow(const VectorField& field, const Vec& x, double t, double tol);
Vec flow(const VectorField& field, const Vec& x, double t, const FlowConfig& cfg);

struct BallEntry {
    double t_entry = 0;
    Vec state;
};

/// First forward time the orbit enters the closed ball of the given radius,
/// located to the event tolerance. nullopt when the horizon is reached
/// first; throws on divergence or domain exit.
std::optional<BallEntry> flow_until_ball(const VectorField& field, const Vec& x,
                                         double radius, double t_max,
                                         const FlowConfig& cfg = {});

/// Ball on which <x, f(x)> < 0 holds on sampled spheres; forward orbits
/// entering it are treated as captured by the origin.
struct RoaCertificate {
    double radius_r = 0;
    bool decay_checked = false;  // dominance also held on an interior radius sweep
};

/// True when <x, f(x)> < 0 at every one of n_samples points on the sphere.
bool dominance_on_sphere(const VectorField& field, double radius, int n_samples,
                         std::uint64_t seed);

/// Halving search from r_init for a sampled dominance ball; also sweeps
/// interior radii to set decay_checked. Throws no_certified_ball when the
/// search collapses to 1e-8 * r_init.
RoaCertificate certify_dominance_ball(const VectorField& field, double r_init,
                                      int n_samples = 256, std::uint64_t seed = 42);

enum class RoaStatus { inside, outside, inconclusive };

/// Membership test for the region of attraction of the origin: inside iff
/// the forward orbit enters the certified ball by t_max. An orbit that has
/// settled at a remote equilibrium reports outside; an undecided horizon
/// reports inconclusive.
RoaStatus in_region_of_attraction(const VectorField& field, const Vec& x,
                                  const RoaCertificate& cert, double t_max,
                                  const FlowConfig& cfg = {});

}  // namespace linearize
