#ifndef ODENSEMBLE_MODELS_DUFFING_HPP
#define ODENSEMBLE_MODELS_DUFFING_HPP

#include <cmath>
#include <span>
#include <stdexcept>

#include "odensemble/system.hpp"
#include "odensemble/types.hpp"

namespace odensemble::models {

/// Periodically forced double-well oscillator,
///   y1' = y2
///   y2' = delta*y1 - y1^3 - k*y2 + B*cos(omega*t).
/// Parameter slot order: [k, B, delta, omega].
struct DuffingParams {
    Real k = 0.2;      // damping
    Real B = 0.3;      // forcing amplitude
    Real delta = 1.0;  // stiffness
    Real omega = 1.0;  // forcing angular frequency

    static constexpr Index count = 4;

    void validate() const {
        if (!(B > 0) || !(omega > 0))
            throw std::invalid_argument("DuffingParams: B and omega must be > 0");
    }
    void write(std::span<Real> p) const {
        p[0] = k;
        p[1] = B;
        p[2] = delta;
        p[3] = omega;
    }
};

inline void duffing_rhs(Real t, std::span<const Real> y, std::span<const Real> p,
                        std::span<Real> dy) {
    const Real k = p[0], B = p[1], delta = p[2], omega = p[3];
    dy[0] = y[1];
    dy[1] = delta * y[0] - y[0] * y[0] * y[0] - k * y[1] + B * std::cos(omega * t);
}

/// Duffing extended with the linearized system in polar coordinates: y3 is
/// the radius and y4 the angle of the tangent-space vector, with
/// g1 = dF2/dy1 and g2 = dF2/dy2. The coupling is one-way.
inline void duffing_lyapunov_rhs(Real t, std::span<const Real> y, std::span<const Real> p,
                                 std::span<Real> dy) {
    duffing_rhs(t, y, p, dy);
    const Real k = p[0], delta = p[2];
    const Real g1 = delta - 3.0 * y[0] * y[0];
    const Real g2 = -k;
    const Real s = std::sin(y[3]);
    const Real c = std::cos(y[3]);
    dy[2] = y[2] * ((1.0 + g1) * s * c + g2 * s * s);
    dy[3] = -s * s + (g1 * c + g2 * s) * c;
}

/// Largest-Lyapunov-exponent estimate from linearized-radius samples taken
/// at equally spaced section times, with the radius reset to one after each
/// sample: lambda = sum(ln sample_n) / (N * period).
inline Real lyapunov_accumulate(std::span<const Real> samples, Real period) {
    if (samples.empty()) throw std::invalid_argument("lyapunov_accumulate: no samples");
    if (!(period > 0)) throw std::invalid_argument("lyapunov_accumulate: period must be > 0");
    Real sum = 0;
    for (Real s : samples) {
        if (!(s > 0)) throw std::invalid_argument("lyapunov_accumulate: nonpositive sample");
        sum += std::log(s);
    }
    return sum / (static_cast<Real>(std::ssize(samples)) * period);
}

/// Plain Duffing system, no events or accessories; endpoints sampled by the
/// caller give the Poincare section when the time domain spans one period.
class DuffingSystem : public HookDefaults {
public:
    explicit DuffingSystem(OdeControls ode = OdeControls::uniform(2, 1e-9, 1e-9))
        : ode_(std::move(ode)) {}

    SystemDims dims() const { return {2, DuffingParams::count, 0, 0}; }
    OdeControls ode_controls() const { return ode_; }
    void ode_rhs(Real t, std::span<const Real> y, std::span<const Real> p, std::span<Real> dy) const {
        duffing_rhs(t, y, p, dy);
    }

private:
    OdeControls ode_;
};

/// Tracks the running maximum of y1 (and its time) in two accessory slots,
/// updated at every accepted step and seeded from the initial condition.
class DuffingMaxAccessorySystem : public HookDefaults {
public:
    explicit DuffingMaxAccessorySystem(OdeControls ode = OdeControls::uniform(2, 1e-9, 1e-9))
        : ode_(std::move(ode)) {}

    SystemDims dims() const { return {2, DuffingParams::count, 0, 2}; }
    OdeControls ode_controls() const { return ode_; }
    void ode_rhs(Real t, std::span<const Real> y, std::span<const Real> p, std::span<Real> dy) const {
        duffing_rhs(t, y, p, dy);
    }
    void initialize(Real t, std::span<Real>, std::span<Real> y, std::span<const Real>,
                    std::span<Real> acc) const {
        acc[0] = y[0];
        acc[1] = t;
    }
    void ordinary_accessory(Real t, std::span<const Real> y, std::span<const Real>,
                            std::span<Real> acc) const {
        if (y[0] > acc[0]) {
            acc[0] = y[0];
            acc[1] = t;
        }
    }

private:
    OdeControls ode_;
};

/// Records maxima of y1 through event handling: F = y2 with falling
/// direction detects local maxima, and the event accessory keeps the largest
/// one seen. With stop_after = 1 the run halts at the first local maximum.
class DuffingMaxEventSystem : public HookDefaults {
public:
    explicit DuffingMaxEventSystem(Real event_tolerance = 1e-6, Index stop_after = 0,
                                   OdeControls ode = OdeControls::uniform(2, 1e-9, 1e-9))
        : tol_(event_tolerance), stop_(stop_after), ode_(std::move(ode)) {}

    SystemDims dims() const { return {2, DuffingParams::count, 1, 2}; }
    OdeControls ode_controls() const { return ode_; }
    EventControls event_controls() const {
        return EventControls{.direction = {-1}, .tolerance = {tol_}, .stop_condition = {stop_}};
    }
    void ode_rhs(Real t, std::span<const Real> y, std::span<const Real> p, std::span<Real> dy) const {
        duffing_rhs(t, y, p, dy);
    }
    void event_values(Real, std::span<const Real> y, std::span<const Real>, std::span<Real> f) const {
        f[0] = y[1];
    }
    void initialize(Real t, std::span<Real>, std::span<Real> y, std::span<const Real>,
                    std::span<Real> acc) const {
        acc[0] = y[0];
        acc[1] = t;
    }
    void event_accessory(Index event, Index, Real t, std::span<const Real> y, std::span<const Real>,
                         std::span<Real> acc) const {
        if (event == 0 && y[0] > acc[0]) {
            acc[0] = y[0];
            acc[1] = t;
        }
    }

private:
    Real tol_;
    Index stop_;
    OdeControls ode_;
};

/// Four-dimensional Duffing + linearized radius/angle. finalize stores the
/// section sample of the radius into the single accessory slot and resets
/// the radius to one, so iterated solves implement the sample-and-reset
/// protocol without the caller touching the state.
class DuffingLyapunovSystem : public HookDefaults {
public:
    explicit DuffingLyapunovSystem(OdeControls ode = OdeControls::uniform(4, 1e-9, 1e-9))
        : ode_(std::move(ode)) {}

    SystemDims dims() const { return {4, DuffingParams::count, 0, 1}; }
    OdeControls ode_controls() const { return ode_; }
    void ode_rhs(Real t, std::span<const Real> y, std::span<const Real> p, std::span<Real> dy) const {
        duffing_lyapunov_rhs(t, y, p, dy);
    }
    void finalize(Real, std::span<Real>, std::span<Real> y, std::span<const Real>,
                  std::span<Real> acc) const {
        acc[0] = y[2];
        y[2] = 1.0;
    }

private:
    OdeControls ode_;
};

} // namespace odensemble::models

#endif
