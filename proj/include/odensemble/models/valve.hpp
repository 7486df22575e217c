#ifndef ODENSEMBLE_MODELS_VALVE_HPP
#define ODENSEMBLE_MODELS_VALVE_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

#include "odensemble/system.hpp"
#include "odensemble/types.hpp"

namespace odensemble::models {

/// Pressure relief valve with impact dynamics: y1/y2 are displacement and
/// velocity of the valve body, y3 the reservoir pressure.
/// Parameter slot order: [kappa, delta, beta, q, r].
struct ValveParams {
    Real kappa = 1.25; // damping
    Real delta = 10.0; // spring precompression
    Real beta = 20.0;  // compressibility
    Real q = 0.3;      // dimensionless flow rate
    Real r = 0.8;      // coefficient of restitution

    static constexpr Index count = 5;

    void validate() const {
        if (!(r > 0 && r < 1)) throw std::invalid_argument("ValveParams: r must be in (0, 1)");
        if (!(q > 0)) throw std::invalid_argument("ValveParams: q must be > 0");
    }
    void write(std::span<Real> p) const {
        p[0] = kappa;
        p[1] = delta;
        p[2] = beta;
        p[3] = q;
        p[4] = r;
    }
};

/// A negative chamber pressure makes sqrt(y3) non-finite, which the step
/// control treats as a rejected state.
inline void valve_rhs(Real, std::span<const Real> y, std::span<const Real> p, std::span<Real> dy) {
    const Real kappa = p[0], delta = p[1], beta = p[2], q = p[3];
    dy[0] = y[1];
    dy[1] = -kappa * y[1] - (y[0] + delta) + y[2];
    dy[2] = beta * (q - y[0] * std::sqrt(y[2]));
}

/// Newtonian impact law applied when the valve body reaches the seat
/// (event index 1, the y1 = 0 surface): the displacement snaps to the seat,
/// the velocity reverses scaled by the restitution coefficient, and the
/// chamber pressure is untouched.
inline void valve_impact_action(Index event_index, Real, std::span<Real> y,
                                std::span<const Real> p) {
    if (event_index == 1) {
        y[0] = 0.0;
        y[1] = -p[4] * y[1];
    }
}

/// Valve system with two events: F0 = y2 stops the run at the next local
/// maximum of the displacement (the Poincare section of the autonomous
/// system), F1 = y1 fires the impact law and continues. Two accessories
/// track the running max and min of y1.
class ValveSystem : public HookDefaults {
public:
    explicit ValveSystem(Real event_tolerance = 1e-6,
                         OdeControls ode = OdeControls::uniform(3, 1e-10, 1e-10))
        : tol_(event_tolerance), ode_(std::move(ode)) {}

    SystemDims dims() const { return {3, ValveParams::count, 2, 2}; }
    OdeControls ode_controls() const { return ode_; }
    EventControls event_controls() const {
        return EventControls{.direction = {-1, -1},
                             .tolerance = {tol_, tol_},
                             .stop_condition = {1, 0},
                             .max_steps_in_zone = 50};
    }
    void ode_rhs(Real t, std::span<const Real> y, std::span<const Real> p, std::span<Real> dy) const {
        valve_rhs(t, y, p, dy);
    }
    void event_values(Real, std::span<const Real> y, std::span<const Real>, std::span<Real> f) const {
        f[0] = y[1];
        f[1] = y[0];
    }
    void event_action(Index event_index, Index, Real t, std::span<Real> y,
                      std::span<const Real> p) const {
        valve_impact_action(event_index, t, y, p);
    }
    void initialize(Real, std::span<Real>, std::span<Real> y, std::span<const Real>,
                    std::span<Real> acc) const {
        acc[0] = y[0];
        acc[1] = y[0];
    }
    void ordinary_accessory(Real, std::span<const Real> y, std::span<const Real>,
                            std::span<Real> acc) const {
        acc[0] = std::max(acc[0], y[0]);
        acc[1] = std::min(acc[1], y[0]);
    }

private:
    Real tol_;
    OdeControls ode_;
};

} // namespace odensemble::models

#endif
