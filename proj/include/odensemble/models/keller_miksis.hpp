#ifndef ODENSEMBLE_MODELS_KELLER_MIKSIS_HPP
#define ODENSEMBLE_MODELS_KELLER_MIKSIS_HPP

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>

#include "odensemble/system.hpp"
#include "odensemble/types.hpp"

namespace odensemble::models {

/// Physical description of a dual-frequency driven spherical gas bubble.
/// Defaults are liquid water at ambient conditions with a 10 micron bubble.
struct BubblePhysical {
    Real pa1 = 0;       // pressure amplitude 1 [Pa]
    Real pa2 = 0;       // pressure amplitude 2 [Pa]
    Real omega1 = 0;    // angular frequency 1 [rad/s]
    Real omega2 = 0;    // angular frequency 2 [rad/s]
    Real theta = 0;     // phase shift [rad]
    Real R_E = 10e-6;   // equilibrium bubble radius [m]
    Real c_L = 1497.3;  // liquid sound speed [m/s]
    Real rho_L = 997.1; // liquid density [kg/m^3]
    Real P_inf = 1.0e5; // static ambient pressure [Pa]
    Real p_V = 3166.8;  // vapour pressure [Pa]
    Real sigma = 0.072; // surface tension [N/m]
    Real mu_L = 8.902e-4; // dynamic viscosity [Pa s]
    Real gamma = 1.4;   // polytropic exponent
};

/// The thirteen precomputed parameters of the dimensionless bubble model.
/// By construction C0 = C2 + C3, C7 = 2*pi*C9*C5 and C8 = 2*pi*C9*C6.
struct BubbleCoefficients {
    std::array<Real, 13> c{};

    static constexpr Index count = 13;

    Real operator[](std::size_t i) const { return c[i]; }
    void write(std::span<Real> p) const {
        for (std::size_t i = 0; i < c.size(); ++i) p[i] = c[i];
    }
};

inline BubbleCoefficients bubble_coefficients(const BubblePhysical& phys) {
    if (!(phys.omega1 > 0)) throw std::invalid_argument("bubble_coefficients: omega1 must be > 0");
    if (!(phys.R_E > 0)) throw std::invalid_argument("bubble_coefficients: R_E must be > 0");
    if (!(phys.gamma > 1)) throw std::invalid_argument("bubble_coefficients: gamma must be > 1");
    if (!(phys.rho_L > 0) || !(phys.c_L > 0))
        throw std::invalid_argument("bubble_coefficients: invalid material constants");

    constexpr Real two_pi = 2.0 * std::numbers::pi_v<Real>;
    const Real w = phys.R_E * phys.omega1;     // velocity scale R_E*omega1
    const Real S = two_pi / w;                 // (2*pi / (R_E*omega1))
    const Real G = S * S / phys.rho_L;         // shared pressure-to-C factor
    const Real A = phys.P_inf - phys.p_V;      // static pressure head
    const Real B = 2.0 * phys.sigma / phys.R_E;

    BubbleCoefficients out;
    auto& c = out.c;
    c[0] = (A + B) * G;
    c[1] = (1.0 - 3.0 * phys.gamma) * (A + B) * S / (phys.rho_L * phys.c_L);
    c[2] = A * G;
    c[3] = B * G;
    c[4] = 4.0 * phys.mu_L / (phys.rho_L * phys.R_E * phys.R_E) * (two_pi / phys.omega1);
    c[5] = phys.pa1 * G;
    c[6] = phys.pa2 * G;
    c[7] = (w / phys.c_L) * c[5];
    c[8] = (w / phys.c_L) * c[6];
    c[9] = w / (two_pi * phys.c_L);
    c[10] = 3.0 * phys.gamma;
    c[11] = phys.omega2 / phys.omega1;
    c[12] = phys.theta;
    return out;
}

/// Dimensionless Keller-Miksis right-hand side; y1 is the radius relative to
/// R_E, tau is time in forcing periods. A nonpositive radius is a physical
/// breakdown and yields non-finite derivatives for the step control to catch.
inline void keller_miksis_rhs(Real tau, std::span<const Real> y, std::span<const Real> c,
                              std::span<Real> dy) {
    const Real y1 = y[0], y2 = y[1];
    if (!(y1 > 0)) {
        dy[0] = std::numeric_limits<Real>::quiet_NaN();
        dy[1] = std::numeric_limits<Real>::quiet_NaN();
        return;
    }
    constexpr Real two_pi = 2.0 * std::numbers::pi_v<Real>;
    const Real arg1 = two_pi * tau;
    const Real arg2 = two_pi * c[11] * tau + c[12];

    const Real numerator =
        (c[0] + c[1] * y2) * std::pow(1.0 / y1, c[10]) - c[2] * (1.0 + c[9] * y2) - c[3] / y1 -
        c[4] * y2 / y1 - (1.0 - c[9] * y2 / 3.0) * 1.5 * y2 * y2 -
        (c[5] * std::sin(arg1) + c[6] * std::sin(arg2)) * (1.0 + c[9] * y2) -
        y1 * (c[7] * std::cos(arg1) + c[8] * std::cos(arg2));
    const Real denominator = y1 - c[9] * y1 * y2 + c[4] * c[9];

    dy[0] = y2;
    dy[1] = numerator / denominator;
}

/// Plain dimensionless bubble system, no events or accessories.
class KellerMiksisSystem : public HookDefaults {
public:
    explicit KellerMiksisSystem(OdeControls ode = OdeControls::uniform(2, 1e-10, 1e-10))
        : ode_(std::move(ode)) {}

    SystemDims dims() const { return {2, BubbleCoefficients::count, 0, 0}; }
    OdeControls ode_controls() const { return ode_; }
    void ode_rhs(Real t, std::span<const Real> y, std::span<const Real> p, std::span<Real> dy) const {
        keller_miksis_rhs(t, y, p, dy);
    }

private:
    OdeControls ode_;
};

/// Collapse-resolving bubble system: each solve runs from one local radius
/// maximum to the next (event F = y2, falling, stop at the first detection),
/// while four accessories record tau_max, y1_max, tau_min, y1_min of the
/// collapse. finalize moves t0 to the stop time so iterated solves stay
/// phase-continuous under quasiperiodic forcing.
class BubbleCollapseSystem : public HookDefaults {
public:
    explicit BubbleCollapseSystem(Real event_tolerance = 1e-6,
                                  OdeControls ode = OdeControls::uniform(2, 1e-10, 1e-10))
        : tol_(event_tolerance), ode_(std::move(ode)) {}

    SystemDims dims() const { return {2, BubbleCoefficients::count, 1, 4}; }
    OdeControls ode_controls() const { return ode_; }
    EventControls event_controls() const {
        return EventControls{.direction = {-1}, .tolerance = {tol_}, .stop_condition = {1}};
    }
    void ode_rhs(Real t, std::span<const Real> y, std::span<const Real> p, std::span<Real> dy) const {
        keller_miksis_rhs(t, y, p, dy);
    }
    void event_values(Real, std::span<const Real> y, std::span<const Real>, std::span<Real> f) const {
        f[0] = y[1];
    }
    void initialize(Real t, std::span<Real>, std::span<Real> y, std::span<const Real>,
                    std::span<Real> acc) const {
        acc[0] = t;    // tau_max: the run starts at a maximum
        acc[1] = y[0]; // y1_max
        acc[2] = t;    // tau_min
        acc[3] = y[0]; // y1_min
    }
    void ordinary_accessory(Real t, std::span<const Real> y, std::span<const Real>,
                            std::span<Real> acc) const {
        if (y[0] < acc[3]) {
            acc[3] = y[0];
            acc[2] = t;
        }
    }
    void finalize(Real t, std::span<Real> time_domain, std::span<Real>, std::span<const Real>,
                  std::span<Real>) const {
        time_domain[0] = t;
    }

private:
    Real tol_;
    OdeControls ode_;
};

} // namespace odensemble::models

#endif
