#ifndef ODENSEMBLE_STEPPERS_HPP
#define ODENSEMBLE_STEPPERS_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "odensemble/system.hpp"
#include "odensemble/types.hpp"

namespace odensemble {

/// Cash-Karp 5(4) tableau. Every coefficient is an exact rational rendered
/// once to double precision.
namespace cash_karp {

inline constexpr Real c2 = 1.0 / 5.0;
inline constexpr Real c3 = 3.0 / 10.0;
inline constexpr Real c4 = 3.0 / 5.0;
inline constexpr Real c5 = 1.0;
inline constexpr Real c6 = 7.0 / 8.0;

inline constexpr Real a21 = 1.0 / 5.0;
inline constexpr Real a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr Real a41 = 3.0 / 10.0, a42 = -9.0 / 10.0, a43 = 6.0 / 5.0;
inline constexpr Real a51 = -11.0 / 54.0, a52 = 5.0 / 2.0, a53 = -70.0 / 27.0, a54 = 35.0 / 27.0;
inline constexpr Real a61 = 1631.0 / 55296.0, a62 = 175.0 / 512.0, a63 = 575.0 / 13824.0,
                      a64 = 44275.0 / 110592.0, a65 = 253.0 / 4096.0;

// 5th order weights.
inline constexpr Real b1 = 37.0 / 378.0, b3 = 250.0 / 621.0, b4 = 125.0 / 594.0, b6 = 512.0 / 1771.0;
// Embedded 4th order weights.
inline constexpr Real e1 = 2825.0 / 27648.0, e3 = 18575.0 / 48384.0, e4 = 13525.0 / 55296.0,
                      e5 = 277.0 / 14336.0, e6 = 1.0 / 4.0;
// Error weights b - e, used to form y5 - y4 per component.
inline constexpr Real d1 = b1 - e1, d3 = b3 - e3, d4 = b4 - e4, d5 = -e5, d6 = b6 - e6;

} // namespace cash_karp

/// Outcome of one trial step: the proposed state, the embedded local error
/// estimate (zero for RK4) and whether anything came out non-finite.
struct StepResult {
    std::vector<Real> proposed_state;
    std::vector<Real> embedded_error;
    bool any_nonfinite = false;

    void resize(Index n) {
        proposed_state.assign(static_cast<std::size_t>(n), Real{0});
        embedded_error.assign(static_cast<std::size_t>(n), Real{0});
        any_nonfinite = false;
    }
};

/// Stage storage reused across steps.
struct RkScratch {
    std::vector<Real> k1, k2, k3, k4, k5, k6, ytmp;

    void resize(Index n) {
        const auto m = static_cast<std::size_t>(n);
        k1.resize(m);
        k2.resize(m);
        k3.resize(m);
        k4.resize(m);
        k5.resize(m);
        k6.resize(m);
        ytmp.resize(m);
    }
};

namespace detail {

inline bool all_finite(std::span<const Real> v) {
    for (Real x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace detail

/// Classical fixed-step RK4. embedded_error stays zero.
template <SystemModel D>
void rk4_step(const D& def, Real t, Real h, std::span<const Real> y, std::span<const Real> p,
              StepResult& out, RkScratch& ws) {
    const Index n = std::ssize(y);
    out.resize(n);
    ws.resize(n);
    const auto un = static_cast<std::size_t>(n);

    def.ode_rhs(t, y, p, std::span<Real>(ws.k1));
    for (std::size_t i = 0; i < un; ++i) ws.ytmp[i] = y[i] + 0.5 * h * ws.k1[i];
    def.ode_rhs(t + 0.5 * h, ws.ytmp, p, std::span<Real>(ws.k2));
    for (std::size_t i = 0; i < un; ++i) ws.ytmp[i] = y[i] + 0.5 * h * ws.k2[i];
    def.ode_rhs(t + 0.5 * h, ws.ytmp, p, std::span<Real>(ws.k3));
    for (std::size_t i = 0; i < un; ++i) ws.ytmp[i] = y[i] + h * ws.k3[i];
    def.ode_rhs(t + h, ws.ytmp, p, std::span<Real>(ws.k4));

    for (std::size_t i = 0; i < un; ++i)
        out.proposed_state[i] = y[i] + (h / 6.0) * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
    out.any_nonfinite = !detail::all_finite(out.proposed_state);
}

/// Cash-Karp embedded step: proposed_state is the 5th order solution,
/// embedded_error is |y5 - y4| per component.
template <SystemModel D>
void rkck45_step(const D& def, Real t, Real h, std::span<const Real> y, std::span<const Real> p,
                 StepResult& out, RkScratch& ws) {
    namespace ck = cash_karp;
    const Index n = std::ssize(y);
    out.resize(n);
    ws.resize(n);
    const auto un = static_cast<std::size_t>(n);

    def.ode_rhs(t, y, p, std::span<Real>(ws.k1));
    for (std::size_t i = 0; i < un; ++i) ws.ytmp[i] = y[i] + h * (ck::a21 * ws.k1[i]);
    def.ode_rhs(t + ck::c2 * h, ws.ytmp, p, std::span<Real>(ws.k2));
    for (std::size_t i = 0; i < un; ++i) ws.ytmp[i] = y[i] + h * (ck::a31 * ws.k1[i] + ck::a32 * ws.k2[i]);
    def.ode_rhs(t + ck::c3 * h, ws.ytmp, p, std::span<Real>(ws.k3));
    for (std::size_t i = 0; i < un; ++i)
        ws.ytmp[i] = y[i] + h * (ck::a41 * ws.k1[i] + ck::a42 * ws.k2[i] + ck::a43 * ws.k3[i]);
    def.ode_rhs(t + ck::c4 * h, ws.ytmp, p, std::span<Real>(ws.k4));
    for (std::size_t i = 0; i < un; ++i)
        ws.ytmp[i] = y[i] + h * (ck::a51 * ws.k1[i] + ck::a52 * ws.k2[i] + ck::a53 * ws.k3[i] +
                                 ck::a54 * ws.k4[i]);
    def.ode_rhs(t + ck::c5 * h, ws.ytmp, p, std::span<Real>(ws.k5));
    for (std::size_t i = 0; i < un; ++i)
        ws.ytmp[i] = y[i] + h * (ck::a61 * ws.k1[i] + ck::a62 * ws.k2[i] + ck::a63 * ws.k3[i] +
                                 ck::a64 * ws.k4[i] + ck::a65 * ws.k5[i]);
    def.ode_rhs(t + ck::c6 * h, ws.ytmp, p, std::span<Real>(ws.k6));

    for (std::size_t i = 0; i < un; ++i) {
        out.proposed_state[i] = y[i] + h * (ck::b1 * ws.k1[i] + ck::b3 * ws.k3[i] + ck::b4 * ws.k4[i] +
                                            ck::b6 * ws.k6[i]);
        out.embedded_error[i] = std::abs(h * (ck::d1 * ws.k1[i] + ck::d3 * ws.k3[i] + ck::d4 * ws.k4[i] +
                                              ck::d5 * ws.k5[i] + ck::d6 * ws.k6[i]));
    }
    out.any_nonfinite =
        !detail::all_finite(out.proposed_state) || !detail::all_finite(out.embedded_error);
}

/// Dispatch on the configured algorithm.
template <SystemModel D>
void take_step(Algorithm alg, const D& def, Real t, Real h, std::span<const Real> y,
               std::span<const Real> p, StepResult& out, RkScratch& ws) {
    if (alg == Algorithm::RK4)
        rk4_step(def, t, h, y, p, out, ws);
    else
        rkck45_step(def, t, h, y, p, out, ws);
}

/// Mixed-tolerance max-ratio error norm. The step is acceptable iff the
/// returned ratio is <= 1. The scale uses max(|y_old|, |y_new|) so a
/// component passing through zero is not measured against zero alone.
inline Real error_ratio(std::span<const Real> embedded_error, std::span<const Real> state_old,
                        std::span<const Real> state_new, const OdeControls& controls) {
    Real ratio = 0.0;
    for (std::size_t i = 0; i < embedded_error.size(); ++i) {
        const Real scale =
            controls.abs_tol[i] + controls.rel_tol[i] * std::max(std::abs(state_old[i]), std::abs(state_new[i]));
        ratio = std::max(ratio, embedded_error[i] / scale);
    }
    return ratio;
}

/// Accept/reject verdict plus the step size to try next.
struct StepDecision {
    bool accepted = false;
    Real next_step = 0.0;
    bool fatal = false; // non-finite state at the minimum step size
};

/// Standard embedded-RK controller: factor 0.9 * ratio^(-1/5), clamped by the
/// grow/shrink limits and then into [min_step, max_step]. A non-finite state
/// rejects outright; at the minimum step size, an accuracy rejection is
/// forced through while a non-finite state is fatal.
inline StepDecision control_step(Real ratio, Real h, const OdeControls& controls, bool nonfinite) {
    StepDecision d;
    if (nonfinite) {
        if (h <= controls.min_step) {
            d.fatal = true;
            d.next_step = controls.min_step;
            return d;
        }
        d.accepted = false;
        d.next_step = std::max(h * controls.step_shrink_limit, controls.min_step);
        return d;
    }
    d.accepted = ratio <= 1.0;
    Real factor = 0.9 * std::pow(ratio, -0.2); // ratio == 0 -> inf -> grow limit
    factor = std::clamp(factor, controls.step_shrink_limit, controls.step_grow_limit);
    d.next_step = std::clamp(h * factor, controls.min_step, controls.max_step);
    if (!d.accepted && h <= controls.min_step) {
        // Tolerances cannot be maintained; keep marching at the minimum step.
        d.accepted = true;
        d.next_step = controls.min_step;
    }
    return d;
}

} // namespace odensemble

#endif
