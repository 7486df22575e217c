#ifndef ODENSEMBLE_DRIVER_HPP
#define ODENSEMBLE_DRIVER_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "odensemble/events.hpp"
#include "odensemble/steppers.hpp"
#include "odensemble/system.hpp"
#include "odensemble/types.hpp"

namespace odensemble {

enum class StopReason : std::uint8_t {
    ReachedEndTime,  // integrated to t1 (final step clipped to land exactly)
    EventStop,       // an event counter reached its stop condition
    EquilibriumStop, // too many consecutive accepted steps inside an event zone
    NonFiniteAbort   // non-finite state at the minimum step size
};

/// Run-time solver selection shared by every system of a batch.
struct SolverConfig {
    Algorithm algorithm = Algorithm::RKCK45;
    Real initial_time_step = 1e-3; // also the fixed step for RK4
    Index tile_size = 64;          // systems per parallel work unit
    Index worker_count = 1;        // overridable via ODENSEMBLE_WORKERS
};

/// Per-system termination record. Final state and accessories live in the
/// caller's arrays, which the integration mutates in place.
struct SystemOutcome {
    Real final_t = 0;
    StopReason reason = StopReason::ReachedEndTime;
    Index accepted_steps = 0;
    Index rejected_steps = 0;
    Index event_detections = 0; // total over all events
    Index secant_failures = 0;  // locations that never reached the zone
    Real smallest_step = std::numeric_limits<Real>::infinity(); // smallest accepted step
};

/// Reusable per-worker buffers for integrate_system.
struct DriverWorkspace {
    StepResult step;
    RkScratch rk;
    EventMachine machine;
    std::vector<Real> f_end, f_landed, f_post, f_secant;
    std::vector<Real> y_landed, y_pre_action;
    std::vector<Detection> detections;

    void resize(Index system_dim, Index event_count) {
        const auto ne = static_cast<std::size_t>(event_count);
        f_end.resize(ne);
        f_landed.resize(ne);
        f_post.resize(ne);
        f_secant.resize(ne);
        y_landed.resize(static_cast<std::size_t>(system_dim));
        y_pre_action.resize(static_cast<std::size_t>(system_dim));
    }
};

/// No-op observers; real ones are injected by tests and scan diagnostics.
struct NoStepObserver {
    void operator()(Real, std::span<const Real>) const {}
};
struct NoDetectionObserver {
    void operator()(const Detection&, std::span<const Real> /*state*/,
                    std::span<const Real> /*state_after_action*/) const {}
};

/// Integrates one system over its own time domain.
///
/// Call order at an accepted step: event machine update, event_action for
/// the located event, event_accessory for every detection, then
/// ordinary_accessory. initialize runs once before stepping (and may adjust
/// the time domain, state and accessories); finalize runs once at the end.
///
/// The detection observer receives each detection with the located state
/// before and after event_action; the step observer runs after the hooks of
/// every accepted step.
template <SystemModel D, typename StepObs = NoStepObserver, typename DetObs = NoDetectionObserver>
SystemOutcome integrate_system(const D& def, std::span<Real> time_domain, std::span<Real> state,
                               std::span<const Real> params, std::span<Real> accessories,
                               const SolverConfig& cfg, const OdeControls& ode,
                               const EventControls& ev, DriverWorkspace& ws,
                               StepObs&& on_step = {}, DetObs&& on_detection = {}) {
    const SystemDims dims = def.dims();
    const Index n_events = dims.event_count;
    ws.resize(dims.system_dim, n_events);
    ws.machine.reset(n_events);

    SystemOutcome outcome;

    def.initialize(time_domain[0], time_domain, state, params, accessories);
    Real t = time_domain[0];
    const Real t1 = time_domain[1];

    if (n_events > 0) {
        def.event_values(t, state, params, ws.f_end);
        ws.machine.init(ws.f_end, ev);
    }

    Real h = cfg.algorithm == Algorithm::RK4
                 ? cfg.initial_time_step
                 : std::clamp(cfg.initial_time_step, ode.min_step, ode.max_step);

    while (t < t1) {
        Real h_try = h;
        bool clipped = false;
        if (t + h_try >= t1) {
            h_try = t1 - t;
            clipped = true;
        }
        if (!(h_try > 0)) { // fp underflow of the remaining span
            t = t1;
            break;
        }

        take_step(cfg.algorithm, def, t, h_try, state, params, ws.step, ws.rk);

        StepDecision decision{true, h, false};
        if (cfg.algorithm == Algorithm::RK4) {
            if (ws.step.any_nonfinite) {
                outcome.reason = StopReason::NonFiniteAbort;
                break;
            }
        } else {
            const Real ratio = error_ratio(ws.step.embedded_error, state, ws.step.proposed_state, ode);
            decision = control_step(ratio, h_try, ode, ws.step.any_nonfinite);
            if (decision.fatal) {
                outcome.reason = StopReason::NonFiniteAbort;
                break;
            }
            if (!decision.accepted) {
                ++outcome.rejected_steps;
                h = decision.next_step;
                continue;
            }
        }

        // Accepted. Determine the landed point: the step endpoint, or the
        // secant-located event point, in which case the remainder of the
        // step is discarded.
        Real t_landed = clipped ? t1 : t + h_try;
        std::copy(ws.step.proposed_state.begin(), ws.step.proposed_state.end(), ws.y_landed.begin());
        Index located_index = -1;
        bool relocated = false;

        if (n_events > 0) {
            def.event_values(t_landed, ws.y_landed, params, ws.f_end);
            const auto peek = ws.machine.peek(ws.f_end, ev);
            located_index = peek.index;
            if (peek.index >= 0 && peek.needs_location) {
                const auto ui = static_cast<std::size_t>(peek.index);
                const auto located = locate_secant(def, cfg.algorithm, t, state, params, h_try,
                                                   peek.index, ws.machine.prev_value(peek.index),
                                                   ws.f_end[ui], ev.tolerance[ui], ws.step, ws.rk,
                                                   ws.f_secant, ws.y_landed);
                if (!located.converged) ++outcome.secant_failures;
                relocated = located.theta < h_try;
                t_landed = (clipped && !relocated) ? t1 : t + located.theta;
                def.event_values(t_landed, ws.y_landed, params, ws.f_landed);
            } else {
                std::copy(ws.f_end.begin(), ws.f_end.end(), ws.f_landed.begin());
            }
        }

        if (t_landed <= t) { // step underflow: time no longer advances
            outcome.reason = StopReason::NonFiniteAbort;
            break;
        }

        const Real advanced_by = t_landed - t;
        std::copy(ws.y_landed.begin(), ws.y_landed.end(), state.begin());
        t = t_landed;
        ++outcome.accepted_steps;
        outcome.smallest_step = std::min(outcome.smallest_step, advanced_by);

        bool event_stop = false;
        if (n_events > 0) {
            ws.machine.commit(ws.f_landed, t, ev, located_index, ws.detections);
            outcome.event_detections += std::ssize(ws.detections);

            constexpr bool observing =
                !std::is_same_v<std::remove_cvref_t<DetObs>, NoDetectionObserver>;
            if (observing && !ws.detections.empty())
                std::copy(state.begin(), state.end(), ws.y_pre_action.begin());

            if (located_index >= 0)
                def.event_action(located_index, ws.machine.counter(located_index), t, state, params);

            // Post-action values arm the machine for the next step and feed
            // the equilibrium timeout.
            if (located_index >= 0)
                def.event_values(t, state, params, ws.f_post);
            else
                std::copy(ws.f_landed.begin(), ws.f_landed.end(), ws.f_post.begin());
            ws.machine.refresh(ws.f_post, ev);

            for (const Detection& det : ws.detections)
                def.event_accessory(det.event_index, det.counter, t, state, params, accessories);
            if (observing)
                for (const Detection& det : ws.detections)
                    on_detection(det, ws.y_pre_action, state);

            for (const Detection& det : ws.detections) {
                const auto ui = static_cast<std::size_t>(det.event_index);
                if (ev.stop_condition[ui] != 0 && det.counter >= ev.stop_condition[ui])
                    event_stop = true;
            }
        }

        def.ordinary_accessory(t, state, params, accessories);
        on_step(t, state);

        if (event_stop) {
            outcome.reason = StopReason::EventStop;
            break;
        }
        if (n_events > 0 && ws.machine.steps_in_zone() >= ev.max_steps_in_zone) {
            outcome.reason = StopReason::EquilibriumStop;
            break;
        }

        if (cfg.algorithm == Algorithm::RKCK45 && !relocated) h = decision.next_step;
        // After an event relocation the step size is kept as it was.
    }

    def.finalize(t, time_domain, state, params, accessories);
    outcome.final_t = t;
    return outcome;
}

/// Convenience entry point owning its workspace; used by tests and small
/// single-system runs.
template <SystemModel D>
SystemOutcome integrate_system(const D& def, std::span<Real> time_domain, std::span<Real> state,
                               std::span<const Real> params, std::span<Real> accessories,
                               const SolverConfig& cfg) {
    DriverWorkspace ws;
    return integrate_system(def, time_domain, state, params, accessories, cfg, def.ode_controls(),
                            def.event_controls(), ws);
}

} // namespace odensemble

#endif
