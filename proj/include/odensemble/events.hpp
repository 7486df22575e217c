#ifndef ODENSEMBLE_EVENTS_HPP
#define ODENSEMBLE_EVENTS_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "odensemble/steppers.hpp"
#include "odensemble/system.hpp"
#include "odensemble/types.hpp"

namespace odensemble {

/// Position of an event-function value relative to the tolerance zone, the
/// stripe |F| <= tolerance around the event surface F = 0 (boundary
/// inclusive). Non-finite values have no zone; detection is disabled for
/// that event until the value is finite again.
enum class Zone : std::uint8_t { Below, Inside, Above };

inline std::optional<Zone> zone_of(Real value, Real tolerance) {
    if (!std::isfinite(value)) return std::nullopt;
    if (std::abs(value) <= tolerance) return Zone::Inside;
    return value > 0 ? Zone::Above : Zone::Below;
}

/// How a detection step met the zone: stepped fully across it in one step
/// (needs secant location), or landed inside it coming from one side
/// (the landed point itself is the located point).
enum class DetectionKind : std::uint8_t { SteppedAcross, EnteredFromAbove, EnteredFromBelow };

/// Per-event arming state. Leaving means the last accepted point sits inside
/// the zone: the trajectory must exit before the event can fire again.
enum class EventPhase : std::uint8_t { Normal, Leaving };

/// One recorded event detection, at the point the trajectory was committed
/// to. in_zone reports whether |F| <= tolerance held there; secant failures
/// and multi-event steps can record detections outside the zone.
struct Detection {
    Index event_index = 0;
    DetectionKind kind = DetectionKind::SteppedAcross;
    Real t = 0;
    Real value = 0;  // event-function value at the recorded point
    Index counter = 0; // serial number of this detection (1-based)
    bool in_zone = false;
};

/// Detection rule for one event across one accepted step.
/// Detection is only possible from the Normal phase. A full crossing or a
/// zone entry fires when its orientation matches `direction` (-1 falling,
/// +1 rising, 0 both); entries from the direction-forbidden side re-arm via
/// the Leaving phase without firing.
inline std::optional<DetectionKind> classify_transition(Zone prev, Zone next, int direction,
                                                        EventPhase phase) {
    if (phase != EventPhase::Normal) return std::nullopt;
    if (prev == Zone::Above) {
        if (next == Zone::Below && direction <= 0) return DetectionKind::SteppedAcross;
        if (next == Zone::Inside && direction <= 0) return DetectionKind::EnteredFromAbove;
        return std::nullopt;
    }
    if (prev == Zone::Below) {
        if (next == Zone::Above && direction >= 0) return DetectionKind::SteppedAcross;
        if (next == Zone::Inside && direction >= 0) return DetectionKind::EnteredFromBelow;
        return std::nullopt;
    }
    // prev Inside with phase Normal does not occur: the phase update puts
    // every in-zone point into Leaving.
    return std::nullopt;
}

/// Per-system event detection state machine. The driver feeds it once per
/// accepted step in three stages: peek (choose the event to locate), commit
/// (record detections at the landed point), refresh (store the post-action
/// values and re-derive the phases).
class EventMachine {
public:
    void reset(Index n_events) {
        phase_.assign(static_cast<std::size_t>(n_events), EventPhase::Normal);
        prev_value_.assign(static_cast<std::size_t>(n_events), Real{0});
        counter_.assign(static_cast<std::size_t>(n_events), Index{0});
        steps_in_zone_ = 0;
    }

    Index event_count() const { return std::ssize(phase_); }
    EventPhase phase(Index i) const { return phase_[static_cast<std::size_t>(i)]; }
    Real prev_value(Index i) const { return prev_value_[static_cast<std::size_t>(i)]; }
    Index counter(Index i) const { return counter_[static_cast<std::size_t>(i)]; }
    Index steps_in_zone() const { return steps_in_zone_; }

    /// Arm the machine at the initial point. A start inside a zone begins in
    /// Leaving, so the event it sits on is not detected at t0.
    void init(std::span<const Real> values, const EventControls& ev) {
        for (Index i = 0; i < event_count(); ++i) {
            const auto ui = static_cast<std::size_t>(i);
            prev_value_[ui] = values[ui];
            const auto z = zone_of(values[ui], ev.tolerance[ui]);
            phase_[ui] = (z && *z == Zone::Inside) ? EventPhase::Leaving : EventPhase::Normal;
        }
        steps_in_zone_ = 0;
    }

    struct Peek {
        Index index = -1; // highest-index detected event, -1 if none
        bool needs_location = false;
    };

    /// Scan the step's endpoint values for detections without mutating
    /// anything. Only the highest-index detected event is located precisely,
    /// so only that one is reported.
    Peek peek(std::span<const Real> end_values, const EventControls& ev) const {
        Peek result;
        for (Index i = event_count() - 1; i >= 0; --i) {
            const auto ui = static_cast<std::size_t>(i);
            const auto prev = zone_of(prev_value_[ui], ev.tolerance[ui]);
            const auto next = zone_of(end_values[ui], ev.tolerance[ui]);
            if (!prev || !next) continue;
            const auto kind = classify_transition(*prev, *next, ev.direction[ui], phase_[ui]);
            if (kind) {
                result.index = i;
                result.needs_location = (*kind == DetectionKind::SteppedAcross);
                return result;
            }
        }
        return result;
    }

    /// Record detections against the landed (possibly secant-located) point
    /// and bump their counters. `forced_index` is the event chosen by peek;
    /// it is counted even if the landed values alone no longer classify it
    /// (a secant that stopped short of the zone). Other events are
    /// re-classified at the landed point: a detection whose crossing lies
    /// beyond a relocated landing simply fires on a later step.
    void commit(std::span<const Real> landed_values, Real t_landed, const EventControls& ev,
                Index forced_index, std::vector<Detection>& out) {
        out.clear();
        for (Index i = 0; i < event_count(); ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const Real value = landed_values[ui];
            std::optional<DetectionKind> kind;
            const auto prev = zone_of(prev_value_[ui], ev.tolerance[ui]);
            const auto next = zone_of(value, ev.tolerance[ui]);
            if (prev && next) kind = classify_transition(*prev, *next, ev.direction[ui], phase_[ui]);
            if (!kind && i != forced_index) continue;
            ++counter_[ui];
            out.push_back(Detection{
                .event_index = i,
                .kind = kind ? *kind : DetectionKind::SteppedAcross,
                .t = t_landed,
                .value = value,
                .counter = counter_[ui],
                .in_zone = std::isfinite(value) && std::abs(value) <= ev.tolerance[ui],
            });
        }
    }

    /// Store the step's final event values (after any event action mutated
    /// the state) and re-derive phases from zone membership. Also maintains
    /// the consecutive in-zone step count backing the equilibrium timeout.
    void refresh(std::span<const Real> post_values, const EventControls& ev) {
        bool any_inside = false;
        for (Index i = 0; i < event_count(); ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const auto z = zone_of(post_values[ui], ev.tolerance[ui]);
            if (!z) continue; // non-finite: keep the previous arming state
            prev_value_[ui] = post_values[ui];
            phase_[ui] = (*z == Zone::Inside) ? EventPhase::Leaving : EventPhase::Normal;
            any_inside = any_inside || (*z == Zone::Inside);
        }
        steps_in_zone_ = any_inside ? steps_in_zone_ + 1 : 0;
    }

private:
    std::vector<EventPhase> phase_;
    std::vector<Real> prev_value_;
    std::vector<Index> counter_;
    Index steps_in_zone_ = 0;
};

/// Result of the secant event location. theta is the located step length
/// from the last accepted point; converged reports whether |F| dropped
/// inside the zone within the iteration budget.
struct SecantResult {
    Real theta = 0;
    Real value = 0;
    bool converged = false;
    Index iterations = 0;
};

inline constexpr Index kMaxSecantIterations = 50;

/// Locates an event crossed by an accepted step. Iterates on a trial step
/// length theta in (0, h]: each trial re-steps the full scheme from the last
/// accepted point, evaluates the event function there and applies the secant
/// update to (theta, F(theta)). On non-convergence the best point seen is
/// returned with converged = false.
///
/// y_best must enter holding the step's endpoint state (theta = h) and exits
/// holding the state at the returned theta. f_scratch needs event_count slots.
template <SystemModel D>
SecantResult locate_secant(const D& def, Algorithm alg, Real t, std::span<const Real> y,
                           std::span<const Real> p, Real h, Index event_index, Real f_at_start,
                           Real f_at_end, Real tolerance, StepResult& step_out, RkScratch& rk,
                           std::span<Real> f_scratch, std::span<Real> y_best) {
    const auto ev = static_cast<std::size_t>(event_index);
    SecantResult best{h, f_at_end, false, 0};

    Real theta_prev = 0, f_prev = f_at_start;
    Real theta_cur = h, f_cur = f_at_end;
    const Real theta_min = h * 1e-12;

    for (Index it = 1; it <= kMaxSecantIterations; ++it) {
        const Real denom = f_cur - f_prev;
        if (denom == 0) break;
        Real theta = theta_cur - f_cur * (theta_cur - theta_prev) / denom;
        if (!std::isfinite(theta)) break;
        theta = std::clamp(theta, theta_min, h);
        if (theta == theta_cur) break;

        take_step(alg, def, t, theta, y, p, step_out, rk);
        def.event_values(t + theta, step_out.proposed_state, p, f_scratch);
        const Real f = f_scratch[ev];
        if (!std::isfinite(f)) break;

        if (std::abs(f) < std::abs(best.value)) {
            best.theta = theta;
            best.value = f;
            best.iterations = it;
            std::copy(step_out.proposed_state.begin(), step_out.proposed_state.end(), y_best.begin());
        }
        if (std::abs(f) <= tolerance) {
            best.converged = true;
            break;
        }
        theta_prev = theta_cur;
        f_prev = f_cur;
        theta_cur = theta;
        f_cur = f;
    }
    return best;
}

} // namespace odensemble

#endif
