#ifndef ODENSEMBLE_SYSTEM_HPP
#define ODENSEMBLE_SYSTEM_HPP

#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "odensemble/pool.hpp"
#include "odensemble/types.hpp"

namespace odensemble {

/// Error-control knobs of the adaptive stepper. Ignored by RK4 except that
/// non-finite states still abort.
struct OdeControls {
    std::vector<Real> rel_tol; // per component, length N_sys
    std::vector<Real> abs_tol; // per component, length N_sys
    Real max_step = 1.0e6;
    Real min_step = 1.0e-12;
    Real step_grow_limit = 5.0;   // max factor for an accepted step
    Real step_shrink_limit = 0.1; // min factor for a rejected step

    static OdeControls uniform(Index system_dim, Real rel, Real abs) {
        OdeControls c;
        c.rel_tol.assign(static_cast<std::size_t>(system_dim), rel);
        c.abs_tol.assign(static_cast<std::size_t>(system_dim), abs);
        return c;
    }
};

/// Per-event detection controls plus the shared equilibrium timeout.
struct EventControls {
    std::vector<int> direction;        // -1: falling only, +1: rising only, 0: both
    std::vector<Real> tolerance;       // zone half-width, in event-function units
    std::vector<Index> stop_condition; // detection count that stops the run; 0 = never
    Index max_steps_in_zone = 50;      // consecutive in-zone steps before equilibrium stop
};

// clang-format off
/// The hook bundle a user supplies to describe one ODE system family.
/// Every hook sees only its own system's slices and must be pure apart from
/// the declared mutations, so disjoint systems can run concurrently.
template <typename D>
concept SystemModel = requires(const D& d, Real t,
                               std::span<const Real> y, std::span<const Real> p,
                               std::span<Real> out, std::span<Real> my,
                               std::span<Real> td, std::span<Real> acc,
                               Index ei, Index ec) {
    { d.dims() } -> std::convertible_to<SystemDims>;
    { d.ode_rhs(t, y, p, out) } -> std::same_as<void>;
    { d.ode_controls() } -> std::convertible_to<OdeControls>;
    { d.event_values(t, y, p, out) } -> std::same_as<void>;
    { d.event_controls() } -> std::convertible_to<EventControls>;
    { d.event_action(ei, ec, t, my, p) } -> std::same_as<void>;
    { d.ordinary_accessory(t, y, p, acc) } -> std::same_as<void>;
    { d.event_accessory(ei, ec, t, y, p, acc) } -> std::same_as<void>;
    { d.initialize(t, td, my, p, acc) } -> std::same_as<void>;
    { d.finalize(t, td, my, p, acc) } -> std::same_as<void>;
};
// clang-format on

/// No-op implementations of every optional hook. Deriving from this, a model
/// only spells out the hooks it actually uses.
struct HookDefaults {
    void event_values(Real, std::span<const Real>, std::span<const Real>, std::span<Real>) const {}
    EventControls event_controls() const { return {}; }
    void event_action(Index, Index, Real, std::span<Real>, std::span<const Real>) const {}
    void ordinary_accessory(Real, std::span<const Real>, std::span<const Real>, std::span<Real>) const {}
    void event_accessory(Index, Index, Real, std::span<const Real>, std::span<const Real>, std::span<Real>) const {}
    void initialize(Real, std::span<Real>, std::span<Real>, std::span<const Real>, std::span<Real>) const {}
    void finalize(Real, std::span<Real>, std::span<Real>, std::span<const Real>, std::span<Real>) const {}
};

namespace detail {

// Sentinel bit pattern used to detect output components a hook failed to
// write during validation probes.
inline Real probe_sentinel() {
    return std::bit_cast<Real>(std::uint64_t{0x7ff8dead0badf00dULL});
}

inline bool is_sentinel(Real v) {
    return std::bit_cast<std::uint64_t>(v) == std::uint64_t{0x7ff8dead0badf00dULL};
}

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument("validate_definition: " + msg);
}

} // namespace detail

/// Checks a definition against its declared dimensions and control
/// invariants. The output-length checks probe ode_rhs / event_values at the
/// supplied state and verify that exactly the declared number of components
/// was written (a guard slot past the end must stay untouched).
template <SystemModel D>
void validate_definition(const D& def, Real probe_t, std::span<const Real> probe_state,
                         std::span<const Real> probe_params) {
    using detail::require;
    const SystemDims dims = def.dims();
    require(dims.system_dim >= 1, "system_dim must be >= 1");
    require(dims.param_count >= 0 && dims.event_count >= 0 && dims.accessory_count >= 0,
            "negative dimension");
    require(std::ssize(probe_state) == dims.system_dim, "probe state length != system_dim");
    require(std::ssize(probe_params) == dims.param_count, "probe params length != param_count");

    const auto probe = [&](auto&& hook, Index declared, const char* name) {
        std::vector<Real> buf(static_cast<std::size_t>(declared) + 1, detail::probe_sentinel());
        hook(std::span<Real>(buf.data(), static_cast<std::size_t>(declared)));
        for (Index i = 0; i < declared; ++i)
            require(!detail::is_sentinel(buf[static_cast<std::size_t>(i)]),
                    std::string(name) + " wrote fewer than " + std::to_string(declared) +
                        " components (component " + std::to_string(i) + " untouched)");
        require(detail::is_sentinel(buf.back()), std::string(name) + " wrote past its output span");
    };

    probe([&](std::span<Real> out) { def.ode_rhs(probe_t, probe_state, probe_params, out); },
          dims.system_dim, "ode_rhs");
    if (dims.event_count > 0)
        probe([&](std::span<Real> out) { def.event_values(probe_t, probe_state, probe_params, out); },
              dims.event_count, "event_values");

    const OdeControls ode = def.ode_controls();
    require(std::ssize(ode.rel_tol) == dims.system_dim, "rel_tol length != system_dim");
    require(std::ssize(ode.abs_tol) == dims.system_dim, "abs_tol length != system_dim");
    for (Real v : ode.rel_tol) require(std::isfinite(v) && v > 0, "rel_tol entries must be finite and > 0");
    for (Real v : ode.abs_tol) require(std::isfinite(v) && v > 0, "abs_tol entries must be finite and > 0");
    require(std::isfinite(ode.min_step) && ode.min_step > 0, "min_step must be finite and > 0");
    require(std::isfinite(ode.max_step) && ode.max_step > 0, "max_step must be finite and > 0");
    require(ode.min_step <= ode.max_step, "min_step > max_step");
    require(std::isfinite(ode.step_grow_limit) && ode.step_grow_limit > 1, "step_grow_limit must be > 1");
    require(std::isfinite(ode.step_shrink_limit) && ode.step_shrink_limit > 0 && ode.step_shrink_limit < 1,
            "step_shrink_limit must be in (0, 1)");

    const EventControls ev = def.event_controls();
    require(std::ssize(ev.direction) == dims.event_count, "direction list length != event_count");
    require(std::ssize(ev.tolerance) == dims.event_count, "tolerance list length != event_count");
    require(std::ssize(ev.stop_condition) == dims.event_count, "stop_condition list length != event_count");
    for (int d : ev.direction) require(d == -1 || d == 0 || d == 1, "event direction must be -1, 0 or +1");
    for (Real v : ev.tolerance) require(std::isfinite(v) && v > 0, "event tolerance must be finite and > 0");
    for (Index s : ev.stop_condition) require(s >= 0, "event stop_condition must be >= 0");
    require(ev.max_steps_in_zone >= 1, "max_steps_in_zone must be >= 1");
}

} // namespace odensemble

#endif
