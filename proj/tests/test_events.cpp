#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "odensemble/driver.hpp"
#include "odensemble/events.hpp"
#include "odensemble/models/duffing.hpp"
#include "odensemble/models/valve.hpp"

using namespace odensemble;

namespace {

// y' = slope with a single event on y - level.
struct RampDef : HookDefaults {
    Real slope = 1.0;
    Real level = 0.0;
    int direction = 0;
    Index stop = 0;
    Real tol = 1e-6;
    Index max_zone_steps = 50;

    SystemDims dims() const { return {1, 0, 1, 0}; }
    OdeControls ode_controls() const { return OdeControls::uniform(1, 1e-9, 1e-9); }
    EventControls event_controls() const {
        return {.direction = {direction},
                .tolerance = {tol},
                .stop_condition = {stop},
                .max_steps_in_zone = max_zone_steps};
    }
    void ode_rhs(Real, std::span<const Real>, std::span<const Real>, std::span<Real> dy) const {
        dy[0] = slope;
    }
    void event_values(Real, std::span<const Real> y, std::span<const Real>, std::span<Real> f) const {
        f[0] = y[0] - level;
    }
};

// y' = -y: decays into the event zone around y = 0 and stays there.
struct DecayDef : HookDefaults {
    SystemDims dims() const { return {1, 0, 1, 0}; }
    OdeControls ode_controls() const { return OdeControls::uniform(1, 1e-9, 1e-9); }
    EventControls event_controls() const {
        return {.direction = {0}, .tolerance = {1e-6}, .stop_condition = {0}, .max_steps_in_zone = 50};
    }
    void ode_rhs(Real, std::span<const Real> y, std::span<const Real>, std::span<Real> dy) const {
        dy[0] = -y[0];
    }
    void event_values(Real, std::span<const Real> y, std::span<const Real>, std::span<Real> f) const {
        f[0] = y[0];
    }
};

struct SeatContactDef : HookDefaults {
    SystemDims dims() const { return {3, 5, 1, 0}; }
    OdeControls ode_controls() const { return OdeControls::uniform(3, 1e-10, 1e-10); }
    EventControls event_controls() const {
        return {.direction = {-1}, .tolerance = {1e-6}, .stop_condition = {1}};
    }
    void ode_rhs(Real t, std::span<const Real> y, std::span<const Real> p, std::span<Real> dy) const {
        models::valve_rhs(t, y, p, dy);
    }
    void event_values(Real, std::span<const Real> y, std::span<const Real>, std::span<Real> f) const {
        f[0] = y[0]; // seat contact
    }
};

} // namespace

TEST_CASE("zone_of on boundaries, signs and non-finite values") {
    CHECK(*zone_of(0.0, 1e-6) == Zone::Inside);
    CHECK(*zone_of(1e-6, 1e-6) == Zone::Inside); // boundary inclusive
    CHECK(*zone_of(-1e-6, 1e-6) == Zone::Inside);
    CHECK(*zone_of(-2e-6, 1e-6) == Zone::Below);
    CHECK(*zone_of(2e-6, 1e-6) == Zone::Above);
    CHECK(!zone_of(std::numeric_limits<Real>::quiet_NaN(), 1e-6).has_value());
    CHECK(!zone_of(std::numeric_limits<Real>::infinity(), 1e-6).has_value());
}

TEST_CASE("classify_transition covers the detection configurations") {
    using K = DetectionKind;
    const auto normal = EventPhase::Normal;
    const auto leaving = EventPhase::Leaving;

    // Full crossing, falling.
    CHECK(*classify_transition(Zone::Above, Zone::Below, -1, normal) == K::SteppedAcross);
    CHECK(*classify_transition(Zone::Above, Zone::Below, 0, normal) == K::SteppedAcross);
    CHECK(!classify_transition(Zone::Above, Zone::Below, +1, normal).has_value());

    // Full crossing, rising.
    CHECK(*classify_transition(Zone::Below, Zone::Above, +1, normal) == K::SteppedAcross);
    CHECK(*classify_transition(Zone::Below, Zone::Above, 0, normal) == K::SteppedAcross);
    CHECK(!classify_transition(Zone::Below, Zone::Above, -1, normal).has_value());

    // Landing inside the zone is an immediate detection from the allowed side.
    CHECK(*classify_transition(Zone::Above, Zone::Inside, -1, normal) == K::EnteredFromAbove);
    CHECK(*classify_transition(Zone::Above, Zone::Inside, 0, normal) == K::EnteredFromAbove);
    CHECK(!classify_transition(Zone::Above, Zone::Inside, +1, normal).has_value());
    CHECK(*classify_transition(Zone::Below, Zone::Inside, +1, normal) == K::EnteredFromBelow);
    CHECK(*classify_transition(Zone::Below, Zone::Inside, 0, normal) == K::EnteredFromBelow);
    CHECK(!classify_transition(Zone::Below, Zone::Inside, -1, normal).has_value());

    // No detection while leaving, whatever happens.
    CHECK(!classify_transition(Zone::Above, Zone::Below, 0, leaving).has_value());
    CHECK(!classify_transition(Zone::Above, Zone::Inside, -1, leaving).has_value());

    // Staying on one side is never a detection.
    CHECK(!classify_transition(Zone::Above, Zone::Above, 0, normal).has_value());
    CHECK(!classify_transition(Zone::Below, Zone::Below, 0, normal).has_value());
}

TEST_CASE("secant locates a linearly crossed event in one update") {
    RampDef def; // y(t) = y0 + t, event at y = level
    def.level = 0.35;
    StepResult step;
    RkScratch rk;
    const Real y0[] = {0.0};
    const Real h = 1.0;

    // Endpoint state for theta = h enters as the starting best.
    Real y_best[] = {1.0};
    Real f_scratch[1];
    const auto res = locate_secant(def, Algorithm::RKCK45, 0.0, std::span<const Real>(y0), {}, h, 0,
                                   /*f_at_start=*/-0.35, /*f_at_end=*/0.65, 1e-9, step, rk,
                                   std::span<Real>(f_scratch), std::span<Real>(y_best));
    CHECK(res.converged);
    CHECK(res.iterations == 1); // secant is exact on linear event functions
    CHECK(res.theta == doctest::Approx(0.35).epsilon(1e-12));
    CHECK(std::abs(res.value) <= 1e-9);
    CHECK(y_best[0] == doctest::Approx(0.35).epsilon(1e-12));
}

TEST_CASE("secant matches a bisection oracle on the valve's ballistic fall") {
    // Fall onto the seat: start above with negative velocity so y1 crosses
    // zero within the step.
    SeatContactDef def;
    const Real p[] = {1.25, 10.0, 20.0, 0.3, 0.8};
    const Real y0[] = {0.5, -2.0, 10.0};
    const Real h = 0.4;

    StepResult step;
    RkScratch rk;

    // Endpoint of the full step.
    take_step(Algorithm::RKCK45, def, 0.0, h, std::span<const Real>(y0), std::span<const Real>(p),
              step, rk);
    Real f_end[1];
    def.event_values(h, step.proposed_state, std::span<const Real>(p), std::span<Real>(f_end));
    REQUIRE(f_end[0] < 0); // crossed the seat

    // Locate at a 1e-9 tolerance: |F| <= 1e-9 over a slope |y2| ~ 2 pins
    // theta to within ~5e-10 of the root.
    std::vector<Real> y_best = step.proposed_state;
    Real f_scratch[1];
    const auto res = locate_secant(def, Algorithm::RKCK45, 0.0, std::span<const Real>(y0),
                                   std::span<const Real>(p), h, 0, y0[0], f_end[0], 1e-9, step, rk,
                                   std::span<Real>(f_scratch), std::span<Real>(y_best));
    CHECK(res.converged);
    CHECK(std::abs(res.value) <= 1e-9);

    // Bisection on the same re-stepping function, driven to 1e-12.
    StepResult bstep;
    RkScratch brk;
    const auto f_of_theta = [&](Real theta) {
        take_step(Algorithm::RKCK45, def, 0.0, theta, std::span<const Real>(y0),
                  std::span<const Real>(p), bstep, brk);
        Real f[1];
        def.event_values(theta, bstep.proposed_state, std::span<const Real>(p), std::span<Real>(f));
        return f[0];
    };
    Real lo = 0.0, hi = h;
    while (hi - lo > 1e-12) {
        const Real mid = 0.5 * (lo + hi);
        if (f_of_theta(mid) > 0)
            lo = mid;
        else
            hi = mid;
    }
    const Real theta_star = 0.5 * (lo + hi);
    CHECK(std::abs(res.theta - theta_star) <= 1e-9);
}

TEST_CASE("stop condition 1 terminates at the first detection") {
    RampDef def;
    def.level = 0.5;
    def.direction = +1;
    def.stop = 1;
    Real td[] = {0.0, 10.0};
    Real y[] = {0.0};
    const auto outcome =
        integrate_system(def, std::span<Real>(td), std::span<Real>(y), {}, {}, SolverConfig{});
    CHECK(outcome.reason == StopReason::EventStop);
    CHECK(outcome.final_t == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(std::abs(y[0] - 0.5) <= 1e-6);
    CHECK(outcome.event_detections == 1);
}

TEST_CASE("trajectory trapped in a zone triggers the equilibrium timeout") {
    DecayDef def; // converges to y = 0, inside the zone
    Real td[] = {0.0, 1e6};
    Real y[] = {1.0};
    const auto outcome =
        integrate_system(def, std::span<Real>(td), std::span<Real>(y), {}, {}, SolverConfig{});
    CHECK(outcome.reason == StopReason::EquilibriumStop);
    CHECK(std::abs(y[0]) <= 1e-6);
    // One detection on first entering the zone, then trapped.
    CHECK(outcome.event_detections == 1);
}

TEST_CASE("initial condition inside a zone is not detected at t0") {
    RampDef def; // y starts exactly on the event surface, then leaves upward
    def.level = 0.0;
    def.direction = 0;
    def.stop = 1;
    Real td[] = {0.0, 2.0};
    Real y[] = {0.0};
    const auto outcome =
        integrate_system(def, std::span<Real>(td), std::span<Real>(y), {}, {}, SolverConfig{});
    // Leaves the zone and never returns: no detection, runs to the end.
    CHECK(outcome.reason == StopReason::ReachedEndTime);
    CHECK(outcome.event_detections == 0);
    CHECK(outcome.final_t == 2.0);
}

TEST_CASE("a single crossing is counted exactly once") {
    RampDef def;
    def.slope = -1.0;
    def.level = 0.0;
    def.direction = 0;
    def.stop = 0;
    Real td[] = {0.0, 3.0};
    Real y[] = {1.0};
    const auto outcome =
        integrate_system(def, std::span<Real>(td), std::span<Real>(y), {}, {}, SolverConfig{});
    CHECK(outcome.reason == StopReason::ReachedEndTime);
    CHECK(outcome.event_detections == 1);
}

TEST_CASE("wrong-direction crossings are ignored") {
    RampDef def; // rising ramp, but only falling crossings requested
    def.level = 0.5;
    def.direction = -1;
    def.stop = 1;
    Real td[] = {0.0, 2.0};
    Real y[] = {0.0};
    const auto outcome =
        integrate_system(def, std::span<Real>(td), std::span<Real>(y), {}, {}, SolverConfig{});
    CHECK(outcome.reason == StopReason::ReachedEndTime);
    CHECK(outcome.event_detections == 0);
}

TEST_CASE("detections respect the tolerance at the located point") {
    // Duffing local maximum: the located point satisfies |y2| <= 1e-6.
    models::DuffingMaxEventSystem def(1e-6, 1);
    Real td[] = {0.0, 100.0};
    Real y[] = {0.1, 0.4};
    const Real p[] = {0.2, 0.3, 1.0, 1.0};
    Real acc[] = {0.0, 0.0};

    DriverWorkspace ws;
    Real max_residual = 0.0;
    Index count = 0;
    const auto outcome = integrate_system(
        def, std::span<Real>(td), std::span<Real>(y), std::span<const Real>(p), std::span<Real>(acc),
        SolverConfig{}, def.ode_controls(), def.event_controls(), ws, NoStepObserver{},
        [&](const Detection& det, std::span<const Real>, std::span<const Real>) {
            ++count;
            max_residual = std::max(max_residual, std::abs(det.value));
            CHECK(det.in_zone);
        });
    CHECK(outcome.reason == StopReason::EventStop);
    CHECK(count == 1);
    CHECK(max_residual <= 1e-6);
    CHECK(std::abs(y[1]) <= 1e-6); // stopped at a local maximum of y1
    CHECK(outcome.secant_failures == 0);
}
