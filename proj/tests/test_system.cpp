#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "odensemble/driver.hpp"
#include "odensemble/models/duffing.hpp"
#include "odensemble/models/valve.hpp"
#include "odensemble/system.hpp"

using namespace odensemble;

namespace {

// Deliberately broken definition: declares two events but writes only one value.
struct ShortEventDef : HookDefaults {
    SystemDims dims() const { return {2, 0, 2, 0}; }
    OdeControls ode_controls() const { return OdeControls::uniform(2, 1e-9, 1e-9); }
    EventControls event_controls() const {
        return {.direction = {0, 0}, .tolerance = {1e-6, 1e-6}, .stop_condition = {0, 0}};
    }
    void ode_rhs(Real, std::span<const Real>, std::span<const Real>, std::span<Real> dy) const {
        dy[0] = 0;
        dy[1] = 0;
    }
    void event_values(Real, std::span<const Real> y, std::span<const Real>, std::span<Real> f) const {
        f[0] = y[0]; // f[1] forgotten
    }
};

struct ControlsDef : HookDefaults {
    OdeControls ode;
    SystemDims dims() const { return {1, 0, 0, 0}; }
    OdeControls ode_controls() const { return ode; }
    void ode_rhs(Real, std::span<const Real>, std::span<const Real>, std::span<Real> dy) const {
        dy[0] = 0;
    }
};

} // namespace

TEST_CASE("well-formed definitions validate") {
    models::DuffingSystem duffing;
    const Real y0[] = {0.0, 0.0};
    const Real p0[] = {0.2, 0.3, 1.0, 1.0};
    CHECK_NOTHROW(validate_definition(duffing, 0.0, std::span<const Real>(y0), std::span<const Real>(p0)));

    models::ValveSystem valve;
    const Real yv[] = {0.2, 0.0, 10.2};
    const Real pv[] = {1.25, 10.0, 20.0, 0.3, 0.8};
    CHECK_NOTHROW(validate_definition(valve, 0.0, std::span<const Real>(yv), std::span<const Real>(pv)));
}

TEST_CASE("event_values writing fewer components than declared is rejected") {
    ShortEventDef def;
    const Real y0[] = {1.0, 2.0};
    CHECK_THROWS_WITH_AS(validate_definition(def, 0.0, std::span<const Real>(y0), {}),
                         doctest::Contains("event_values"), std::invalid_argument);
}

TEST_CASE("control invariants are enforced") {
    const Real y0[] = {0.0};
    {
        ControlsDef def;
        def.ode = OdeControls::uniform(1, 1e-9, 1e-9);
        CHECK_NOTHROW(validate_definition(def, 0.0, std::span<const Real>(y0), {}));
    }
    auto check_rejected = [&](auto&& mutate) {
        ControlsDef bad;
        bad.ode = OdeControls::uniform(1, 1e-9, 1e-9);
        mutate(bad.ode);
        CHECK_THROWS_AS(validate_definition(bad, 0.0, std::span<const Real>(y0), {}),
                        std::invalid_argument);
    };
    check_rejected([](OdeControls& c) { c.min_step = 2.0 * c.max_step; });
    check_rejected([](OdeControls& c) { c.abs_tol[0] = 0.0; });
    check_rejected([](OdeControls& c) { c.rel_tol[0] = std::numeric_limits<Real>::quiet_NaN(); });
    check_rejected([](OdeControls& c) { c.step_grow_limit = 1.0; });
    check_rejected([](OdeControls& c) { c.step_shrink_limit = 1.5; });
    check_rejected([](OdeControls& c) { c.rel_tol.push_back(1e-9); });
}

TEST_CASE("hook purity: identical inputs give identical outputs") {
    models::DuffingSystem def;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<Real> dist(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        const Real y[] = {dist(rng), dist(rng)};
        const Real p[] = {dist(rng), std::abs(dist(rng)) + 0.1, dist(rng), std::abs(dist(rng)) + 0.1};
        const Real t = dist(rng);
        Real a[2], b[2];
        def.ode_rhs(t, std::span<const Real>(y), std::span<const Real>(p), std::span<Real>(a));
        def.ode_rhs(t, std::span<const Real>(y), std::span<const Real>(p), std::span<Real>(b));
        CHECK(a[0] == b[0]);
        CHECK(a[1] == b[1]);
    }
}

TEST_CASE("no-op hooks leave state and accessories bitwise unchanged") {
    // Same dynamics with and without (empty) accessory plumbing.
    struct PlainDef : HookDefaults {
        SystemDims dims() const { return {2, 4, 0, 0}; }
        OdeControls ode_controls() const { return OdeControls::uniform(2, 1e-9, 1e-9); }
        void ode_rhs(Real t, std::span<const Real> y, std::span<const Real> p, std::span<Real> dy) const {
            models::duffing_rhs(t, y, p, dy);
        }
    };
    struct NoopHookDef : PlainDef {
        SystemDims dims() const { return {2, 4, 0, 2}; }
        void initialize(Real, std::span<Real>, std::span<Real>, std::span<const Real>,
                        std::span<Real>) const {}
        void finalize(Real, std::span<Real>, std::span<Real>, std::span<const Real>,
                      std::span<Real>) const {}
        void ordinary_accessory(Real, std::span<const Real>, std::span<const Real>,
                                std::span<Real>) const {}
    };

    const SolverConfig cfg{Algorithm::RKCK45, 1e-3, 64, 1};
    Real td_a[] = {0.0, 6.0}, td_b[] = {0.0, 6.0};
    Real ya[] = {0.1, 0.2}, yb[] = {0.1, 0.2};
    const Real p[] = {0.2, 0.3, 1.0, 1.0};
    Real acc[] = {4.25, -3.5};

    PlainDef plain;
    NoopHookDef hooks;
    const auto oa = integrate_system(plain, std::span<Real>(td_a), std::span<Real>(ya),
                                     std::span<const Real>(p), {}, cfg);
    const auto ob = integrate_system(hooks, std::span<Real>(td_b), std::span<Real>(yb),
                                     std::span<const Real>(p), std::span<Real>(acc), cfg);

    CHECK(oa.reason == StopReason::ReachedEndTime);
    CHECK(ob.reason == StopReason::ReachedEndTime);
    CHECK(ya[0] == yb[0]);
    CHECK(ya[1] == yb[1]);
    CHECK(oa.accepted_steps == ob.accepted_steps);
    CHECK(acc[0] == 4.25);
    CHECK(acc[1] == -3.5);
}
