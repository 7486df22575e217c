#ifndef ODENSEMBLE_SOLVE_HPP
#define ODENSEMBLE_SOLVE_HPP

#include <atomic>
#include <exception>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "odensemble/batch.hpp"
#include "odensemble/driver.hpp"
#include "odensemble/parallel.hpp"
#include "odensemble/system.hpp"

namespace odensemble {

namespace detail {

/// Per-worker buffers: one system's gathered slices plus the driver scratch.
struct WorkerState {
    std::vector<Real> td, y, p, acc;
    DriverWorkspace ws;

    void resize(const BatchDims& d) {
        td.resize(2);
        y.resize(static_cast<std::size_t>(d.system_dim));
        p.resize(static_cast<std::size_t>(d.param_count));
        acc.resize(static_cast<std::size_t>(d.accessory_count));
    }
};

} // namespace detail

/// Per-system observer no-ops; real observers take (system index, ...).
struct NoBatchStepObserver {
    void operator()(Index, Real, std::span<const Real>) const {}
};
struct NoBatchDetectionObserver {
    void operator()(Index, const Detection&, std::span<const Real>, std::span<const Real>) const {}
};

/// Observer bundle forwarded to integrate_system per system. Callbacks run
/// concurrently from worker threads on disjoint systems, so they must be
/// thread-safe. The defaults compile down to nothing.
template <typename StepObs = NoBatchStepObserver, typename DetObs = NoBatchDetectionObserver>
struct SolveObservers {
    StepObs on_step{};
    DetObs on_detection{};
};

/// Integrates every system of the batch independently over its own time
/// domain, in parallel over index tiles. Results land in place; each
/// system's outcome is recorded. A system that previously ended in
/// NonFiniteAbort stays aborted until fresh data is copied over it.
///
/// Workers claim tiles dynamically, but every system's arithmetic depends
/// only on its own data, so the result arrays are bitwise independent of
/// worker_count and tile_size.
template <SystemModel D, typename StepObs = NoBatchStepObserver,
          typename DetObs = NoBatchDetectionObserver>
void solve(SolverBatch& batch, const D& def, const SolverConfig& cfg,
           SolveObservers<StepObs, DetObs> observers = {}) {
    const BatchDims& dims = batch.dims();
    const SystemDims sys = def.dims();
    if (sys.system_dim != dims.system_dim || sys.param_count != dims.param_count ||
        sys.event_count != dims.event_count || sys.accessory_count != dims.accessory_count)
        throw std::invalid_argument("solve: definition and batch dimensions disagree");
    if (cfg.initial_time_step <= 0) throw std::invalid_argument("solve: initial_time_step must be > 0");
    if (cfg.tile_size < 1) throw std::invalid_argument("solve: tile_size must be >= 1");

    // Shared read-only data is materialized once per solve.
    const OdeControls ode = def.ode_controls();
    const EventControls ev = def.event_controls();
    if (cfg.algorithm != Algorithm::RK4 && cfg.initial_time_step > ode.max_step)
        throw std::invalid_argument("solve: initial_time_step exceeds max_step");

    for (Index i = 0; i < batch.size(); ++i)
        if (batch.time_end(i) < batch.time_start(i))
            throw std::invalid_argument("solve: system " + std::to_string(i) + " has t1 < t0");

    const auto tiles = partition(batch.size(), cfg.tile_size);
    const Index workers =
        std::min(resolve_worker_count(cfg.worker_count), static_cast<Index>(tiles.size()));

    std::atomic<std::size_t> next_tile{0};
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};

    const auto run_worker = [&]() {
        detail::WorkerState w;
        w.resize(dims);
        try {
            for (;;) {
                const std::size_t tile = next_tile.fetch_add(1);
                if (tile >= tiles.size() || failed.load(std::memory_order_relaxed)) break;
                for (Index idx = tiles[tile].first; idx < tiles[tile].second; ++idx) {
                    if (batch.outcomes()[static_cast<std::size_t>(idx)].reason ==
                        StopReason::NonFiniteAbort)
                        continue; // sticky failure from an earlier solve
                    batch.gather_system(idx, w.td, w.y, w.p, w.acc);
                    const auto outcome = integrate_system(
                        def, std::span<Real>(w.td), std::span<Real>(w.y), std::span<const Real>(w.p),
                        std::span<Real>(w.acc), cfg, ode, ev, w.ws,
                        [&](Real t, std::span<const Real> y) { observers.on_step(idx, t, y); },
                        [&](const Detection& det, std::span<const Real> y,
                            std::span<const Real> y_after) {
                            observers.on_detection(idx, det, y, y_after);
                        });
                    batch.scatter_system(idx, w.td, w.y, w.acc);
                    batch.outcomes()[static_cast<std::size_t>(idx)] = outcome;
                }
            }
        } catch (...) {
            if (!failed.exchange(true)) first_error = std::current_exception();
        }
    };

    if (workers <= 1) {
        run_worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (Index i = 0; i < workers; ++i) pool.emplace_back(run_worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
}

/// Repeats solve(), feeding each solve's endpoints in as the next initial
/// state (they already sit in the batch arrays), and hands the batch to the
/// sink after every iteration: sink(iteration_index, batch).
template <SystemModel D, typename Sink, typename StepObs = NoBatchStepObserver,
          typename DetObs = NoBatchDetectionObserver>
void solve_iteratively(SolverBatch& batch, const D& def, const SolverConfig& cfg, Index iterations,
                       Sink&& sink, SolveObservers<StepObs, DetObs> observers = {}) {
    if (iterations < 1) throw std::invalid_argument("solve_iteratively: iterations must be >= 1");
    for (Index i = 0; i < iterations; ++i) {
        solve(batch, def, cfg, observers);
        sink(i, const_cast<const SolverBatch&>(batch));
    }
}

} // namespace odensemble

#endif
