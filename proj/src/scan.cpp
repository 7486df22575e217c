#include "odensemble/scan.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "odensemble/models/duffing.hpp"
#include "odensemble/models/valve.hpp"
#include "odensemble/pool.hpp"
#include "odensemble/solve.hpp"

namespace odensemble::scan {

std::vector<Real> ParamRange::values() const {
    if (res < 1) throw std::invalid_argument("ParamRange: res must be >= 1");
    if (res == 1) return {min};
    if (scale == Scale::Log && (!(min > 0) || !(max > 0)))
        throw std::invalid_argument("ParamRange: log scale requires positive bounds");
    std::vector<Real> out(static_cast<std::size_t>(res));
    for (Index i = 0; i < res; ++i) {
        if (i == 0) {
            out[0] = min;
        } else if (i == res - 1) {
            out[static_cast<std::size_t>(i)] = max;
        } else if (scale == Scale::Linear) {
            out[static_cast<std::size_t>(i)] =
                min + static_cast<Real>(i) * (max - min) / static_cast<Real>(res - 1);
        } else {
            out[static_cast<std::size_t>(i)] =
                min * std::exp(static_cast<Real>(i) * std::log(max / min) / static_cast<Real>(res - 1));
        }
    }
    return out;
}

namespace {

constexpr Real kTwoPi = 2.0 * std::numbers::pi_v<Real>;

/// Thread-safe tally of detections plus per-iteration outcome bookkeeping.
struct DiagCollector {
    ScanDiagnostics diag;
    std::vector<Real> tolerances;
    std::mutex mu;

    explicit DiagCollector(const EventControls& ev) : tolerances(ev.tolerance) {}

    auto detection_observer() {
        return [this](Index, const Detection& det, std::span<const Real>, std::span<const Real>) {
            const Real tol = tolerances[static_cast<std::size_t>(det.event_index)];
            const Real ratio = std::isfinite(det.value) ? std::abs(det.value) / tol
                                                        : std::numeric_limits<Real>::infinity();
            std::lock_guard lock(mu);
            ++diag.detections;
            if (!det.in_zone) ++diag.detections_outside_zone;
            diag.max_residual_ratio = std::max(diag.max_residual_ratio, ratio);
        };
    }

    void tally_iteration(const SolverBatch& batch) {
        for (const SystemOutcome& o : batch.outcomes()) {
            ++diag.reason_counts[static_cast<std::size_t>(o.reason)];
            diag.secant_failures += o.secant_failures;
        }
    }

    void tally_chunk_end(const SolverBatch& batch) {
        for (const SystemOutcome& o : batch.outcomes())
            if (o.reason == StopReason::NonFiniteAbort) ++diag.nonfinite_systems;
    }
};

SolverConfig to_config(const SolveOptions& opt) {
    return SolverConfig{opt.algorithm, opt.dt, opt.tile_size, opt.workers};
}

bool aborted(const SolverBatch& batch, Index s) {
    return batch.outcomes()[static_cast<std::size_t>(s)].reason == StopReason::NonFiniteAbort;
}

/// Runs the pool through the solver in batch-sized chunks, iterating each
/// chunk `iterations` times. on_iteration(start, count, iter, batch) fires
/// after every iteration, on_chunk_done(start, count, batch) when a chunk
/// finishes all iterations.
template <SystemModel D, typename OnIter, typename OnChunkDone>
void run_chunks(const D& def, const ProblemPool& pool, const SolveOptions& opt, Index iterations,
                DiagCollector& collector, OnIter&& on_iteration, OnChunkDone&& on_chunk_done) {
    const Index n_pool = pool.size();
    const Index cap = opt.batch_capacity > 0 ? std::min(opt.batch_capacity, n_pool) : n_pool;
    const SolverConfig cfg = to_config(opt);

    auto det_obs = collector.detection_observer();
    SolveObservers<NoBatchStepObserver, decltype(det_obs)> observers{{}, det_obs};

    for (Index start = 0; start < n_pool; start += cap) {
        const Index count = std::min(cap, n_pool - start);
        SolverBatch batch(make_batch_dims(count, def.dims()));
        linear_set(batch, pool, LinearCopySpec{0, start, count, CopyMode::All});
        solve_iteratively(
            batch, def, cfg, iterations,
            [&](Index iter, const SolverBatch& b) {
                collector.tally_iteration(b);
                on_iteration(start, count, iter, b);
            },
            observers);
        collector.tally_chunk_end(batch);
        on_chunk_done(start, count, batch);
    }
}

Real status_of(const SolverBatch& batch, Index s) { return aborted(batch, s) ? 1.0 : 0.0; }

void maybe_emit(const ScanResult& result, const std::string& path) {
    if (!path.empty()) emit_rows(path, result.columns, result.rows);
}

void fill_duffing_pool(ProblemPool& pool, const DuffingScanSpec& spec, const std::vector<Real>& ks,
                       Index system_dim) {
    const Real period = kTwoPi / spec.forcing_omega;
    for (Index i = 0; i < pool.size(); ++i) {
        pool.time_start(i) = 0.0;
        pool.time_end(i) = period;
        pool.state_at(i, 0) = spec.ic[0];
        pool.state_at(i, 1) = spec.ic[1];
        if (system_dim == 4) {
            pool.state_at(i, 2) = 1.0; // linearized radius
            pool.state_at(i, 3) = 0.0; // linearized angle
        }
        models::DuffingParams p{ks[static_cast<std::size_t>(i)], spec.forcing_amplitude,
                                spec.stiffness, spec.forcing_omega};
        p.validate();
        for (Index c = 0; c < models::DuffingParams::count; ++c) pool.param_at(i, c) = 0;
        std::array<Real, models::DuffingParams::count> buf{};
        p.write(buf);
        for (Index c = 0; c < models::DuffingParams::count; ++c)
            pool.param_at(i, c) = buf[static_cast<std::size_t>(c)];
    }
}

} // namespace

ScanResult run_duffing_poincare(const DuffingScanSpec& spec) {
    const auto ks = spec.k.values();
    ProblemPool pool(PoolDims{std::ssize(ks), 2, models::DuffingParams::count, 0});
    fill_duffing_pool(pool, spec, ks, 2);

    models::DuffingSystem def(OdeControls::uniform(2, spec.solver.rel_tol, spec.solver.abs_tol));
    DiagCollector collector(def.event_controls());

    ScanResult result;
    result.columns = {"k", "B", "y1", "y2", "status"};
    run_chunks(
        def, pool, spec.solver, spec.transient + spec.saved, collector,
        [&](Index start, Index count, Index iter, const SolverBatch& batch) {
            if (iter < spec.transient) return;
            for (Index s = 0; s < count; ++s)
                result.rows.push_back({ks[static_cast<std::size_t>(start + s)],
                                       spec.forcing_amplitude, batch.state_at(s, 0),
                                       batch.state_at(s, 1), status_of(batch, s)});
        },
        [](Index, Index, const SolverBatch&) {});

    result.diagnostics = collector.diag;
    maybe_emit(result, spec.output);
    return result;
}

ScanResult run_duffing_maxima(const DuffingScanSpec& spec, MaximaMode mode) {
    const auto ks = spec.k.values();
    ProblemPool pool(PoolDims{std::ssize(ks), 2, models::DuffingParams::count, 2});
    fill_duffing_pool(pool, spec, ks, 2);

    const OdeControls ode = OdeControls::uniform(2, spec.solver.rel_tol, spec.solver.abs_tol);

    ScanResult result;
    result.columns = {"k", "y1_max", "status"};
    const auto collect = [&](auto& def) {
        DiagCollector collector(def.event_controls());
        run_chunks(
            def, pool, spec.solver, spec.transient + spec.saved, collector,
            [&](Index start, Index count, Index iter, const SolverBatch& batch) {
                if (iter < spec.transient) return;
                for (Index s = 0; s < count; ++s)
                    result.rows.push_back({ks[static_cast<std::size_t>(start + s)],
                                           batch.accessory_at(s, 0), status_of(batch, s)});
            },
            [](Index, Index, const SolverBatch&) {});
        result.diagnostics = collector.diag;
    };

    if (mode == MaximaMode::Accessory) {
        models::DuffingMaxAccessorySystem def(ode);
        collect(def);
    } else {
        models::DuffingMaxEventSystem def(spec.solver.event_tol, 0, ode);
        collect(def);
    }
    maybe_emit(result, spec.output);
    return result;
}

ScanResult run_duffing_lyapunov(const DuffingScanSpec& spec) {
    const auto ks = spec.k.values();
    const Real period = kTwoPi / spec.forcing_omega;
    ProblemPool pool(PoolDims{std::ssize(ks), 4, models::DuffingParams::count, 1});
    fill_duffing_pool(pool, spec, ks, 4);

    models::DuffingLyapunovSystem def(
        OdeControls::uniform(4, spec.solver.rel_tol, spec.solver.abs_tol));
    DiagCollector collector(def.event_controls());

    ScanResult result;
    result.columns = {"k", "lambda_max", "status"};
    std::vector<std::vector<Real>> samples;
    run_chunks(
        def, pool, spec.solver, spec.transient + spec.saved, collector,
        [&](Index, Index count, Index iter, const SolverBatch& batch) {
            if (iter == 0) samples.assign(static_cast<std::size_t>(count), {});
            if (iter < spec.transient) return;
            for (Index s = 0; s < count; ++s)
                if (!aborted(batch, s))
                    samples[static_cast<std::size_t>(s)].push_back(batch.accessory_at(s, 0));
        },
        [&](Index start, Index count, const SolverBatch& batch) {
            for (Index s = 0; s < count; ++s) {
                const auto& sys_samples = samples[static_cast<std::size_t>(s)];
                Real lambda = 0;
                Real status = status_of(batch, s);
                bool valid = !sys_samples.empty();
                for (Real v : sys_samples) valid = valid && v > 0 && std::isfinite(v);
                if (valid)
                    lambda = models::lyapunov_accumulate(sys_samples, period);
                else
                    status = 1.0;
                result.rows.push_back({ks[static_cast<std::size_t>(start + s)], lambda, status});
            }
        });

    result.diagnostics = collector.diag;
    maybe_emit(result, spec.output);
    return result;
}

ScanResult run_bubble_scan(const BubbleScanSpec& spec) {
    const auto pa1s = spec.pa1_bar.values();
    const auto pa2s = spec.pa2_bar.values();
    const auto f1s = spec.f1_khz.values();
    const auto f2s = spec.f2_khz.values();

    struct GridPoint {
        Real pa1, pa2, w1, w2;
    };
    std::vector<GridPoint> grid;
    grid.reserve(pa1s.size() * pa2s.size() * f1s.size() * f2s.size());
    for (Real pa1 : pa1s)
        for (Real pa2 : pa2s)
            for (Real f1 : f1s)
                for (Real f2 : f2s)
                    grid.push_back({pa1 * 1e5, pa2 * 1e5, f1 * 1e3 * kTwoPi, f2 * 1e3 * kTwoPi});

    ProblemPool pool(PoolDims{std::ssize(grid), 2, models::BubbleCoefficients::count, 4});
    for (Index i = 0; i < pool.size(); ++i) {
        const GridPoint& g = grid[static_cast<std::size_t>(i)];
        models::BubblePhysical phys = spec.material;
        phys.pa1 = g.pa1;
        phys.pa2 = g.pa2;
        phys.omega1 = g.w1;
        phys.omega2 = g.w2;
        const auto coeff = models::bubble_coefficients(phys);
        for (Index c = 0; c < models::BubbleCoefficients::count; ++c)
            pool.param_at(i, c) = coeff[static_cast<std::size_t>(c)];
        pool.time_start(i) = 0.0;
        pool.time_end(i) = spec.t_end;
        pool.state_at(i, 0) = spec.ic[0];
        pool.state_at(i, 1) = spec.ic[1];
    }

    models::BubbleCollapseSystem def(
        spec.solver.event_tol, OdeControls::uniform(2, spec.solver.rel_tol, spec.solver.abs_tol));
    DiagCollector collector(def.event_controls());

    ScanResult result;
    result.columns = {"omega1_radps", "omega2_radps", "pa1_pa", "pa2_pa", "y_exp", "status"};
    std::vector<Real> yexp_max;
    std::vector<Real> prev_start;
    run_chunks(
        def, pool, spec.solver, spec.transient + spec.saved, collector,
        [&](Index start, Index count, Index iter, const SolverBatch& batch) {
            if (iter == 0) {
                yexp_max.assign(static_cast<std::size_t>(count),
                                -std::numeric_limits<Real>::infinity());
                prev_start.assign(static_cast<std::size_t>(count), 0.0);
                for (Index s = 0; s < count; ++s)
                    prev_start[static_cast<std::size_t>(s)] = pool.time_start(start + s);
            }
            for (Index s = 0; s < count; ++s) {
                if (aborted(batch, s)) continue;
                // finalize moved t0 to the stop time; it must strictly advance
                const Real t0 = batch.time_start(s);
                if (!(t0 > prev_start[static_cast<std::size_t>(s)]))
                    collector.diag.start_times_strictly_increase = false;
                prev_start[static_cast<std::size_t>(s)] = t0;
                if (iter >= spec.transient) {
                    const Real yexp = batch.accessory_at(s, 1) - 1.0;
                    yexp_max[static_cast<std::size_t>(s)] =
                        std::max(yexp_max[static_cast<std::size_t>(s)], yexp);
                }
            }
        },
        [&](Index start, Index count, const SolverBatch& batch) {
            for (Index s = 0; s < count; ++s) {
                const GridPoint& g = grid[static_cast<std::size_t>(start + s)];
                Real yexp = yexp_max[static_cast<std::size_t>(s)];
                Real status = status_of(batch, s);
                if (!std::isfinite(yexp)) {
                    yexp = 0.0;
                    status = 1.0;
                }
                result.rows.push_back({g.w1, g.w2, g.pa1, g.pa2, yexp, status});
            }
        });

    result.diagnostics = collector.diag;
    maybe_emit(result, spec.output);
    return result;
}

ScanResult run_valve_scan(const ValveScanSpec& spec) {
    const auto qs = spec.q.values();
    ProblemPool pool(PoolDims{std::ssize(qs), 3, models::ValveParams::count, 2});
    const Real ic_pressure = std::isnan(spec.ic[2]) ? spec.delta + 0.2 : spec.ic[2];
    for (Index i = 0; i < pool.size(); ++i) {
        models::ValveParams p{spec.kappa, spec.delta, spec.beta, qs[static_cast<std::size_t>(i)],
                              spec.restitution};
        p.validate();
        std::array<Real, models::ValveParams::count> buf{};
        p.write(buf);
        for (Index c = 0; c < models::ValveParams::count; ++c)
            pool.param_at(i, c) = buf[static_cast<std::size_t>(c)];
        pool.time_start(i) = 0.0;
        pool.time_end(i) = spec.t_end;
        pool.state_at(i, 0) = spec.ic[0];
        pool.state_at(i, 1) = spec.ic[1];
        pool.state_at(i, 2) = ic_pressure;
    }

    models::ValveSystem def(spec.solver.event_tol,
                            OdeControls::uniform(3, spec.solver.rel_tol, spec.solver.abs_tol));
    DiagCollector collector(def.event_controls());

    ScanResult result;
    result.columns = {"q", "y1_max", "y1_min", "status"};
    run_chunks(
        def, pool, spec.solver, spec.transient + spec.saved, collector,
        [&](Index start, Index count, Index iter, const SolverBatch& batch) {
            if (iter < spec.transient) return;
            for (Index s = 0; s < count; ++s)
                result.rows.push_back({qs[static_cast<std::size_t>(start + s)],
                                       batch.accessory_at(s, 0), batch.accessory_at(s, 1),
                                       status_of(batch, s)});
        },
        [](Index, Index, const SolverBatch&) {});

    result.diagnostics = collector.diag;
    maybe_emit(result, spec.output);
    return result;
}

void emit_rows(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<Real>>& rows) {
    for (const auto& row : rows)
        if (row.size() != columns.size())
            throw std::invalid_argument("emit_rows: row width does not match header");

    std::ofstream file(path);
    if (!file) throw std::runtime_error("emit_rows: cannot open '" + path + "' for writing");

    file << "# ";
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) file << ',';
        file << columns[i];
    }
    file << '\n';

    char buf[32];
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) file << ',';
            std::snprintf(buf, sizeof(buf), "%.16e", row[i]);
            file << buf;
        }
        file << '\n';
    }
    if (!file) throw std::runtime_error("emit_rows: write to '" + path + "' failed");
}

} // namespace odensemble::scan
