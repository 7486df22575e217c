#include <cstdio>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "odensemble/scan.hpp"

namespace {

using namespace odensemble;

struct CommonFlags {
    std::string output;
};

void add_range_flags(CLI::App* cmd, const std::string& name, scan::ParamRange& range,
                     const std::string& unit, bool with_scale = false) {
    cmd->add_option("--" + name + "-min", range.min, name + " lower bound " + unit);
    cmd->add_option("--" + name + "-max", range.max, name + " upper bound " + unit);
    cmd->add_option("--" + name + "-res", range.res, "number of " + name + " values")
        ->check(CLI::PositiveNumber);
    if (with_scale) {
        static const std::map<std::string, scan::Scale> scales{{"lin", scan::Scale::Linear},
                                                               {"log", scan::Scale::Log}};
        cmd->add_option("--" + name + "-scale", range.scale, name + " spacing (lin|log)")
            ->transform(CLI::CheckedTransformer(scales, CLI::ignore_case));
    }
}

void add_solver_flags(CLI::App* cmd, scan::SolveOptions& opt, std::string& output) {
    static const std::map<std::string, Algorithm> algorithms{{"rk4", Algorithm::RK4},
                                                             {"rkck45", Algorithm::RKCK45}};
    cmd->add_option("--solver", opt.algorithm, "integration scheme (rk4|rkck45)")
        ->transform(CLI::CheckedTransformer(algorithms, CLI::ignore_case));
    cmd->add_option("--dt", opt.dt, "initial time step (fixed step for rk4)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--rel-tol", opt.rel_tol, "relative tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--abs-tol", opt.abs_tol, "absolute tolerance")->check(CLI::PositiveNumber);
    cmd->add_option("--event-tol", opt.event_tol, "event zone half-width")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--workers", opt.workers,
                    "worker threads (0 = hardware; ODENSEMBLE_WORKERS overrides)");
    cmd->add_option("--tile-size", opt.tile_size, "systems per work unit")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--systems", opt.batch_capacity,
                    "systems per solver batch (0 = whole pool at once)");
    cmd->add_option("--output", output, "output data file")->required();
}

int finish(const scan::ScanResult& result, const std::string& output) {
    const auto& d = result.diagnostics;
    std::fprintf(stderr,
                 "wrote %zu rows to %s | detections %lld (outside zone %lld, secant failures %lld)"
                 " | nonfinite systems %lld\n",
                 result.rows.size(), output.c_str(), static_cast<long long>(d.detections),
                 static_cast<long long>(d.detections_outside_zone),
                 static_cast<long long>(d.secant_failures),
                 static_cast<long long>(d.nonfinite_systems));
    return d.nonfinite_systems > 0 ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Batch solver for large pools of independent ODE systems: bifurcation, "
                 "Lyapunov, bubble-collapse and valve-impact scans"};
    app.require_subcommand(1);

    scan::DuffingScanSpec duffing;
    scan::DuffingScanSpec lyapunov;
    lyapunov.saved = 256;
    scan::BubbleScanSpec bubble;
    scan::ValveScanSpec valve;

    const auto add_duffing_flags = [&](CLI::App* cmd, scan::DuffingScanSpec& spec) {
        add_range_flags(cmd, "k", spec.k, "(damping)");
        cmd->add_option("--b", spec.forcing_amplitude, "forcing amplitude B")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--delta", spec.stiffness, "stiffness delta");
        cmd->add_option("--omega", spec.forcing_omega, "forcing angular frequency")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--ic", spec.ic, "initial condition y1 y2")->expected(2);
        cmd->add_option("--transient", spec.transient, "iterations discarded as transient");
        cmd->add_option("--save", spec.saved, "iterations saved after the transient")
            ->check(CLI::PositiveNumber);
        add_solver_flags(cmd, spec.solver, spec.output);
    };

    auto* cmd_poincare = app.add_subcommand(
        "duffing-poincare", "Poincare sections of the Duffing oscillator over a damping sweep");
    add_duffing_flags(cmd_poincare, duffing);

    auto* cmd_max_acc = app.add_subcommand(
        "duffing-max-acc", "per-iteration maxima of y1 recorded by the running-max accessory");
    auto* cmd_max_event = app.add_subcommand(
        "duffing-max-event", "per-iteration maxima of y1 located by event handling");
    scan::DuffingScanSpec max_acc = duffing, max_event = duffing;
    add_duffing_flags(cmd_max_acc, max_acc);
    add_duffing_flags(cmd_max_event, max_event);

    auto* cmd_lyapunov = app.add_subcommand(
        "duffing-lyapunov", "largest Lyapunov exponent over the damping sweep");
    add_duffing_flags(cmd_lyapunov, lyapunov);

    auto* cmd_bubble = app.add_subcommand(
        "bubble-scan", "bubble collapse strength over the dual-frequency excitation grid");
    add_range_flags(cmd_bubble, "pa1", bubble.pa1_bar, "[bar]", true);
    add_range_flags(cmd_bubble, "pa2", bubble.pa2_bar, "[bar]", true);
    add_range_flags(cmd_bubble, "f1", bubble.f1_khz, "[kHz]", true);
    add_range_flags(cmd_bubble, "f2", bubble.f2_khz, "[kHz]", true);
    cmd_bubble->add_option("--re", bubble.material.R_E, "equilibrium bubble radius [m]")
        ->check(CLI::PositiveNumber);
    cmd_bubble->add_option("--theta", bubble.material.theta, "phase shift [rad]");
    cmd_bubble->add_option("--t-end", bubble.t_end, "time-domain end (events stop earlier)");
    cmd_bubble->add_option("--transient", bubble.transient, "collapses discarded as transient");
    cmd_bubble->add_option("--save", bubble.saved, "collapses saved after the transient")
        ->check(CLI::PositiveNumber);
    add_solver_flags(cmd_bubble, bubble.solver, bubble.output);

    auto* cmd_valve = app.add_subcommand(
        "valve-scan", "valve position extrema and impact dynamics over the flow-rate sweep");
    add_range_flags(cmd_valve, "q", valve.q, "(flow rate)");
    cmd_valve->add_option("--kappa", valve.kappa, "damping coefficient");
    cmd_valve->add_option("--delta", valve.delta, "precompression");
    cmd_valve->add_option("--beta", valve.beta, "compressibility");
    cmd_valve->add_option("--restitution", valve.restitution, "coefficient of restitution")
        ->check(CLI::Range(0.0, 1.0));
    cmd_valve->add_option("--ic", valve.ic, "initial condition y1 y2 y3")->expected(3);
    cmd_valve->add_option("--t-end", valve.t_end, "time-domain end (events stop earlier)");
    cmd_valve->add_option("--transient", valve.transient, "iterations discarded as transient");
    cmd_valve->add_option("--save", valve.saved, "iterations saved after the transient")
        ->check(CLI::PositiveNumber);
    add_solver_flags(cmd_valve, valve.solver, valve.output);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (cmd_poincare->parsed())
            return finish(scan::run_duffing_poincare(duffing), duffing.output);
        if (cmd_max_acc->parsed())
            return finish(scan::run_duffing_maxima(max_acc, scan::MaximaMode::Accessory),
                          max_acc.output);
        if (cmd_max_event->parsed())
            return finish(scan::run_duffing_maxima(max_event, scan::MaximaMode::Event),
                          max_event.output);
        if (cmd_lyapunov->parsed())
            return finish(scan::run_duffing_lyapunov(lyapunov), lyapunov.output);
        if (cmd_bubble->parsed()) return finish(scan::run_bubble_scan(bubble), bubble.output);
        if (cmd_valve->parsed()) return finish(scan::run_valve_scan(valve), valve.output);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
