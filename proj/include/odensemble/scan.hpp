#ifndef ODENSEMBLE_SCAN_HPP
#define ODENSEMBLE_SCAN_HPP

#include <array>
#include <limits>
#include <string>
#include <vector>

#include "odensemble/driver.hpp"
#include "odensemble/models/keller_miksis.hpp"
#include "odensemble/types.hpp"

namespace odensemble::scan {

enum class Scale { Linear, Log };

/// A scanned parameter axis. res = 1 yields just {min}.
struct ParamRange {
    Real min = 0;
    Real max = 0;
    Index res = 1;
    Scale scale = Scale::Linear;

    std::vector<Real> values() const;
};

/// Numerical settings shared by every scan subcommand.
struct SolveOptions {
    Algorithm algorithm = Algorithm::RKCK45;
    Real dt = 1e-3; // initial step (fixed step for RK4)
    Real rel_tol = 1e-9;
    Real abs_tol = 1e-9;
    Real event_tol = 1e-6;
    Index workers = 0;        // 0 = hardware concurrency; ODENSEMBLE_WORKERS overrides
    Index tile_size = 64;
    Index batch_capacity = 0; // 0 = solve the whole pool as one batch
};

/// What the scans observed while running; the scan output files carry only
/// the result columns, so acceptance checks read these instead.
struct ScanDiagnostics {
    Index detections = 0;
    Index detections_outside_zone = 0; // located points with |F| > tolerance
    Real max_residual_ratio = 0;       // max |F|/tolerance over detections
    Index secant_failures = 0;
    Index nonfinite_systems = 0;          // systems that ended in NonFiniteAbort
    std::array<Index, 4> reason_counts{}; // per-iteration outcomes, indexed by StopReason
    bool start_times_strictly_increase = true; // tracked by the bubble scan
};

/// Column names plus data rows; every row ends with a status column
/// (0 = clean, 1 = the system hit NonFiniteAbort at some iteration).
struct ScanResult {
    std::vector<std::string> columns;
    std::vector<std::vector<Real>> rows;
    ScanDiagnostics diagnostics;
};

struct DuffingScanSpec {
    ParamRange k{0.2, 0.3, 256, Scale::Linear};
    Real forcing_amplitude = 0.3;
    Real stiffness = 1.0;
    Real forcing_omega = 1.0;
    std::array<Real, 2> ic{0.0, 0.0};
    Index transient = 1024;
    Index saved = 32;
    SolveOptions solver{};
    std::string output; // empty = do not write a file
};

enum class MaximaMode { Accessory, Event };

struct BubbleScanSpec {
    // Amplitudes in bar and frequencies in kHz, matching how the scan is
    // usually quoted; converted to SI internally.
    ParamRange pa1_bar{1.1, 1.1, 1, Scale::Linear};
    ParamRange pa2_bar{0.7, 0.7, 1, Scale::Linear};
    ParamRange f1_khz{20.0, 1000.0, 32, Scale::Log};
    ParamRange f2_khz{20.0, 1000.0, 32, Scale::Log};
    models::BubblePhysical material{}; // R_E, liquid constants, theta
    std::array<Real, 2> ic{1.0, 0.0};
    Real t_end = 1e6; // events stop each iteration long before this
    Index transient = 64;
    Index saved = 8;
    SolveOptions solver{.rel_tol = 1e-10, .abs_tol = 1e-10};
    std::string output;
};

struct ValveScanSpec {
    ParamRange q{0.2, 10.0, 256, Scale::Linear};
    Real kappa = 1.25;
    Real delta = 10.0;
    Real beta = 20.0;
    Real restitution = 0.8;
    // Default initial condition sits near the equilibrium manifold to keep
    // transients short; a NaN pressure slot means delta + 0.2.
    std::array<Real, 3> ic{0.2, 0.0, std::numeric_limits<Real>::quiet_NaN()};
    Real t_end = 1e6;
    // Settling onto the high-flow-rate equilibrium takes ~200 section-to-
    // section iterations; late iterations cost only ~50 steps each.
    Index transient = 256;
    Index saved = 32;
    SolveOptions solver{.rel_tol = 1e-10, .abs_tol = 1e-10};
    std::string output;
};

/// Poincare sections of the Duffing oscillator over a damping sweep.
/// Columns: k, B, y1, y2, status; one row per saved iteration and system.
ScanResult run_duffing_poincare(const DuffingScanSpec& spec);

/// Per-iteration maxima of y1, recorded either by the running-max accessory
/// or by locating local maxima through event handling.
/// Columns: k, y1_max, status.
ScanResult run_duffing_maxima(const DuffingScanSpec& spec, MaximaMode mode);

/// Largest Lyapunov exponent per damping value, averaged over the saved
/// iterations. Columns: k, lambda_max, status.
ScanResult run_duffing_lyapunov(const DuffingScanSpec& spec);

/// Bubble collapse strength over the four excitation parameters.
/// Columns: omega1_radps, omega2_radps, pa1_pa, pa2_pa, y_exp, status;
/// y_exp is the largest relative expansion over the saved collapses.
ScanResult run_bubble_scan(const BubbleScanSpec& spec);

/// Valve position extrema per flow rate, one row per saved iteration:
/// q, y1_max, y1_min, status.
ScanResult run_valve_scan(const ValveScanSpec& spec);

/// Writes an ASCII table: "# " + comma-joined column names, then rows of
/// comma-separated reals printed with 17 significant digits so parsing them
/// back reproduces the doubles exactly.
void emit_rows(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<Real>>& rows);

} // namespace odensemble::scan

#endif
