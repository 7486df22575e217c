#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "odensemble/scan.hpp"

using namespace odensemble;
using namespace odensemble::scan;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) {
        path = (std::filesystem::temp_directory_path() / name).string();
    }
    ~TempFile() { std::remove(path.c_str()); }
};

std::vector<std::vector<Real>> parse_rows(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::vector<Real>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<Real> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

TEST_CASE("ParamRange value grids") {
    CHECK(ParamRange{0.5, 9.0, 1, Scale::Linear}.values() == std::vector<Real>{0.5});
    const auto lin = ParamRange{0.2, 0.3, 5, Scale::Linear}.values();
    REQUIRE(lin.size() == 5);
    CHECK(lin.front() == 0.2);
    CHECK(lin.back() == 0.3);
    CHECK(lin[2] == doctest::Approx(0.25).epsilon(1e-15));

    const auto log = ParamRange{1.0, 100.0, 3, Scale::Log}.values();
    REQUIRE(log.size() == 3);
    CHECK(log.front() == 1.0);
    CHECK(log[1] == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(log.back() == 100.0);

    CHECK_THROWS_AS((ParamRange{-1.0, 10.0, 4, Scale::Log}.values()), std::invalid_argument);
    CHECK_THROWS_AS((ParamRange{0.1, 1.0, 0, Scale::Linear}.values()), std::invalid_argument);
}

TEST_CASE("emit_rows format") {
    TempFile tmp("odensemble_emit_test.csv");

    SUBCASE("empty row set gives a header-only file") {
        emit_rows(tmp.path, {"a", "b"}, {});
        CHECK(slurp(tmp.path) == "# a,b\n");
    }
    SUBCASE("reals are printed with 17 significant digits") {
        emit_rows(tmp.path, {"k", "B"}, {{0.2, 0.3}});
        CHECK(slurp(tmp.path) == "# k,B\n2.0000000000000001e-01,2.9999999999999999e-01\n");
    }
    SUBCASE("row width mismatch is rejected") {
        CHECK_THROWS_AS(emit_rows(tmp.path, {"a", "b"}, {{1.0}}), std::invalid_argument);
    }
    SUBCASE("unwritable path is reported") {
        CHECK_THROWS_AS(emit_rows("/nonexistent-dir/out.csv", {"a"}, {}), std::runtime_error);
    }
}

TEST_CASE("duffing poincare scan writes parseable, lossless rows") {
    TempFile tmp("odensemble_poincare_test.csv");
    DuffingScanSpec spec;
    spec.k = {0.2, 0.3, 6, Scale::Linear};
    spec.transient = 16;
    spec.saved = 4;
    spec.output = tmp.path;
    const auto result = run_duffing_poincare(spec);

    CHECK(result.rows.size() == 6 * 4);
    CHECK(result.diagnostics.nonfinite_systems == 0);

    const auto parsed = parse_rows(tmp.path);
    REQUIRE(parsed.size() == result.rows.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        REQUIRE(parsed[i].size() == result.rows[i].size());
        for (std::size_t j = 0; j < parsed[i].size(); ++j)
            CHECK(parsed[i][j] == result.rows[i][j]); // bit-exact round trip
    }
}

TEST_CASE("scan results are identical across worker counts and batch capacities") {
    unsetenv("ODENSEMBLE_WORKERS");
    DuffingScanSpec spec;
    spec.k = {0.2, 0.3, 8, Scale::Linear};
    spec.transient = 8;
    spec.saved = 4;

    const auto a = run_duffing_poincare(spec);
    spec.solver.workers = 4;
    const auto b = run_duffing_poincare(spec);
    spec.solver.workers = 1;
    spec.solver.batch_capacity = 3; // forces chunked pool traversal
    const auto c = run_duffing_poincare(spec);

    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i] == b.rows[i]);

    // Chunking reorders rows (chunk-major) but preserves the per-system data:
    // compare as multisets keyed by (k, iteration order within k).
    auto sorted = [](std::vector<std::vector<Real>> rows) {
        std::sort(rows.begin(), rows.end());
        return rows;
    };
    CHECK(sorted(a.rows) == sorted(c.rows));
}

TEST_CASE("duffing maxima scans in both modes") {
    // Periodic window; transients long enough that both recordings sample
    // the same converged attractor.
    DuffingScanSpec spec;
    spec.k = {0.21, 0.22, 3, Scale::Linear};
    spec.transient = 512;
    spec.saved = 4;

    const auto acc = run_duffing_maxima(spec, MaximaMode::Accessory);
    const auto evt = run_duffing_maxima(spec, MaximaMode::Event);
    CHECK(acc.rows.size() == 3 * 4);
    CHECK(evt.rows.size() == 3 * 4);
    CHECK(acc.diagnostics.detections == 0);
    CHECK(evt.diagnostics.detections > 0);
    CHECK(evt.diagnostics.detections_outside_zone == 0);
    CHECK(evt.diagnostics.max_residual_ratio <= 1.0);

    // Envelope over the saved iterations agrees between the two recordings.
    // Rows are emitted iteration-major: row index = iteration*3 + k.
    for (std::size_t k = 0; k < 3; ++k) {
        Real env_acc = -1e300, env_evt = -1e300;
        for (std::size_t i = 0; i < 4; ++i) {
            env_acc = std::max(env_acc, acc.rows[3 * i + k][1]);
            env_evt = std::max(env_evt, evt.rows[3 * i + k][1]);
        }
        CHECK(env_acc == doctest::Approx(env_evt).epsilon(1e-4));
    }
}

TEST_CASE("duffing lyapunov scan separates periodic from chaotic damping") {
    DuffingScanSpec spec;
    spec.transient = 256;
    spec.saved = 64;
    spec.k = {0.215, 0.215, 1, Scale::Linear}; // periodic window
    const auto periodic = run_duffing_lyapunov(spec);
    REQUIRE(periodic.rows.size() == 1);
    CHECK(periodic.rows[0][1] < 0.0);

    spec.k = {0.24, 0.24, 1, Scale::Linear}; // chaotic band
    const auto chaotic = run_duffing_lyapunov(spec);
    CHECK(chaotic.rows[0][1] > 0.0);
}

TEST_CASE("bubble scan smoke on a tiny grid") {
    BubbleScanSpec spec;
    spec.f1_khz = {20.0, 1000.0, 3, Scale::Log};
    spec.f2_khz = {20.0, 1000.0, 2, Scale::Log};
    spec.pa1_bar = {1.1, 1.1, 1, Scale::Linear};
    spec.pa2_bar = {0.0, 0.0, 1, Scale::Linear};
    spec.transient = 8;
    spec.saved = 4;
    const auto result = run_bubble_scan(spec);

    REQUIRE(result.rows.size() == 6);
    for (const auto& row : result.rows) {
        CHECK(std::isfinite(row[4]));
        CHECK(row[4] >= 0.0);
        CHECK(row[5] == 0.0);
    }
    CHECK(result.diagnostics.start_times_strictly_increase);
    CHECK(result.diagnostics.detections_outside_zone == 0);
    // Every iteration of every system stopped at a located maximum.
    CHECK(result.diagnostics.reason_counts[static_cast<int>(StopReason::EventStop)] == 6 * 12);
}

TEST_CASE("valve scan hits impacts at low flow rate and equilibrium at high") {
    ValveScanSpec spec;

    spec.transient = 24;
    spec.saved = 4;
    spec.q = {1.0, 1.0, 1, Scale::Linear};
    const auto impacting = run_valve_scan(spec);
    REQUIRE(impacting.rows.size() == 4);
    for (const auto& row : impacting.rows) {
        CHECK(std::abs(row[2]) <= 1e-6); // y1_min pinned to the seat
        CHECK(row[1] > 0.1);             // oscillates well clear of it
    }
    CHECK(impacting.diagnostics.detections_outside_zone == 0);

    spec.transient = 256; // the spiral onto the equilibrium decays ~8% per cycle
    spec.saved = 8;
    spec.q = {9.0, 9.0, 1, Scale::Linear};
    const auto settled = run_valve_scan(spec);
    const auto& last = settled.rows.back();
    CHECK(std::abs(last[1] - last[2]) < 1e-3); // max ~ min at the equilibrium
    CHECK(settled.diagnostics.reason_counts[static_cast<int>(StopReason::EquilibriumStop)] > 0);
}
