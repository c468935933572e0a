#include <catch_amalgamated.hpp>

#include "cnspk/dataio.hpp"
#include "harness.hpp"

using harness::read_file;
using harness::run_cli;
using harness::write_file;

namespace {

const std::string kSample = std::string(CNSPK_SOURCE_DIR) + "/data/sample.csv";

}  // namespace

TEST_CASE("simulate writes the trajectory and summary") {
    const auto out = harness::fresh_dir("cli-sim");
    const auto r = run_cli({"simulate", "--input", kSample, "--out", out.string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
    CHECK(std::filesystem::exists(out / "trajectory.csv"));
    CHECK(std::filesystem::exists(out / "pk_summary.csv"));
    CHECK(r.out.find("Cmax") != std::string::npos);
    const auto traj = cnspk::parse_trajectory(read_file(out / "trajectory.csv"));
    CHECK(traj.size() == 49);
}

TEST_CASE("grid option resamples the output") {
    const auto out = harness::fresh_dir("cli-grid");
    REQUIRE(run_cli({"simulate", "--input", kSample, "--out", out.string(), "--grid", "97"}).code == 0);
    CHECK(cnspk::parse_trajectory(read_file(out / "trajectory.csv")).size() == 97);
}

TEST_CASE("metrics recomputes the summary from a trajectory file") {
    const auto out = harness::fresh_dir("cli-metrics");
    REQUIRE(run_cli({"simulate", "--input", kSample, "--out", out.string()}).code == 0);
    const auto again = harness::fresh_dir("cli-metrics2");
    REQUIRE(run_cli({"metrics", "--input", (out / "trajectory.csv").string(), "--out", again.string()}).code == 0);
    // the summary from re-read 9-digit values may differ in the last digits
    const auto a = read_file(out / "pk_summary.csv");
    const auto b = read_file(again / "pk_summary.csv");
    CHECK(a.substr(0, a.find('\n')) == b.substr(0, b.find('\n')));
}

TEST_CASE("an empty bounds file exits 1 naming the schema") {
    const auto dir = harness::fresh_dir("cli-bounds");
    write_file(dir / "bounds.csv", "name,min,max,fixed_value\n");
    const auto r = run_cli({"estimate", "--input", kSample, "--bounds", (dir / "bounds.csv").string(), "--out",
                            dir.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("name,min,max,fixed_value") != std::string::npos);
}

TEST_CASE("seeded estimation is byte-reproducible") {
    const auto dir = harness::fresh_dir("cli-est");
    write_file(dir / "bounds.csv", "name,min,max,fixed_value\nPSB,2,50,\nfu_bb,0.05,0.5,\n");
    std::vector<std::string> names;
    for (const char* run : {"a", "b"}) {
        const auto out = dir / run;
        const auto r = run_cli({"estimate", "--input", kSample, "--bounds", (dir / "bounds.csv").string(), "--out",
                                out.string(), "--np", "8", "--max-iter", "6", "--seed", "42"});
        INFO(r.err);
        REQUIRE(r.code == 0);
    }
    for (const char* f : {"estimate_parameters.csv", "estimate_trace.csv", "estimate_trajectory.csv", "pk_summary.csv"}) {
        CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));
    }
    const auto trace = read_file(dir / "a" / "estimate_trace.csv");
    CHECK(trace.rfind("iteration,best_loss,PSB,fu_bb\n0,", 0) == 0);
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 8);
}

TEST_CASE("sweep writes curves, metrics and coefficients") {
    const auto out = harness::fresh_dir("cli-sweep");
    const auto r = run_cli({"sweep", "--input", kSample, "--parameter", "PSB", "--multipliers", "0.5,1,2", "--out",
                            out.string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
    const auto metrics = read_file(out / "sweep_metrics.csv");
    CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 1 + 3 * 4);
    CHECK(std::filesystem::exists(out / "sweep_curves.csv"));
    CHECK(std::filesystem::exists(out / "sweep_coefficients.csv"));
}

TEST_CASE("sample regenerates the shipped dataset") {
    const auto out = harness::fresh_dir("cli-sample");
    REQUIRE(run_cli({"sample", "--out", out.string()}).code == 0);
    CHECK(read_file(out / "sample.csv") == read_file(kSample));
}

TEST_CASE("invalid input exits 1") {
    const auto dir = harness::fresh_dir("cli-bad");
    CHECK(run_cli({"sweep", "--input", kSample, "--parameter", "Kp", "--out", dir.string()}).code == 1);
    CHECK(run_cli({"sweep", "--input", kSample, "--parameter", "fu_bb", "--out", dir.string()}).code == 1);
    CHECK(run_cli({"simulate", "--input", (dir / "missing.csv").string(), "--out", dir.string()}).code == 1);
    write_file(dir / "bad.csv", "time,Cbb\n0,0\n1,1\n");
    const auto r = run_cli({"simulate", "--input", (dir / "bad.csv").string(), "--out", dir.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("plasma") != std::string::npos);
    CHECK(run_cli({"simulate"}).code == 1);
    CHECK(run_cli({"frobnicate"}).code == 1);
    CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("computation failures exit 2") {
    const auto dir = harness::fresh_dir("cli-fail");
    const auto r = run_cli({"simulate", "--input", kSample, "--out", dir.string(), "--rtol", "1e-300",
                            "--atol", "1e-300"});
    CHECK(r.code == 2);
    CHECK(r.err.find("computation failed") != std::string::npos);
}
