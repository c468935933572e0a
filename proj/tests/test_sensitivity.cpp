#include <catch_amalgamated.hpp>

#include <bit>
#include <cmath>
#include <cstdint>

#include "cnspk/error.hpp"
#include "cnspk/sensitivity.hpp"
#include "oracle.hpp"

using namespace cnspk;

namespace {

SweepSpec make_spec(const std::string& name, std::vector<double> multipliers = kDefaultMultipliers) {
    SweepSpec spec{.parameter = name, .plasma = oracle::bateman_profile(48.0, 0.5)};
    spec.multipliers = std::move(multipliers);
    spec.output_times = dense_grid(0, 48, 97);
    spec.threads = 1;
    return spec;
}

const SweepCurve& curve_at(const SweepResult& r, double m) {
    for (const auto& c : r.curves) {
        if (c.multiplier == m) return c;
    }
    throw std::logic_error("no curve");
}

}  // namespace

TEST_CASE("multiplier 1 reproduces a direct integration") {
    const auto spec = make_spec("PSB");
    const auto r = run_sweep(spec);
    const auto direct = integrate(spec.base, spec.plasma, spec.output_times, spec.integrator);
    CHECK(curve_at(r, 1.0).trajectory == direct);
    CHECK(curve_at(r, 1.0).metrics == summarize(direct));
    CHECK(r.parameter == "PSB");
    REQUIRE(r.curves.size() == spec.multipliers.size());
    for (std::size_t i = 0; i < r.curves.size(); ++i) CHECK(r.curves[i].multiplier == spec.multipliers[i]);
}

TEST_CASE("a sweep performs one integration per multiplier plus two") {
    CHECK(run_sweep(make_spec("PSB")).integrations == 7);
    CHECK(run_sweep(make_spec("Q_ECF", {1.0, 3.0})).integrations == 4);
}

TEST_CASE("coefficients are stable under halving the perturbation") {
    for (const char* name : {"PSB", "Q_B", "fu_bm", "PS_BCSFB"}) {
        auto spec = make_spec(name, {1.0});
        const auto a = run_sweep(spec);
        spec.perturbation = 0.005;
        const auto b = run_sweep(spec);
        for (std::size_t c = 0; c < kCompartmentCount; ++c) {
            REQUIRE(std::isfinite(a.coefficients[c]));
            CHECK(std::abs(a.coefficients[c] - b.coefficients[c]) <= 1e-3 * (1 + std::abs(a.coefficients[c])));
            CHECK(a.coefficient_times[c] == a.curves[0].metrics.compartments[c].tmax);
        }
    }
}

TEST_CASE("spinal-only parameters leave the other compartments alone") {
    for (const char* name : {"V_scsf", "fu_scsf", "lambda_scsf", "PS_SCSF"}) {
        auto base = ParameterSet::reference();
        auto scaled = base.with(name, 0.5 * base.get(name));
        const auto ma = system_matrix(base);
        const auto mb = system_matrix(scaled);
        for (int i = 0; i < 3; ++i) {
            CHECK(ma.rate.row(i) == mb.rate.row(i));
            CHECK(ma.plasma_gain[i] == mb.plasma_gain[i]);
        }

        const auto r = run_sweep(make_spec(name, {0.5, 1.0, 1.1}));
        const auto& ref = curve_at(r, 1.0).trajectory;
        for (double m : {0.5, 1.1}) {
            const auto change = max_relative_change(ref, curve_at(r, m).trajectory);
            for (std::size_t c = 0; c < 3; ++c) CHECK(change[c] < 1e-5);
            CHECK(change[3] > 1e-4);
        }
    }
}

TEST_CASE("tenfold PSB moves brain mass the most") {
    const auto r = run_sweep(make_spec("PSB"));
    const auto change = max_relative_change(curve_at(r, 1.0).trajectory, curve_at(r, 10.0).trajectory);
    CHECK(change[1] > change[0]);
    CHECK(change[1] > change[2]);
    CHECK(change[1] > change[3]);
}

TEST_CASE("out-of-range multipliers are reported with the multiplier") {
    try {
        run_sweep(make_spec("fu_bb"));
        FAIL("expected a bound violation");
    } catch (const BoundViolation& e) {
        CHECK(e.multiplier() == 10.0);
    }
}

TEST_CASE("sweep specs are validated") {
    CHECK_THROWS_AS(run_sweep(make_spec("Kp")), UnknownParameter);
    CHECK_THROWS_AS(run_sweep(make_spec("PSB", {1.0, 1.0})), InvalidArgument);
    CHECK_THROWS_AS(run_sweep(make_spec("PSB", {0.0, 1.0})), InvalidArgument);
    CHECK_THROWS_AS(run_sweep(make_spec("PSB", {-2.0})), InvalidArgument);
    CHECK_THROWS_AS(run_sweep(make_spec("PSB", {})), InvalidArgument);
    auto spec = make_spec("PSB");
    spec.perturbation = 0.0;
    CHECK_THROWS_AS(run_sweep(spec), InvalidArgument);
}

TEST_CASE("results do not depend on the thread count") {
    auto spec = make_spec("CL_eff_BBB");
    const auto a = run_sweep(spec);
    spec.threads = 3;
    const auto b = run_sweep(spec);
    REQUIRE(a.curves.size() == b.curves.size());
    for (std::size_t i = 0; i < a.curves.size(); ++i) CHECK(a.curves[i].trajectory == b.curves[i].trajectory);
    for (std::size_t c = 0; c < kCompartmentCount; ++c) {
        CHECK(std::bit_cast<std::uint64_t>(a.coefficients[c]) == std::bit_cast<std::uint64_t>(b.coefficients[c]));
    }
}

TEST_CASE("coefficients exist without a multiplier-1 curve") {
    const auto with_one = run_sweep(make_spec("PSB", {1.0, 2.0}));
    const auto without = run_sweep(make_spec("PSB", {2.0}));
    REQUIRE(without.curves.size() == 1);
    for (std::size_t c = 0; c < kCompartmentCount; ++c) {
        CHECK(std::abs(with_one.coefficients[c] - without.coefficients[c]) <= 1e-3 * (1 + std::abs(with_one.coefficients[c])));
    }
}

TEST_CASE("relative change of identical trajectories is zero") {
    const auto spec = make_spec("PSB", {1.0});
    const auto t = integrate(spec.base, spec.plasma, spec.output_times);
    for (double v : max_relative_change(t, t)) CHECK(v == 0.0);
    Trajectory shorter = t;
    shorter.times.pop_back();
    shorter.states.pop_back();
    CHECK_THROWS_AS(max_relative_change(t, shorter), InvalidArgument);
}
