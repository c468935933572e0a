#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cnspk/error.hpp"
#include "cnspk/model.hpp"
#include "oracle.hpp"

using namespace cnspk;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

CompartmentState random_state(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 5.0);
    return {{u(rng), u(rng), u(rng), u(rng)}};
}

PlasmaProfile flat(double c) { return PlasmaProfile({0.0, 1.0}, {c, c}); }

}  // namespace

TEST_CASE("plasma_at interpolates and holds the end values") {
    const PlasmaProfile p({0.0, 1.0}, {0.0, 10.0});
    CHECK(plasma_at(p, 0.5) == 5.0);
    CHECK(plasma_at(p, 1.0) == 10.0);
    CHECK(plasma_at(p, 2.0) == 10.0);
    CHECK(plasma_at(p, -1.0) == 0.0);

    const PlasmaProfile q({0.0, 2.0, 3.0}, {1.0, 3.0, 0.0});
    CHECK(plasma_at(q, 2.0) == 3.0);
    CHECK_THAT(plasma_at(q, 2.5), WithinAbs(1.5, 1e-15));
}

TEST_CASE("plasma profiles are validated") {
    CHECK_THROWS_AS(PlasmaProfile({0.0}, {1.0}), InvalidProfile);
    CHECK_THROWS_AS(PlasmaProfile({0.0, 0.0}, {1.0, 1.0}), InvalidProfile);
    CHECK_THROWS_AS(PlasmaProfile({1.0, 0.0}, {1.0, 1.0}), InvalidProfile);
    CHECK_THROWS_AS(PlasmaProfile({0.0, 1.0}, {1.0, -1.0}), InvalidProfile);
    CHECK_THROWS_AS(PlasmaProfile({0.0, NAN}, {1.0, 1.0}), InvalidProfile);
    CHECK_THROWS_AS(PlasmaProfile({0.0, 1.0}, {1.0}), InvalidProfile);
}

TEST_CASE("manifest holds the closed 27-name roster") {
    const auto& m = Manifest::builtin();
    REQUIRE(m.size() == kParameterCount);
    for (const auto& e : m.entries()) {
        CHECK(e.min <= e.ref_value);
        CHECK(e.ref_value <= e.max);
    }
    CHECK(m.index_of("PSB") == *m.find("psb"));
    CHECK_THROWS_AS(m.index_of("Kp_brain"), UnknownParameter);

    const auto ref = ParameterSet::reference();
    CHECK(ref.get("V_bb") == 0.064952435);
    CHECK(ref.get("V_bm") == 1.104115461);
    CHECK(ref.get("V_ccsf") == 0.103984624);
    CHECK(ref.get("V_scsf") == 0.025996156);
    CHECK(ref.get("fu_bb") == 0.125);
    CHECK(ref.get("lambda_ccsf") == 0.026);
    CHECK(Manifest::parse(m.to_csv()).entries().size() == kParameterCount);
}

TEST_CASE("manifest parser rejects malformed rosters") {
    const std::string header = "name,description,unit,ref_value,min,max\n";
    CHECK_THROWS_AS(Manifest::parse("name,unit\nV,L\n"), DataError);
    CHECK_THROWS_AS(Manifest::parse(header + "V,volume,L,1,0,2\n"), ValidationError);
    CHECK_THROWS_AS(Manifest::parse(header + "V,volume,L,3,0,2\n"), DataError);
}

TEST_CASE("parameter sets validate against the physical ranges") {
    auto p = ParameterSet::reference();
    CHECK(p.is_valid());
    CHECK_THROWS_AS(p.with("V_bb", 0.0).validate(), InvalidArgument);
    CHECK_THROWS_AS(p.with("fu_bm", 1.5).validate(), InvalidArgument);
    CHECK_THROWS_AS(p.with("PSB", -1.0).validate(), InvalidArgument);
    CHECK_THROWS_AS(p.with("PSB", INFINITY).validate(), NumericDomainError);
    CHECK_THROWS_AS(p.set("nope", 1.0), UnknownParameter);
    CHECK_THROWS_AS(system_matrix(p.with("Q_B", NAN)), NumericDomainError);
}

TEST_CASE("zero state under zero plasma has zero derivative") {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 20; ++k) {
        const auto p = oracle::random_valid_parameters(rng);
        const auto d = evaluate_rhs(p, CompartmentState{}, 0.3, flat(0.0));
        for (std::size_t c = 0; c < kCompartmentCount; ++c) CHECK(d[c] == 0.0);
    }
}

TEST_CASE("factored form is the same arithmetic as evaluate_rhs") {
    std::mt19937_64 rng(12);
    const auto profile = oracle::bateman_profile(24.0, 0.5);
    std::uniform_real_distribution<double> ut(0.0, 30.0);
    for (int k = 0; k < 200; ++k) {
        const auto p = oracle::random_valid_parameters(rng);
        const auto s = random_state(rng);
        const double t = ut(rng);
        const auto m = system_matrix(p);
        CHECK(evaluate_rhs(p, s, t, profile) == evaluate_rhs(m, s, plasma_at(profile, t)));
    }
}

TEST_CASE("flux accumulation agrees with the matrix form") {
    std::mt19937_64 rng(13);
    const auto profile = oracle::bateman_profile(24.0, 0.5);
    std::uniform_real_distribution<double> ut(0.0, 24.0);
    for (int k = 0; k < 200; ++k) {
        const auto p = oracle::random_valid_parameters(rng);
        const auto s = random_state(rng);
        const double t = ut(rng);
        const auto a = evaluate_rhs(p, s, t, profile);
        const auto b = evaluate_rhs_by_flux(p, s, t, profile);
        double scale = 0.0;
        for (std::size_t c = 0; c < kCompartmentCount; ++c) scale = std::max(scale, std::abs(b[c]));
        for (std::size_t c = 0; c < kCompartmentCount; ++c) {
            CHECK_THAT(a[c], WithinAbs(b[c], 1e-12 * scale + 1e-300));
        }
    }
}

TEST_CASE("rate matrix is Metzler with nonpositive volume-weighted column sums") {
    std::mt19937_64 rng(14);
    for (int k = 0; k < 1000; ++k) {
        const auto p = oracle::random_valid_parameters(rng);
        const auto m = system_matrix(p);
        const auto v = volumes(p);
        for (int j = 0; j < 4; ++j) {
            double column = 0.0;
            for (int i = 0; i < 4; ++i) {
                if (i != j) REQUIRE(m.rate(i, j) >= 0.0);
                column += v[i] * m.rate(i, j);
            }
            REQUIRE(column <= 1e-12 * std::abs(v[j] * m.rate(j, j)));
            REQUIRE(m.plasma_gain[j] >= 0.0);
        }
    }
}

TEST_CASE("transfers conserve mass apart from plasma inflow and sinks") {
    std::mt19937_64 rng(15);
    for (int k = 0; k < 100; ++k) {
        const auto p = oracle::random_valid_parameters(rng);
        const auto s = random_state(rng);
        const double cp = 0.7;
        const auto d = evaluate_rhs(system_matrix(p), s, cp);
        const auto v = volumes(p);
        double total = 0.0;
        for (std::size_t c = 0; c < kCompartmentCount; ++c) total += v[c] * d[c];
        double in = 0.0, out = 0.0;
        for (const auto& tr : transfers(p)) {
            CHECK(tr.clearance >= 0.0);
            CHECK(tr.from != Node::sink);
            CHECK(tr.to != Node::plasma);
            if (tr.from == Node::plasma) in += tr.clearance * cp;
            if (tr.to == Node::sink) out += tr.clearance * s[static_cast<std::size_t>(tr.from)];
        }
        CHECK_THAT(total, WithinAbs(in - out, 1e-9 * (in + out + 1.0)));
    }
}

TEST_CASE("derivative vanishes at the steady state") {
    std::mt19937_64 rng(16);
    for (int k = 0; k < 50; ++k) {
        const auto p = oracle::random_parameters(rng);
        const auto m = system_matrix(p);
        const double cp = 2.5;
        const auto s = steady_state(m, cp);
        const auto d = evaluate_rhs(m, s, cp);
        double scale = 0.0;
        for (std::size_t c = 0; c < kCompartmentCount; ++c) {
            scale = std::max(scale, (m.rate.row(static_cast<Eigen::Index>(c)).cwiseAbs() *
                                     s.vec().cwiseAbs())(0) + m.plasma_gain[c] * cp);
        }
        for (std::size_t c = 0; c < kCompartmentCount; ++c) CHECK(std::abs(d[c]) <= 1e-12 * scale);
    }
}

TEST_CASE("right-hand side is affine in the state") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ua(0.0, 1.0);
    const auto profile = oracle::bateman_profile(24.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const auto p = oracle::random_valid_parameters(rng);
        const auto s1 = random_state(rng);
        const auto s2 = random_state(rng);
        const double a = ua(rng);
        CompartmentState mix;
        for (std::size_t c = 0; c < kCompartmentCount; ++c) mix[c] = a * s1[c] + (1 - a) * s2[c];
        const auto d = evaluate_rhs(p, mix, 5.0, profile);
        const auto d1 = evaluate_rhs(p, s1, 5.0, profile);
        const auto d2 = evaluate_rhs(p, s2, 5.0, profile);
        for (std::size_t c = 0; c < kCompartmentCount; ++c) {
            const double expect = a * d1[c] + (1 - a) * d2[c];
            CHECK_THAT(d[c], WithinAbs(expect, 1e-10 * (std::abs(d1[c]) + std::abs(d2[c]) + 1.0)));
        }
    }
}

TEST_CASE("non-finite states are rejected") {
    const auto p = ParameterSet::reference();
    CHECK_THROWS_AS(evaluate_rhs(p, CompartmentState{{NAN, 0, 0, 0}}, 0.0, flat(1.0)),
                    NumericDomainError);
}
