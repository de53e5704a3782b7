#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "itherm/core.hpp"
#include "itherm/errors.hpp"
#include "itherm/rng.hpp"

using namespace itherm;

namespace {

PhysicalParams natural_units(double M = 1.0, double G = 1.0) {
    PhysicalParams p;
    p.impurity_mass = M;
    p.boson_mass = 1.0;
    p.sound_velocity = 1.0;
    p.coupling = G;
    return p;
}

}  // namespace

TEST_CASE("gamma_coefficient regime formulas") {
    // hbar = M = v = 1, strong-high: Gamma = 2 pi / 3
    const FrictionLaw sh = gamma_coefficient(natural_units(), Regime::strong_high);
    CHECK(sh.exponent == 2);
    CHECK(sh.gamma == doctest::Approx(2.0 * M_PI / 3.0).epsilon(1e-15));

    // hbar = m = M = v = 1, G = 0.1, weak: Gamma = 2 pi^3 / 1500
    const FrictionLaw weak = gamma_coefficient(natural_units(1.0, 0.1), Regime::weak);
    CHECK(weak.exponent == 4);
    CHECK(weak.gamma == doctest::Approx(0.04134170224).epsilon(1e-9));

    // strong-low carries 4x the weak coefficient for identical parameters
    const FrictionLaw sl = gamma_coefficient(natural_units(1.0, 0.1), Regime::strong_low);
    CHECK(sl.exponent == 4);
    CHECK(sl.gamma / weak.gamma == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("gamma_coefficient is covariant under unit-system changes") {
    // SI-like mechanical scales with temperatures kept in energy units.
    PhysicalParams si;
    si.hbar = 1.0545718e-34;
    si.boson_mass = 1.44e-25;
    si.sound_velocity = 2.0e-3;
    si.impurity_mass = 10.0 * si.boson_mass;
    si.coupling = 0.1 * si.hbar * si.sound_velocity;  // G~ = 0.1

    PhysicalParams natural = natural_units(10.0, 0.1);
    CHECK(si.dimensionless_coupling() == doctest::Approx(0.1).epsilon(1e-12));

    const double energy_scale = si.boson_mass * si.sound_velocity * si.sound_velocity;
    const double time_scale = si.hbar / energy_scale;

    for (Regime r : {Regime::strong_high, Regime::strong_low, Regime::weak}) {
        const FrictionLaw g_si = gamma_coefficient(si, r);
        const FrictionLaw g_nat = gamma_coefficient(natural, r);
        const double converted =
            g_si.gamma * time_scale * std::pow(energy_scale, g_si.exponent);
        CHECK(converted == doctest::Approx(g_nat.gamma).epsilon(1e-12));
    }
}

TEST_CASE("classify_regime decade margins") {
    PhysicalParams p = natural_units();

    p.coupling = 100.0;  // G~ = 100
    auto r1 = classify_regime(p, 0.1);
    REQUIRE(r1.ok());
    CHECK(*r1.regime == Regime::strong_high);

    p.coupling = 0.01;
    auto r2 = classify_regime(p, 0.001);
    REQUIRE(r2.ok());
    CHECK(*r2.regime == Regime::weak);

    p.coupling = 2.0;
    auto r3 = classify_regime(p, 0.4);
    CHECK_FALSE(r3.ok());
    CHECK(r3.checks.size() == 3);
    for (const auto& c : r3.checks) {
        CHECK(c.margin < 10.0);
        CHECK_FALSE(c.weakest.empty());
    }

    // A looser margin resolves the ambiguous case.
    auto r4 = classify_regime(p, 0.4, 1.2);
    CHECK(r4.ok());
}

TEST_CASE("relaxation_time examples") {
    FrictionLaw law;
    law.gamma = 1.0;
    law.exponent = 4;
    CHECK(relaxation_time(law, 0.1) == doctest::Approx(1e4).epsilon(1e-12));
    CHECK(relaxation_time(law, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    law.gamma = 2.0;
    law.exponent = 2;
    CHECK(relaxation_time(law, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(relaxation_time(law, 0.0), Error);
    CHECK_THROWS_AS(relaxation_time(law, -1.0), Error);
}

TEST_CASE("diffusion_coefficient and the fluctuation-dissipation identity") {
    FrictionLaw law;
    law.gamma = 1.0;
    law.exponent = 4;
    CHECK(diffusion_coefficient(law, 1.0, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(diffusion_coefficient(law, 0.0, 3.0) == 0.0);

    // D tau / 2 = M T for any admissible (Gamma, n, T, M)
    rng::Stream stream(7, 0);
    for (int i = 0; i < 200; ++i) {
        FrictionLaw l;
        l.gamma = 0.1 + 5.0 * stream.uniform();
        l.exponent = stream.uniform() < 0.5 ? 2 : 4;
        const double T = 0.01 + stream.uniform();
        const double M = 0.1 + 10.0 * stream.uniform();
        const double lhs = diffusion_coefficient(l, T, M) * relaxation_time(l, T) / 2.0;
        CHECK(lhs == doctest::Approx(M * T).epsilon(1e-14));
    }
}

TEST_CASE("friction_force_asymptotic examples and sign") {
    FrictionLaw law;
    law.gamma = 1.0;
    law.exponent = 4;
    CHECK(friction_force_asymptotic(1.0, law, 0.1) == doctest::Approx(-1e-4).epsilon(1e-12));
    CHECK(friction_force_asymptotic(0.0, law, 0.7) == 0.0);
    rng::Stream stream(11, 0);
    for (int i = 0; i < 100; ++i) {
        const double P = -3.0 + 6.0 * stream.uniform();
        const double F = friction_force_asymptotic(P, law, 0.2 + stream.uniform());
        if (P > 0.0) CHECK(F < 0.0);
        if (P < 0.0) CHECK(F > 0.0);
    }
}

TEST_CASE("friction integral reproduces the strong-coupling n=2 asymptote") {
    PhysicalParams p = natural_units();
    const double Tt = 0.01;
    const double F = friction_force_integral(1.0, p, ReflectionModel::unit(), Tt);
    const double asym = -(2.0 * M_PI / 3.0) * Tt * Tt;
    CHECK(F == doctest::Approx(asym).epsilon(0.01));
    CHECK(friction_force_integral(0.0, p, ReflectionModel::unit(), Tt) == 0.0);
}

TEST_CASE("friction integral with quadratic reflection reproduces the weak n=4 asymptote") {
    PhysicalParams p = natural_units(1.0, 0.1);
    const double Gt = p.dimensionless_coupling();
    const ReflectionModel refl = ReflectionModel::quadratic(Gt * Gt / 4.0);
    const double Tt = 0.01;
    const FrictionLaw weak = gamma_coefficient(p, Regime::weak);
    const double F = friction_force_integral(1.0, p, refl, Tt);
    CHECK(F == doctest::Approx(-weak.gamma * std::pow(Tt, 4)).epsilon(0.02));
}

TEST_CASE("friction integral is linear in P") {
    PhysicalParams p = natural_units();
    const double base = friction_force_integral(1.0, p, ReflectionModel::unit(), 0.02);
    for (double P : {-2.0, -1.0, 1.0, 2.0}) {
        const double F = friction_force_integral(P, p, ReflectionModel::unit(), 0.02);
        CHECK(F == doctest::Approx(P * base).epsilon(1e-12));
    }
}

TEST_CASE("log-T fits of the friction integral recover exponent and prefactor") {
    PhysicalParams p = natural_units();
    const FrictionFit unit_fit =
        fit_friction_law(p, ReflectionModel::unit(), 1e-3, 1e-2, 25);
    CHECK(std::abs(unit_fit.raw_exponent - 2.0) < 0.02);
    CHECK(unit_fit.law.exponent == 2);
    CHECK(unit_fit.law.gamma == doctest::Approx(2.0 * M_PI / 3.0).epsilon(0.01));
    CHECK(unit_fit.raw_amplitude == doctest::Approx(2.0 * M_PI / 3.0).epsilon(0.01));

    PhysicalParams pw = natural_units(1.0, 0.1);
    const double Gt = pw.dimensionless_coupling();
    const FrictionFit weak_fit =
        fit_friction_law(pw, ReflectionModel::quadratic(Gt * Gt / 4.0), 1e-3, 1e-2, 25);
    CHECK(std::abs(weak_fit.raw_exponent - 4.0) < 0.02);
    CHECK(weak_fit.law.exponent == 4);
    const double gamma_weak = gamma_coefficient(pw, Regime::weak).gamma;
    CHECK(weak_fit.law.gamma == doctest::Approx(gamma_weak).epsilon(0.01));

    // Strong-low calibration c = G~^2 reproduces the 4x-enhanced coefficient.
    const FrictionFit sl_fit =
        fit_friction_law(pw, ReflectionModel::quadratic(Gt * Gt), 1e-3, 1e-2, 25);
    const double gamma_sl = gamma_coefficient(pw, Regime::strong_low).gamma;
    CHECK(sl_fit.law.gamma == doctest::Approx(gamma_sl).epsilon(0.01));
}

TEST_CASE("friction integral error paths") {
    PhysicalParams p = natural_units();
    FrictionIntegralOptions opts;
    opts.rel_tol = 1e-14;
    opts.max_intervals = 2;
    CHECK_THROWS_WITH_AS(friction_force_integral(1.0, p, ReflectionModel::unit(), 0.01, opts),
                         doctest::Contains("NONCONVERGENT_QUADRATURE"), Error);

    const ReflectionModel bad =
        ReflectionModel::custom([](double) { return 1.5; }, "overunity");
    CHECK_THROWS_AS(friction_force_integral(1.0, p, bad, 0.01), Error);

    PhysicalParams invalid = p;
    invalid.sound_velocity = -1.0;
    CHECK_THROWS_AS(friction_force_integral(1.0, invalid, ReflectionModel::unit(), 0.01), Error);
}

TEST_CASE("physical parameter validation and heavy-impurity flag") {
    PhysicalParams p = natural_units();
    CHECK_FALSE(p.heavy_impurity());  // M = m
    p.impurity_mass = 10.0;
    CHECK(p.heavy_impurity());
    p.kB = 2.0;
    CHECK(p.dimensionless_temperature(3.0) == doctest::Approx(6.0));
    p.kB = 0.0;
    CHECK_THROWS_AS(p.validate(), Error);
}
