#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "itherm/errors.hpp"
#include "itherm/estimators.hpp"
#include "itherm/fisher.hpp"
#include "itherm/rng.hpp"
#include "itherm/stats.hpp"

using namespace itherm;

namespace {

Protocol protocol_of(double T, double gamma, int n, double t, double P0, double delta,
                     double M = 1.0) {
    Protocol p;
    p.initial.mean = P0;
    p.initial.variance = 0.5 * delta;
    p.bath.temperature = T;
    p.bath.law.gamma = gamma;
    p.bath.law.exponent = n;
    p.bath.duration = t;
    p.bath.impurity_mass = M;
    return p;
}

double tau_of(double T, double gamma, int n) { return 1.0 / (gamma * std::pow(T, n)); }

const double kEsq = std::exp(2.0);

}  // namespace

TEST_CASE("predict_moments limits") {
    const double T = 0.3;

    SUBCASE("t -> infinity gives stationary Gaussian moments") {
        const Protocol p = protocol_of(T, 1.0, 4, 50.0 * tau_of(T, 1.0, 4), 1.0, 0.2);
        const MomentPrediction m = predict_moments(p, T);
        CHECK(std::abs(m.mean_p) < 1e-15);
        CHECK(m.var_p == doctest::Approx(T).epsilon(1e-12));
        CHECK(m.mean_p2 == doctest::Approx(T).epsilon(1e-12));
        CHECK(m.var_p2_zero_mean == doctest::Approx(2.0 * T * T).epsilon(1e-12));
    }

    SUBCASE("t = 0 returns the initial state") {
        const Protocol p = protocol_of(T, 1.0, 4, 0.0, 0.7, 0.4);
        const MomentPrediction m = predict_moments(p, T);
        CHECK(m.mean_p == doctest::Approx(0.7).epsilon(1e-15));
        CHECK(m.var_p == doctest::Approx(0.2).epsilon(1e-15));  // Delta/2
    }
}

TEST_CASE("Gaussian fourth-moment identity against Monte Carlo") {
    // var(P^2) = 2 var(P)^2 + 4 mean(P)^2 var(P) for the evolved Gaussian.
    const double T = 0.4;
    const Protocol p = protocol_of(T, 1.0, 4, 0.8 * tau_of(T, 1.0, 4), 1.0, 0.3);
    const MomentPrediction m = predict_moments(p, T);
    CHECK(m.var_p2 ==
          doctest::Approx(2.0 * m.var_p * m.var_p + 4.0 * m.mean_p * m.mean_p * m.var_p)
              .epsilon(1e-14));

    const std::size_t n = 1000000;
    const std::vector<double> samples = sample_trajectories(p.initial, p.bath, n, 909);
    std::vector<double> squares(n);
    for (std::size_t i = 0; i < n; ++i) squares[i] = samples[i] * samples[i];
    CHECK(stats::mean(squares) == doctest::Approx(m.mean_p2).epsilon(5e-3));
    CHECK(stats::variance(squares) == doctest::Approx(m.var_p2).epsilon(5e-2));
    // The zero-mean shortcut underestimates var(P^2) whenever P0 != 0.
    CHECK(m.var_p2 > m.var_p2_zero_mean);
}

TEST_CASE("predict_error_momentum: values, reciprocity, degradation") {
    const double T = 0.1;
    const double tau = tau_of(T, 1.0, 4);

    SUBCASE("t = tau, Delta = 0 equals (e^2-1) M T^3 / (P0 n)^2") {
        const Protocol p = protocol_of(T, 1.0, 4, tau, 1.0, 0.0);
        const double predicted = predict_error_momentum(p, T);
        CHECK(predicted ==
              doctest::Approx((kEsq - 1.0) * T * T * T / 16.0).epsilon(1e-12));

        // Reciprocal of the T^-3 asymptotic information to 1e-12 relative.
        const FisherReport f14 =
            fi_asymptotic(AsymptoticCase::tau_delta_zero, FiParams::from(p.initial, p.bath));
        CHECK(std::abs(predicted * f14.value - 1.0) < 1e-12);
    }

    SUBCASE("exact expression includes the Delta/2 broadening term") {
        const double delta = 0.05;
        const Protocol p = protocol_of(T, 1.0, 4, tau, 1.0, delta);
        const double predicted = predict_error_momentum(p, T);
        const double expected = ((kEsq - 1.0) * T * T * T + T * T * delta / 2.0) / 16.0;
        CHECK(predicted == doctest::Approx(expected).epsilon(1e-12));
    }

    SUBCASE("P0 = 0 is the worst measurement") {
        const Protocol p = protocol_of(T, 1.0, 4, tau, 0.0, 0.2);
        CHECK_THROWS_WITH_AS(predict_error_momentum(p, T), doctest::Contains("ZERO_SIGNAL"),
                             Error);
    }

    SUBCASE("error grows monotonically as P0 shrinks") {
        double prev = 0.0;
        for (double P0 : {1.0, 0.5, 0.25, 0.1, 0.01}) {
            const Protocol p = protocol_of(T, 1.0, 4, tau, P0, 0.0);
            const double e = predict_error_momentum(p, T);
            CHECK(e > prev);
            prev = e;
        }
    }
}

TEST_CASE("predict_error_kinetic: quoted limits and reciprocity") {
    const double T = 0.1;
    const double tau = tau_of(T, 1.0, 4);

    SUBCASE("long-time limit 2 T^2") {
        const Protocol p = protocol_of(T, 1.0, 4, 50.0 * tau, 0.0, 0.2);
        CHECK(predict_error_kinetic(p, T) == doctest::Approx(2.0 * T * T).epsilon(1e-6));
    }

    SUBCASE("t = tau, Delta = 0: 2 (e^2-1)^2 T^2 / (e^2-1+2n)^2") {
        const Protocol p = protocol_of(T, 1.0, 4, tau, 0.0, 0.0);
        const double predicted = predict_error_kinetic(p, T);
        const double expected =
            2.0 * (kEsq - 1.0) * (kEsq - 1.0) * T * T / ((kEsq - 1.0 + 8.0) * (kEsq - 1.0 + 8.0));
        CHECK(predicted == doctest::Approx(expected).epsilon(1e-12));
        CHECK(predicted == doctest::Approx(0.39431 * T * T).epsilon(1e-4));

        const FisherReport f15 =
            fi_asymptotic(AsymptoticCase::tau_p0_zero, FiParams::from(p.initial, p.bath));
        CHECK(std::abs(predicted * f15.value - 1.0) < 1e-12);
    }

    SUBCASE("Delta > 0 approaches T^2/(2 n^2) at low temperature") {
        const double cold = 1e-4;
        const Protocol p = protocol_of(cold, 1.0, 4, tau_of(cold, 1.0, 4), 0.0, 1.0);
        CHECK(predict_error_kinetic(p, cold) ==
              doctest::Approx(cold * cold / 32.0).epsilon(0.01));
    }
}

TEST_CASE("reciprocity identities hold across random parameters") {
    itherm::rng::Stream stream(4242, 0);
    for (int i = 0; i < 20; ++i) {
        const double T = 0.02 + stream.uniform();
        const double gamma = 0.3 + 2.0 * stream.uniform();
        const int n = stream.uniform() < 0.5 ? 2 : 4;
        const double M = 0.5 + 1.5 * stream.uniform();
        const double tau = 1.0 / (gamma * std::pow(T, n));

        const Protocol pm = protocol_of(T, gamma, n, tau, 0.5 + stream.uniform(), 0.0, M);
        const double r14 = predict_error_momentum(pm, T) *
                           fi_asymptotic(AsymptoticCase::tau_delta_zero,
                                         FiParams::from(pm.initial, pm.bath))
                               .value;
        CHECK(std::abs(r14 - 1.0) < 1e-12);

        const Protocol pk = protocol_of(T, gamma, n, tau, 0.0, 0.0, M);
        const double r15 = predict_error_kinetic(pk, T) *
                           fi_asymptotic(AsymptoticCase::tau_p0_zero,
                                         FiParams::from(pk.initial, pk.bath))
                               .value;
        CHECK(std::abs(r15 - 1.0) < 1e-12);
    }
}

TEST_CASE("estimate_T_from_mean: round trip and range errors") {
    const double T = 0.17;
    const Protocol p = protocol_of(T, 1.3, 4, 0.9 * tau_of(T, 1.3, 4), 0.8, 0.0);

    const double noiseless =
        p.initial.mean * std::exp(-p.bath.duration * 1.3 * std::pow(T, 4));
    const std::vector<double> exact{noiseless};
    CHECK(estimate_T_from_mean(exact, p) == doctest::Approx(T).epsilon(1e-12));

    const std::vector<double> high{p.initial.mean * 1.01};
    CHECK_THROWS_WITH_AS(estimate_T_from_mean(high, p), doctest::Contains("OUT_OF_RANGE"),
                         Error);
    const std::vector<double> negative{-0.1};
    CHECK_THROWS_AS(estimate_T_from_mean(negative, p), Error);
}

TEST_CASE("estimate_T_from_energy: round trips and root diagnostics") {
    SUBCASE("stationary samples invert exactly") {
        const double T = 0.2;
        const Protocol p = protocol_of(T, 1.0, 4, 10.0 * tau_of(T, 1.0, 4), 0.0, 2.0 * T * 0.5);
        const double s_true = predict_moments(p, T).mean_p2;
        const std::vector<double> pair{std::sqrt(s_true), -std::sqrt(s_true)};
        CHECK(estimate_T_from_energy(pair, p) == doctest::Approx(T).epsilon(1e-10));
    }

    SUBCASE("second moment below the map infimum has no root") {
        const double T = 0.01;
        const Protocol p = protocol_of(T, 1.0, 4, tau_of(T, 1.0, 4), 0.0, 10.0);
        EnergyEstimatorOptions opts;
        opts.bracket_hi = 0.1;
        const std::vector<double> tiny{0.07, -0.07};  // second moment ~ 0.005
        CHECK_THROWS_WITH_AS(estimate_T_from_energy(tiny, p, opts),
                             doctest::Contains("NO_ROOT"), Error);
    }

    SUBCASE("wide bracket exposes the non-monotone map, tight bracket resolves it") {
        const double T = 0.01;
        const Protocol p = protocol_of(T, 1.0, 4, tau_of(T, 1.0, 4), 0.0, 10.0);
        const double s_true = predict_moments(p, T).mean_p2;  // ~ 0.685
        const std::vector<double> pair{std::sqrt(s_true), -std::sqrt(s_true)};

        CHECK_THROWS_WITH_AS(estimate_T_from_energy(pair, p),
                             doctest::Contains("NONUNIQUE_ROOT"), Error);

        EnergyEstimatorOptions opts;
        opts.bracket_hi = 0.1;
        CHECK(estimate_T_from_energy(pair, p, opts) == doctest::Approx(T).epsilon(1e-9));
    }
}

TEST_CASE("mc_experiment: determinism and preconditions") {
    const double T = 0.1;
    McConfig cfg;
    cfg.estimator = EstimatorKind::momentum_mean;
    cfg.protocol = protocol_of(T, 1.0, 4, tau_of(T, 1.0, 4), 1.0, 0.0);
    cfg.trials = 200;
    cfg.samples_per_trial = 50;
    cfg.seed = 12345;

    const EstimationReport a = mc_experiment(cfg);
    const EstimationReport b = mc_experiment(cfg);
    CHECK(a.empirical_mse == b.empirical_mse);
    CHECK(a.t_hat_mean == b.t_hat_mean);
    CHECK(a.censored == b.censored);

    cfg.trials = 50;
    CHECK_THROWS_AS(mc_experiment(cfg), Error);
}

TEST_CASE("momentum estimator attains the CRB window at t = tau") {
    const double T = 0.1;
    McConfig cfg;
    cfg.estimator = EstimatorKind::momentum_mean;
    cfg.protocol = protocol_of(T, 1.0, 4, tau_of(T, 1.0, 4), 1.0, 0.0);
    cfg.trials = 10000;
    cfg.samples_per_trial = 1000;
    cfg.seed = 20240917;

    const EstimationReport rep = mc_experiment(cfg);
    CHECK(rep.censored == 0);
    const double ratio = rep.empirical_mse / rep.crb_per_estimate;
    CHECK(ratio >= 0.95);
    CHECK(ratio <= 1.15);
    // Dominance: the estimator cannot beat the bound.
    CHECK(rep.empirical_mse >= rep.crb_per_estimate * 0.95);
    // The gap to the bound is the kinetic information share, about 1 + 1.01 T.
    CHECK(ratio == doctest::Approx(1.10).epsilon(0.05));
    // And the momentum error propagation itself is matched tightly.
    CHECK(rep.empirical_mse / rep.predicted_error_per_estimate == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("momentum estimator MSE matches the error-propagation prediction") {
    // 1e6 samples split as 20000 trials x 50; MSE scaled back per sample.
    const double T = 0.1;
    McConfig cfg;
    cfg.estimator = EstimatorKind::momentum_mean;
    cfg.protocol = protocol_of(T, 1.0, 4, tau_of(T, 1.0, 4), 1.0, 0.0);
    cfg.trials = 20000;
    cfg.samples_per_trial = 50;
    cfg.seed = 777;

    const EstimationReport rep = mc_experiment(cfg);
    const double per_sample = rep.empirical_mse * cfg.samples_per_trial;
    CHECK(per_sample == doctest::Approx(3.993e-4).epsilon(0.05));
}

TEST_CASE("kinetic estimator at long time matches the 2T^2 law") {
    // samples_per_trial keeps the sampled second moment well above the
    // non-monotone hump of the moment map (at Delta/2), so no trial needs
    // censoring.
    const double T = 0.2;
    McConfig cfg;
    cfg.estimator = EstimatorKind::kinetic_energy;
    cfg.protocol = protocol_of(T, 1.0, 4, 10.0 * tau_of(T, 1.0, 4), 0.0, 2.0 * T * 0.5);
    cfg.trials = 3000;
    cfg.samples_per_trial = 200;
    cfg.seed = 31337;

    const EstimationReport rep = mc_experiment(cfg);
    CHECK(rep.censored == 0);
    const double per_sample = rep.empirical_mse * cfg.samples_per_trial;
    CHECK(per_sample / (2.0 * T * T) == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("kinetic estimator at t = tau with broad initial state") {
    const double T = 0.01;
    McConfig cfg;
    cfg.estimator = EstimatorKind::kinetic_energy;
    cfg.protocol = protocol_of(T, 1.0, 4, tau_of(T, 1.0, 4), 0.0, 10.0);
    cfg.trials = 4000;
    cfg.samples_per_trial = 100;
    cfg.seed = 55;
    cfg.energy_opts.bracket_hi = 0.1;  // prior knowledge: low-temperature bath

    const EstimationReport rep = mc_experiment(cfg);
    CHECK(rep.censored == 0);
    const double per_sample = rep.empirical_mse * cfg.samples_per_trial;
    const double scaling = T * T / 32.0;  // T^2/(2 n^2)
    CHECK(per_sample / scaling >= 0.9);
    CHECK(per_sample / scaling <= 1.2);
}

TEST_CASE("estimator consistency: MSE scales like 1/K") {
    const double T = 0.1;
    std::vector<double> ks{1e3, 1e4, 1e5};
    std::vector<double> mses;
    for (double k : ks) {
        McConfig cfg;
        cfg.estimator = EstimatorKind::momentum_mean;
        cfg.protocol = protocol_of(T, 1.0, 4, tau_of(T, 1.0, 4), 1.0, 0.0);
        cfg.trials = 400;
        cfg.samples_per_trial = static_cast<int>(k);
        cfg.seed = 8080;
        mses.push_back(mc_experiment(cfg).empirical_mse);
    }
    const auto fit = stats::log_log_fit(ks, mses);
    CHECK(std::abs(fit.slope + 1.0) < 0.15);
}

TEST_CASE("censoring is counted, not clamped") {
    // Single-sample momentum trials at moderate variance throw OUT_OF_RANGE
    // with appreciable probability; the report must disclose them.
    const double T = 0.1;
    McConfig cfg;
    cfg.estimator = EstimatorKind::momentum_mean;
    cfg.protocol = protocol_of(T, 1.0, 4, tau_of(T, 1.0, 4), 1.0, 0.0);
    cfg.trials = 500;
    cfg.samples_per_trial = 1;
    cfg.seed = 99;

    const EstimationReport rep = mc_experiment(cfg);
    CHECK(rep.censored > 0);
    CHECK(rep.censored < cfg.trials);
}
