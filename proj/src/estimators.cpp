#include "itherm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "itherm/errors.hpp"
#include "itherm/fisher.hpp"
#include "itherm/rng.hpp"
#include "itherm/stats.hpp"

namespace itherm {

void Protocol::validate() const {
    initial.validate();
    bath.validate();
}

const char* to_string(EstimatorKind k) {
    return k == EstimatorKind::momentum_mean ? "momentum-mean" : "kinetic-energy";
}

namespace {

struct Family {
    double mean, dmean;
    double var, dvar;
};

Family family_at(const Protocol& proto, double T) {
    const double M = proto.bath.impurity_mass;
    const double gamma = proto.bath.law.gamma;
    const int n = proto.bath.law.exponent;
    const double t = proto.bath.duration;
    const double V0 = proto.initial.variance;

    const double s = t * gamma * std::pow(T, n);
    const double E = std::exp(-s);
    const double one_minus_E2 = -std::expm1(-2.0 * s);
    const double dsdT = static_cast<double>(n) * t * gamma * std::pow(T, n - 1);

    Family f;
    f.mean = proto.initial.mean * E;
    f.dmean = -proto.initial.mean * dsdT * E;
    f.var = M * T * one_minus_E2 + V0 * E * E;
    f.dvar = M * one_minus_E2 + dsdT * E * E * (2.0 * M * T - 2.0 * V0);
    return f;
}

}  // namespace

MomentPrediction predict_moments(const Protocol& proto, double T) {
    proto.validate();
    if (!(T > 0.0)) throw Error(ErrorCode::invalid_argument, "predict_moments requires T > 0");
    const Family f = family_at(proto, T);
    MomentPrediction m;
    m.mean_p = f.mean;
    m.var_p = f.var;
    m.mean_p2 = f.var + f.mean * f.mean;
    m.var_p2_zero_mean = 2.0 * f.var * f.var;
    m.var_p2 = 2.0 * f.var * f.var + 4.0 * f.mean * f.mean * f.var;
    return m;
}

double predict_error_momentum(const Protocol& proto, double T) {
    proto.validate();
    if (!(T > 0.0) || !(proto.bath.duration > 0.0))
        throw Error(ErrorCode::invalid_argument, "predict_error_momentum requires T > 0, t > 0");
    if (proto.initial.mean == 0.0)
        throw Error(ErrorCode::zero_signal,
                    "momentum measurement carries no temperature signal for P0 = 0");
    const Family f = family_at(proto, T);
    return f.var / (f.dmean * f.dmean);
}

double predict_error_kinetic(const Protocol& proto, double T) {
    proto.validate();
    if (!(T > 0.0) || !(proto.bath.duration > 0.0))
        throw Error(ErrorCode::invalid_argument, "predict_error_kinetic requires T > 0, t > 0");
    const Family f = family_at(proto, T);
    // Zero-mean convention: delta^2 P^2 = 2 var^2 and d_T mean P^2 = d_T var.
    return 2.0 * f.var * f.var / (f.dvar * f.dvar);
}

double estimate_T_from_mean(std::span<const double> samples, const Protocol& proto) {
    proto.validate();
    if (samples.empty())
        throw Error(ErrorCode::invalid_argument, "estimate_T_from_mean needs samples");
    const double P0 = proto.initial.mean;
    if (P0 == 0.0)
        throw Error(ErrorCode::zero_signal, "mean inversion undefined for P0 = 0");
    const double m = stats::mean(samples);
    const double r = m / P0;
    if (!(r > 0.0) || !(r < 1.0))
        throw Error(ErrorCode::out_of_range,
                    "sample mean / P0 = " + std::to_string(r) + " outside (0, 1)");
    const double t_gamma = proto.bath.duration * proto.bath.law.gamma;
    if (!(t_gamma > 0.0))
        throw Error(ErrorCode::invalid_argument, "mean inversion requires t > 0");
    return std::pow(-std::log(r) / t_gamma, 1.0 / proto.bath.law.exponent);
}

namespace {

double second_moment_model(const Protocol& proto, double T) {
    const double M = proto.bath.impurity_mass;
    const double s = proto.bath.duration * proto.bath.law.gamma *
                     std::pow(T, proto.bath.law.exponent);
    const double E2 = std::exp(-2.0 * s);
    return M * T * (-std::expm1(-2.0 * s)) + proto.initial.variance * E2;
}

}  // namespace

double estimate_T_from_energy(std::span<const double> samples, const Protocol& proto,
                              const EnergyEstimatorOptions& opts) {
    proto.validate();
    if (samples.empty())
        throw Error(ErrorCode::invalid_argument, "estimate_T_from_energy needs samples");
    if (!(opts.bracket_lo > 0.0 && opts.bracket_hi > opts.bracket_lo) || opts.scan_points < 8)
        throw Error(ErrorCode::invalid_argument, "bad energy-estimator bracket");

    const double target = stats::second_moment(samples);
    if (!(target > 0.0))
        throw Error(ErrorCode::no_root, "sample second moment is not positive");

    auto g = [&](double T) { return second_moment_model(proto, T) - target; };

    // Log-spaced scan for bracketing sign changes; the moment map can dip and
    // recover when Delta > 0, so uniqueness is verified, not assumed.
    const double l0 = std::log(opts.bracket_lo), l1 = std::log(opts.bracket_hi);
    double prevT = opts.bracket_lo;
    double prevG = g(prevT);
    double lo = 0.0, hi = 0.0;
    int crossings = 0;
    for (int i = 1; i < opts.scan_points; ++i) {
        const double T = std::exp(l0 + (l1 - l0) * i / (opts.scan_points - 1));
        const double gi = g(T);
        if (prevG == 0.0) {
            lo = hi = prevT;
            ++crossings;
        } else if ((prevG < 0.0) != (gi < 0.0)) {
            lo = prevT;
            hi = T;
            ++crossings;
        }
        prevT = T;
        prevG = gi;
    }
    if (crossings == 0)
        throw Error(ErrorCode::no_root,
                    "second-moment equation has no solution in the bracket");
    if (crossings > 1)
        throw Error(ErrorCode::nonunique_root,
                    "second-moment equation has multiple roots in the bracket; "
                    "tighten EnergyEstimatorOptions");
    if (lo == hi) return lo;

    // Bisection-safe secant polish.
    double glo = g(lo), ghi = g(hi);
    for (int it = 0; it < 200; ++it) {
        double mid = (ghi != glo) ? hi - ghi * (hi - lo) / (ghi - glo) : 0.5 * (lo + hi);
        if (!(mid > lo) || !(mid < hi)) mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if ((gm < 0.0) == (glo < 0.0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
            ghi = gm;
        }
        if (hi - lo <= opts.rel_tol * hi) break;
    }
    return 0.5 * (lo + hi);
}

EstimationReport mc_experiment(const McConfig& config, std::vector<double>* estimates_out) {
    config.protocol.validate();
    if (config.trials < 100)
        throw Error(ErrorCode::invalid_argument, "mc_experiment requires trials >= 100");
    if (config.samples_per_trial < 1)
        throw Error(ErrorCode::invalid_argument, "mc_experiment requires samples");

    const double T_true = config.protocol.bath.temperature;
    std::vector<double> estimates;
    estimates.reserve(static_cast<std::size_t>(config.trials));
    int censored = 0;

    for (int trial = 0; trial < config.trials; ++trial) {
        const std::uint64_t trial_seed =
            rng::mix(config.seed, static_cast<std::uint64_t>(trial) + 1);
        const std::vector<double> samples =
            sample_trajectories(config.protocol.initial, config.protocol.bath,
                                static_cast<std::size_t>(config.samples_per_trial), trial_seed);
        try {
            const double t_hat =
                config.estimator == EstimatorKind::momentum_mean
                    ? estimate_T_from_mean(samples, config.protocol)
                    : estimate_T_from_energy(samples, config.protocol, config.energy_opts);
            estimates.push_back(t_hat);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::out_of_range || e.code() == ErrorCode::no_root ||
                e.code() == ErrorCode::nonunique_root) {
                ++censored;  // counted, never clamped: clamping would bias the CRB comparison
            } else {
                throw;
            }
        }
    }
    if (estimates.empty())
        throw Error(ErrorCode::no_root, "all Monte Carlo trials were censored");
    if (estimates_out) *estimates_out = estimates;

    EstimationReport rep;
    rep.estimator = config.estimator;
    rep.T_true = T_true;
    rep.trials = config.trials;
    rep.samples_per_trial = config.samples_per_trial;
    rep.seed = config.seed;
    rep.censored = censored;
    rep.t_hat_mean = stats::mean(estimates);
    double mse = 0.0;
    for (double t : estimates) mse += (t - T_true) * (t - T_true);
    rep.empirical_mse = mse / static_cast<double>(estimates.size());

    rep.predicted_error_per_sample = config.estimator == EstimatorKind::momentum_mean
                                         ? predict_error_momentum(config.protocol, T_true)
                                         : predict_error_kinetic(config.protocol, T_true);
    rep.predicted_error_per_estimate =
        rep.predicted_error_per_sample / config.samples_per_trial;
    rep.crb_per_sample =
        cramer_rao(fi_gaussian(config.protocol.initial, config.protocol.bath), 1);
    rep.crb_per_estimate = rep.crb_per_sample / config.samples_per_trial;
    return rep;
}

}  // namespace itherm
