#include "itherm/fisher.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "itherm/errors.hpp"
#include "itherm/quadrature.hpp"

namespace itherm {

namespace {
const double kE2 = std::exp(2.0);  // e^2, recurring in the t = tau limits
}

const char* to_string(FiMethod m) {
    switch (m) {
        case FiMethod::quadrature: return "quadrature";
        case FiMethod::gaussian_closed: return "gaussian-closed";
        case FiMethod::general_closed: return "general-closed";
        case FiMethod::asymptotic: return "asymptotic";
    }
    return "?";
}

const char* to_string(AsymptoticCase c) {
    switch (c) {
        case AsymptoticCase::lowT_delta_pos: return "lowT-delta-pos";
        case AsymptoticCase::lowT_delta_zero: return "lowT-delta-zero";
        case AsymptoticCase::tau_delta_pos: return "tau-delta-pos";
        case AsymptoticCase::tau_delta_zero: return "tau-delta-zero";
        case AsymptoticCase::tau_p0_zero: return "tau-p0-zero";
    }
    return "?";
}

FiParams FiParams::from(const GaussianMomentumState& state, const BathStage& bath) {
    FiParams p;
    p.T = bath.temperature;
    p.t = bath.duration;
    p.P0 = state.mean;
    p.Delta = state.delta_width();
    p.M = bath.impurity_mass;
    p.Gamma = bath.law.gamma;
    p.n = bath.law.exponent;
    return p;
}

BathStage FiParams::bath() const {
    BathStage b;
    b.temperature = T;
    b.duration = t;
    b.impurity_mass = M;
    b.law.gamma = Gamma;
    b.law.exponent = n;
    return b;
}

namespace {

/// mu, sigma^2 and their T-derivatives (protocol time fixed) for the evolved
/// Gaussian state.
struct EvolvedFamily {
    double mu, dmu;
    double var, dvar;
};

EvolvedFamily evolved_family(const GaussianMomentumState& state, const BathStage& bath) {
    const double T = bath.temperature;
    const double M = bath.impurity_mass;
    const double gamma = bath.law.gamma;
    const int n = bath.law.exponent;
    const double t = bath.duration;
    const double V0 = state.variance;

    const double s = t * gamma * std::pow(T, n);  // t / tau
    const double E = std::exp(-s);
    const double E2 = E * E;
    const double one_minus_E2 = -std::expm1(-2.0 * s);
    const double dsdT = static_cast<double>(n) * t * gamma * std::pow(T, n - 1);

    EvolvedFamily f;
    f.mu = state.mean * E;
    f.dmu = -state.mean * dsdT * E;
    f.var = M * T * one_minus_E2 + V0 * E2;
    f.dvar = M * one_minus_E2 + dsdT * E2 * (2.0 * M * T - 2.0 * V0);
    return f;
}

}  // namespace

FisherReport fi_gaussian(const GaussianMomentumState& state, const BathStage& bath) {
    state.validate();
    bath.validate();
    FisherReport rep;
    rep.method = FiMethod::gaussian_closed;
    rep.params = FiParams::from(state, bath);
    if (bath.duration == 0.0) {
        rep.value = 0.0;  // the initial state carries no temperature dependence
        return rep;
    }
    const EvolvedFamily f = evolved_family(state, bath);
    rep.value = f.dmu * f.dmu / f.var + f.dvar * f.dvar / (2.0 * f.var * f.var);
    return rep;
}

double fi_gaussian_mean_term(const GaussianMomentumState& state, const BathStage& bath) {
    state.validate();
    bath.validate();
    if (bath.duration == 0.0) return 0.0;
    const EvolvedFamily f = evolved_family(state, bath);
    return f.dmu * f.dmu / f.var;
}

FisherReport fi_numeric(const GaussianMomentumState& state, const BathStage& bath,
                        const FiNumericOptions& opts) {
    state.validate();
    bath.validate();
    const double T = bath.temperature;
    const double h = opts.rel_step * T;
    if (!(h > 0.0) || T + h == T || T - h == T)
        throw Error(ErrorCode::step_underflow, "finite-difference step lost to rounding");

    auto evolved_at = [&](double temperature) {
        BathStage b = bath;
        b.temperature = temperature;  // protocol time and initial state fixed
        return evolve_gaussian(state, b);
    };

    const GaussianMomentumState center = evolved_at(T);
    if (!(center.variance > 0.0))
        throw Error(ErrorCode::invalid_argument, "fi_numeric requires evolved variance > 0");
    const GaussianMomentumState p1 = evolved_at(T + h), m1 = evolved_at(T - h);
    const GaussianMomentumState p2 = evolved_at(T + 0.5 * h), m2 = evolved_at(T - 0.5 * h);

    auto dT_density = [&](double P) {
        const double d_h = (density_at(p1, P) - density_at(m1, P)) / (2.0 * h);
        const double d_h2 = (density_at(p2, P) - density_at(m2, P)) / h;
        return (4.0 * d_h2 - d_h) / 3.0;  // one Richardson level
    };

    const double sd = std::sqrt(center.variance);
    const double lo = center.mean - opts.span_sigmas * sd;
    const double hi = center.mean + opts.span_sigmas * sd;

    QuadratureOptions qopts;
    qopts.rel_tol = opts.quad_rel_tol;
    qopts.max_intervals = opts.max_intervals;
    const QuadratureResult integral = integrate_adaptive(
        [&](double P) {
            const double f = density_at(center, P);
            const double df = dT_density(P);
            return df * df / f;
        },
        lo, hi, qopts);

    FisherReport rep;
    rep.method = FiMethod::quadrature;
    rep.params = FiParams::from(state, bath);
    rep.value = integral.value;
    return rep;
}

FisherReport fi_general_closed(const GaussianMomentumState& state, const BathStage& bath) {
    state.validate();
    bath.validate();
    const double T = bath.temperature;
    const double t = bath.duration;
    const double M = bath.impurity_mass;
    const double gamma = bath.law.gamma;
    const double n = bath.law.exponent;
    const double P0 = state.mean;
    const double Delta = state.delta_width();

    FisherReport rep;
    rep.method = FiMethod::general_closed;
    rep.params = FiParams::from(state, bath);

    if (t == 0.0) {
        rep.value = 0.0;
        rep.cross_check_rel_dev = 0.0;
        return rep;
    }

    const double R = std::expm1(2.0 * t * gamma * std::pow(T, n));
    const double denom = T * (2.0 * R * M * T + Delta);
    const double braces =
        n * n * t * t * std::pow(T, 2.0 * n) *
            ((P0 * P0 - 4.0 * M * T) * Delta + 2.0 * M * T * (R * P0 * P0 + 2.0 * M * T) +
             Delta * Delta) +
        (R * M * T / gamma) * (R * M * T / gamma) +
        2.0 * n * M * R * t * std::pow(T, n + 1.0) * (2.0 * M * T - Delta) / gamma;
    rep.value = 2.0 * gamma * gamma * braces / (denom * denom);

    const double reference = fi_gaussian(state, bath).value;
    rep.cross_check_rel_dev =
        reference != 0.0 ? std::abs(rep.value - reference) / std::abs(reference) : 0.0;
    return rep;
}

FisherReport fi_asymptotic(AsymptoticCase acase, const FiParams& p) {
    if (!(p.T > 0.0) || !(p.M > 0.0) || !(p.Gamma > 0.0))
        throw Error(ErrorCode::invalid_argument, "fi_asymptotic requires positive T, M, Gamma");
    if (p.n != 2 && p.n != 4)
        throw Error(ErrorCode::invalid_argument, "fi_asymptotic requires n in {2,4}");

    const double T = p.T, M = p.M, P0 = p.P0, Delta = p.Delta, gamma = p.Gamma;
    const double n = p.n;
    const double s = p.t * gamma * std::pow(T, n);
    const double em1 = kE2 - 1.0;  // e^2 - 1

    FisherReport rep;
    rep.method = FiMethod::asymptotic;
    rep.asymptotic_case = acase;
    rep.params = p;

    // Every "a << b" in a validity predicate is scored as (a/b)/0.1, matching
    // the decade reading used by regime classification.
    const double kSmall = 0.1;
    auto ratio = [&](double small_quantity) { return small_quantity / kSmall; };

    switch (acase) {
        case AsymptoticCase::lowT_delta_pos: {
            if (!(Delta > 0.0))
                throw Error(ErrorCode::invalid_argument, "lowT_delta_pos requires Delta > 0");
            const double ntg = n * p.t * gamma;
            rep.value = 2.0 * ntg * ntg * std::pow(T, 2.0 * n - 2.0) * (P0 * P0 + Delta) / Delta;
            rep.predicate_ratio = std::max(ratio(s), ratio(M * T / Delta));
            break;
        }
        case AsymptoticCase::lowT_delta_zero: {
            if (Delta != 0.0)
                throw Error(ErrorCode::invalid_argument, "lowT_delta_zero requires Delta = 0");
            // Second term carries the friction coefficient explicitly; this
            // matches the exact s -> 0 limit of the Gaussian-family form.
            rep.value = (1.0 + n) * (1.0 + n) / (2.0 * T * T) +
                        n * n * P0 * P0 * gamma * p.t * std::pow(T, n - 3.0) / (2.0 * M);
            rep.predicate_ratio = ratio(s);
            break;
        }
        case AsymptoticCase::tau_delta_pos: {
            if (!(Delta > 0.0))
                throw Error(ErrorCode::invalid_argument, "tau_delta_pos requires Delta > 0");
            rep.value = 2.0 * n * n * (P0 * P0 + Delta) / (T * T * Delta);
            rep.predicate_ratio = ratio(2.0 * em1 * M * T / Delta);
            break;
        }
        case AsymptoticCase::tau_delta_zero: {
            rep.value = n * n * P0 * P0 / (M * T * T * T * em1);
            // Valid while the T^-2 (kinetic) term is negligible.
            const double tail = 2.0 * n + em1;
            rep.predicate_ratio =
                P0 != 0.0 ? ratio(M * T * tail * tail / (2.0 * em1 * n * n * P0 * P0))
                          : std::numeric_limits<double>::infinity();
            break;
        }
        case AsymptoticCase::tau_p0_zero: {
            const double tail = 2.0 * n + em1;
            rep.value = tail * tail / (2.0 * T * T * em1 * em1);
            const double p0_term = n * n * P0 * P0 / (M * T * T * T * em1);
            rep.predicate_ratio = ratio(p0_term / rep.value);
            break;
        }
    }
    if (rep.predicate_ratio && *rep.predicate_ratio > 1.0)
        rep.warnings.push_back(std::string("validity predicate for ") + to_string(acase) +
                               " not satisfied (ratio " +
                               std::to_string(*rep.predicate_ratio) + " > 1)");
    return rep;
}

double crb_trace_bound(const FisherMatrix2& chi) {
    const double d = chi.det();
    if (!(d > 0.0))
        throw Error(ErrorCode::singular_fim, "Fisher matrix not positive definite");
    return (chi.chi11 + chi.chi22) / d;
}

FisherMatrix2 fisher_matrix_two_bath(const GaussianMomentumState& state, const BathStage& stage1,
                                     const BathStage& stage2) {
    state.validate();
    stage1.validate();
    stage2.validate();

    auto stage_terms = [](const BathStage& b) {
        const double s = b.duration * b.law.gamma * std::pow(b.temperature, b.law.exponent);
        const double E2 = std::exp(-2.0 * s);
        const double dsdT = static_cast<double>(b.law.exponent) * b.duration * b.law.gamma *
                            std::pow(b.temperature, b.law.exponent - 1);
        return std::pair{E2, dsdT};
    };

    const auto [E1sq, ds1] = stage_terms(stage1);
    const auto [E2sq, ds2] = stage_terms(stage2);
    const double M = stage1.impurity_mass;
    const double T1 = stage1.temperature, T2 = stage2.temperature;
    const double V0 = state.variance;

    const double V1 = M * T1 * (1.0 - E1sq) + V0 * E1sq;
    const double var = M * T2 * (1.0 - E2sq) + V1 * E2sq;
    const double mu = state.mean * std::sqrt(E1sq * E2sq);

    const double dmu1 = -mu * ds1;
    const double dmu2 = -mu * ds2;
    const double dV1 = M * (1.0 - E1sq) + ds1 * E1sq * (2.0 * M * T1 - 2.0 * V0);
    const double dvar1 = E2sq * dV1;
    const double dvar2 = M * (1.0 - E2sq) + ds2 * E2sq * (2.0 * M * T2 - 2.0 * V1);

    if (!(var > 0.0))
        throw Error(ErrorCode::invalid_argument, "two-bath final variance must be positive");

    FisherMatrix2 chi;
    chi.chi11 = dmu1 * dmu1 / var + dvar1 * dvar1 / (2.0 * var * var);
    chi.chi12 = dmu1 * dmu2 / var + dvar1 * dvar2 / (2.0 * var * var);
    chi.chi22 = dmu2 * dmu2 / var + dvar2 * dvar2 / (2.0 * var * var);

    if (!(chi.det() > 1e-12 * chi.chi11 * chi.chi22))
        throw Error(ErrorCode::singular_fim,
                    "two-bath Fisher matrix singular (is one exposure zero?)");
    return chi;
}

FisherMatrix2 fisher_matrix_two_bath_numeric(const GaussianMomentumState& state,
                                             const BathStage& stage1, const BathStage& stage2,
                                             const FiNumericOptions& opts) {
    state.validate();
    stage1.validate();
    stage2.validate();

    auto final_state = [&](double T1, double T2) {
        BathStage s1 = stage1, s2 = stage2;
        s1.temperature = T1;
        s2.temperature = T2;  // durations fixed
        return evolve_gaussian(evolve_gaussian(state, s1), s2);
    };

    const GaussianMomentumState center = final_state(stage1.temperature, stage2.temperature);
    if (!(center.variance > 0.0))
        throw Error(ErrorCode::invalid_argument, "two-bath final variance must be positive");

    auto partial = [&](int which, double P) {
        const double T = which == 0 ? stage1.temperature : stage2.temperature;
        const double h = opts.rel_step * T;
        auto at = [&](double shift) {
            return which == 0 ? final_state(stage1.temperature + shift, stage2.temperature)
                              : final_state(stage1.temperature, stage2.temperature + shift);
        };
        const GaussianMomentumState p1 = at(h), m1 = at(-h), p2 = at(0.5 * h), m2 = at(-0.5 * h);
        const double d_h = (density_at(p1, P) - density_at(m1, P)) / (2.0 * h);
        const double d_h2 = (density_at(p2, P) - density_at(m2, P)) / h;
        return (4.0 * d_h2 - d_h) / 3.0;
    };

    const double sd = std::sqrt(center.variance);
    const double lo = center.mean - opts.span_sigmas * sd;
    const double hi = center.mean + opts.span_sigmas * sd;
    QuadratureOptions qopts;
    qopts.rel_tol = opts.quad_rel_tol;
    qopts.max_intervals = opts.max_intervals;

    auto entry = [&](int j, int k) {
        return integrate_adaptive(
                   [&](double P) {
                       return partial(j, P) * partial(k, P) / density_at(center, P);
                   },
                   lo, hi, qopts)
            .value;
    };

    FisherMatrix2 chi;
    chi.chi11 = entry(0, 0);
    chi.chi12 = entry(0, 1);
    chi.chi22 = entry(1, 1);
    return chi;
}

double cramer_rao(const FisherReport& fi, long long n_measurements) {
    if (n_measurements < 1)
        throw Error(ErrorCode::invalid_argument, "cramer_rao requires N >= 1");
    if (!(fi.value > 0.0))
        throw Error(ErrorCode::zero_information, "Fisher information is zero");
    return 1.0 / (static_cast<double>(n_measurements) * fi.value);
}

}  // namespace itherm
