#pragma once

#include <optional>
#include <string>
#include <vector>

#include "itherm/propagator.hpp"

namespace itherm {

enum class FiMethod { quadrature, gaussian_closed, general_closed, asymptotic };

const char* to_string(FiMethod m);

/// Low-temperature / characteristic-time limits of the temperature Fisher
/// information of the evolved momentum distribution.
enum class AsymptoticCase {
    lowT_delta_pos,   // T^n t Gamma << 1, Delta > 0
    lowT_delta_zero,  // T^n t Gamma << 1, Delta = 0
    tau_delta_pos,    // t = tau, Delta > 0, T -> 0
    tau_delta_zero,   // t = tau, Delta = 0, P0 != 0
    tau_p0_zero,      // t = tau, Delta = 0, P0 = 0
};

const char* to_string(AsymptoticCase c);

/// Parameter echo carried by every Fisher report: the scalar protocol
/// (initial state, bath law, time) at which the information was evaluated.
struct FiParams {
    double T = 0.0;
    double t = 0.0;
    double P0 = 0.0;
    double Delta = 0.0;  // width convention, = 2 * variance
    double M = 1.0;
    double Gamma = 1.0;
    int n = 4;

    static FiParams from(const GaussianMomentumState& state, const BathStage& bath);
    GaussianMomentumState state() const { return {P0, 0.5 * Delta}; }
    BathStage bath() const;
};

struct FisherReport {
    double value = 0.0;
    FiMethod method = FiMethod::gaussian_closed;
    std::optional<AsymptoticCase> asymptotic_case;
    FiParams params;
    /// For the general closed form: relative deviation from fi_gaussian.
    std::optional<double> cross_check_rel_dev;
    /// For asymptotic cases: the "should be small" ratio divided by its 0.1
    /// threshold; > 1 means the validity predicate is not satisfied.
    std::optional<double> predicate_ratio;
    std::vector<std::string> warnings;
};

struct FiNumericOptions {
    double rel_step = 1e-4;       // finite-difference step h = rel_step * T
    double quad_rel_tol = 1e-10;
    int max_intervals = 4000;
    double span_sigmas = 12.0;    // integration window around the mean
};

/// Fisher information by direct quadrature of [d_T f]^2 / f with a
/// Richardson-extrapolated central difference in T. The protocol time and
/// initial state are held fixed under the derivative.
FisherReport fi_numeric(const GaussianMomentumState& state, const BathStage& bath,
                        const FiNumericOptions& opts = {});

/// Exact Gaussian-family Fisher information
///   (d_T mu)^2/sigma^2 + (d_T sigma^2)^2/(2 sigma^4)
/// with mu(T), sigma^2(T) of the evolved state at fixed protocol time.
FisherReport fi_gaussian(const GaussianMomentumState& state, const BathStage& bath);

/// The mean (momentum-signal) term of fi_gaussian alone. This equals the
/// information delivered by a momentum-expectation measurement, the
/// reciprocal of its error-propagation variance.
double fi_gaussian_mean_term(const GaussianMomentumState& state, const BathStage& bath);

/// General closed form in terms of R = e^{2 t Gamma T^n} - 1: an
/// independent algebraic route, cross-checked against fi_gaussian.
FisherReport fi_general_closed(const GaussianMomentumState& state, const BathStage& bath);

/// Quoted asymptotic formulas with their validity predicates evaluated and
/// reported (warning, not error, when violated).
FisherReport fi_asymptotic(AsymptoticCase acase, const FiParams& params);

/// Symmetric 2x2 Fisher information matrix of a two-bath protocol.
struct FisherMatrix2 {
    double chi11 = 0.0;
    double chi12 = 0.0;
    double chi22 = 0.0;

    double det() const { return chi11 * chi22 - chi12 * chi12; }
    bool is_psd(double tol = 1e-12) const {
        return chi11 >= 0.0 && chi22 >= 0.0 && det() >= -tol * chi11 * chi22;
    }
};

/// (chi11 + chi22) / det: the Cramer-Rao bound on the total simultaneous
/// variance delta^2 T1 + delta^2 T2. Throws Error(singular_fim) if det <= 0.
double crb_trace_bound(const FisherMatrix2& chi);

/// Analytic Gaussian-family information matrix for estimating (T1, T2) from
/// the final momentum distribution after two bath stages; derivatives at
/// fixed (t1, t2). Throws Error(singular_fim) when a temperature is
/// unidentifiable (e.g. zero exposure to one of the baths).
FisherMatrix2 fisher_matrix_two_bath(const GaussianMomentumState& state, const BathStage& stage1,
                                     const BathStage& stage2);

/// Finite-difference/quadrature evaluation of the same matrix, used as an
/// independent check of the analytic route.
FisherMatrix2 fisher_matrix_two_bath_numeric(const GaussianMomentumState& state,
                                             const BathStage& stage1, const BathStage& stage2,
                                             const FiNumericOptions& opts = {});

/// Single-parameter Cramer-Rao bound (dT)^2 >= 1/(N F).
double cramer_rao(const FisherReport& fi, long long n_measurements);

}  // namespace itherm
