#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "itherm/propagator.hpp"

namespace itherm {

/// A thermometry protocol: everything except the bath temperature is treated
/// as known calibration (initial state, drag law, exposure time, mass).
struct Protocol {
    GaussianMomentumState initial;
    BathStage bath;  // bath.temperature plays the role of the true T

    void validate() const;
};

/// First and second moments of the evolved momentum distribution.
/// var_p2_zero_mean is the P0 = 0 form 2 (var_p)^2 used throughout the
/// kinetic-measurement analysis; var_p2 is the full Gaussian fourth-moment
/// identity 2 (var_p)^2 + 4 mean_p^2 var_p.
struct MomentPrediction {
    double mean_p = 0.0;
    double var_p = 0.0;
    double mean_p2 = 0.0;
    double var_p2 = 0.0;
    double var_p2_zero_mean = 0.0;
};

/// Moments at a trial temperature T (the protocol's own temperature is
/// ignored; time, state, law are its calibration).
MomentPrediction predict_moments(const Protocol& protocol, double T);

/// Error propagation for the momentum-expectation measurement:
/// delta^2 T = var(P) / (d_T mean P)^2. Throws Error(zero_signal) for P0 = 0.
double predict_error_momentum(const Protocol& protocol, double T);

/// Error propagation for the kinetic-energy measurement (zero-mean
/// convention): delta^2 T = var(P^2) / (d_T mean P^2)^2.
double predict_error_kinetic(const Protocol& protocol, double T);

/// Method-of-moments inversion of mean P = P0 e^{-t Gamma T^n}.
/// Throws Error(out_of_range) when the sample mean falls outside (0, P0).
double estimate_T_from_mean(std::span<const double> samples, const Protocol& protocol);

struct EnergyEstimatorOptions {
    double bracket_lo = 1e-6;
    double bracket_hi = 1e3;
    int scan_points = 240;  // log-spaced sign-change scan before root polish
    double rel_tol = 1e-12;
};

/// Method-of-moments inversion of the second-moment map
///   s(T) = M T (1 - e^{-2 t Gamma T^n} (1 - Delta/(2MT))).
/// The map need not be monotone when Delta > 0, so the bracket is scanned
/// for sign changes first: no crossing raises Error(no_root), several raise
/// Error(nonunique_root) (tighten the bracket with prior knowledge).
double estimate_T_from_energy(std::span<const double> samples, const Protocol& protocol,
                              const EnergyEstimatorOptions& opts = {});

enum class EstimatorKind { momentum_mean, kinetic_energy };

const char* to_string(EstimatorKind k);

struct McConfig {
    EstimatorKind estimator = EstimatorKind::momentum_mean;
    Protocol protocol;
    int trials = 1000;
    int samples_per_trial = 100;
    std::uint64_t seed = 0;
    EnergyEstimatorOptions energy_opts;
};

struct EstimationReport {
    EstimatorKind estimator = EstimatorKind::momentum_mean;
    double T_true = 0.0;
    int trials = 0;
    int samples_per_trial = 0;
    std::uint64_t seed = 0;
    int censored = 0;  // trials discarded for estimator range errors

    double t_hat_mean = 0.0;
    double empirical_mse = 0.0;
    double predicted_error_per_sample = 0.0;  // error propagation, one sample
    double predicted_error_per_estimate = 0.0;
    double crb_per_sample = 0.0;  // 1 / Fisher information
    double crb_per_estimate = 0.0;
};

/// Seeded Monte Carlo check of estimator performance against the error
/// propagation prediction and the Cramer-Rao bound. Per-trial sampling uses
/// counter-derived seeds, so the report is identical for a fixed seed
/// regardless of scheduling. Uncensored per-trial estimates can be captured
/// through estimates_out.
EstimationReport mc_experiment(const McConfig& config,
                               std::vector<double>* estimates_out = nullptr);

}  // namespace itherm
