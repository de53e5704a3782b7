#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "itherm/core.hpp"

namespace itherm {

/// Gaussian momentum distribution of the impurity, stored as (mean, variance).
/// Reports and the CLI use the width parameter Delta = 2 * variance;
/// variance == 0 encodes
/// the fixed-momentum delta state f(P) = delta(P - mean).
struct GaussianMomentumState {
    double mean = 0.0;
    double variance = 0.0;

    bool is_delta() const { return variance == 0.0; }
    double delta_width() const { return 2.0 * variance; }

    void validate() const;
};

/// One leg of a protocol: impurity of mass M immersed for `duration` in a bath
/// of temperature `temperature` whose drag follows `law`.
struct BathStage {
    double temperature = 1.0;
    FrictionLaw law;
    double duration = 0.0;
    double impurity_mass = 1.0;

    double relaxation_time() const;
    /// Long-time (Gibbs) momentum variance M*T.
    double stationary_variance() const { return impurity_mass * temperature; }

    void validate() const;
};

/// f(t,P) sampled on a uniform momentum grid.
struct GridDensity {
    double p_min = 0.0;
    double step = 0.0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double momentum(std::size_t i) const { return p_min + step * static_cast<double>(i); }
    /// sum f_i h
    double mass() const;
    double max_value() const;
    /// Mass within tolerance of 1 and pointwise nonnegativity.
    void validate(double mass_tol = 1e-6) const;

    double l1_distance(const GridDensity& other) const;
    double sup_distance(const GridDensity& other) const;
};

struct GridSpec {
    double p_min = -10.0;
    double p_max = 10.0;
    int n = 2048;
};

/// Symmetric grid wide enough for both the initial and the stationary state:
/// [-L, L] with L = |mean| + span * sqrt(max(variance, M T)).
GridSpec default_grid(const GaussianMomentumState& state, const BathStage& bath, int n = 2048,
                      double span = 10.0);

/// Pointwise discretization of a Gaussian state (delta states cannot be
/// discretized).
GridDensity discretize(const GaussianMomentumState& state, const GridSpec& grid);

/// Closed-form propagation: mean decays by e^{-t/tau}, variance relaxes to
/// M T with rate 2/tau.
GaussianMomentumState evolve_gaussian(const GaussianMomentumState& state, const BathStage& bath);

/// Gaussian pdf value; throws Error(delta_state) for variance == 0.
double density_at(const GaussianMomentumState& state, double P);

/// Left fold of evolve_gaussian over the stages (stages must be nonempty).
GaussianMomentumState compose_baths(const GaussianMomentumState& state,
                                    std::span<const BathStage> stages);

struct SpectralOptions {
    /// Declared non-converged when the damped tail coefficient exceeds this
    /// fraction of the mass mode.
    double truncation_tol = 1e-8;
    std::optional<GridSpec> grid;
};

/// Eigenfunction propagation: the Fokker-Planck generator maps to a quantum
/// harmonic oscillator under y = P/sqrt(2MT); mode n decays as e^{-n t/tau}.
/// Coefficients are computed by Gauss-Hermite quadrature of the oscillator
/// inner product, which is exact for the Gaussian initial data used here.
GridDensity evolve_spectral(const GaussianMomentumState& state, const BathStage& bath,
                            int n_modes, const SpectralOptions& opts = {});

/// Oscillator-basis coefficients A_0..A_{n_modes-1} of a Gaussian state at
/// bath scale (M, T). Exposed so mode-decay can be checked directly.
std::vector<double> spectral_coefficients(const GaussianMomentumState& state,
                                          double impurity_mass, double temperature, int n_modes);

struct FdmOptions {
    /// Time-centering: 1 = backward Euler, 0.5 = Crank-Nicolson.
    double theta = 0.5;
    /// Leading backward-Euler startup steps that damp any rough components
    /// before the centered scheme takes over.
    int startup_steps = 2;
    /// Densities at the grid edge above this fraction of the peak raise
    /// Error(grid_too_narrow).
    double boundary_tol = 1e-12;
};

struct FdmDiagnostics {
    int steps = 0;
    double advective_cfl = 0.0;    // max |drift| dt / h
    double diffusion_number = 0.0; // (D/2) dt / h^2
    double max_mass_drift = 0.0;   // per step
    double min_density = 0.0;
};

/// Conservative Chang-Cooper finite-difference propagation with zero-flux
/// boundaries. The exponential flux weighting makes the discretized Gibbs
/// state an exact fixed point.
GridDensity evolve_fdm(const GridDensity& initial, const BathStage& bath, double dt,
                       const FdmOptions& opts = {}, FdmDiagnostics* diagnostics = nullptr);

/// Exact one-step Ornstein-Uhlenbeck sampling of the terminal momentum:
///   P(t) = P(0) e^{-t/tau} + xi sqrt(MT (1 - e^{-2t/tau})).
/// Per-trajectory counter-based streams keyed on (seed, index) make the
/// result independent of execution order or thread count.
std::vector<double> sample_trajectories(const GaussianMomentumState& state,
                                        const BathStage& bath, std::size_t n_traj,
                                        std::uint64_t seed);

}  // namespace itherm
