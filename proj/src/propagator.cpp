#include "itherm/propagator.hpp"

#include <algorithm>
#include <cmath>

#include "itherm/errors.hpp"
#include "itherm/rng.hpp"

namespace itherm {

void GaussianMomentumState::validate() const {
    if (!(variance >= 0.0) || !std::isfinite(variance) || !std::isfinite(mean))
        throw Error(ErrorCode::invalid_argument, "GaussianMomentumState requires variance >= 0");
}

void BathStage::validate() const {
    law.validate();
    if (!(temperature > 0.0))
        throw Error(ErrorCode::invalid_argument, "BathStage.temperature must be > 0");
    if (!(duration >= 0.0))
        throw Error(ErrorCode::invalid_argument, "BathStage.duration must be >= 0");
    if (!(impurity_mass > 0.0))
        throw Error(ErrorCode::invalid_argument, "BathStage.impurity_mass must be > 0");
}

double BathStage::relaxation_time() const { return itherm::relaxation_time(law, temperature); }

double GridDensity::mass() const {
    double s = 0.0;
    for (double f : values) s += f;
    return s * step;
}

double GridDensity::max_value() const {
    double m = 0.0;
    for (double f : values) m = std::max(m, f);
    return m;
}

void GridDensity::validate(double mass_tol) const {
    if (values.size() < 2 || !(step > 0.0))
        throw Error(ErrorCode::invalid_argument, "GridDensity needs >= 2 points, positive step");
    for (double f : values)
        if (!(f >= 0.0) || !std::isfinite(f))
            throw Error(ErrorCode::invalid_argument, "GridDensity values must be >= 0");
    const double m = mass();
    if (std::abs(m - 1.0) > mass_tol)
        throw Error(ErrorCode::invalid_argument,
                    "GridDensity mass " + std::to_string(m) + " outside 1 +/- tolerance");
}

double GridDensity::l1_distance(const GridDensity& other) const {
    if (other.values.size() != values.size())
        throw Error(ErrorCode::invalid_argument, "grid size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += std::abs(values[i] - other.values[i]);
    return s * step;
}

double GridDensity::sup_distance(const GridDensity& other) const {
    if (other.values.size() != values.size())
        throw Error(ErrorCode::invalid_argument, "grid size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        s = std::max(s, std::abs(values[i] - other.values[i]));
    return s;
}

GridSpec default_grid(const GaussianMomentumState& state, const BathStage& bath, int n,
                      double span) {
    const double scale = std::sqrt(std::max(state.variance, bath.stationary_variance()));
    const double L = std::abs(state.mean) + span * scale;
    return {-L, L, n};
}

GridDensity discretize(const GaussianMomentumState& state, const GridSpec& grid) {
    state.validate();
    if (state.is_delta())
        throw Error(ErrorCode::delta_state, "delta state has no pointwise density");
    if (grid.n < 2 || !(grid.p_max > grid.p_min))
        throw Error(ErrorCode::invalid_argument, "bad grid spec");
    GridDensity out;
    out.p_min = grid.p_min;
    out.step = (grid.p_max - grid.p_min) / (grid.n - 1);
    out.values.resize(static_cast<std::size_t>(grid.n));
    for (int i = 0; i < grid.n; ++i)
        out.values[static_cast<std::size_t>(i)] = density_at(state, out.momentum(static_cast<std::size_t>(i)));
    return out;
}

GaussianMomentumState evolve_gaussian(const GaussianMomentumState& state, const BathStage& bath) {
    state.validate();
    bath.validate();
    const double tau = bath.relaxation_time();
    const double decay = std::exp(-bath.duration / tau);
    const double eq_var = bath.stationary_variance();
    GaussianMomentumState out;
    out.mean = state.mean * decay;
    out.variance = eq_var + (state.variance - eq_var) * decay * decay;
    return out;
}

double density_at(const GaussianMomentumState& state, double P) {
    state.validate();
    if (state.is_delta())
        throw Error(ErrorCode::delta_state, "delta state has no pointwise density");
    const double z = P - state.mean;
    return std::exp(-0.5 * z * z / state.variance) / std::sqrt(2.0 * M_PI * state.variance);
}

GaussianMomentumState compose_baths(const GaussianMomentumState& state,
                                    std::span<const BathStage> stages) {
    if (stages.empty())
        throw Error(ErrorCode::invalid_argument, "compose_baths requires at least one stage");
    GaussianMomentumState s = state;
    for (const BathStage& stage : stages) s = evolve_gaussian(s, stage);
    return s;
}

std::vector<double> spectral_coefficients(const GaussianMomentumState& state,
                                          double impurity_mass, double temperature,
                                          int n_modes) {
    state.validate();
    if (state.is_delta())
        throw Error(ErrorCode::delta_state, "spectral expansion requires variance > 0");
    if (n_modes < 8)
        throw Error(ErrorCode::invalid_argument, "spectral expansion requires n_modes >= 8");

    const double scale = std::sqrt(2.0 * impurity_mass * temperature);
    const double b = state.mean / scale;                    // center in y units
    const double sd_y = std::sqrt(state.variance) / scale;  // sd in y units

    // A_n = pi^{-1/2} sum_i w_i h_n(b + sqrt(2) sd_y x_i) over the
    // Gauss-Hermite rule: exact because h_n is a polynomial.
    const GaussHermiteRule rule = gauss_hermite(std::max(64, n_modes));
    std::vector<double> coeffs(static_cast<std::size_t>(n_modes), 0.0);
    std::vector<double> h;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double y = b + std::sqrt(2.0) * sd_y * rule.nodes[i];
        hermite_orthonormal(n_modes, y, h);
        const double w = rule.weights[i];
        for (std::size_t n = 0; n < coeffs.size(); ++n) coeffs[n] += w * h[n];
    }
    const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
    for (double& a : coeffs) a *= inv_sqrt_pi;
    return coeffs;
}

GridDensity evolve_spectral(const GaussianMomentumState& state, const BathStage& bath,
                            int n_modes, const SpectralOptions& opts) {
    bath.validate();
    std::vector<double> coeffs =
        spectral_coefficients(state, bath.impurity_mass, bath.temperature, n_modes);

    const double tau = bath.relaxation_time();
    for (std::size_t n = 0; n < coeffs.size(); ++n)
        coeffs[n] *= std::exp(-static_cast<double>(n) * bath.duration / tau);

    // Mass mode A_0 = pi^{-1/4} is scale-stable; the damped tail must be
    // negligible against it or the truncated reconstruction is unreliable.
    const double tail =
        std::max(std::abs(coeffs[coeffs.size() - 1]), std::abs(coeffs[coeffs.size() - 2]));
    if (tail > opts.truncation_tol * std::abs(coeffs[0]))
        throw Error(ErrorCode::truncation_not_converged,
                    "damped tail coefficient " + std::to_string(tail) +
                        " exceeds tolerance; increase n_modes or duration");

    const GridSpec grid = opts.grid ? *opts.grid : default_grid(state, bath);
    const double scale = std::sqrt(2.0 * bath.impurity_mass * bath.temperature);

    GridDensity out;
    out.p_min = grid.p_min;
    out.step = (grid.p_max - grid.p_min) / (grid.n - 1);
    out.values.resize(static_cast<std::size_t>(grid.n));

    std::vector<double> h;
    for (int i = 0; i < grid.n; ++i) {
        const double P = out.momentum(static_cast<std::size_t>(i));
        const double y = P / scale;
        const double envelope = std::exp(-y * y);
        double f = 0.0;
        if (envelope > 0.0) {
            hermite_orthonormal(n_modes, y, h);
            double s = 0.0;
            for (std::size_t n = 0; n < coeffs.size(); ++n) s += coeffs[n] * h[n];
            f = s * envelope / scale;
        }
        out.values[static_cast<std::size_t>(i)] = f;
    }

    // Truncated Hermite series can undershoot zero by rounding-level amounts
    // in the far tail.
    const double floor = -1e-10 * out.max_value();
    for (double& f : out.values) {
        if (f < floor)
            throw Error(ErrorCode::truncation_not_converged,
                        "reconstruction significantly negative; increase n_modes");
        if (f < 0.0) f = 0.0;
    }
    return out;
}

namespace {

/// Chang-Cooper weight delta(w) = 1/w - 1/(e^w - 1), extended by its limit
/// 1/2 at w = 0.
double chang_cooper_delta(double w) {
    if (std::abs(w) < 1e-4) return 0.5 - w / 12.0 + w * w * w / 720.0;
    return 1.0 / w - 1.0 / std::expm1(w);
}

double grid_mass(const std::vector<double>& f, double h) {
    double s = 0.0;
    for (double v : f) s += v;
    return s * h;
}

struct TridiagonalWorkspace {
    std::vector<double> lower, diag, upper, rhs, scratch;
};

// Thomas algorithm; diag is strictly dominant for the schemes built here.
void solve_tridiagonal(TridiagonalWorkspace& w, std::vector<double>& x) {
    const std::size_t n = w.diag.size();
    w.scratch.resize(n);
    double beta = w.diag[0];
    x[0] = w.rhs[0] / beta;
    for (std::size_t i = 1; i < n; ++i) {
        w.scratch[i] = w.upper[i - 1] / beta;
        beta = w.diag[i] - w.lower[i] * w.scratch[i];
        x[i] = (w.rhs[i] - w.lower[i] * x[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= w.scratch[i + 1] * x[i + 1];
}

}  // namespace

GridDensity evolve_fdm(const GridDensity& initial, const BathStage& bath, double dt,
                       const FdmOptions& opts, FdmDiagnostics* diagnostics) {
    bath.validate();
    if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "evolve_fdm requires dt > 0");
    if (!(opts.theta >= 0.5 && opts.theta <= 1.0))
        throw Error(ErrorCode::invalid_argument, "evolve_fdm theta must lie in [0.5, 1]");

    const std::size_t n = initial.size();
    const double h = initial.step;
    const double tau = bath.relaxation_time();
    const double diffusion_half = bath.stationary_variance() / tau;  // D/2 = M T / tau

    auto check_boundaries = [&](const std::vector<double>& f) {
        const double peak = *std::max_element(f.begin(), f.end());
        if (f.front() > opts.boundary_tol * peak || f.back() > opts.boundary_tol * peak)
            throw Error(ErrorCode::grid_too_narrow,
                        "boundary density above tolerance; widen the momentum grid");
    };
    check_boundaries(initial.values);  // before the mass check: the narrower diagnosis wins
    initial.validate();

    // Per-edge flux J_e = drift_e [(1-delta_e) f_{i+1} + delta_e f_i]
    //                + (D/2) (f_{i+1} - f_i)/h, with drift(P) = P/tau.
    // Edge coefficients are constant over the stage.
    std::vector<double> edge_hi(n - 1), edge_lo(n - 1);
    double max_drift_speed = 0.0;
    for (std::size_t e = 0; e + 1 < n; ++e) {
        const double p_edge = initial.p_min + h * (static_cast<double>(e) + 0.5);
        const double drift = p_edge / tau;
        max_drift_speed = std::max(max_drift_speed, std::abs(drift));
        const double w = drift * h / diffusion_half;
        const double delta = chang_cooper_delta(w);
        edge_hi[e] = drift * (1.0 - delta) + diffusion_half / h;  // coefficient on f_{i+1}
        edge_lo[e] = drift * delta - diffusion_half / h;          // coefficient on f_i
    }

    // Operator rows of df/dt = (J_{i+1/2} - J_{i-1/2})/h with zero-flux ends.
    std::vector<double> L_lower(n, 0.0), L_diag(n, 0.0), L_upper(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (i + 1 < n) {  // right edge e = i
            L_upper[i] += edge_hi[i] / h;
            L_diag[i] += edge_lo[i] / h;
        }
        if (i > 0) {  // left edge e = i-1
            L_diag[i] -= edge_hi[i - 1] / h;
            L_lower[i] -= edge_lo[i - 1] / h;
        }
    }

    const double total_t = bath.duration;
    const std::size_t full_steps = static_cast<std::size_t>(std::floor(total_t / dt + 1e-12));
    const double remainder = total_t - static_cast<double>(full_steps) * dt;

    std::vector<double> f = initial.values;
    std::vector<double> fnew(n);
    TridiagonalWorkspace ws;
    ws.lower.resize(n);
    ws.diag.resize(n);
    ws.upper.resize(n);
    ws.rhs.resize(n);

    FdmDiagnostics diag;
    diag.advective_cfl = max_drift_speed * dt / h;
    diag.diffusion_number = diffusion_half * dt / (h * h);

    auto step = [&](double step_dt, double theta) {
        for (std::size_t i = 0; i < n; ++i) {
            ws.lower[i] = -theta * step_dt * L_lower[i];
            ws.diag[i] = 1.0 - theta * step_dt * L_diag[i];
            ws.upper[i] = -theta * step_dt * L_upper[i];
            double explicit_part = f[i] * (1.0 + (1.0 - theta) * step_dt * L_diag[i]);
            if (i > 0) explicit_part += (1.0 - theta) * step_dt * L_lower[i] * f[i - 1];
            if (i + 1 < n) explicit_part += (1.0 - theta) * step_dt * L_upper[i] * f[i + 1];
            ws.rhs[i] = explicit_part;
        }
        const double mass_before = grid_mass(f, h);
        solve_tridiagonal(ws, fnew);
        f.swap(fnew);
        const double mass_after = grid_mass(f, h);
        diag.max_mass_drift = std::max(diag.max_mass_drift, std::abs(mass_after - mass_before));
        check_boundaries(f);
        ++diag.steps;
    };

    std::size_t startup = std::min<std::size_t>(static_cast<std::size_t>(std::max(opts.startup_steps, 0)), full_steps);
    for (std::size_t s = 0; s < startup; ++s) step(dt, 1.0);
    for (std::size_t s = startup; s < full_steps; ++s) step(dt, opts.theta);
    if (remainder > 1e-12 * dt) step(remainder, 1.0);

    double min_density = 0.0;
    double peak = *std::max_element(f.begin(), f.end());
    for (double& v : f) {
        min_density = std::min(min_density, v);
        if (v < 0.0) {
            if (v < -1e-10 * peak)
                throw Error(ErrorCode::invalid_argument,
                            "finite-difference solution went significantly negative");
            v = 0.0;
        }
    }
    diag.min_density = min_density;
    if (diagnostics) *diagnostics = diag;

    GridDensity out;
    out.p_min = initial.p_min;
    out.step = h;
    out.values = std::move(f);
    return out;
}

std::vector<double> sample_trajectories(const GaussianMomentumState& state,
                                        const BathStage& bath, std::size_t n_traj,
                                        std::uint64_t seed) {
    state.validate();
    bath.validate();
    if (n_traj == 0)
        throw Error(ErrorCode::invalid_argument, "sample_trajectories requires n_traj >= 1");

    const double tau = bath.relaxation_time();
    const double decay = std::exp(-bath.duration / tau);
    const double kick_sd =
        std::sqrt(bath.stationary_variance() * (-std::expm1(-2.0 * bath.duration / tau)));
    const double init_sd = std::sqrt(state.variance);

    std::vector<double> out(n_traj);
    for (std::size_t i = 0; i < n_traj; ++i) {
        rng::Stream stream(seed, i);
        double p0 = state.mean;
        if (init_sd > 0.0) p0 += init_sd * stream.normal();
        double p = p0 * decay;
        if (kick_sd > 0.0) p += kick_sd * stream.normal();
        out[i] = p;
    }
    return out;
}

}  // namespace itherm
