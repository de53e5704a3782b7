// itherm: impurity-thermometry experiment runner.
//
// Every subcommand emits a reproducibility header (library version plus the
// fully resolved configuration); re-running an artifact from its embedded
// config regenerates it byte for byte.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "itherm/core.hpp"
#include "itherm/errors.hpp"
#include "itherm/estimators.hpp"
#include "itherm/fisher.hpp"
#include "itherm/propagator.hpp"
#include "itherm/serialize.hpp"
#include "itherm/stats.hpp"
#include "itherm/version.hpp"

namespace {

using itherm::Error;
using itherm::ErrorCode;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Small parsing helpers

/// Grid syntax: "a:b:N" (linear), "a:b:Nlog" (log-spaced), "x,y,z", or "x".
std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> out;
    if (spec.empty()) throw ConfigError("empty grid specification");
    if (spec.find(':') != std::string::npos) {
        std::istringstream ss(spec);
        std::string a, b, c;
        if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c))
            throw ConfigError("grid must be a:b:N or a:b:Nlog: " + spec);
        bool log_spaced = false;
        if (c.size() >= 3 && c.substr(c.size() - 3) == "log") {
            log_spaced = true;
            c = c.substr(0, c.size() - 3);
        }
        const double lo = std::stod(a);
        const double hi = std::stod(b);
        const int n = std::stoi(c);
        if (n < 1) throw ConfigError("grid needs at least one point");
        if (n == 1) return {lo};
        if (log_spaced && !(lo > 0.0 && hi > 0.0))
            throw ConfigError("log grid needs positive endpoints");
        for (int i = 0; i < n; ++i) {
            const double f = static_cast<double>(i) / (n - 1);
            out.push_back(log_spaced ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)))
                                     : lo + f * (hi - lo));
        }
        return out;
    }
    std::istringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    if (out.empty()) throw ConfigError("empty grid specification");
    return out;
}

/// Duration syntax: a plain number, "tau", or "<scale>tau" (e.g. "0.5tau"),
/// resolved against the stage's own relaxation time.
double parse_duration(const std::string& spec, double tau) {
    const auto pos = spec.find("tau");
    if (pos == std::string::npos) return std::stod(spec);
    if (pos == 0 && spec == "tau") return tau;
    if (pos + 3 != spec.size()) throw ConfigError("bad duration: " + spec);
    return std::stod(spec.substr(0, pos)) * tau;
}

itherm::Regime parse_regime(const std::string& name) {
    if (name == "strong-high") return itherm::Regime::strong_high;
    if (name == "strong-low") return itherm::Regime::strong_low;
    if (name == "weak") return itherm::Regime::weak;
    throw ConfigError("unknown regime: " + name);
}

itherm::AsymptoticCase parse_case(const std::string& name) {
    if (name == "lowT-delta-pos") return itherm::AsymptoticCase::lowT_delta_pos;
    if (name == "lowT-delta-zero") return itherm::AsymptoticCase::lowT_delta_zero;
    if (name == "tau-delta-pos") return itherm::AsymptoticCase::tau_delta_pos;
    if (name == "tau-delta-zero") return itherm::AsymptoticCase::tau_delta_zero;
    if (name == "tau-p0-zero") return itherm::AsymptoticCase::tau_p0_zero;
    throw ConfigError("unknown asymptotic case: " + name);
}

// ---------------------------------------------------------------------------
// Output plumbing

std::string resolve_out_path(const std::string& out) {
    if (out.empty()) return out;
    std::filesystem::path p(out);
    if (p.is_relative()) {
        if (const char* dir = std::getenv("ITHERM_OUT_DIR"); dir && *dir)
            p = std::filesystem::path(dir) / p;
    }
    return p.string();
}

/// Atomic publish: write to a sibling temp file, then rename over the target.
void write_output(const std::string& out, const std::string& content) {
    if (out.empty()) {
        std::cout << content;
        return;
    }
    const std::string path = resolve_out_path(out);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw ConfigError("cannot open output file: " + tmp);
        os << content;
        if (!os.good()) throw ConfigError("failed writing output: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

std::string csv_header(const json& config) {
    std::string s = "# itherm ";
    s += itherm::kVersion;
    s += "\n# config: ";
    s += config.dump();
    s += "\n";
    return s;
}

std::string json_artifact(const json& config, const json& result) {
    json j{{"version", itherm::kVersion}, {"config", config}, {"result", result}};
    return j.dump(2) + "\n";
}

std::string fmt(double x) { return itherm::format_double(x); }

/// Short form for column labels (values themselves stay fully precise).
std::string fmt_label(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", x);
    return buf;
}

/// Index-parallel loop; each index owns its output slot, so scheduling cannot
/// change the result.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const unsigned hw = std::thread::hardware_concurrency();
    if (hw <= 1 || n < 4) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(hw, n));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Shared option bundles

struct BathOptions {
    double M = 1.0;
    double gamma = 1.0;
    int n = 4;
    std::string t_spec = "tau";
    // Alternative to --Gamma/--n: derive the law from a coupling regime and
    // the physical constants below.
    std::string regime;
    double m = 1.0, v = 1.0, G = 1.0, hbar = 1.0, kB = 1.0;

    void add(CLI::App* cmd) {
        cmd->add_option("--M", M, "impurity mass");
        cmd->add_option("--Gamma", gamma, "friction coefficient");
        cmd->add_option("--n", n, "friction exponent (2 or 4)")->check(CLI::IsMember({2, 4}));
        cmd->add_option("--t", t_spec, "exposure time: number, 'tau', or '<x>tau'");
        cmd->add_option("--regime", regime,
                        "derive Gamma and n from a regime instead of --Gamma/--n")
            ->check(CLI::IsMember({"strong-high", "strong-low", "weak"}));
        cmd->add_option("--m", m, "boson mass (with --regime)");
        cmd->add_option("--v", v, "sound velocity (with --regime)");
        cmd->add_option("--G", G, "impurity-boson coupling (with --regime)");
        cmd->add_option("--hbar", hbar, "Planck constant (with --regime)");
        cmd->add_option("--kB", kB, "Boltzmann constant (with --regime)");
    }

    itherm::BathStage stage(double T) const {
        itherm::BathStage b;
        b.temperature = T;
        if (regime.empty()) {
            b.law.gamma = gamma;
            b.law.exponent = n;
        } else {
            itherm::PhysicalParams params;
            params.impurity_mass = M;
            params.boson_mass = m;
            params.sound_velocity = v;
            params.coupling = G;
            params.hbar = hbar;
            params.kB = kB;
            b.law = gamma_coefficient(params, parse_regime(regime));
        }
        b.impurity_mass = M;
        b.duration = parse_duration(t_spec, b.relaxation_time());
        return b;
    }

    void dump(json& j) const {
        j["M"] = M;
        j["t"] = t_spec;
        if (regime.empty()) {
            j["Gamma"] = gamma;
            j["n"] = n;
        } else {
            j["regime"] = regime;
            j["m"] = m;
            j["v"] = v;
            j["G"] = G;
            j["hbar"] = hbar;
            j["kB"] = kB;
        }
    }
};

struct StateOptions {
    double P0 = 1.0;
    double delta = 0.0;

    void add(CLI::App* cmd) {
        cmd->add_option("--P0", P0, "initial mean momentum");
        cmd->add_option("--Delta", delta, "initial width Delta (= 2 x variance)")
            ->check(CLI::NonNegativeNumber);
    }

    itherm::GaussianMomentumState state() const { return {P0, 0.5 * delta}; }

    void dump(json& j) const {
        j["P0"] = P0;
        j["Delta"] = delta;
    }
};

// ---------------------------------------------------------------------------
// friction

struct FrictionCmd {
    std::string regime = "strong-high";
    std::string reflection;  // unit | quadratic (defaults per regime)
    double c = -1.0;         // quadratic coefficient override
    std::string sweep = "1e-3:1e-1:50log";
    double P = 1.0;
    double M = 1.0, m = 1.0, v = 1.0, G = 1.0, hbar = 1.0, kB = 1.0;
    double quad_rel_tol = 1e-8;
    int quad_max_intervals = 4000;

    void add(CLI::App* cmd) {
        cmd->add_option("--regime", regime, "asymptotic regime benchmarked against")
            ->check(CLI::IsMember({"strong-high", "strong-low", "weak"}));
        cmd->add_option("--reflection", reflection, "reflection model: unit|quadratic");
        cmd->add_option("--c", c, "quadratic reflection coefficient (default from regime)");
        cmd->add_option("--sweep", sweep, "temperature grid (a:b:Nlog, a:b:N, or list)");
        cmd->add_option("--P", P, "probe momentum");
        cmd->add_option("--M", M, "impurity mass");
        cmd->add_option("--m", m, "boson mass");
        cmd->add_option("--v", v, "sound velocity");
        cmd->add_option("--G", G, "impurity-boson coupling");
        cmd->add_option("--hbar", hbar, "Planck constant");
        cmd->add_option("--kB", kB, "Boltzmann constant");
        cmd->add_option("--quad-rel-tol", quad_rel_tol, "quadrature relative tolerance");
        cmd->add_option("--quad-max-intervals", quad_max_intervals,
                        "quadrature subdivision budget");
    }

    json config() const {
        json j{{"subcommand", "friction"}};
        j["regime"] = regime;
        if (!reflection.empty()) j["reflection"] = reflection;
        if (c >= 0.0) j["c"] = c;
        j["sweep"] = sweep;
        j["P"] = P;
        j["M"] = M;
        j["m"] = m;
        j["v"] = v;
        j["G"] = G;
        j["hbar"] = hbar;
        j["kB"] = kB;
        j["quad-rel-tol"] = quad_rel_tol;
        j["quad-max-intervals"] = quad_max_intervals;
        return j;
    }

    std::string run() const {
        itherm::PhysicalParams params;
        params.impurity_mass = M;
        params.boson_mass = m;
        params.sound_velocity = v;
        params.coupling = G;
        params.hbar = hbar;
        params.kB = kB;
        params.validate();

        const itherm::Regime reg = parse_regime(regime);
        const itherm::FrictionLaw law = gamma_coefficient(params, reg);
        const double Gt = params.dimensionless_coupling();

        itherm::ReflectionModel model = itherm::ReflectionModel::unit();
        std::string model_name = reflection;
        if (model_name.empty())
            model_name = (reg == itherm::Regime::strong_high) ? "unit" : "quadratic";
        if (model_name == "quadratic") {
            double coeff = c;
            if (coeff < 0.0)
                coeff = (reg == itherm::Regime::strong_low) ? Gt * Gt : Gt * Gt / 4.0;
            model = itherm::ReflectionModel::quadratic(coeff);
        } else if (model_name != "unit") {
            throw ConfigError("unknown reflection model: " + model_name);
        }

        const std::vector<double> grid = parse_grid(sweep);
        itherm::FrictionIntegralOptions opts;
        opts.rel_tol = quad_rel_tol;
        opts.max_intervals = quad_max_intervals;

        std::vector<double> integral(grid.size()), asymptotic(grid.size());
        std::vector<std::string> rows(grid.size());
        std::exception_ptr failure;
        std::mutex failure_mutex;
        parallel_for(grid.size(), [&](std::size_t i) {
            try {
                const double T = grid[i];
                const double fi = itherm::friction_force_integral(P, params, model, T, opts) / P;
                const double fa = itherm::friction_force_asymptotic(P, law, T) / P;
                integral[i] = fi;
                asymptotic[i] = fa;
                const double rel = (fi - fa) / fa;
                rows[i] = fmt(T) + "," + fmt(fi) + "," + fmt(fa) + "," + fmt(rel) + "\n";
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
        if (failure) std::rethrow_exception(failure);

        std::string body = "T,force_per_momentum_integral,force_per_momentum_asymptotic,"
                           "rel_error\n";
        for (const auto& r : rows) body += r;

        if (grid.size() >= 2) {
            std::vector<double> decay(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i) decay[i] = -integral[i];
            const auto fit = itherm::stats::log_log_fit(grid, decay);
            body += "# fit_exponent: " + fmt(fit.slope) + "\n";
            body += "# fit_prefactor: " + fmt(std::exp(fit.intercept)) + "\n";
            // Empirical crossover: first temperature where the asymptotic law
            // drifts more than 1% from the integral.
            std::string crossover = "none";
            for (std::size_t i = 0; i < grid.size(); ++i) {
                if (std::abs(integral[i] / asymptotic[i] - 1.0) > 0.01) {
                    crossover = fmt(grid[i]);
                    break;
                }
            }
            body += "# crossover_T_1pct: " + crossover + "\n";
        }
        return body;
    }
};

// ---------------------------------------------------------------------------
// propagate

struct PropagateCmd {
    std::string method = "gaussian";
    double T = 1.0;
    BathOptions bath;
    StateOptions state;
    int modes = 128;
    int grid_points = 2048;
    double grid_span = 10.0;
    std::string dt_spec = "";  // default tau/2000

    void add(CLI::App* cmd) {
        cmd->add_option("--method", method, "gaussian|spectral|fdm")
            ->check(CLI::IsMember({"gaussian", "spectral", "fdm"}));
        cmd->add_option("--T", T, "bath temperature")->check(CLI::PositiveNumber);
        bath.add(cmd);
        state.add(cmd);
        cmd->add_option("--modes", modes, "spectral mode count");
        cmd->add_option("--grid-points", grid_points, "momentum grid size");
        cmd->add_option("--grid-span", grid_span, "grid half-width in standard deviations");
        cmd->add_option("--dt", dt_spec, "FDM time step (number or '<x>tau'; default tau/2000)");
    }

    json config() const {
        json j{{"subcommand", "propagate"}, {"method", method}, {"T", T}};
        bath.dump(j);
        state.dump(j);
        j["modes"] = modes;
        j["grid-points"] = grid_points;
        j["grid-span"] = grid_span;
        if (!dt_spec.empty()) j["dt"] = dt_spec;
        return j;
    }

    std::string run(const std::string& format) const {
        const itherm::BathStage stage = bath.stage(T);
        const itherm::GaussianMomentumState initial = state.state();
        const itherm::GridSpec grid =
            itherm::default_grid(initial.is_delta()
                                     ? itherm::GaussianMomentumState{initial.mean, 1e-12}
                                     : initial,
                                 stage, grid_points, grid_span);

        itherm::GridDensity density;
        json extra;
        if (method == "gaussian") {
            const itherm::GaussianMomentumState out = evolve_gaussian(initial, stage);
            extra["mean"] = out.mean;
            extra["variance"] = out.variance;
            if (format == "json") {
                extra["mass"] = 1.0;  // closed form is normalized by construction
                json cfg = config();
                return json_artifact(cfg, extra);
            }
            density = discretize(out, grid);
        } else if (method == "spectral") {
            itherm::SpectralOptions sopts;
            sopts.grid = grid;
            density = evolve_spectral(initial, stage, modes, sopts);
        } else {
            const double tau = stage.relaxation_time();
            const double dt = dt_spec.empty() ? tau / 2000.0 : parse_duration(dt_spec, tau);
            itherm::FdmDiagnostics diag;
            density = evolve_fdm(discretize(initial, grid), stage, dt, {}, &diag);
            extra["steps"] = diag.steps;
            extra["advective_cfl"] = diag.advective_cfl;
            extra["diffusion_number"] = diag.diffusion_number;
            extra["max_mass_drift"] = diag.max_mass_drift;
        }
        if (format == "json") {
            json cfg = config();
            json result = extra;
            result["mass"] = density.mass();
            return json_artifact(cfg, result);
        }

        std::ostringstream os;
        itherm::write_csv(density, os);
        std::string body = os.str();
        for (auto it = extra.begin(); it != extra.end(); ++it)
            body += "# " + it.key() + ": " + it.value().dump() + "\n";
        return body;
    }
};

// ---------------------------------------------------------------------------
// sample

struct SampleCmd {
    double T = 1.0;
    BathOptions bath;
    StateOptions state;
    long long n_traj = 10000;

    void add(CLI::App* cmd) {
        cmd->add_option("--T", T, "bath temperature")->check(CLI::PositiveNumber);
        bath.add(cmd);
        state.add(cmd);
        cmd->add_option("--n-traj", n_traj, "number of trajectories")
            ->check(CLI::PositiveNumber);
    }

    json config(std::uint64_t seed) const {
        json j{{"subcommand", "sample"}, {"T", T}, {"n-traj", n_traj}, {"seed", seed}};
        bath.dump(j);
        state.dump(j);
        return j;
    }

    std::string run(const std::string& format, std::uint64_t seed) const {
        const itherm::BathStage stage = bath.stage(T);
        const std::vector<double> samples = itherm::sample_trajectories(
            state.state(), stage, static_cast<std::size_t>(n_traj), seed);
        if (format == "json") {
            const double mean = itherm::stats::mean(samples);
            const double var = itherm::stats::variance(samples);
            const itherm::GaussianMomentumState predicted =
                evolve_gaussian(state.state(), stage);
            json result{{"count", samples.size()},
                        {"mean", mean},
                        {"variance", var},
                        {"predicted_mean", predicted.mean},
                        {"predicted_variance", predicted.variance}};
            return json_artifact(config(seed), result);
        }
        std::string body = "P\n";
        for (double p : samples) {
            body += fmt(p);
            body += "\n";
        }
        return body;
    }
};

// ---------------------------------------------------------------------------
// fisher

struct FisherCmd {
    std::string method = "all";
    std::string case_name = "tau-delta-zero";
    double T = 0.1;
    BathOptions bath;
    StateOptions state;

    void add(CLI::App* cmd) {
        cmd->add_option("--method", method, "all|numeric|gaussian|general|asymptotic")
            ->check(CLI::IsMember({"all", "numeric", "gaussian", "general", "asymptotic"}));
        cmd->add_option("--case", case_name,
                        "asymptotic case: lowT-delta-pos|lowT-delta-zero|tau-delta-pos|"
                        "tau-delta-zero|tau-p0-zero");
        cmd->add_option("--T", T, "bath temperature")->check(CLI::PositiveNumber);
        bath.add(cmd);
        state.add(cmd);
    }

    json config() const {
        json j{{"subcommand", "fisher"}, {"method", method}, {"T", T}};
        if (method == "all" || method == "asymptotic") j["case"] = case_name;
        bath.dump(j);
        state.dump(j);
        return j;
    }

    std::string run() const {
        const itherm::BathStage stage = bath.stage(T);
        const itherm::GaussianMomentumState initial = state.state();
        json reports = json::array();

        auto numeric_state = initial;
        if (numeric_state.is_delta())
            numeric_state.variance = 0.5e-8 * stage.stationary_variance();

        if (method == "all" || method == "numeric")
            reports.push_back(to_json(fi_numeric(numeric_state, stage)));
        if (method == "all" || method == "gaussian")
            reports.push_back(to_json(fi_gaussian(initial, stage)));
        if (method == "all" || method == "general")
            reports.push_back(to_json(fi_general_closed(initial, stage)));
        if (method == "all" || method == "asymptotic") {
            itherm::FiParams p = itherm::FiParams::from(initial, stage);
            reports.push_back(to_json(fi_asymptotic(parse_case(case_name), p)));
        }
        return json_artifact(config(), json{{"reports", reports}});
    }
};

// ---------------------------------------------------------------------------
// estimate

struct EstimateCmd {
    std::string estimator = "momentum-mean";
    double T = 0.1;
    BathOptions bath;
    StateOptions state;
    int trials = 1000;
    int samples_per_trial = 100;
    double bracket_lo = 1e-6;
    double bracket_hi = 1e3;
    std::string dump_estimates;

    void add(CLI::App* cmd) {
        cmd->add_option("--estimator", estimator, "momentum-mean|kinetic-energy")
            ->check(CLI::IsMember({"momentum-mean", "kinetic-energy"}));
        cmd->add_option("--T", T, "true bath temperature")->check(CLI::PositiveNumber);
        bath.add(cmd);
        state.add(cmd);
        cmd->add_option("--trials", trials, "Monte Carlo trials (>= 100)");
        cmd->add_option("--samples-per-trial", samples_per_trial, "momenta per trial");
        cmd->add_option("--bracket-lo", bracket_lo, "energy-estimator bracket low end");
        cmd->add_option("--bracket-hi", bracket_hi, "energy-estimator bracket high end");
        cmd->add_option("--dump-estimates", dump_estimates,
                        "write raw per-trial estimates to this CSV path");
    }

    json config(std::uint64_t seed) const {
        json j{{"subcommand", "estimate"},
               {"estimator", estimator},
               {"T", T},
               {"trials", trials},
               {"samples-per-trial", samples_per_trial},
               {"seed", seed}};
        bath.dump(j);
        state.dump(j);
        j["bracket-lo"] = bracket_lo;
        j["bracket-hi"] = bracket_hi;
        return j;
    }

    std::string run(std::uint64_t seed) const {
        itherm::McConfig cfg;
        cfg.estimator = estimator == "momentum-mean" ? itherm::EstimatorKind::momentum_mean
                                                     : itherm::EstimatorKind::kinetic_energy;
        cfg.protocol.initial = state.state();
        cfg.protocol.bath = bath.stage(T);
        cfg.trials = trials;
        cfg.samples_per_trial = samples_per_trial;
        cfg.seed = seed;
        cfg.energy_opts.bracket_lo = bracket_lo;
        cfg.energy_opts.bracket_hi = bracket_hi;

        std::vector<double> estimates;
        const itherm::EstimationReport rep =
            mc_experiment(cfg, dump_estimates.empty() ? nullptr : &estimates);
        if (!dump_estimates.empty()) {
            std::string body = csv_header(config(seed));
            body += "T_hat\n";
            for (double t : estimates) {
                body += fmt(t);
                body += "\n";
            }
            write_output(dump_estimates, body);
        }
        return json_artifact(config(seed), to_json(rep));
    }
};

// ---------------------------------------------------------------------------
// two-bath

struct TwoBathCmd {
    std::string T_list = "1e-2,1e-3";
    double T2_explicit = -1.0;
    BathOptions bath;  // shared law for both stages; t spec applies per stage
    StateOptions state;

    void add(CLI::App* cmd) {
        cmd->add_option("--T", T_list,
                        "temperatures; each runs the symmetric protocol T1 = T2 = T");
        cmd->add_option("--T2", T2_explicit,
                        "second-bath temperature (asymmetric run; --T then holds T1)");
        bath.add(cmd);
        state.add(cmd);
    }

    json config() const {
        json j{{"subcommand", "two-bath"}, {"T", T_list}};
        if (T2_explicit > 0.0) j["T2"] = T2_explicit;
        bath.dump(j);
        state.dump(j);
        return j;
    }

    std::string run() const {
        json cases = json::array();
        auto run_case = [&](double T1, double T2) {
            const itherm::BathStage s1 = bath.stage(T1);
            const itherm::BathStage s2 = bath.stage(T2);
            const itherm::FisherMatrix2 chi =
                fisher_matrix_two_bath(state.state(), s1, s2);
            json c = to_json(chi);
            c["T1"] = T1;
            c["T2"] = T2;
            if (T1 == T2) c["trace_bound_over_T2"] = itherm::crb_trace_bound(chi) / (T1 * T1);
            cases.push_back(c);
        };
        if (T2_explicit > 0.0) {
            const std::vector<double> Ts = parse_grid(T_list);
            run_case(Ts.at(0), T2_explicit);
        } else {
            for (double T : parse_grid(T_list)) run_case(T, T);
        }
        return json_artifact(config(), json{{"cases", cases}});
    }
};

// ---------------------------------------------------------------------------
// figure1

struct Figure1Cmd {
    std::string T_list = "0.3,0.2,0.1";
    double P0 = 1.0;
    double M = 1.0;
    int n = 4;
    double gamma = 1.0;
    int points = 500;
    double tmax_tau = 5.0;

    void add(CLI::App* cmd) {
        cmd->add_option("--T", T_list, "temperatures (one curve each)");
        cmd->add_option("--P0", P0, "initial momentum (Delta = 0)");
        cmd->add_option("--M", M, "impurity mass");
        cmd->add_option("--n", n, "friction exponent")->check(CLI::IsMember({2, 4}));
        cmd->add_option("--Gamma", gamma, "friction coefficient");
        cmd->add_option("--points", points, "time-grid points");
        cmd->add_option("--tmax-tau", tmax_tau, "grid upper end in units of tau");
    }

    json config() const {
        return json{{"subcommand", "figure1"}, {"T", T_list},      {"P0", P0},
                    {"M", M},                  {"n", n},           {"Gamma", gamma},
                    {"points", points},        {"tmax-tau", tmax_tau}};
    }

    std::string run() const {
        const std::vector<double> Ts = parse_grid(T_list);
        if (points < 2) throw ConfigError("figure1 needs at least two grid points");

        // Per temperature: gamma = momentum-measurement information at t over
        // the full Fisher information at tau (the ratio that stays below one
        // and climbs toward it as T drops). The companion columns carry the
        // full-information ratios against the T^-3 asymptote and against the
        // tau-time information.
        struct Curve {
            double denom_fi_tau = 0.0;
            double denom_asym = 0.0;
            std::vector<double> gamma, gamma_fi_asym, gamma_fi_tau;
        };
        std::vector<Curve> curves(Ts.size());
        const itherm::GaussianMomentumState init{P0, 0.0};

        for (std::size_t k = 0; k < Ts.size(); ++k) {
            const double T = Ts[k];
            itherm::BathStage at_tau;
            at_tau.temperature = T;
            at_tau.law.gamma = gamma;
            at_tau.law.exponent = n;
            at_tau.impurity_mass = M;
            at_tau.duration = at_tau.relaxation_time();

            Curve& c = curves[k];
            c.denom_fi_tau = fi_gaussian(init, at_tau).value;
            itherm::FiParams p = itherm::FiParams::from(init, at_tau);
            c.denom_asym =
                fi_asymptotic(itherm::AsymptoticCase::tau_delta_zero, p).value;
            c.gamma.resize(static_cast<std::size_t>(points));
            c.gamma_fi_asym.resize(static_cast<std::size_t>(points));
            c.gamma_fi_tau.resize(static_cast<std::size_t>(points));

            const double tau = at_tau.relaxation_time();
            parallel_for(static_cast<std::size_t>(points), [&](std::size_t i) {
                const double t = tmax_tau * tau * static_cast<double>(i) / (points - 1);
                itherm::BathStage b = at_tau;
                b.duration = t;
                const double mean_info =
                    t == 0.0 ? 0.0 : fi_gaussian_mean_term(init, b);
                const double full = t == 0.0 ? 0.0 : fi_gaussian(init, b).value;
                c.gamma[i] = mean_info / c.denom_fi_tau;
                c.gamma_fi_asym[i] = full / c.denom_asym;
                c.gamma_fi_tau[i] = full / c.denom_fi_tau;
            });
        }

        std::string body = "t_over_tau";
        for (double T : Ts) body += ",gamma_T" + fmt_label(T);
        for (double T : Ts) body += ",gamma_fi_asym_T" + fmt_label(T);
        for (double T : Ts) body += ",gamma_fi_tau_T" + fmt_label(T);
        body += "\n";
        for (int i = 0; i < points; ++i) {
            body += fmt(tmax_tau * i / (points - 1));
            for (const auto& c : curves) body += "," + fmt(c.gamma[static_cast<std::size_t>(i)]);
            for (const auto& c : curves)
                body += "," + fmt(c.gamma_fi_asym[static_cast<std::size_t>(i)]);
            for (const auto& c : curves)
                body += "," + fmt(c.gamma_fi_tau[static_cast<std::size_t>(i)]);
            body += "\n";
        }
        for (std::size_t k = 0; k < Ts.size(); ++k) {
            const auto& g = curves[k].gamma;
            const double mx = *std::max_element(g.begin(), g.end());
            body += "# max_gamma_T" + fmt_label(Ts[k]) + ": " + fmt(mx) + "\n";
        }
        return body;
    }
};

// ---------------------------------------------------------------------------
// sweep

struct SweepCmd {
    std::string subject = "fisher";
    std::string grid_spec;
    BathOptions bath;
    StateOptions state;

    void add(CLI::App* cmd) {
        cmd->add_option("--subject", subject, "fisher|error-momentum|error-kinetic")
            ->check(CLI::IsMember({"fisher", "error-momentum", "error-kinetic"}));
        cmd->add_option("--grid", grid_spec, "temperature grid (a:b:Nlog, a:b:N, or list)")
            ->required();
        bath.add(cmd);
        state.add(cmd);
    }

    json config() const {
        json j{{"subcommand", "sweep"}, {"subject", subject}, {"grid", grid_spec}};
        bath.dump(j);
        state.dump(j);
        return j;
    }

    itherm::AsymptoticCase pick_case() const {
        const bool at_tau = bath.t_spec == "tau";
        if (at_tau && state.delta == 0.0 && state.P0 != 0.0)
            return itherm::AsymptoticCase::tau_delta_zero;
        if (at_tau && state.delta == 0.0) return itherm::AsymptoticCase::tau_p0_zero;
        if (at_tau) return itherm::AsymptoticCase::tau_delta_pos;
        if (state.delta == 0.0) return itherm::AsymptoticCase::lowT_delta_zero;
        return itherm::AsymptoticCase::lowT_delta_pos;
    }

    std::string run() const {
        const std::vector<double> grid = parse_grid(grid_spec);
        const itherm::AsymptoticCase acase = pick_case();
        const itherm::GaussianMomentumState init = state.state();

        struct Row {
            std::string text;
            double primary = 0.0;
        };
        std::vector<Row> rows(grid.size());
        std::exception_ptr failure;
        std::mutex failure_mutex;

        parallel_for(grid.size(), [&](std::size_t i) {
            try {
                const double T = grid[i];
                const itherm::BathStage stage = bath.stage(T);
                itherm::FiParams p = itherm::FiParams::from(init, stage);
                Row& row = rows[i];
                if (subject == "fisher") {
                    auto numeric_state = init;
                    if (numeric_state.is_delta())
                        numeric_state.variance = 0.5e-8 * stage.stationary_variance();
                    const double numeric = fi_numeric(numeric_state, stage).value;
                    const double closed = fi_gaussian(init, stage).value;
                    const double general = fi_general_closed(init, stage).value;
                    const double asym = fi_asymptotic(acase, p).value;
                    row.primary = closed;
                    row.text = fmt(T) + "," + fmt(numeric) + "," + fmt(closed) + "," +
                               fmt(general) + "," + fmt(asym) + "," +
                               fmt(std::abs(numeric - closed) / closed) + "," +
                               fmt(std::abs(general - closed) / closed) + "," +
                               fmt(std::abs(asym - closed) / closed) + "\n";
                } else {
                    itherm::Protocol proto{init, stage};
                    const bool momentum = subject == "error-momentum";
                    const double closed = momentum
                                              ? predict_error_momentum(proto, T)
                                              : predict_error_kinetic(proto, T);
                    // Independent route through the information terms.
                    const double mean_term = fi_gaussian_mean_term(init, stage);
                    const double full = fi_gaussian(init, stage).value;
                    const double via_fi =
                        momentum ? 1.0 / mean_term : 1.0 / (full - mean_term);
                    const itherm::AsymptoticCase meas_case =
                        momentum ? itherm::AsymptoticCase::tau_delta_zero
                                 : itherm::AsymptoticCase::tau_p0_zero;
                    const double asym = 1.0 / fi_asymptotic(meas_case, p).value;
                    row.primary = closed;
                    row.text = fmt(T) + "," + fmt(closed) + "," + fmt(via_fi) + "," +
                               fmt(asym) + "," + fmt(std::abs(via_fi - closed) / closed) +
                               "," + fmt(std::abs(asym - closed) / closed) + "\n";
                }
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
        if (failure) std::rethrow_exception(failure);

        std::string body;
        if (subject == "fisher") {
            body = "T,fi_numeric,fi_gaussian,fi_general,fi_asymptotic,"
                   "dev_numeric_gaussian,dev_general_gaussian,dev_asymptotic_gaussian\n";
        } else {
            body = "T,error_closed,error_via_fi,error_asymptotic,"
                   "dev_via_fi,dev_asymptotic\n";
        }
        for (const auto& r : rows) body += r.text;

        if (grid.size() >= 2) {
            std::vector<double> primary(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i) primary[i] = rows[i].primary;
            const auto fit = itherm::stats::log_log_fit(grid, primary);
            body += "# fit_slope: " + fmt(fit.slope) + "\n";
            body += "# asymptotic_case: " + std::string(to_string(acase)) + "\n";
        }
        return body;
    }
};

// ---------------------------------------------------------------------------
// config-file handling: flags override file values

std::vector<std::string> inject_config(int argc, char** argv,
                                       const std::vector<std::string>& subcommands) {
    std::vector<std::string> args(argv + 1, argv + argc);

    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;

    std::ifstream is(config_path);
    if (!is) throw ConfigError("cannot read config file: " + config_path);
    json cfg;
    try {
        is >> cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("config file must hold a JSON object");

    // Locate (or inject) the subcommand token.
    std::size_t sub_pos = args.size();
    for (std::size_t i = 0; i < args.size(); ++i) {
        for (const auto& s : subcommands)
            if (args[i] == s) sub_pos = std::min(sub_pos, i);
    }
    if (sub_pos == args.size()) {
        if (!cfg.contains("subcommand"))
            throw ConfigError("config file carries no subcommand and none was given");
        args.insert(args.begin(), cfg["subcommand"].get<std::string>());
        sub_pos = 0;
    }

    // Inject file values for keys the command line does not mention.
    std::vector<std::string> injected;
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        const std::string key = it.key();
        if (key == "subcommand" || key == "config" || key == "out") continue;
        const std::string flag = "--" + key;
        bool present = false;
        for (const auto& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) present = true;
        if (present) continue;
        std::string value;
        if (it.value().is_string()) value = it.value().get<std::string>();
        else value = it.value().dump();
        injected.push_back(flag + "=" + value);
    }
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, injected.begin(),
                injected.end());
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"impurity thermometry toolkit"};
    app.fallthrough(true);

    std::string config_path, out_path, format;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "JSON config file (flags override)");
    app.add_option("--out", out_path, "output file (default stdout; atomic rename)");
    app.add_option("--seed", seed, "RNG seed for sampling subcommands");
    app.add_option("--format", format, "csv|json where the subcommand supports both");

    FrictionCmd friction;
    PropagateCmd propagate;
    SampleCmd sample;
    FisherCmd fisher;
    EstimateCmd estimate;
    TwoBathCmd two_bath;
    Figure1Cmd figure1;
    SweepCmd sweep;

    CLI::App* c_friction = app.add_subcommand("friction", "friction law vs the full integral");
    friction.add(c_friction);
    CLI::App* c_propagate = app.add_subcommand("propagate", "evolve the momentum distribution");
    propagate.add(c_propagate);
    CLI::App* c_sample = app.add_subcommand("sample", "draw terminal momenta");
    sample.add(c_sample);
    CLI::App* c_fisher = app.add_subcommand("fisher", "temperature Fisher information");
    fisher.add(c_fisher);
    CLI::App* c_estimate = app.add_subcommand("estimate", "Monte Carlo estimator benchmark");
    estimate.add(c_estimate);
    CLI::App* c_two_bath = app.add_subcommand("two-bath", "two-temperature Fisher matrix");
    two_bath.add(c_two_bath);
    CLI::App* c_figure1 = app.add_subcommand("figure1", "information-ratio curves");
    figure1.add(c_figure1);
    CLI::App* c_sweep = app.add_subcommand("sweep", "method-comparison sweeps over T");
    sweep.add(c_sweep);
    app.require_subcommand(0, 1);

    try {
        const std::vector<std::string> subnames = {"friction", "propagate", "sample",
                                                   "fisher",   "estimate",  "two-bath",
                                                   "figure1",  "sweep"};
        std::vector<std::string> args = inject_config(argc, argv, subnames);
        // CLI11 parses reversed argv.
        std::reverse(args.begin(), args.end());
        app.parse(args);

        if (app.get_subcommands().empty()) {
            std::cerr << app.help() << std::endl;
            return kExitConfig;
        }
        const std::string sub = app.get_subcommands().front()->get_name();

        auto finish_csv = [&](const json& cfg, const std::string& body) {
            write_output(out_path, csv_header(cfg) + body);
        };

        if (sub == "friction") {
            if (!format.empty() && format != "csv")
                throw ConfigError("friction emits CSV only");
            finish_csv(friction.config(), friction.run());
        } else if (sub == "propagate") {
            const std::string f = format.empty() ? "csv" : format;
            if (f != "csv" && f != "json") throw ConfigError("format must be csv or json");
            if (f == "json") write_output(out_path, propagate.run(f));
            else finish_csv(propagate.config(), propagate.run(f));
        } else if (sub == "sample") {
            const std::string f = format.empty() ? "csv" : format;
            if (f != "csv" && f != "json") throw ConfigError("format must be csv or json");
            if (f == "json") write_output(out_path, sample.run(f, seed));
            else finish_csv(sample.config(seed), sample.run(f, seed));
        } else if (sub == "fisher") {
            if (!format.empty() && format != "json")
                throw ConfigError("fisher emits JSON only");
            write_output(out_path, fisher.run());
        } else if (sub == "estimate") {
            if (!format.empty() && format != "json")
                throw ConfigError("estimate emits JSON only");
            write_output(out_path, estimate.run(seed));
        } else if (sub == "two-bath") {
            if (!format.empty() && format != "json")
                throw ConfigError("two-bath emits JSON only");
            write_output(out_path, two_bath.run());
        } else if (sub == "figure1") {
            if (!format.empty() && format != "csv")
                throw ConfigError("figure1 emits CSV only");
            finish_csv(figure1.config(), figure1.run());
        } else if (sub == "sweep") {
            if (!format.empty() && format != "csv")
                throw ConfigError("sweep emits CSV only");
            finish_csv(sweep.config(), sweep.run());
        }
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "config error: " << e.what() << std::endl;
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return e.is_numerical() ? kExitNumerical : kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
}
