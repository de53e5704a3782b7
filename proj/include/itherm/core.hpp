#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "itherm/quadrature.hpp"

namespace itherm {

/// Bath/impurity constants. Internally the library works in units where
/// hbar = kB = m = v = 1; carrying the constants here lets callers supply
/// dimensionful values, with the dimensionless combinations
/// T~ = kB T/(m v^2) and G~ = G/(hbar v) available as accessors.
struct PhysicalParams {
    double impurity_mass = 1.0;  // M
    double boson_mass = 1.0;     // m
    double sound_velocity = 1.0; // v
    double coupling = 1.0;       // G (energy * length)
    double hbar = 1.0;
    double kB = 1.0;  // temperatures are energies by default

    /// T~ = kB T / (m v^2)
    double dimensionless_temperature(double T) const {
        return kB * T / (boson_mass * sound_velocity * sound_velocity);
    }
    /// G~ = G / (hbar v)
    double dimensionless_coupling() const { return coupling / (hbar * sound_velocity); }

    /// The Fokker-Planck treatment assumes M >> m; we flag (not reject)
    /// mass ratios below 10.
    bool heavy_impurity() const { return impurity_mass >= 10.0 * boson_mass; }

    /// Throws Error(invalid_argument) unless all fields are strictly positive.
    void validate() const;
};

/// Coupling/temperature windows of the linearized friction law.
enum class Regime {
    strong_high,  // 1/G~ << T~ << 1  (n = 2)
    strong_low,   // T~ << 1/G~ << 1  (n = 4)
    weak,         // G~ << 1, T~ << 1 (n = 4)
};

const char* to_string(Regime r);
int friction_exponent(Regime r);

enum class LawProvenance { asymptotic, fitted };

/// Linear drag law F = -Gamma * P * T^n with relaxation time 1/(Gamma T^n).
struct FrictionLaw {
    double gamma = 0.0;  // momentum-decay rate per T^n
    int exponent = 4;    // n, 2 or 4
    LawProvenance provenance = LawProvenance::asymptotic;
    std::optional<Regime> regime;  // set when provenance == asymptotic

    void validate() const;
};

/// |r(k)|^2 for Bogoliubov quasiparticles scattering off the impurity;
/// k is dimensionless (units of m v / hbar). The exact Bogoliubov-de Gennes
/// amplitude is out of scope; callers plug in a model.
class ReflectionModel {
  public:
    ReflectionModel() : ReflectionModel(unit()) {}

    static ReflectionModel unit();
    /// |r|^2 = min(c k^2, 1)
    static ReflectionModel quadratic(double c);
    static ReflectionModel custom(std::function<double(double)> probability,
                                  std::string name = "custom");

    /// Evaluates |r(k)|^2, checking the [0, 1] range.
    double operator()(double k) const;
    const std::string& name() const { return name_; }

  private:
    ReflectionModel(std::function<double(double)> f, std::string name)
        : eval_(std::move(f)), name_(std::move(name)) {}
    std::function<double(double)> eval_;
    std::string name_;
};

/// Asymptotic friction coefficient for the given regime:
///   strong_high: n=2, Gamma = 2 pi / (3 hbar M v^2)
///   strong_low:  n=4, Gamma = 8 pi^3 G^2 / (15 hbar^3 m^2 M v^8)
///   weak:        n=4, Gamma = 2 pi^3 G^2 / (15 hbar^3 m^2 M v^8)
FrictionLaw gamma_coefficient(const PhysicalParams& params, Regime regime);

/// Outcome of regime classification: either a regime whose inequality chain
/// holds with the requested margin, or a report of what failed.
struct RegimeClassification {
    std::optional<Regime> regime;
    struct ChainCheck {
        Regime candidate;
        double margin;          // min ratio across the chain's inequalities
        std::string weakest;    // the inequality that limits the margin
    };
    std::vector<ChainCheck> checks;
    bool ok() const { return regime.has_value(); }
};

/// Tests the three inequality chains of the asymptotic friction law, each
/// "a << b" read as b/a >= margin (default one decade).
RegimeClassification classify_regime(const PhysicalParams& params, double T,
                                     double margin = 10.0);

/// tau = 1/(Gamma T^n). Throws for T <= 0.
double relaxation_time(const FrictionLaw& law, double T);

/// D = 2 Gamma M T^(n+1), i.e. D = -2 F M T / P for the linear law.
double diffusion_coefficient(const FrictionLaw& law, double T, double impurity_mass);

/// F = -Gamma P T^n.
double friction_force_asymptotic(double P, const FrictionLaw& law, double T);

struct FrictionIntegralOptions {
    double rel_tol = 1e-8;
    int max_intervals = 4000;
    /// The integrand is cut off where the sinh^2 denominator has decayed to
    /// ~exp(-2*u_max) of its small-k scale; 40 puts the tail below 1e-30.
    double u_max = 40.0;
};

/// Friction force from quadrature of the full quasiparticle-scattering
/// integral:
///   F = -(m^2 v^2 P) / (2 pi hbar M T~) *
///       integral_0^inf dk k^2 |r(k)|^2 (2+k^2) / [sinh^2(k sqrt(4+k^2)/(4 T~)) sqrt(4+k^2)]
double friction_force_integral(double P, const PhysicalParams& params,
                               const ReflectionModel& reflection, double T,
                               const FrictionIntegralOptions& opts = {});

struct FrictionFit {
    FrictionLaw law;           // exponent rounded to the admissible {2,4}
    double raw_exponent = 0.0; // unrounded log-log slope
    double raw_amplitude = 0.0;
};

/// Fits F/(-P) = Gamma * T^n on a log-spaced temperature grid of the full
/// integral, for calibrating/validating reflection models against the
/// asymptotic law.
FrictionFit fit_friction_law(const PhysicalParams& params, const ReflectionModel& reflection,
                             double T_lo, double T_hi, int n_points = 25,
                             const FrictionIntegralOptions& opts = {});

}  // namespace itherm
