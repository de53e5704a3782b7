#include "itherm/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "itherm/errors.hpp"

namespace itherm {

namespace {

// 15-point Kronrod extension of the 7-point Gauss rule (positive abscissae).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, integral, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double result_gauss = 0.0;
    double result_kronrod = 0.0;
    for (int j = 0; j < 8; ++j) {
        if (j == 7) {
            const double fc = f(c);
            result_kronrod += kWgk[7] * fc;
            result_gauss += kWg[3] * fc;
            break;
        }
        const double fv = f(c - h * kXgk[j]) + f(c + h * kXgk[j]);
        result_kronrod += kWgk[j] * fv;
        if (j % 2 == 1) result_gauss += kWg[j / 2] * fv;
    }
    Segment s;
    s.a = a;
    s.b = b;
    s.integral = result_kronrod * h;
    const double diff = std::abs(result_kronrod - result_gauss) * std::abs(h);
    // QUADPACK-style sharpened error estimate.
    s.error = diff;
    if (diff > 0.0) s.error = std::min(diff, 200.0 * diff * std::sqrt(diff * 200.0));
    return s;
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    const QuadratureOptions& opts) {
    if (!(b >= a)) throw Error(ErrorCode::invalid_argument, "integration bounds reversed");
    if (a == b) return {0.0, 0.0, 0};

    std::priority_queue<Segment> queue;
    Segment whole = gk15(f, a, b);
    double total = whole.integral;
    double total_err = whole.error;
    queue.push(whole);
    int n_intervals = 1;

    auto tolerance = [&] { return std::max(opts.abs_tol, opts.rel_tol * std::abs(total)); };

    while (total_err > tolerance()) {
        if (n_intervals >= opts.max_intervals) {
            throw Error(ErrorCode::nonconvergent_quadrature,
                        "tolerance not met after " + std::to_string(n_intervals) +
                            " subdivisions (err=" + std::to_string(total_err) + ")");
        }
        Segment worst = queue.top();
        queue.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            throw Error(ErrorCode::nonconvergent_quadrature,
                        "interval collapsed to rounding before tolerance was met");
        }
        Segment left = gk15(f, worst.a, mid);
        Segment right = gk15(f, mid, worst.b);
        total += left.integral + right.integral - worst.integral;
        total_err += left.error + right.error - worst.error;
        queue.push(left);
        queue.push(right);
        ++n_intervals;
    }
    return {total, total_err, n_intervals};
}

void hermite_orthonormal(int n, double x, std::vector<double>& out) {
    out.resize(static_cast<std::size_t>(n));
    if (n <= 0) return;
    constexpr double kPiQuarter = 0.7511255444649425;  // pi^(-1/4)
    double pm1 = kPiQuarter;
    out[0] = pm1;
    if (n == 1) return;
    double p = std::sqrt(2.0) * x * kPiQuarter;
    out[1] = p;
    for (int k = 1; k + 1 < n; ++k) {
        const double pnext =
            x * std::sqrt(2.0 / (k + 1.0)) * p - std::sqrt(k / (k + 1.0)) * pm1;
        pm1 = p;
        p = pnext;
        out[static_cast<std::size_t>(k) + 1] = p;
    }
}

namespace {

// Orthonormal Hermite value and derivative at x for a fixed degree n.
void hermite_value_deriv(int n, double x, double& value, double& deriv) {
    constexpr double kPiQuarter = 0.7511255444649425;
    double pm1 = kPiQuarter;
    if (n == 0) {
        value = pm1;
        deriv = 0.0;
        return;
    }
    double p = std::sqrt(2.0) * x * kPiQuarter;
    for (int k = 1; k < n; ++k) {
        const double pnext =
            x * std::sqrt(2.0 / (k + 1.0)) * p - std::sqrt(k / (k + 1.0)) * pm1;
        pm1 = p;
        p = pnext;
    }
    value = p;
    deriv = std::sqrt(2.0 * n) * pm1;
}

}  // namespace

GaussHermiteRule gauss_hermite(int n) {
    if (n < 1) throw Error(ErrorCode::invalid_argument, "gauss_hermite requires n >= 1");
    GaussHermiteRule rule;
    rule.nodes.assign(static_cast<std::size_t>(n), 0.0);
    rule.weights.assign(static_cast<std::size_t>(n), 0.0);

    // All roots lie inside |x| < sqrt(2n+1); the local root spacing is
    // ~ pi / sqrt(2n+1 - x^2) (oscillation wavelength), which guides a
    // downward sign-change scan. Each bracket is then closed by bisection
    // and polished with safeguarded Newton. Slower than extrapolated initial
    // guesses but stable for every order used here.
    const double turning = std::sqrt(2.0 * n + 1.0);
    auto value_at = [&](double x) {
        double v, d;
        hermite_value_deriv(n, x, v, d);
        return v;
    };
    auto scan_step = [&](double x) {
        const double k2 = std::max(2.0 * n + 1.0 - x * x, 4.0);
        return 0.3 * M_PI / std::sqrt(k2);
    };

    const int half = (n + 1) / 2;
    double upper = turning + 1.0;  // h_n > 0 beyond the largest root
    double upper_value = value_at(upper);
    for (int i = 0; i < half; ++i) {
        // March down until the polynomial changes sign.
        double hi = upper, hi_val = upper_value;
        double lo = hi, lo_val = hi_val;
        while (true) {
            lo -= scan_step(lo);
            lo_val = value_at(lo);
            if ((lo_val < 0.0) != (hi_val < 0.0) || lo_val == 0.0) break;
            if (lo < -1.0)
                throw Error(ErrorCode::nonconvergent_quadrature,
                            "Hermite root scan ran past the origin");
            hi = lo;
            hi_val = lo_val;
        }
        // Bisect to ~1e-6, then Newton (kept inside the bracket).
        for (int it = 0; it < 40 && hi - lo > 1e-6; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double mv = value_at(mid);
            if (mv == 0.0) {
                lo = hi = mid;
                break;
            }
            if ((mv < 0.0) == (lo_val < 0.0)) {
                lo = mid;
                lo_val = mv;
            } else {
                hi = mid;
                hi_val = mv;
            }
        }
        double z = 0.5 * (lo + hi);
        double value = 0.0, deriv = 1.0;
        for (int it = 0; it < 100; ++it) {
            hermite_value_deriv(n, z, value, deriv);
            double dz = value / deriv;
            double znew = z - dz;
            if (!(znew >= lo && znew <= hi)) znew = 0.5 * (lo + hi);
            if ((value < 0.0) == (lo_val < 0.0)) {
                lo = z;
            } else {
                hi = z;
            }
            const bool done = std::abs(znew - z) <= 1e-15 * std::max(1.0, std::abs(znew));
            z = znew;
            if (done) break;
        }
        hermite_value_deriv(n, z, value, deriv);

        // Christoffel weight via the derivative identity: w = 1/(n * h_{n-1}^2)
        // and h_n'(x) = sqrt(2n) h_{n-1}(x).
        const double hnm1 = deriv / std::sqrt(2.0 * n);
        const double w = 1.0 / (n * hnm1 * hnm1);

        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = z;
        rule.nodes[static_cast<std::size_t>(i)] = -z;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
        rule.weights[static_cast<std::size_t>(i)] = w;

        // Resume the scan from just inside the root found.
        upper = z - 0.05 * scan_step(z);
        upper_value = value_at(upper);
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return rule;
}

}  // namespace itherm
