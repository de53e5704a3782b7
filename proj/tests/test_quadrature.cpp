#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "itherm/errors.hpp"
#include "itherm/quadrature.hpp"

using namespace itherm;

namespace {

// Brute-force series for integral_0^inf x^p / sinh^2 x dx via
// 1/sinh^2 x = 4 sum_m m e^{-2mx}, so the integral is 4 sum_m m p! / (2m)^{p+1}.
double sinh2_moment_series(int p, int terms) {
    double factorial = 1.0;
    for (int k = 2; k <= p; ++k) factorial *= k;
    double sum = 0.0;
    for (int m = 1; m <= terms; ++m)
        sum += 4.0 * m * factorial / std::pow(2.0 * m, p + 1);
    return sum;
}

}  // namespace

TEST_CASE("series oracles for the sinh^2 moments") {
    const double pi = M_PI;
    CHECK(sinh2_moment_series(2, 2000000) == doctest::Approx(pi * pi / 6.0).epsilon(1e-6));
    CHECK(sinh2_moment_series(4, 20000) == doctest::Approx(pi * pi * pi * pi / 30.0).epsilon(1e-10));
}

TEST_CASE("adaptive quadrature reproduces the sinh^2 moments") {
    auto x2 = [](double x) {
        if (x == 0.0) return 0.0;
        const double s = std::sinh(x);
        return x * x / (s * s);
    };
    auto x4 = [](double x) {
        if (x == 0.0) return 0.0;
        const double s = std::sinh(x);
        return x * x * x * x / (s * s);
    };
    QuadratureOptions opts;
    opts.rel_tol = 1e-12;
    const double i2 = integrate_adaptive(x2, 0.0, 40.0, opts).value;
    const double i4 = integrate_adaptive(x4, 0.0, 40.0, opts).value;
    CHECK(i2 == doctest::Approx(M_PI * M_PI / 6.0).epsilon(1e-11));
    CHECK(i4 == doctest::Approx(std::pow(M_PI, 4) / 30.0).epsilon(1e-11));
}

TEST_CASE("adaptive quadrature basics") {
    const double s = integrate_adaptive([](double x) { return std::sin(x); }, 0.0, M_PI).value;
    CHECK(s == doctest::Approx(2.0).epsilon(1e-12));

    QuadratureOptions starved;
    starved.rel_tol = 1e-14;
    starved.max_intervals = 2;
    CHECK_THROWS_WITH_AS(
        integrate_adaptive([](double x) { return std::sin(103.0 * x * x); }, 0.0, 10.0, starved),
        doctest::Contains("NONCONVERGENT_QUADRATURE"), Error);
}

TEST_CASE("Gauss-Hermite nodes and weights: known 3-point rule") {
    const GaussHermiteRule r = gauss_hermite(3);
    CHECK(r.nodes[0] == doctest::Approx(-1.224744871391589).epsilon(1e-14));
    CHECK(r.nodes[1] == doctest::Approx(0.0));
    CHECK(r.nodes[2] == doctest::Approx(1.224744871391589).epsilon(1e-14));
    CHECK(r.weights[1] == doctest::Approx(2.0 * std::sqrt(M_PI) / 3.0).epsilon(1e-14));
    CHECK(r.weights[0] == doctest::Approx(std::sqrt(M_PI) / 6.0).epsilon(1e-14));
}

TEST_CASE("Gauss-Hermite rules integrate Gaussian moments exactly") {
    // integral x^{2k} e^{-x^2} dx = sqrt(pi) (2k-1)!! / 2^k
    for (int n : {8, 33, 64, 128, 200}) {
        const GaussHermiteRule r = gauss_hermite(n);
        double moment0 = 0.0, moment2 = 0.0, moment10 = 0.0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i) {
            const double x = r.nodes[i], w = r.weights[i];
            moment0 += w;
            moment2 += w * x * x;
            moment10 += w * std::pow(x, 10);
        }
        const double sqrt_pi = std::sqrt(M_PI);
        CHECK(moment0 == doctest::Approx(sqrt_pi).epsilon(1e-13));
        CHECK(moment2 == doctest::Approx(0.5 * sqrt_pi).epsilon(1e-13));
        CHECK(moment10 == doctest::Approx(945.0 / 32.0 * sqrt_pi).epsilon(1e-12));
    }
}

TEST_CASE("orthonormal Hermite recurrence is orthonormal under GH quadrature") {
    const int n_modes = 40;
    const GaussHermiteRule r = gauss_hermite(64);
    std::vector<double> h;
    std::vector<double> gram(n_modes * n_modes, 0.0);
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        hermite_orthonormal(n_modes, r.nodes[i], h);
        for (int a = 0; a < n_modes; ++a)
            for (int b = a; b < n_modes; ++b)
                gram[a * n_modes + b] += r.weights[i] * h[a] * h[b];
    }
    for (int a = 0; a < n_modes; ++a)
        for (int b = a; b < n_modes; ++b)
            CHECK(gram[a * n_modes + b] == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-12));
}
