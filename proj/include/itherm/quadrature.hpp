#pragma once

#include <functional>
#include <vector>

namespace itherm {

struct QuadratureOptions {
    double rel_tol = 1e-8;
    double abs_tol = 0.0;
    int max_intervals = 4000;
};

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int intervals = 0;
};

/// Adaptive Gauss-Kronrod (G7,K15) integration of f over the finite interval
/// [a, b]. Throws Error(nonconvergent_quadrature) if the tolerance cannot be
/// met within max_intervals subdivisions.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    const QuadratureOptions& opts = {});

struct GaussHermiteRule {
    std::vector<double> nodes;    // ascending
    std::vector<double> weights;  // for weight function exp(-x^2) on (-inf, inf)
};

/// n-point Gauss-Hermite rule: sum_i w_i g(x_i) = integral g(x) exp(-x^2) dx,
/// exact for polynomials g of degree <= 2n-1.
GaussHermiteRule gauss_hermite(int n);

/// Orthonormal Hermite polynomial values h_0..h_{n-1} at x (normalized so that
/// integral h_j h_k exp(-x^2) dx = delta_jk). Three-term recurrence in
/// normalized form, which stays O(1) where the raw polynomials overflow.
void hermite_orthonormal(int n, double x, std::vector<double>& out);

}  // namespace itherm
