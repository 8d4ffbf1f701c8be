#pragma once

// Deterministic quadrature used by the analytic layer: adaptive Simpson in 1D
// (with optional interior breakpoints for piecewise integrands), cached
// Gauss-Legendre rules, and sphere/ball integrals in d = 2, 3.

#include <functional>
#include <vector>

#include "germgrain/core.hpp"

namespace germgrain {

using Fn1D = std::function<double(double)>;

// Adaptive Simpson on [a, b] to absolute tolerance `abs_tol`.
double adaptive_simpson(const Fn1D& f, double a, double b, double abs_tol = 1e-6,
                        int max_depth = 30);

// Same, but the interval is first split at the sorted interior breakpoints
// (values outside (a, b) are ignored). Use when f has kinks at known places.
double adaptive_simpson_split(const Fn1D& f, double a, double b,
                              const std::vector<double>& breakpoints, double abs_tol = 1e-6);

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;  // sum to 2
};

// n-point Gauss-Legendre rule (computed once per n, cached).
const GaussRule& gauss_legendre(int n);

// Integral of f over [a, b] with the n-point Gauss-Legendre rule.
double gauss_integrate(const Fn1D& f, double a, double b, int n = 64);

// Surface integral of f over the sphere of given radius about `center`
// (d = 2: 128-point trapezoid in angle; d = 3: product rule in (cos theta, phi)).
double sphere_integral(const std::function<double(const Vector&)>& f, const Vector& center,
                       double radius);

// Volume integral of f over the closed ball, by radial Gauss-Legendre applied
// to the sphere integrals.
double ball_integral(const std::function<double(const Vector&)>& f, const Vector& center,
                     double radius);

}  // namespace germgrain
