#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace zwanzig {

struct GaussRule {
    std::vector<double> nodes;   // on [-1, 1]
    std::vector<double> weights;
};

// n-point Gauss-Legendre rule (cached per n).
const GaussRule& gauss_legendre(int n);

// Composite Gauss-Legendre integral of f over [a, b] with `panels` panels.
std::complex<double> integrate_gl(const std::function<std::complex<double>(double)>& f,
                                  double a, double b, int panels, int order = 16);

struct QuadratureResult {
    std::complex<double> value;
    double error_estimate = 0.0;
    int evaluations = 0;
    bool converged = true;
};

// Adaptive Gauss-Kronrod (7/15) on [a, b]. Subdivision order is fixed, so the
// result is bitwise reproducible.
QuadratureResult integrate_gk(const std::function<std::complex<double>(double)>& f,
                              double a, double b, double abs_tol, double rel_tol,
                              int max_intervals = 20000);

} // namespace zwanzig
