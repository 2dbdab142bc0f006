#pragma once

// Special-function kernels shared by the echo, tls and chain modules.
// Templated on the real type so tests can instantiate them in extended
// precision.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

namespace zwanzig {

// L^1_{k-1}(x) e^{-x/2}, the envelope-scaled associated Laguerre function
// appearing in the cycle-k partial amplitude. The three-term recurrence runs
// on a mantissa while the exponential factor lives in a separate log-scale
// accumulator, so neither the polynomial growth nor e^{-x/2} can overflow.
template <class Real>
Real laguerre_scaled(int k, Real x) {
    using std::exp;
    using std::abs;
    if (k <= 0) return Real(0);
    Real log_scale = -x / 2;
    Real prev = 0;
    Real cur = 1; // L^1_0
    const Real big = Real(1e150);
    const Real small = Real(1e-150);
    for (int n = 0; n + 1 < k; ++n) {
        // (n+1) L_{n+1} = (2n + 2 - x) L_n - (n + 1) L_{n-1}   (alpha = 1)
        Real next = ((Real(2 * n + 2) - x) * cur - Real(n + 1) * prev) / Real(n + 1);
        prev = cur;
        cur = next;
        Real mag = abs(cur);
        if (mag > big || (mag < small && mag > Real(0))) {
            using std::log;
            Real shift = log(mag);
            cur /= mag;
            prev /= mag;
            log_scale += shift;
        }
    }
    return cur * exp(log_scale);
}

namespace detail {
template <class Real>
int miller_start(int order, Real x) {
    using std::sqrt;
    double xd = static_cast<double>(x);
    double top = std::max<double>(order, xd);
    return static_cast<int>(top + 30.0 + 6.0 * std::sqrt(top + 1.0)) | 1;
}
} // namespace detail

// J_0(x) .. J_max(x) from one Miller downward sweep, normalised with
// J_0 + 2 sum J_{2m} = 1.
template <class Real>
std::vector<Real> bessel_j_all(int max_order, Real x) {
    std::vector<Real> out(static_cast<std::size_t>(max_order) + 1, Real(0));
    if (x == Real(0)) {
        out[0] = Real(1);
        return out;
    }
    const int start = detail::miller_start(max_order, x) + 1;
    std::vector<Real> j(static_cast<std::size_t>(start) + 2, Real(0));
    Real next = 0, cur = Real(1e-300);
    j[static_cast<std::size_t>(start)] = cur;
    const Real rescale_at = Real(1e250);
    for (int n = start; n > 0; --n) {
        Real prev = Real(2 * n) / x * cur - next;
        next = cur;
        cur = prev;
        j[static_cast<std::size_t>(n - 1)] = cur;
        using std::abs;
        if (abs(cur) > rescale_at) {
            for (int m = n - 1; m <= start; ++m) j[static_cast<std::size_t>(m)] /= rescale_at;
            cur /= rescale_at;
            next /= rescale_at;
        }
    }
    Real norm = j[0];
    for (int m = 2; m <= start; m += 2) norm += 2 * j[static_cast<std::size_t>(m)];
    for (int n = 0; n <= max_order; ++n) out[static_cast<std::size_t>(n)] = j[static_cast<std::size_t>(n)] / norm;
    return out;
}

template <class Real>
Real bessel_j(int order, Real x) {
    if (order < 0) {
        Real v = bessel_j(-order, x);
        return (order % 2) ? -v : v;
    }
    if (x < Real(0)) {
        Real v = bessel_j(order, -x);
        return (order % 2) ? -v : v;
    }
    return bessel_j_all(order, x)[static_cast<std::size_t>(order)];
}

// Sine integral Si(x) = int_0^x sin(u)/u du.
inline double sine_integral(double x) {
    if (x < 0) return -sine_integral(-x);
    if (x == 0) return 0.0;
    if (x <= 4.0) {
        double term = x, sum = x;
        const double x2 = x * x;
        for (int k = 1; k < 60; ++k) {
            term *= -x2 / ((2.0 * k) * (2.0 * k + 1.0));
            double add = term / (2.0 * k + 1.0);
            sum += add;
            if (std::abs(add) < 1e-17 * std::abs(sum)) break;
        }
        return sum;
    }
    // E1(ix) by modified Lentz; Si = pi/2 + Im E1(ix).
    using C = std::complex<double>;
    const C z{0.0, x};
    const double tiny = 1e-300;
    C b = z + 1.0;
    C c = 1.0 / tiny;
    C d = 1.0 / b;
    C h = d;
    for (int i = 1; i < 1000; ++i) {
        double a = -static_cast<double>(i) * i;
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        C del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    h *= std::exp(-z);
    return std::numbers::pi / 2 + h.imag();
}

// Trigamma psi'(x) for x > 0.
inline double trigamma(double x) {
    double acc = 0.0;
    while (x < 20.0) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    const double r = 1.0 / x, r2 = r * r;
    double series = r + r2 / 2 + r * r2 * (1.0 / 6 - r2 * (1.0 / 30 - r2 * (1.0 / 42 - r2 / 30)));
    return acc + series;
}

// Digamma psi(x) for x > 0.
inline double digamma(double x) {
    double acc = 0.0;
    while (x < 20.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double r2 = 1.0 / (x * x);
    const double series = r2 * (1.0 / 12 - r2 * (1.0 / 120 - r2 * (1.0 / 252 - r2 / 240)));
    return acc + std::log(x) - 0.5 / x - series;
}

} // namespace zwanzig
