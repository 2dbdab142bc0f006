#include <doctest.h>

#include <cmath>

#include "zwanzig/echo.hpp"

using namespace zwanzig;

namespace {

ReservoirSpec bare(int N, double C) {
    ReservoirSpec s;
    s.N = N;
    s.C = C;
    return s;
}

} // namespace

TEST_CASE("partial amplitudes: low cycles in closed form") {
    const double G = pi;
    for (double t : {0.0, 0.4, 1.7}) CHECK(std::abs(partial_amplitude_bare(0, t, G, 0.0, 0.0) - std::exp(-G * t)) < 1e-15);
    for (double s : {0.1, 0.5, 2.0}) {
        const double t = 2.0 * pi + s, tau = 2.0 * G * s;
        CHECK(std::abs(partial_amplitude_bare(1, t, G, 0.0, 0.0) + tau * std::exp(-tau / 2)) < 1e-14);
        const double t2 = 4.0 * pi + s;
        CHECK(std::abs(partial_amplitude_bare(2, t2, G, 0.0, 0.0) + 0.5 * tau * (2.0 - tau) * std::exp(-tau / 2)) < 1e-14);
    }
    CHECK(partial_amplitude_bare(3, 6.0 * pi - 0.1, G, 0.0, 0.0) == cplx(0.0));
    // reservoir width: the cycle-k echo carries exp(-2 pi k gamma)
    const cplx a = partial_amplitude_bare(2, 4.0 * pi + 0.3, G, 0.1, 0.0);
    const cplx b = partial_amplitude_bare(2, 4.0 * pi + 0.3, G, 0.0, 0.0);
    CHECK(std::abs(a - b * std::exp(-4.0 * pi * 0.1)) < 1e-15);
    CHECK_THROWS_AS(partial_amplitude_bare(-1, 1.0, G, 0.0, 0.0), SpecError);
}

TEST_CASE("cycle sum with the band-edge correction follows the finite reservoir") {
    const ReservoirSpec s = bare(400, 1.0);
    const VectorXd g = uniform_grid(6.0 * pi, 10.0);
    const auto exact = evolve_fourier(s, g);
    const auto [sum, parts] = assemble_cycles(s, g);
    CHECK(parts.finite_band_corrected);
    CHECK(parts.k_max() == 3);
    CHECK((sum.a_s - exact.a_s).cwiseAbs().maxCoeff() < 1e-3);
    CycleOptions raw;
    raw.finite_band_correction = false;
    const auto plain = assemble_cycles(s, g, 3, raw).first;
    CHECK((plain.a_s - exact.a_s).cwiseAbs().maxCoeff() > (sum.a_s - exact.a_s).cwiseAbs().maxCoeff());
}

TEST_CASE("echo cycle k has k zeros") {
    const EchoMetrics m = echo_metrics(bare(200, 1.0), 50);
    REQUIRE(m.cycles.size() >= 50u);
    for (const auto& c : m.cycles)
        if (c.k >= 1 && c.k <= 50) CHECK(c.zero_count == c.k);
    CHECK(m.k_c == doctest::Approx(pi * pi));
}

TEST_CASE("overlap detector tracks pi^2 C^2") {
    for (double C2 : {0.5, 1.0, 2.0}) {
        const double G = pi * C2;
        CHECK(std::abs(overlap_cycle(G) - pi * pi * C2) <= 2.0);
    }
}

TEST_CASE("effective decrement of the first cycle equals Gamma") {
    const ReservoirSpec s = bare(2000, 0.6);
    const VectorXd g = VectorXd::LinSpaced(200, 0.5, 5.0);
    const auto [sum, parts] = assemble_cycles(s, g, 0);
    const VectorXd d = effective_decrement(sum);
    CHECK(std::abs(d(100) - s.Gamma()) < 1e-3 * s.Gamma());
}

TEST_CASE("cycle-0 average in closed form") {
    const ReservoirSpec s = bare(100, 0.8);
    const double G = s.Gamma();
    CHECK(cycle_average(0, s).partial == doctest::Approx((1.0 - std::exp(-4.0 * pi * G)) / (2.0 * G)).epsilon(1e-10));
}

TEST_CASE("Langevin residual of the infinite-band cycle sum is small") {
    ReservoirSpec s = bare(3000, 1.0);
    const VectorXd g = uniform_grid(5.0 * pi, 200.0);
    CycleOptions raw;
    raw.finite_band_correction = false;
    const auto series = assemble_cycles(s, g, 2, raw).first;
    const LangevinResidual r = langevin_residual(series, s);
    // second differences on h = 1/200 carry O(h^2) error on an O(Gamma^2) scale
    CHECK(r.linf < 1e-2);
}

TEST_CASE("reservoir amplitudes: cycle form, spectral form and the end-of-cycle closed form") {
    // C^2 = 2 pushes the previous cycle's tail at t = 2 pi k below 1e-15, so
    // the closed form (which drops that tail) is exact to quadrature accuracy
    ReservoirSpec s = bare(3000, std::sqrt(2.0));
    const VectorXd g = (VectorXd(3) << 2.0 * pi, 4.0 * pi, 6.0 * pi).finished();
    for (int n : {0, 2, 5}) {
        const VectorXcd spectral = reservoir_amplitude_spectral(n, g, s);
        for (int k = 1; k <= 3; ++k) {
            const cplx closed = end_of_cycle_closed(n, k, s);
            CHECK(std::abs(end_of_cycle(n, k, s).amplitude - closed) < 1e-8);
            // a reservoir cut at N only shifts a_n by O(C / N)
            CHECK(std::abs(spectral(k - 1) - closed) < 5e-3);
        }
    }
    const EndOfCycle e = end_of_cycle(3, 2, s);
    CHECK(std::norm(e.amplitude) == doctest::Approx(e.lorentzian).epsilon(1e-7));
    CHECK(e.geometric_phase == doctest::Approx(std::atan(3.0 / s.Gamma())));

    // the cycle series in time follows the spectral one between the end points
    const VectorXd t = VectorXd::LinSpaced(40, 0.1, 5.0 * pi);
    const VectorXcd cyc = reservoir_amplitude_cycles(2, t, s);
    const VectorXcd spec = reservoir_amplitude_spectral(2, t, s);
    CHECK((cyc - spec).cwiseAbs().maxCoeff() < 5e-3);
}

TEST_CASE("deformed contour integral reduces to the bare partial amplitude") {
    const ScalingMap m = homogeneous_map(HomogeneousDeformation{0.0, 0.0, +1}, 1.0);
    for (int k : {1, 2, 4})
        for (double s : {0.2, 1.0}) {
            const double t = 2.0 * pi * k + s;
            const DeformedAmplitude d = partial_amplitude_deformed(k, t, m);
            CHECK(d.converged);
            CHECK(std::abs(d.value - partial_amplitude_bare(k, t, pi, 0.0, 0.0)) < 1e-7);
        }
}

TEST_CASE("deformed cycle sum approaches the finite reservoir as the stretch vanishes") {
    // The resummed map keeps only the cot(pi lambda) part of the self-energy;
    // the stretched far levels add a smooth part of order a that the cycle
    // sum does not carry, so the deviation shrinks with a.
    const VectorXd g = VectorXd::LinSpaced(40, 0.3, 4.0 * pi);
    double previous = 1.0;
    for (double a : {0.05, 0.01, 0.0}) {
        ReservoirSpec s = bare(600, 1.0);
        s.variant = HomogeneousDeformation{a, 0.0, +1};
        const double dev = (assemble_cycles(s, g).first.a_s - evolve_fourier(s, g).a_s).cwiseAbs().maxCoeff();
        CHECK(dev < previous);
        previous = dev;
    }
    CHECK(previous < 5e-3);
}

TEST_CASE("deformed amplitudes stay finite for weak stretch at late times") {
    const ScalingMap m = homogeneous_map(HomogeneousDeformation{0.005, 0.0, +1}, 1.0);
    const DeformedAmplitude d = partial_amplitude_deformed(2, 14.0, m);
    CHECK(d.converged);
    CHECK(std::isfinite(std::abs(d.value)));
    DeformedOptions wide;
    wide.half_width = 320.0;
    CHECK(std::abs(d.value - partial_amplitude_deformed(2, 14.0, m, wide).value) < 1e-9);
}

TEST_CASE("stretched spectra leak into negative local time") {
    const ScalingMap m = homogeneous_map(HomogeneousDeformation{0.15, 0.0, +1}, 1.0);
    CHECK(std::abs(partial_amplitude_deformed(1, 2.0 * pi - 1.0, m).value) > 1e-3);
    const ScalingMap b = bare_map(pi);
    CHECK(std::abs(partial_amplitude_deformed(1, 2.0 * pi - 1.0, b).value) < 1e-8);
}

TEST_CASE("polynomial map poles: exact roots, small-eta series, merger") {
    const double eta = 0.01;
    const auto p = polynomial_poles(eta);
    const auto q = polynomial_pole_series(eta);
    // poles sit at lambda = i Gamma u
    for (const cplx& l : p) {
        const cplx u = l / cplx(0, 1);
        CHECK(std::abs(u - eta * u * u * u - 1.0) < 1e-12);
    }
    for (const cplx& s : q) {
        double best = 1e9;
        for (const cplx& l : p) best = std::min(best, std::abs(l - s));
        CHECK(best < 2e-2 * std::abs(s));
    }
    // above eta_c = 4/27 the two large roots leave the real u axis
    const auto below = polynomial_poles(0.9 * polynomial_eta_critical);
    const auto above = polynomial_poles(1.1 * polynomial_eta_critical);
    int real_below = 0, real_above = 0;
    for (const cplx& l : below) real_below += std::abs(l.real()) < 1e-9;
    for (const cplx& l : above) real_above += std::abs(l.real()) < 1e-9;
    CHECK(real_below == 3);
    CHECK(real_above == 1);
}

TEST_CASE("critical cycle formulas and double resonance at n = 0") {
    CHECK(critical_cycle(bare(100, 1.0)).k_c == doctest::Approx(pi * pi));
    ReservoirSpec m = bare(100, 1.0);
    m.variant = MixingSublattices{3, {0.02, 0.04}};
    CHECK(critical_cycle(m).k_c == doctest::Approx(1.0 / (1.0 / (pi * pi) + 0.06)));

    const DoubleResonance d = double_resonance(0, 3, bare(400, 1.0));
    REQUIRE(d.tau_detected);
    CHECK(std::abs(*d.tau_detected - d.tau_estimate) < 0.05 * d.tau_estimate);
    REQUIRE(d.half_width_detected);
    CHECK(std::abs(*d.half_width_detected - d.half_width_estimate) < 0.1 * d.half_width_estimate);
}
