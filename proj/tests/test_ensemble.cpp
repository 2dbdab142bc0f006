#include <doctest.h>

#include <cmath>

#include "zwanzig/ensemble.hpp"

using namespace zwanzig;

namespace {

EnsembleSpec ensemble(double delta, int N = 60) {
    EnsembleSpec e;
    e.base.N = N;
    e.base.C = 1.0;
    e.dispersion0 = {delta};
    e.seed = 2024;
    return e;
}

// Largest mean population inside the echo window of cycle k.
double echo_peak(const EnsembleDynamics& d, int k) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < d.t.size(); ++i)
        if (d.t(i) >= 2.0 * pi * k && d.t(i) <= 2.0 * pi * k + pi) best = std::max(best, d.mean_population(i));
    return best;
}

double lorentz(double g, double x) { return g / (pi * (x * x + g * g)); }
double gauss(double d, double x) { return std::exp(-0.5 * x * x / (d * d)) / (d * std::sqrt(2.0 * pi)); }

} // namespace

TEST_CASE("dispersion grows with temperature as sqrt(coth)") {
    EnsembleSpec e = ensemble(0.1);
    CHECK(dispersion(e, 3) == 0.1);
    e.temperature = 0.5;
    CHECK(dispersion(e, 3) == doctest::Approx(0.1 * std::sqrt(1.0 / std::tanh(2.0))));
    e.temperature = 200.0;
    CHECK(dispersion(e, 0) == doctest::Approx(0.1 * std::sqrt(200.0)).epsilon(1e-4));
    CHECK(phonon_factor(1.0, 0.0) == 1.0);
}

TEST_CASE("per-level vectors: one entry or 2N+1 entries") {
    EnsembleSpec e = ensemble(0.1, 3);
    e.dispersion0 = {0.0, 0.1, 0.2, 0.3, 0.2, 0.1, 0.0};
    CHECK_NOTHROW(validate(e));
    CHECK(dispersion(e, 0) == 0.3);
    CHECK(dispersion(e, -3) == 0.0);
    e.dispersion0 = {0.1, 0.2};
    CHECK_THROWS_AS(validate(e), SpecError);
    e.dispersion0 = {-0.1};
    CHECK_THROWS_AS(validate(e), SpecError);
    e.dispersion0 = {0.1};
    e.members = 1;
    CHECK_THROWS_AS(validate(e), SpecError);
}

TEST_CASE("zero dispersion: every member is the base reservoir") {
    EnsembleSpec e = ensemble(0.0, 20);
    e.mean_shifts = {0.0};
    auto rng = member_stream(e.seed, 5);
    const ReservoirSpec m = sample_member(e, rng);
    const auto a = levels(m), b = levels(e.base);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].energy == b[i].energy);
        CHECK(a[i].coupling == b[i].coupling);
    }
    const VectorXd g = uniform_grid(4.0 * pi, 5.0);
    const EnsembleDynamics d = ensemble_dynamics(e, g, 4);
    CHECK((d.mean_population - evolve_fourier(e.base, g).population()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(d.stderr_population.maxCoeff() < 1e-14);
}

TEST_CASE("sampled shifts have the requested mean and spread") {
    EnsembleSpec e = ensemble(0.2, 50);
    e.mean_shifts = {0.05};
    const int M = 100;
    double sum = 0.0, sq = 0.0;
    int count = 0;
    for (int i = 0; i < M; ++i) {
        auto rng = member_stream(e.seed, static_cast<std::uint64_t>(i));
        const auto lv = levels(sample_member(e, rng));
        for (int n = -50; n <= 50; ++n) {
            const double f = lv[static_cast<std::size_t>(n + 50)].energy - n - 0.05;
            sum += f;
            sq += f * f;
            ++count;
        }
    }
    const double mean = sum / count, sd = std::sqrt(sq / count - mean * mean);
    // 10100 draws: the mean is within 3 sigma / sqrt(count) with overwhelming probability
    CHECK(std::abs(mean) < 3.0 * 0.2 / std::sqrt(double(count)));
    CHECK(std::abs(sd - 0.2) < 0.02 * 0.2 * 3.0);
}

TEST_CASE("ensemble averages: reproducible, thread-count independent, stderr ~ M^-1/2") {
    const EnsembleSpec e = ensemble(0.05, 40);
    const VectorXd g = uniform_grid(3.0 * pi, 4.0);
    const EnsembleDynamics a = ensemble_dynamics(e, g, 64, 1);
    const EnsembleDynamics b = ensemble_dynamics(e, g, 64, 3);
    CHECK(a.mean_population == b.mean_population);
    CHECK(a.mean_amplitude == b.mean_amplitude);
    EnsembleSpec other = e;
    other.seed = 7;
    CHECK(a.mean_population != ensemble_dynamics(other, g, 64).mean_population);

    const EnsembleDynamics small = ensemble_dynamics(e, g, 100);
    const EnsembleDynamics large = ensemble_dynamics(e, g, 400);
    Eigen::Index peak = 0;
    for (Eigen::Index i = 0; i < g.size(); ++i)
        if (g(i) > 2.0 * pi && small.stderr_population(i) > small.stderr_population(peak)) peak = i;
    const double ratio = large.stderr_population(peak) / small.stderr_population(peak);
    CHECK(ratio == doctest::Approx(0.5).epsilon(0.2));
    const EnsembleDynamics huge = ensemble_dynamics(e, g, 1000);
    CHECK(huge.stderr_population(peak) / small.stderr_population(peak) == doctest::Approx(1.0 / std::sqrt(10.0)).epsilon(0.2));
    const EnsembleDynamics vast = ensemble_dynamics(e, g, 10000);
    CHECK(vast.stderr_population(peak) / small.stderr_population(peak) == doctest::Approx(0.1).epsilon(0.2));
}

TEST_CASE("Voigt line shape: normalisation, limits and tails") {
    const VectorXd x = VectorXd::LinSpaced(8001, -40.0, 40.0);
    const double h = x(1) - x(0);
    const VectorXd v = lineshape(0.3, 0.3, x);
    // the Lorentzian tail beyond |x| = 40 holds 2 gamma / (pi 40) of the weight
    CHECK(v.sum() * h == doctest::Approx(1.0 - 2.0 * 0.3 / (pi * 40.0)).epsilon(2e-3));

    const VectorXd pts = (VectorXd(4) << 0.0, 0.4, 1.5, 3.0).finished();
    const VectorXd l = lineshape(0.5, 1e-6, pts);
    const VectorXd g = lineshape(1e-6, 0.5, pts);
    for (Eigen::Index i = 0; i < pts.size(); ++i) {
        CHECK(l(i) == doctest::Approx(lorentz(0.5, pts(i))).epsilon(1e-4));
        CHECK(g(i) == doctest::Approx(gauss(0.5, pts(i))).epsilon(1e-4));
    }

    // tails at gamma = delta: the excess over the Lorentzian is
    // delta^2 (3x^2 - gamma^2) / (x^2 + gamma^2)^2 + ..., 13% at 5 delta and
    // below 10% from about 5.8 delta outward
    const double d = 0.2;
    const VectorXd far = (VectorXd(4) << 5.0 * d, 6.0 * d, 8.0 * d, 15.0 * d).finished();
    const VectorXd vt = lineshape(d, d, far);
    CHECK(vt(0) / lorentz(d, far(0)) - 1.0 == doctest::Approx(0.134).epsilon(0.02));
    for (Eigen::Index i = 1; i < far.size(); ++i) CHECK(std::abs(vt(i) / lorentz(d, far(i)) - 1.0) < 0.1);
    // core: Gaussian within 5% once gamma << delta
    const VectorXd core = (VectorXd(3) << 0.0, 0.5 * d, d).finished();
    const VectorXd vc = lineshape(0.05 * d, d, core);
    for (Eigen::Index i = 0; i < core.size(); ++i) CHECK(std::abs(vc(i) / gauss(d, core(i)) - 1.0) < 0.05);
    CHECK_THROWS_AS(lineshape(0.0, 0.0, core), SpecError);
}

TEST_CASE("dephasing: echo loss scales as delta^2 and exceeds the single-particle decay") {
    // common random numbers: the same seed draws the same standard normals,
    // scaled by delta, so the ratio isolates the delta dependence
    const VectorXd g = uniform_grid(4.0 * pi + pi, 20.0);
    const EnsembleDynamics base = ensemble_dynamics(ensemble(0.0), g, 2);
    const double p1 = echo_peak(base, 1), p2 = echo_peak(base, 2);
    const EnsembleDynamics wide = ensemble_dynamics(ensemble(0.04), g, 200);
    const EnsembleDynamics narrow = ensemble_dynamics(ensemble(0.02), g, 200);
    for (auto [k, p] : {std::pair{1, p1}, std::pair{2, p2}}) {
        const double loss_wide = 1.0 - echo_peak(wide, k) / p;
        const double loss_narrow = 1.0 - echo_peak(narrow, k) / p;
        CHECK(loss_wide > 0.0);
        CHECK(loss_narrow > 0.0);
        CHECK(loss_wide / loss_narrow == doctest::Approx(4.0).epsilon(0.25));
    }
}

TEST_CASE("resolution criterion") {
    EnsembleSpec e = ensemble(0.1, 10);
    Resolution r = resolution(e);
    CHECK(r.worst_ratio == doctest::Approx(0.1));
    CHECK(r.resolved);
    e.dispersion0 = {0.3};
    CHECK_FALSE(resolution(e).resolved);
    CHECK(resolution(e, 0.5).resolved);
}
