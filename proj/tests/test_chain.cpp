#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "zwanzig/chain.hpp"

using namespace zwanzig;

namespace {

ChainSpec chain(int N, double C2, int impurity = 0) {
    ChainSpec s;
    s.N = N;
    s.C2 = C2;
    s.impurity = impurity;
    return s;
}

double max_diff(const VectorXcd& a, const VectorXcd& b) { return (a - b).cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("uniform-chain determinant is a Chebyshev polynomial of the second kind") {
    for (double th : {0.3, 1.1, 2.9}) {
        const double want = std::sin(8.0 * th) / std::sin(th);
        CHECK(chain_determinant(7, 2.0 * std::cos(th)) == doctest::Approx(want).epsilon(1e-12));
    }
    CHECK(chain_determinant(0, 0.7) == 1.0);
}

TEST_CASE("chain spectrum: bisection roots against dense diagonalisation") {
    const ChainSpectrum sp = chain_spectrum(chain(49, 0.5));
    CHECK(sp.dense_deviation < 1e-12);
    CHECK(sp.symmetric_roots.size() == 50);
    CHECK(sp.antisymmetric_roots.size() == 49);
    CHECK(sp.symmetric_weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (Eigen::Index i = 0; i < sp.symmetric_roots.size(); ++i)
        CHECK(sp.symmetric_roots(i) == doctest::Approx(2.0 * std::cos(sp.symmetric_angles(i))).epsilon(1e-13));
    CHECK(sp.Gamma == doctest::Approx(0.5 * 50 / (pi * 0.5)));
    CHECK_THROWS_AS(chain_spectrum(chain(49, 0.5, 3)), SpecError);
}

TEST_CASE("chain density of states follows the band-edge law") {
    const ChainSpec s = chain(200, 1.0);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(chain_hamiltonian(s));
    const VectorXd e = es.eigenvalues();
    const double M = e.size();
    for (double x : {0.5, 1.0, 1.9}) {
        const double frac = (e.array() > 2.0 - x).count() / M;
        // integrated density 1/(pi sqrt(4 - eps^2)) from 2 - x to 2
        const double want = std::acos((2.0 - x) / 2.0) / pi;
        CHECK(std::abs(frac - want) < 3.0 / M);
    }
}

TEST_CASE("impurity amplitude: Fourier, cycle integrals and oracle agree") {
    const ChainSpec s = chain(49, 0.5);
    const VectorXd tau = uniform_grid(300.0, 4.0);
    const auto oracle = impurity_amplitude(s, tau, Method::OracleEigen);
    CHECK(max_diff(impurity_amplitude(s, tau, Method::Fourier).a_s, oracle.a_s) < 1e-10);
    CHECK(max_diff(impurity_amplitude(s, tau, Method::CycleSum).a_s, oracle.a_s) < 1e-6);
    const ChainSpec q = chain(49, 0.25);
    const VectorXd short_tau = uniform_grid(150.0, 4.0);
    CHECK(max_diff(impurity_amplitude(q, short_tau, Method::Bessel).a_s,
                   impurity_amplitude(q, short_tau, Method::OracleEigen).a_s) < 1e-10);
}

TEST_CASE("cycle integrals need odd N and a centred impurity") {
    const VectorXd tau = uniform_grid(10.0, 2.0);
    CHECK_THROWS_AS(chain_partial_amplitude(chain(48, 0.5), 0, tau), SpecError);
    CHECK_THROWS_AS(chain_partial_amplitude(chain(49, 0.5, 2), 0, tau), SpecError);
    CHECK_THROWS_AS(chain_partial_amplitude(chain(49, 0.0), 0, tau), SpecError);
}

TEST_CASE("Bessel site amplitudes match the oracle and are refused above C^2 = 1/2") {
    const ChainSpec s = chain(49, 0.25);
    const VectorXd tau = uniform_grid(300.0, 2.0);
    const std::vector<int> sites{0, 5, 10, 20, -20};
    const MatrixXcd b = site_amplitudes(s, tau, sites, Method::Bessel);
    const MatrixXcd o = site_amplitudes(s, tau, sites, Method::OracleEigen);
    CHECK((b - o).cwiseAbs().maxCoeff() < 1e-10);
    CHECK_THROWS_AS(site_amplitudes(chain(49, 0.6), tau, sites, Method::Bessel), SpecError);
    CHECK_THROWS_AS(site_amplitudes(chain(49, 0.25, 1), tau, sites, Method::Bessel), SpecError);
    CHECK_THROWS_AS(site_amplitudes(s, tau, {50}, Method::OracleEigen), SpecError);
}

TEST_CASE("centred chain is mirror symmetric and conserves the norm") {
    const ChainSpec s = chain(49, 0.7);
    const VectorXd tau = uniform_grid(20.0 * pi, 4.0);
    const MatrixXcd all = chain_oracle(s, tau);
    for (int n = 1; n <= 49; ++n) CHECK((all.col(49 + n) - all.col(49 - n)).cwiseAbs().maxCoeff() < 1e-12);
    const VectorXd norm = all.cwiseAbs2().rowwise().sum();
    CHECK((norm.array() - 1.0).abs().maxCoeff() < 1e-10);
    const MatrixXd map = space_time(s, tau);
    CHECK(map.rows() == 99);
    CHECK(map.cols() == tau.size());
    CHECK((map.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-10);
}

TEST_CASE("off-centre impurity: Fourier path against the oracle") {
    const ChainSpec s = chain(30, 0.4, 7);
    const VectorXd tau = uniform_grid(120.0, 4.0);
    CHECK(max_diff(impurity_amplitude(s, tau, Method::Fourier).a_s, impurity_amplitude(s, tau, Method::OracleEigen).a_s) < 1e-10);
    const MatrixXcd f = site_amplitudes(s, tau, {-10, 0, 12}, Method::Fourier);
    const MatrixXcd o = site_amplitudes(s, tau, {-10, 0, 12}, Method::OracleEigen);
    CHECK((f - o).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("ballistic front reaches site n at tau = n") {
    const auto fronts = front_arrivals(chain(49, 0.5), {5, 10, 15, 20});
    for (const auto& f : fronts) {
        REQUIRE(f.arrival);
        CHECK(std::abs(*f.arrival - f.arrival_law) <= 2.0);
        CHECK(f.departure_law == doctest::Approx(100.0 - f.site));
    }
}

TEST_CASE("chain critical cycle: formula value and a finite detection") {
    const ChainCriticalCycle c = chain_critical_cycle(chain(49, 0.3), 40);
    CHECK(c.formula == doctest::Approx(50.0 * 0.3 / 0.7));
    CHECK(c.detected >= 1);
    CHECK(c.detected == std::min(c.k_overlap, c.k_oscillation));
    CHECK(c.detected <= 40);
}

TEST_CASE("chain validation") {
    CHECK_THROWS_AS(validate(chain(0, 0.5)), SpecError);
    CHECK_THROWS_AS(validate(chain(10, 1.2)), SpecError);
    CHECK_THROWS_AS(validate(chain(10, -0.1)), SpecError);
    CHECK_THROWS_AS(validate(chain(10, 0.5, 10)), SpecError);
    CHECK(std::isinf(chain(10, 1.0).Gamma()));
    CHECK(chain(49, 0.5).period() == 100.0);
}
