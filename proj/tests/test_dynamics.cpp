#include <doctest.h>

#include <cmath>
#include <sstream>

#include "zwanzig/dynamics.hpp"

using namespace zwanzig;

namespace {

ReservoirSpec bare(int N, double C) {
    ReservoirSpec s;
    s.N = N;
    s.C = C;
    return s;
}

} // namespace

TEST_CASE("uniform grid covers [0, t_max] with the requested density") {
    const VectorXd g = uniform_grid(10.0, 20.0);
    CHECK(g(0) == 0.0);
    CHECK(g(g.size() - 1) == doctest::Approx(10.0));
    CHECK(g.size() >= 201);
    CHECK(g(1) - g(0) <= 0.05 + 1e-15);
}

TEST_CASE("arrow reduction reproduces the dense spectrum") {
    ReservoirSpec s = bare(60, 1.1);
    s.variant = HomogeneousDeformation{0.05, 0.1, +1};
    const HamiltonianMatrix H = build_hamiltonian(s);
    const ArrowSpectrum a = arrow_spectrum(H);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(H.dense<double>());
    CHECK((a.eigenvalues - es.eigenvalues()).cwiseAbs().maxCoeff() < 1e-11);
    CHECK((a.first_weights - es.eigenvectors().row(0).transpose().cwiseAbs2()).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("oracle paths agree: eigen, ODE and residue sum") {
    const ReservoirSpec s = bare(80, 1.0);
    const VectorXd g = uniform_grid(4.0 * pi, 10.0);
    const HamiltonianMatrix H = build_hamiltonian(s);
    OracleOptions eig, ode;
    eig.kind = OracleKind::Eigen;
    ode.kind = OracleKind::Ode;
    ode.ode_tolerance = 1e-11;
    const auto a = evolve_oracle(H, g, eig);
    const auto b = evolve_oracle(H, g, ode);
    const auto c = evolve_fourier(s, g);
    CHECK((a.a_s - b.a_s).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((a.a_s - c.a_s).cwiseAbs().maxCoeff() < 1e-11);
    CHECK(std::abs(a.a_s(0) - 1.0) < 1e-13);
}

TEST_CASE("Hermitian evolution conserves the norm") {
    const ReservoirSpec s = bare(100, 1.5);
    const VectorXd g = uniform_grid(10.0 * pi, 5.0);
    OracleOptions o;
    o.reservoir = true;
    o.kind = OracleKind::Eigen;
    const auto r = evolve_oracle(build_hamiltonian(s), g, o);
    CHECK((r.total_population().array() - 1.0).abs().maxCoeff() < 1e-10);
    // the adaptive integrator drifts at the level of its local tolerance times the step count
    o.kind = OracleKind::Ode;
    const auto q = evolve_oracle(build_hamiltonian(s), g, o);
    CHECK((q.total_population().array() - 1.0).abs().maxCoeff() < 1e-6);
    const auto f = evolve_fourier(s, g, true);
    CHECK((f.total_population().array() - 1.0).abs().maxCoeff() < 1e-10);
}

TEST_CASE("a common width factors out as exp(-gamma t)") {
    ReservoirSpec s = bare(60, 1.0);
    const VectorXd g = uniform_grid(3.0 * pi, 10.0);
    const auto clean = evolve_fourier(s, g);
    s.gamma = s.gamma_s = 0.07;
    const auto damped = evolve_fourier(s, g);
    const auto oracle = evolve_oracle(build_hamiltonian(s), g);
    for (Eigen::Index i = 0; i < g.size(); ++i)
        CHECK(std::abs(damped.a_s(i) - clean.a_s(i) * std::exp(-0.07 * g(i))) < 1e-12);
    CHECK((oracle.a_s - damped.a_s).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("unequal widths decay monotonically in total population") {
    ReservoirSpec s = bare(40, 1.0);
    s.gamma = 0.05;
    OracleOptions o;
    o.reservoir = true;
    const auto r = evolve_oracle(build_hamiltonian(s), uniform_grid(2.0 * pi, 10.0), o);
    const VectorXd p = r.total_population();
    for (Eigen::Index i = 1; i < p.size(); ++i) CHECK(p(i) <= p(i - 1) + 1e-12);
    CHECK(p(p.size() - 1) < 1.0);
}

TEST_CASE("Dormand-Prince integrator on a linear oscillator") {
    const VectorXd g = VectorXd::LinSpaced(11, 0.0, 10.0);
    VectorXcd y0(1);
    y0(0) = 1.0;
    const MatrixXcd y = integrate_dp45([](double, const VectorXcd& a, VectorXcd& d) { d = cplx(-0.1, -2.0) * a; }, y0, g, 1e-12);
    for (Eigen::Index i = 0; i < g.size(); ++i) CHECK(std::abs(y(i, 0) - std::exp(cplx(-0.1, -2.0) * g(i))) < 1e-9);
}

TEST_CASE("series export writes one row per time") {
    const auto r = evolve_fourier(bare(10, 0.5), uniform_grid(1.0, 4.0));
    std::ostringstream os;
    write_series(os, r, ',');
    const std::string out = os.str();
    const auto rows = std::count(out.begin(), out.end(), '\n');
    CHECK(rows >= r.t.size());
    CHECK(out.find(',') != std::string::npos);
}
