#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>

#include "zwanzig/model.hpp"
#include "zwanzig/spectrum.hpp"

namespace zwanzig {

enum class Method { OracleEigen, OracleOde, Fourier, CycleSum, Bessel };
std::string to_string(Method m);

struct AmplitudeSeries {
    VectorXd t;
    VectorXcd a_s;                   // tracked amplitude (initial state, impurity, ...)
    std::optional<MatrixXcd> a_n;    // rows: time, cols: remaining basis states
    Method method = Method::OracleEigen;

    VectorXd population() const { return a_s.cwiseAbs2(); }
    // |a_s|^2 + sum |a_n|^2 per time; requires a_n.
    VectorXd total_population() const;
};

// Uniform grid on [0, t_max] with at least `samples_per_unit` points per unit time.
VectorXd uniform_grid(double t_max, double samples_per_unit);

enum class OracleKind { Auto, Eigen, Ode };

struct OracleOptions {
    OracleKind kind = OracleKind::Auto;
    bool reservoir = false;   // also return a_n(t)
    double ode_tolerance = 1e-10;
};

// Reference evolution of i da/dt = H a with a(0) = e_s.
AmplitudeSeries evolve_oracle(const HamiltonianMatrix& H, const VectorXd& grid, const OracleOptions& opt = {});

// Same for an arbitrary (dense) Hamiltonian and initial vector; the tracked
// amplitude is component `tracked`, the rest go to a_n when requested.
AmplitudeSeries evolve_dense(const MatrixXcd& H, const VectorXcd& psi0, const VectorXd& grid,
                             const OracleOptions& opt = {}, Eigen::Index tracked = 0);

// Eigenvalues and squared first components of a real arrow matrix, via an
// O(n^2) Givens reduction to tridiagonal form followed by implicit QL that
// only carries the first row of the eigenvector matrix.
struct ArrowSpectrum {
    VectorXd eigenvalues;
    VectorXd first_weights;
};
ArrowSpectrum arrow_spectrum(const HamiltonianMatrix& H);

// Adaptive Dormand-Prince 5(4) integration of da/dt = f(t, a), sampled on grid.
using OdeRhs = std::function<void(double, const VectorXcd&, VectorXcd&)>;
MatrixXcd integrate_dp45(const OdeRhs& f, const VectorXcd& y0, const VectorXd& grid, double tol);

// Residue-sum evolution a_s(t) = sum_j w_j exp(-i eps*_j t). Widths are
// admitted only when every level (initial state included) shares the same
// width, which factors out as exp(-gamma t).
struct FourierOptions {
    double common_width = 0.0;
};
AmplitudeSeries evolve_fourier(const SpectrumSolution& sol, const VectorXd& grid, const FourierOptions& opt = {});

// Fourier evolution straight from a spec (solves the spectrum first).
AmplitudeSeries evolve_fourier(const ReservoirSpec& spec, const VectorXd& grid, bool reservoir = false);

// Delimiter-separated export: t, Re a, Im a, |a|^2 [, |a_n|^2 ...].
void write_series(std::ostream& os, const AmplitudeSeries& s, char delim = '\t', bool reservoir_columns = false);

} // namespace zwanzig
