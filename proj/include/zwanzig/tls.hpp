#pragma once

#include <optional>
#include <vector>

#include "zwanzig/dynamics.hpp"
#include "zwanzig/spectrum.hpp"

namespace zwanzig {

// Two-level system L/R (tunnel splitting 2 Delta), each side coupled with
// strength C to its own equidistant reservoir n = -N .. N.
struct TlsSpec {
    double Delta = 0.0;
    double C = 1.0;
    double gamma0 = 0.0;  // width of the L and R states
    double gamma = 0.0;   // reservoir level width
    int N = 50;

    double Gamma() const { return pi * C * C; }
};

void validate(const TlsSpec& spec);

// Symmetric (initial energy +Delta) and antisymmetric (-Delta) blocks.
struct TlsSpectrum {
    SpectrumSolution even;
    SpectrumSolution odd;
};
TlsSpectrum tls_spectrum(const TlsSpec& spec);

// Dense Hamiltonian of dimension 2(2N+2). Basis order: L, R, the L reservoir
// (n = -N .. N), then the R reservoir.
MatrixXcd tls_hamiltonian(const TlsSpec& spec);

struct TlsSeries {
    VectorXd t;
    VectorXcd a_L;
    VectorXcd a_R;
    std::optional<MatrixXcd> reservoir_L;  // rows: time
    std::optional<MatrixXcd> reservoir_R;
    Method method = Method::OracleEigen;

    // |a_L|^2 + |a_R|^2 (+ reservoir populations when present)
    VectorXd total_population() const;
};

struct TlsOptions {
    Method method = Method::OracleEigen;
    bool reservoir = false;       // oracle methods only
    bool start_right = false;     // initial excitation on R instead of L
    double ode_tolerance = 1e-10;
    bool finite_band_correction = true;  // cycle path
};

TlsSeries tls_evolve(const TlsSpec& spec, const VectorXd& grid, const TlsOptions& opt = {});

// The two parity amplitudes a+ (initial energy +Delta) and a- (-Delta),
// each a bare single-reservoir evolution.
struct ParityAmplitudes {
    VectorXcd plus;
    VectorXcd minus;
};
ParityAmplitudes tls_parity_amplitudes(const TlsSpec& spec, const VectorXd& grid, Method method,
                                       bool finite_band_correction = true);

struct TlsRates {
    double k_LR = 0.0;             // Delta^2 / Gamma
    double t_m = 0.0;              // atan(Delta/Gamma) / Delta, maximum of |a_R^(0)/a_L^(0)| growth window
    double t_m_printed = 0.0;      // tan(Delta/Gamma) / Delta as printed
    double t_m_detected = 0.0;     // located maximum of |a_R^(0)(t)|
    double ratio_RL = 0.0;         // |a_R / a_L| at t_m from the k = 0 forms
    double ratio_estimate = 0.0;   // Delta / Gamma
    bool in_regime = true;         // Delta < Gamma
};
TlsRates tls_rates(const TlsSpec& spec);

// k_L(t) = Gamma + Delta tan(Delta t), the instantaneous decay rate of a_L^(0).
double tls_decay_rate(const TlsSpec& spec, double t);

// Population transferred into the R manifold (R state plus its reservoir)
// during cycle 0, divided by the time integral of |a_L|^2 over that cycle;
// from the dense oracle.
double fitted_transfer_rate(const TlsSpec& spec);

struct TlsCycleAverage {
    int k = 0;
    double left = 0.0;
    double right = 0.0;
    double total = 0.0;
    double total_law = 0.0;   // exp(-4 pi k gamma) / Gamma
    double left_law = 0.0;    // (1 + J0(4 k alpha (1+alpha^2)^(-1/3)) / (1+alpha^2)) / (2 Gamma)
    double right_law = 0.0;
};
// Integrals of |a_L|^2, |a_R|^2 over t in [2 pi k, 2 pi (k+1)] from the
// infinite-band cycle sum.
std::vector<TlsCycleAverage> tls_cycle_averages(const TlsSpec& spec, int k_first, int k_last);

} // namespace zwanzig
