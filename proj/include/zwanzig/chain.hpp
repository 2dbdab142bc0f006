#pragma once

#include <optional>
#include <vector>

#include "zwanzig/dynamics.hpp"

namespace zwanzig {

// Chain of 2N+1 sites n = -N .. N with nearest-neighbour hopping J = 1; the
// impurity at site n0 has energy 0 and couples to its two neighbours with C.
//
// Time unit: every chain time argument is tau = 2 J t, so a front moving at
// the maximal group velocity reaches site n at tau = n and the echo period
// of the centred chain is 2(N+1).
struct ChainSpec {
    int N = 49;
    double C2 = 0.5;
    int impurity = 0;

    double C() const { return std::sqrt(C2); }
    // C^2 (N+1) / (pi (1 - C^2)); infinite at C^2 = 1
    double Gamma() const;
    double period() const { return 2.0 * (N + 1); }
};

void validate(const ChainSpec& spec);

// D_N(eps) = U_N(eps/2), the determinant of an N-site uniform chain.
double chain_determinant(int N, double eps);

struct ChainSpectrum {
    VectorXd band;                 // 2 cos(pi j/(N+1)), j = 1 .. N
    VectorXd couplings;            // coupling of the symmetric band state j to the impurity
    VectorXd symmetric_roots;      // ascending
    VectorXd symmetric_weights;    // squared impurity component
    VectorXd symmetric_angles;     // theta with eps = 2 cos theta
    VectorXd antisymmetric_roots;  // equal to the band levels, D_N = 0
    double Gamma = 0.0;
    double dense_deviation = 0.0;  // max |root - dense eigenvalue|
};

// Centred impurity only.
ChainSpectrum chain_spectrum(const ChainSpec& spec);

// Site basis, index n + N.
MatrixXd chain_hamiltonian(const ChainSpec& spec);

// Dense evolution of all sites from the impurity excitation; rows: time, cols: site n + N.
MatrixXcd chain_oracle(const ChainSpec& spec, const VectorXd& tau);

// Cycle-k impurity amplitude from the exact level map of the centred chain
// with odd N: lambda in (-(N+1)/2, (N+1)/2), eps = 2 sin(alpha lambda),
// Q = (1 - C^2) tan(alpha lambda) / C^2, alpha = pi / (N+1).
VectorXcd chain_partial_amplitude(const ChainSpec& spec, int k, const VectorXd& tau);

// Impurity amplitude by Fourier sum, cycle integrals, Bessel expansion
// (C^2 <= 1/2 only) or the dense oracle.
AmplitudeSeries impurity_amplitude(const ChainSpec& spec, const VectorXd& tau, Method method);

// Site amplitudes b_n(tau) for the listed sites; rows: time, cols: sites.
// Bessel: b_n = sum_m (-i)^m eps_m J_m(tau) S_nm with S_nm = sum_j psi_n psi_0 cos(m theta_j).
// Bessel needs a centred impurity; the oracle and Fourier paths accept any position.
MatrixXcd site_amplitudes(const ChainSpec& spec, const VectorXd& tau, const std::vector<int>& sites, Method method);

struct ChainCriticalCycle {
    double formula = 0.0;     // (N+1) C^2 / (1 - C^2)
    int detected = 0;         // min(k_overlap, k_oscillation)
    int k_overlap = 0;        // first k whose partial amplitude spills half its peak past the next cycle start
    int k_oscillation = 0;    // first k whose second-highest peak reaches half the highest
};

// Scans cycles 1 .. k_limit of the exact-map partial amplitudes and stops at
// the first cycle where either detector fires. A detector that has not fired
// by then reports k_limit + 1.
ChainCriticalCycle chain_critical_cycle(const ChainSpec& spec, int k_limit = 60);

struct FrontArrival {
    int site = 0;
    std::optional<double> arrival;  // first tau with |b_n|^2 >= threshold * cycle-0 maximum
    double arrival_law = 0.0;       // |n - n0|
    double departure_law = 0.0;     // 2(N+1) - |n - n0| for the centred chain
};

// Front detector on the dense oracle over the first echo period.
std::vector<FrontArrival> front_arrivals(const ChainSpec& spec, const std::vector<int>& sites,
                                         double threshold = 0.2, double samples_per_unit = 20.0);

// Space-time map |b_n(tau_j)|^2, rows: sites -N .. N, cols: times.
MatrixXd space_time(const ChainSpec& spec, const VectorXd& tau);

} // namespace zwanzig
