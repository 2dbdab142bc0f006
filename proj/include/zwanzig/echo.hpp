#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zwanzig/dynamics.hpp"
#include "zwanzig/model.hpp"

namespace zwanzig {

// ---------------------------------------------------------------------------
// Bare partial amplitudes
// ---------------------------------------------------------------------------

// Local time of cycle k in units of the inverse width: tau_k = 2 Gamma (t - 2 pi k).
inline double local_time(double Gamma, int k, double t) { return 2.0 * Gamma * (t - 2.0 * pi * k); }

// Cycle-k amplitude of the initial state for an infinite equidistant
// reservoir. `initial_energy` is the complex energy E_s - i gamma_s of the
// initial state, `gamma` the common reservoir width. Zero before the cycle
// starts.
cplx partial_amplitude_bare(int k, double t, double Gamma, double gamma, cplx initial_energy);
cplx partial_amplitude_bare(int k, double t, const ReservoirSpec& spec);

struct CycleDecomposition {
    VectorXd t;
    MatrixXcd partials;            // rows: time, cols: k = 0 .. k_max
    VectorXcd band_correction;     // finite-band term already subtracted from the sum (zero if unused)
    double Gamma = 0.0;
    bool finite_band_corrected = false;

    int k_max() const { return static_cast<int>(partials.cols()) - 1; }
    // tau_k at every grid time for column k
    VectorXd local_times(int k) const;
};

// Cycle sum for a reservoir cut at |n| <= N, initial state at real energy E,
// every level (initial state included) with the same width. The missing
// levels renormalize Gamma, shift E and leave a band-edge kink at every cycle
// start; `correction` holds the kink series, to be subtracted from the sum of
// the partials.
struct TruncatedCycles {
    MatrixXcd partials;     // rows: time, cols: k
    VectorXcd correction;
};
TruncatedCycles truncated_cycle_sum(const VectorXd& grid, double C, int N, double E, double width, int k_max);

struct CycleOptions {
    // Correct the infinite-band cycle sum for a reservoir truncated at |n| <= N.
    // Applies to the bare variant with gamma == gamma_s; ignored otherwise.
    bool finite_band_correction = true;
};

// Sum of partial amplitudes k = 0 .. min(k_max, floor(t / 2 pi)). The bare
// variant uses the Laguerre form; homogeneous deformations go through the
// oscillatory integral (no causal cut there, since deformed cycles leak
// into negative local time).
std::pair<AmplitudeSeries, CycleDecomposition> assemble_cycles(const ReservoirSpec& spec, const VectorXd& grid,
                                                               int k_max, const CycleOptions& opt = {});

// Same sum with the default k_max = floor(max t / 2 pi).
std::pair<AmplitudeSeries, CycleDecomposition> assemble_cycles(const ReservoirSpec& spec, const VectorXd& grid);

// ---------------------------------------------------------------------------
// Deformed spectra
// ---------------------------------------------------------------------------

// Smooth map from the continuous level index lambda to the spectrum:
// eps = E(lambda), and the functions P, Q that bring the resummed secular
// equation to the form E(lambda) - P(lambda) cot(pi lambda) with Q = E / P
// in the homogeneous case. All functions must be analytic near the real axis.
struct ScalingMap {
    std::function<cplx(cplx)> energy;  // E
    std::function<cplx(cplx)> slope;   // dE/dlambda
    std::function<cplx(cplx)> P;
    std::function<cplx(cplx)> Q;
};

ScalingMap bare_map(double Gamma);
// eps^2 = lambda^2 (1 + a^2 lambda^2)^sign, C^2(lambda) = C^2 (1 + b^2 lambda^2)^sign.
ScalingMap homogeneous_map(const HomogeneousDeformation& d, double C);
// Q(lambda) = y + eta y^(2s+1) with y = lambda / Gamma and P = Gamma.
ScalingMap polynomial_map(double Gamma, double eta, int s = 1);
// Map of the spec, if its variant has one (bare and homogeneous deformation).
std::optional<ScalingMap> scaling_map(const ReservoirSpec& spec);

struct DeformedOptions {
    double half_width = 0.0;   // real-axis segment [-L, L]; 0 picks max(40, 12 Gamma)
    double abs_tol = 1e-11;
    double rel_tol = 1e-10;
};

struct DeformedAmplitude {
    cplx value;
    double error_estimate = 0.0;
    bool converged = true;
};

// Cycle-k amplitude (1/pi) int exp(-i(E t - 2 pi k lambda)) (E'/P) ((Q-i)/(Q+i))^(k-1) / (Q+i)^2 dlambda.
// The real segment is integrated adaptively; beyond |lambda| = L the contour
// leaves the axis along vertical rays into the half plane where the phase
// decays, which replaces the slowly decaying algebraic tail.
DeformedAmplitude partial_amplitude_deformed(int k, double t, const ScalingMap& map, const DeformedOptions& opt = {});

// Roots u of u - eta u^3 = 1; the poles of the s = 1 polynomial family sit at lambda = i Gamma u.
std::array<cplx, 3> polynomial_poles(double eta);
// Small-eta expansions: i(1 + eta + 3 eta^2), +-i(eta^-1/2 -+ 1/2) (in units of Gamma).
std::array<cplx, 3> polynomial_pole_series(double eta);
// The two large roots merge at eta_c = 4/27.
inline constexpr double polynomial_eta_critical = 4.0 / 27.0;

// -d ln|a| / dt by centred differences (one-sided at the ends).
VectorXd effective_decrement(const AmplitudeSeries& series);

// ---------------------------------------------------------------------------
// Critical cycle and echo metrics
// ---------------------------------------------------------------------------

struct CriticalCycle {
    double k_c = 0.0;
    std::vector<std::string> warnings;
};

// Bare: pi^2 C^2. Three mixing sub-lattices: 1 / (1/k_c + 3 delta_1).
CriticalCycle critical_cycle(const ReservoirSpec& spec);

// Outer edge of cycle k in tau: beyond the last lobe of |a^(k)|^2, the point
// where the population falls to half of that lobe's peak.
double cycle_outer_edge(int k);

// First cycle whose outer edge reaches the recurrence period 4 pi Gamma in tau.
int overlap_cycle(double Gamma, int k_limit = 2000);

struct CycleMetrics {
    int k = 0;
    int zero_count = 0;        // zeros of a^(k) on tau >= 0, tau = 0 included
    int component_count = 0;   // local maxima of |a^(k)|^2
    double outer_edge = 0.0;
    bool overlaps_next = false;
    double mean_population = 0.0;  // cycle_average
};

struct EchoMetrics {
    double k_c = 0.0;
    int k_c_detected = 0;
    std::vector<CycleMetrics> cycles;
};

EchoMetrics echo_metrics(const ReservoirSpec& spec, int k_max);

// Integral of |a_s|^2 over the cycle window t in [2 pi k, 2 pi (k+1)], from
// the infinite-band cycle sum. `partial` restricts the integrand to a^(k).
struct CycleAverage {
    double total = 0.0;
    double partial = 0.0;
};
CycleAverage cycle_average(int k, const ReservoirSpec& spec);

// ---------------------------------------------------------------------------
// Langevin form
// ---------------------------------------------------------------------------

struct LangevinResidual {
    VectorXd t;
    VectorXd residual;  // |r(t)| at interior points
    double linf = 0.0;
};

// Residual of  a'' + C^2 a + C^2 int_0^t a'(t') G(t - t') dt' = -C^2 G(t)
// with G = 2 pi sum delta(t - 2 pi k) - 1, on a uniform grid. Points within
// two steps of a cycle boundary are skipped; the delta at t' = t carries half
// weight. The equation describes the infinite-band reservoir.
LangevinResidual langevin_residual(const AmplitudeSeries& series, const ReservoirSpec& spec);

// ---------------------------------------------------------------------------
// Reservoir amplitudes
// ---------------------------------------------------------------------------

// Cycle-k contribution to a_n at local time tau (>= 0) for the bare model.
cplx reservoir_partial(int n, int k, double tau, const ReservoirSpec& spec);
// Same on an ascending list of local times, integrated cumulatively.
VectorXcd reservoir_partial_series(int n, int k, const VectorXd& taus, const ReservoirSpec& spec);
// a_n(t) = sum over started cycles.
VectorXcd reservoir_amplitude_cycles(int n, const VectorXd& grid, const ReservoirSpec& spec);
// Exact amplitude of reservoir level index n in the truncated model, from the spectrum.
VectorXcd reservoir_amplitude_spectral(int n, const VectorXd& grid, const ReservoirSpec& spec);

struct EndOfCycle {
    int n = 0;
    int k = 0;
    cplx amplitude;
    double lorentzian = 0.0;   // Gamma / (pi (Gamma^2 + n^2))
    double geometric_phase = 0.0;  // atan(n / Gamma)
};
// a_n at t = 2 pi k (k >= 1), summing cycles 0 .. k-1.
EndOfCycle end_of_cycle(int n, int k, const ReservoirSpec& spec);
// iC(-1)^k (Gamma + i n)^(k-1) / (Gamma - i n)^k, the closed form at t = 2 pi k.
cplx end_of_cycle_closed(int n, int k, const ReservoirSpec& spec);

struct DoubleResonance {
    int n = 0;
    int k = 0;
    double tau_estimate = 0.0;         // (4k - 0.74 k^(1/3)) (Gamma/n) atan(n/Gamma)
    double half_width_estimate = 0.0;  // (32 k)^(1/3)
    double k_n_estimate = 0.0;         // (k_c / n)^3 / 4, infinite for n = 0
    std::optional<double> tau_detected;
    std::optional<double> half_width_detected;
};

// For n = 0 the detected time is the sign change of Im a_0 in cycle k closest
// to the estimate and the detected width is the full width in tau of the
// region around it where |a_0| < C / (2 Gamma). For n != 0 the detected time is
// the minimum of |a_n| in the cycle; no width is detected.
DoubleResonance double_resonance(int n, int k, const ReservoirSpec& spec);

} // namespace zwanzig
