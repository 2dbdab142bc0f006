#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "zwanzig/dynamics.hpp"
#include "zwanzig/model.hpp"

namespace zwanzig {

// Ensemble of nano-particles whose reservoir levels carry frozen random
// shifts. Level n of a member sits at base energy + mean shift + f_n with f_n
// Gaussian of zero mean and dispersion delta_n(T), and has width gamma_n.
// Per-level vectors hold 2N+1 entries (index n + N) or a single entry
// applied to every level; an empty vector means zero (shifts, dispersions)
// or the base width (widths).
struct EnsembleSpec {
    ReservoirSpec base;
    std::vector<double> mean_shifts;
    std::vector<double> widths;
    std::vector<double> dispersion0;   // delta_n at T = 0
    double temperature = 0.0;          // k_B = 1, in units of the mean spacing
    double phonon_energy = 1.0;        // representative phonon energy eps_q
    int members = 100;
    std::uint64_t seed = 0;
};

void validate(const EnsembleSpec& ens);

// coth(eps_q / T); 1 at T = 0.
double phonon_factor(double phonon_energy, double temperature);
// delta_n(T) = delta_n(0) sqrt(coth(eps_q / T)).
double dispersion(const EnsembleSpec& ens, int n);

// Independent stream for member `index`, derived from the master seed only,
// so the member sequence does not depend on scheduling.
std::mt19937_64 member_stream(std::uint64_t seed, std::uint64_t index);

// Explicit-level spec of one member.
ReservoirSpec sample_member(const EnsembleSpec& ens, std::mt19937_64& rng);

struct EnsembleDynamics {
    VectorXd t;
    VectorXd mean_population;     // average of |a_s|^2 over members (default observable)
    VectorXd stderr_population;   // sample standard deviation / sqrt(M)
    VectorXcd mean_amplitude;     // average of a_s over members
    int members = 0;
};

// Members are evolved independently (Fourier when every level shares the
// initial-state width, dense oracle otherwise) on up to `threads` threads;
// the reduction runs in member order.
EnsembleDynamics ensemble_dynamics(const EnsembleSpec& ens, const VectorXd& grid, int members, int threads = 1);
inline EnsembleDynamics ensemble_dynamics(const EnsembleSpec& ens, const VectorXd& grid) {
    return ensemble_dynamics(ens, grid, ens.members);
}

// Gaussian phase-diffusion estimate of the echo suppression at cycle k.
inline double dephasing_factor(int k, double delta) {
    const double x = 2.0 * pi * k * delta;
    return std::exp(-0.5 * x * x);
}

// Lorentzian of half-width gamma convolved with a Gaussian of standard
// deviation delta, by direct numerical convolution.
VectorXd lineshape(double gamma, double delta, const VectorXd& eps);

struct Resolution {
    double worst_ratio = 0.0;   // max_n delta_n / |eps_n - eps_{n+1}|
    int worst_level = 0;
    bool resolved = true;       // worst_ratio below `threshold`
    double threshold = 0.25;
};
Resolution resolution(const EnsembleSpec& ens, double threshold = 0.25);

} // namespace zwanzig
