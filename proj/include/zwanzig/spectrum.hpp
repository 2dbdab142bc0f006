#pragma once

#include <optional>
#include <vector>

#include "zwanzig/model.hpp"

namespace zwanzig {

// Secular function F(eps) = eps - e_s - sum_n C_n^2 / (eps - eps_n) on an
// explicit pole list. This is the workhorse shared by the bare model, the TLS
// parity blocks and the chain.
struct PoleSet {
    VectorXd poles;    // eps_n
    VectorXd weights;  // C_n^2
    double initial_energy = 0.0;

    static PoleSet from_spec(const ReservoirSpec& spec);
    double value(double eps) const;
    double derivative(double eps) const;  // 1 + sum C^2/(eps - eps_n)^2
};

class PoleError : public NumericError {
public:
    using NumericError::NumericError;
};

// Truncated secular function of the spec; throws PoleError within 1e-14 of a pole.
double secular_value(const ReservoirSpec& spec, double eps);

// Resummed bare form eps + i gamma - Gamma cot(pi (eps + i gamma)).
cplx secular_value_closed(double C, double gamma, cplx eps);

struct SpectrumSolution {
    VectorXd poles;        // sorted unperturbed levels (distinct, coupled)
    VectorXd roots;        // eps*_j, ascending; one below, one per interval, one above
    VectorXd weights;      // w_j = 1/F'(eps*_j)
    VectorXd residuals;    // |F(eps*_j)|, 0 for decoupled roots
    std::vector<int> interval;  // interval index: -1 below, i in (p_i, p_{i+1}), P-1 above; -2 decoupled
    bool dense_fallback = false;

    double weight_sum() const { return weights.sum(); }
};

SpectrumSolution solve_secular(const PoleSet& set);
SpectrumSolution solve_spectrum(const ReservoirSpec& spec);

// Eigenvector overlap <n|j> for reservoir level with energy eps_n and coupling C_n.
inline double mixed_component(double root, double weight, double pole, double coupling) {
    return coupling * std::sqrt(weight) / (root - pole);
}

// Absorption band: Lorentzian envelope times the comb of width-gamma lines.
// Every level must carry a positive width.
VectorXd absorption_band(const ReservoirSpec& spec, const VectorXd& eps_grid);

// Lorentzian comb resolvable: peak/valley contrast coth^2(pi gamma) >= 2.
bool components_resolved(double gamma);

struct MomentsTable {
    int n = 0;
    std::vector<double> gaps;     // Delta_{n+k}, k != 0
    std::vector<double> moments;  // M_{n nu}, nu = 0 .. nu_max
    double smallest_gap = 0.0;
    bool small_denominator = false;
};

MomentsTable moments(const ReservoirSpec& spec, int n, int nu_max, double small_gap = 1e-3);

// First level-order permutation among levels with |eps| <= Gamma under the
// K-sub-lattice stretch delta_k = k * delta. Returns nullopt if none occurs
// for delta below delta_max.
struct MixingThreshold {
    std::optional<double> delta_c;
    int lower_level = 0;  // positive-side index of the level that overtakes its neighbour
};
MixingThreshold critical_mixing_deformation(double Gamma, int K = 3, double delta_max = 1.0);

} // namespace zwanzig
