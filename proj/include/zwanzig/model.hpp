#pragma once

#include <string>
#include <variant>
#include <vector>

#include "zwanzig/core.hpp"

namespace zwanzig {

// Unperturbed reservoir level: energy, coupling to the initial state, width.
struct Level {
    double energy = 0.0;
    double coupling = 0.0;
    double width = 0.0;
};

struct Bare {};

// eps_n^2 = n^2 (1 + a^2 n^2)^{sign}, C_n^2 = C^2 (1 + b^2 n^2)^{sign}
struct HomogeneousDeformation {
    double a = 0.0;
    double b = 0.0;
    int sign = +1;
};

// K shifted copies of a period-K lattice; offsets x_1 .. x_{K-1}.
struct Sublattices {
    int K = 1;
    std::vector<double> offsets;
};

// K copies with incommensurate stretch factors (1 + delta_k), k = 1 .. K-1.
struct MixingSublattices {
    int K = 1;
    std::vector<double> deltas;
};

// Arbitrary level list; must hold 2N+1 entries.
struct ExplicitLevels {
    std::vector<Level> levels;
};

using Variant = std::variant<Bare, HomogeneousDeformation, Sublattices, MixingSublattices, ExplicitLevels>;

struct ReservoirSpec {
    Variant variant = Bare{};
    int N = 50;            // levels n = -N .. N
    double C = 1.0;        // coupling
    double gamma = 0.0;    // reservoir level width
    double gamma_s = 0.0;  // initial-state width

    double Gamma() const { return pi * C * C; }
    int size() const { return 2 * N + 1; }
    std::string variant_name() const;
};

// Default truncation max(ceil(10 Gamma), 50).
int default_truncation(double C);

// Throws SpecError on hard violations (negative widths, malformed variant data).
void validate(const ReservoirSpec& spec);

// Soft diagnostics: truncation below 10 Gamma, level-order permutations, resolution.
std::vector<std::string> diagnostics(const ReservoirSpec& spec);

Level level(const ReservoirSpec& spec, int n);
std::vector<Level> levels(const ReservoirSpec& spec);  // index i <-> n = i - N

// Adjacent index pairs (n, n+1) whose energies are out of order.
std::vector<std::pair<int, int>> level_permutations(const ReservoirSpec& spec);

// Bordered (arrow) Hamiltonian in the single-excitation sector.
// Index 0 is the initial state, index 1 + (n + N) is reservoir level n.
struct HamiltonianMatrix {
    double initial_energy = 0.0;
    double initial_width = 0.0;
    VectorXd energies;   // reservoir diagonal
    VectorXd widths;     // reservoir widths
    VectorXd couplings;  // border

    int dimension() const { return static_cast<int>(energies.size()) + 1; }
    bool hermitian() const { return initial_width == 0.0 && (widths.array() == 0.0).all(); }

    // Dense matrix H with diagonal eps - i*width. Scalar must be complex
    // unless the matrix is Hermitian.
    template <class Scalar = cplx>
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dense() const;

    // y = H x without forming the matrix.
    VectorXcd apply(const VectorXcd& x) const;
};

HamiltonianMatrix build_hamiltonian(const ReservoirSpec& spec);

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> HamiltonianMatrix::dense() const {
    const int n = dimension();
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> H =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
    auto diag = [](double e, double w) {
        if constexpr (std::is_same_v<Scalar, cplx>) return cplx(e, -w);
        else {
            if (w != 0.0) throw SpecError("real Hamiltonian requested for a spec with nonzero widths");
            return Scalar(e);
        }
    };
    H(0, 0) = diag(initial_energy, initial_width);
    for (int i = 1; i < n; ++i) {
        H(i, i) = diag(energies(i - 1), widths(i - 1));
        H(0, i) = H(i, 0) = Scalar(couplings(i - 1));
    }
    return H;
}

} // namespace zwanzig
