#include "zwanzig/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace zwanzig {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Sub-lattice decomposition n = m K + k with 0 <= k < K, for n >= 0.
std::pair<int, int> split(int n, int K) { return {n / K, n % K}; }

double positive_side_energy(const ReservoirSpec& spec, int n) {
    return std::visit(
        overloaded{
            [&](const Bare&) { return double(n); },
            [&](const HomogeneousDeformation& d) {
                const double n2 = double(n) * n;
                return std::sqrt(n2 * std::pow(1.0 + d.a * d.a * n2, d.sign));
            },
            [&](const Sublattices& s) {
                auto [m, k] = split(n, s.K);
                return double(n) + (k == 0 ? 0.0 : s.offsets[k - 1]);
            },
            [&](const MixingSublattices& s) {
                auto [m, k] = split(n, s.K);
                return double(n) * (1.0 + (k == 0 ? 0.0 : s.deltas[k - 1]));
            },
            [&](const ExplicitLevels&) { return 0.0; },
        },
        spec.variant);
}

} // namespace

std::string ReservoirSpec::variant_name() const {
    return std::visit(overloaded{[](const Bare&) { return std::string("bare"); },
                                 [](const HomogeneousDeformation&) { return std::string("homogeneous"); },
                                 [](const Sublattices&) { return std::string("sublattices"); },
                                 [](const MixingSublattices&) { return std::string("mixing"); },
                                 [](const ExplicitLevels&) { return std::string("explicit"); }},
                      variant);
}

int default_truncation(double C) { return std::max(static_cast<int>(std::ceil(10.0 * pi * C * C)), 50); }

void validate(const ReservoirSpec& spec) {
    if (spec.N < 0) throw SpecError("truncation N must be non-negative");
    if (!std::isfinite(spec.C)) throw SpecError("coupling C must be finite");
    if (spec.gamma < 0 || spec.gamma_s < 0) throw SpecError("widths must be non-negative");
    std::visit(overloaded{
                   [](const Bare&) {},
                   [](const HomogeneousDeformation& d) {
                       if (d.sign != 1 && d.sign != -1) throw SpecError("deformation sign must be +1 or -1");
                       if (d.a < 0 || d.b < 0) throw SpecError("deformation constants a, b must be >= 0");
                   },
                   [](const Sublattices& s) {
                       if (s.K < 1) throw SpecError("sub-lattice count K must be >= 1");
                       if (static_cast<int>(s.offsets.size()) != s.K - 1)
                           throw SpecError("sub-lattices need K-1 offsets");
                       for (int k = 0; k < s.K - 1; ++k) {
                           if (s.offsets[k] >= 0.5) throw SpecError("sub-lattice offsets must be < 1/2");
                           if (k > 0 && !(s.offsets[k - 1] < s.offsets[k]))
                               throw SpecError("sub-lattice offsets must increase: x_1 < x_2 < ...");
                       }
                   },
                   [](const MixingSublattices& s) {
                       if (s.K < 1) throw SpecError("sub-lattice count K must be >= 1");
                       if (static_cast<int>(s.deltas.size()) != s.K - 1)
                           throw SpecError("mixing sub-lattices need K-1 deltas");
                       for (int k = 0; k < s.K - 1; ++k) {
                           if (s.deltas[k] < 0) throw SpecError("mixing deltas must be >= 0");
                           if (k > 0 && !(s.deltas[k - 1] <= s.deltas[k]))
                               throw SpecError("mixing deltas must not decrease: delta_1 <= delta_2 <= ...");
                       }
                   },
                   [&](const ExplicitLevels& e) {
                       if (static_cast<int>(e.levels.size()) != spec.size())
                           throw SpecError("explicit level list must hold 2N+1 entries");
                       for (const auto& l : e.levels)
                           if (l.width < 0) throw SpecError("explicit level widths must be >= 0");
                   },
               },
               spec.variant);
}

std::vector<std::string> diagnostics(const ReservoirSpec& spec) {
    std::vector<std::string> out;
    const int need = static_cast<int>(std::ceil(10.0 * spec.Gamma()));
    if (spec.N < need && !std::holds_alternative<ExplicitLevels>(spec.variant)) {
        std::ostringstream os;
        os << "truncation N=" << spec.N << " is below 10*Gamma=" << need << "; Lorentzian tails are cut";
        out.push_back(os.str());
    }
    if (auto* m = std::get_if<MixingSublattices>(&spec.variant)) {
        if (!m->deltas.empty() && m->deltas.back() >= 0.5)
            out.push_back("largest mixing delta >= 1/2 (outside the stated sub-lattice range)");
    }
    const auto perms = level_permutations(spec);
    if (!perms.empty()) {
        // report the pair nearest n = 0, where the resonance sits
        auto best = *std::min_element(perms.begin(), perms.end(), [](const auto& x, const auto& y) {
            return std::abs(x.first) + std::abs(x.second) < std::abs(y.first) + std::abs(y.second);
        });
        std::ostringstream os;
        os << "level order permuted at " << perms.size() << " adjacent pair(s); closest to the centre between n=" << best.first
           << " and n=" << best.second;
        out.push_back(os.str());
    }
    return out;
}

Level level(const ReservoirSpec& spec, int n) {
    if (n < -spec.N || n > spec.N) throw SpecError("level index outside truncation range");
    if (auto* e = std::get_if<ExplicitLevels>(&spec.variant)) return e->levels.at(static_cast<std::size_t>(n + spec.N));

    const int m = std::abs(n);
    const double sgn = n < 0 ? -1.0 : 1.0;
    Level out;
    out.energy = sgn * positive_side_energy(spec, m);
    out.coupling = spec.C;
    out.width = spec.gamma;
    if (auto* d = std::get_if<HomogeneousDeformation>(&spec.variant)) {
        const double n2 = double(m) * m;
        out.coupling = spec.C * std::sqrt(std::pow(1.0 + d->b * d->b * n2, d->sign));
    }
    return out;
}

std::vector<Level> levels(const ReservoirSpec& spec) {
    std::vector<Level> out;
    out.reserve(static_cast<std::size_t>(spec.size()));
    for (int n = -spec.N; n <= spec.N; ++n) out.push_back(level(spec, n));
    return out;
}

std::vector<std::pair<int, int>> level_permutations(const ReservoirSpec& spec) {
    std::vector<std::pair<int, int>> out;
    auto lv = levels(spec);
    for (std::size_t i = 0; i + 1 < lv.size(); ++i)
        if (!(lv[i + 1].energy > lv[i].energy))
            out.emplace_back(static_cast<int>(i) - spec.N, static_cast<int>(i) + 1 - spec.N);
    return out;
}

HamiltonianMatrix build_hamiltonian(const ReservoirSpec& spec) {
    validate(spec);
    HamiltonianMatrix H;
    H.initial_energy = 0.0;
    H.initial_width = spec.gamma_s;
    const int L = spec.size();
    H.energies.resize(L);
    H.widths.resize(L);
    H.couplings.resize(L);
    auto lv = levels(spec);
    for (int i = 0; i < L; ++i) {
        H.energies(i) = lv[static_cast<std::size_t>(i)].energy;
        H.widths(i) = lv[static_cast<std::size_t>(i)].width;
        H.couplings(i) = lv[static_cast<std::size_t>(i)].coupling;
    }
    return H;
}

VectorXcd HamiltonianMatrix::apply(const VectorXcd& x) const {
    const int L = static_cast<int>(energies.size());
    VectorXcd y(L + 1);
    cplx s = cplx(initial_energy, -initial_width) * x(0);
    for (int i = 0; i < L; ++i) {
        s += couplings(i) * x(i + 1);
        y(i + 1) = cplx(energies(i), -widths(i)) * x(i + 1) + couplings(i) * x(0);
    }
    y(0) = s;
    return y;
}

} // namespace zwanzig
