#include "zwanzig/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "zwanzig/quadrature.hpp"

namespace zwanzig {

namespace {

double per_level(const std::vector<double>& v, int n, int N, double fallback) {
    if (v.empty()) return fallback;
    if (v.size() == 1) return v.front();
    return v.at(static_cast<std::size_t>(n + N));
}

void check_size(const std::vector<double>& v, int size, const char* name) {
    if (v.size() > 1 && static_cast<int>(v.size()) != size)
        throw SpecError(std::string(name) + " must hold 1 or 2N+1 entries");
}

} // namespace

void validate(const EnsembleSpec& ens) {
    validate(ens.base);
    const int size = ens.base.size();
    check_size(ens.mean_shifts, size, "mean_shifts");
    check_size(ens.widths, size, "widths");
    check_size(ens.dispersion0, size, "dispersion0");
    for (double w : ens.widths)
        if (!(w >= 0.0)) throw SpecError("ensemble widths must be non-negative");
    for (double d : ens.dispersion0)
        if (!(d >= 0.0)) throw SpecError("ensemble dispersions must be non-negative");
    if (!(ens.temperature >= 0.0)) throw SpecError("temperature must be non-negative");
    if (!(ens.phonon_energy > 0.0)) throw SpecError("phonon energy must be positive");
    if (ens.members < 2) throw SpecError("an ensemble needs at least 2 members");
}

double phonon_factor(double phonon_energy, double temperature) {
    if (temperature == 0.0) return 1.0;
    return 1.0 / std::tanh(phonon_energy / temperature);
}

double dispersion(const EnsembleSpec& ens, int n) {
    const double d0 = per_level(ens.dispersion0, n, ens.base.N, 0.0);
    return d0 * std::sqrt(phonon_factor(ens.phonon_energy, ens.temperature));
}

std::mt19937_64 member_stream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

ReservoirSpec sample_member(const EnsembleSpec& ens, std::mt19937_64& rng) {
    const int N = ens.base.N;
    const std::vector<Level> base = levels(ens.base);
    ExplicitLevels out;
    out.levels.reserve(base.size());
    // draw f_n by hand (Box-Muller) so the sequence does not depend on the standard library's normal_distribution
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int n = -N; n <= N; ++n) {
        Level l = base[static_cast<std::size_t>(n + N)];
        const double d = dispersion(ens, n);
        const double u1 = 1.0 - uni(rng), u2 = uni(rng);
        const double f = d * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
        l.energy += per_level(ens.mean_shifts, n, N, 0.0) + f;
        l.width = per_level(ens.widths, n, N, l.width);
        out.levels.push_back(l);
    }
    ReservoirSpec m = ens.base;
    m.variant = std::move(out);
    return m;
}

namespace {

VectorXcd member_amplitude(const ReservoirSpec& spec, const VectorXd& grid) {
    bool common = true;
    for (const Level& l : levels(spec)) common = common && l.width == spec.gamma_s;
    if (common) return evolve_fourier(spec, grid).a_s;
    return evolve_oracle(build_hamiltonian(spec), grid).a_s;
}

} // namespace

EnsembleDynamics ensemble_dynamics(const EnsembleSpec& ens, const VectorXd& grid, int members, int threads) {
    validate(ens);
    if (members < 2) throw SpecError("an ensemble needs at least 2 members");
    threads = std::max(1, threads);
    const Eigen::Index T = grid.size();
    EnsembleDynamics out;
    out.t = grid;
    out.members = members;
    out.mean_amplitude = VectorXcd::Zero(T);
    VectorXd mean = VectorXd::Zero(T), m2 = VectorXd::Zero(T);

    const int block = 16 * threads;
    std::vector<VectorXcd> results(static_cast<std::size_t>(block));
    int count = 0;
    for (int first = 0; first < members; first += block) {
        const int size = std::min(block, members - first);
        auto work = [&](int w) {
            for (int i = w; i < size; i += threads) {
                std::mt19937_64 rng = member_stream(ens.seed, static_cast<std::uint64_t>(first + i));
                results[static_cast<std::size_t>(i)] = member_amplitude(sample_member(ens, rng), grid);
            }
        };
        if (threads == 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
            for (auto& th : pool) th.join();
        }
        // Welford update in member order keeps the result independent of the thread count
        for (int i = 0; i < size; ++i) {
            const VectorXcd& a = results[static_cast<std::size_t>(i)];
            ++count;
            out.mean_amplitude += (a - out.mean_amplitude) / static_cast<double>(count);
            const VectorXd p = a.cwiseAbs2();
            const VectorXd delta = p - mean;
            mean += delta / static_cast<double>(count);
            m2 += delta.cwiseProduct(p - mean);
        }
    }
    out.mean_population = mean;
    out.stderr_population = (m2 / static_cast<double>(count - 1)).cwiseSqrt() / std::sqrt(static_cast<double>(count));
    return out;
}

VectorXd lineshape(double gamma, double delta, const VectorXd& eps) {
    if (!(gamma >= 0.0 && delta >= 0.0)) throw SpecError("line-shape widths must be non-negative");
    if (gamma == 0.0 && delta == 0.0) throw SpecError("line shape needs a nonzero width");
    VectorXd out(eps.size());
    auto lorentz = [gamma](double x) { return gamma / (pi * (x * x + gamma * gamma)); };
    auto gauss = [delta](double x) { return std::exp(-0.5 * x * x / (delta * delta)) / (std::sqrt(2.0 * pi) * delta); };
    for (Eigen::Index i = 0; i < eps.size(); ++i) {
        const double e = eps(i);
        if (delta == 0.0) {
            out(i) = lorentz(e);
            continue;
        }
        if (gamma == 0.0) {
            out(i) = gauss(e);
            continue;
        }
        // Gaussian mass beyond 12 delta is below 1e-32
        const double a = -12.0 * delta, b = 12.0 * delta;
        auto f = [&](double x) { return std::complex<double>(gauss(x) * lorentz(e - x), 0.0); };
        double value = 0.0;
        if (e > a && e < b) {
            value = integrate_gk(f, a, e, 1e-15, 1e-11).value.real() + integrate_gk(f, e, b, 1e-15, 1e-11).value.real();
        } else {
            value = integrate_gk(f, a, b, 1e-15, 1e-11).value.real();
        }
        out(i) = value;
    }
    return out;
}

Resolution resolution(const EnsembleSpec& ens, double threshold) {
    validate(ens);
    const int N = ens.base.N;
    const std::vector<Level> base = levels(ens.base);
    Resolution r;
    r.threshold = threshold;
    for (int n = -N; n < N; ++n) {
        const double e0 = base[static_cast<std::size_t>(n + N)].energy + per_level(ens.mean_shifts, n, N, 0.0);
        const double e1 = base[static_cast<std::size_t>(n + N + 1)].energy + per_level(ens.mean_shifts, n + 1, N, 0.0);
        const double gap = std::abs(e1 - e0);
        const double d = std::max(dispersion(ens, n), dispersion(ens, n + 1));
        const double ratio = gap > 0.0 ? d / gap : (d > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        if (ratio > r.worst_ratio) {
            r.worst_ratio = ratio;
            r.worst_level = n;
        }
    }
    r.resolved = r.worst_ratio < threshold;
    return r;
}

} // namespace zwanzig
