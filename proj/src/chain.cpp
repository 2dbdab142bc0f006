#include "zwanzig/chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "zwanzig/quadrature.hpp"
#include "zwanzig/special.hpp"
#include "zwanzig/spectrum.hpp"

namespace zwanzig {

double ChainSpec::Gamma() const {
    if (C2 >= 1.0) return std::numeric_limits<double>::infinity();
    return C2 * (N + 1) / (pi * (1.0 - C2));
}

void validate(const ChainSpec& spec) {
    if (spec.N < 1) throw SpecError("chain half-length N must be at least 1");
    if (!(spec.C2 >= 0.0 && spec.C2 <= 1.0)) throw SpecError("chain coupling C^2 must lie in [0, 1]");
    if (std::abs(spec.impurity) >= spec.N) throw SpecError("impurity must sit strictly inside the chain");
}

double chain_determinant(int N, double eps) {
    double prev = 1.0, cur = eps;  // D_0, D_1
    if (N == 0) return prev;
    for (int n = 1; n < N; ++n) {
        const double next = eps * cur - prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

MatrixXd chain_hamiltonian(const ChainSpec& spec) {
    validate(spec);
    const int dim = 2 * spec.N + 1;
    MatrixXd H = MatrixXd::Zero(dim, dim);
    const int imp = spec.impurity + spec.N;
    for (int i = 0; i + 1 < dim; ++i) {
        const bool touches = (i == imp || i + 1 == imp);
        H(i, i + 1) = H(i + 1, i) = touches ? spec.C() : 1.0;
    }
    return H;
}

namespace {

// Symmetric-state condition multiplied by sin(theta):
// 2 cos(theta) sin((N+1) theta) - 2 C^2 sin(N theta).
double symmetric_condition(int N, double C2, double theta) {
    return 2.0 * std::cos(theta) * std::sin((N + 1) * theta) - 2.0 * C2 * std::sin(N * theta);
}

double bisect(int N, double C2, double lo, double hi) {
    double flo = symmetric_condition(N, C2, lo);
    for (int it = 0; it < 200 && hi - lo > 1e-16 * (1.0 + std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = symmetric_condition(N, C2, mid);
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct Eigenpairs {
    VectorXd energies;
    MatrixXd vectors;  // columns: normalised eigenvectors in the site basis
};

Eigenpairs dense_eigenpairs(const ChainSpec& spec) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(chain_hamiltonian(spec));
    if (es.info() != Eigen::Success) throw NumericError("chain eigen-decomposition failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

// Dense evolution of the listed sites; tau = 2t.
MatrixXcd dense_sites(const ChainSpec& spec, const VectorXd& tau, const std::vector<int>& sites) {
    const Eigenpairs ep = dense_eigenpairs(spec);
    const int imp = spec.impurity + spec.N;
    const Eigen::Index J = ep.energies.size();
    MatrixXcd out(tau.size(), static_cast<Eigen::Index>(sites.size()));
    VectorXcd phase(J);
    for (Eigen::Index i = 0; i < tau.size(); ++i) {
        for (Eigen::Index j = 0; j < J; ++j)
            phase(j) = std::polar(ep.vectors(imp, j), -0.5 * ep.energies(j) * tau(i));
        for (std::size_t s = 0; s < sites.size(); ++s) {
            const int row = sites[s] + spec.N;
            out(i, static_cast<Eigen::Index>(s)) = (ep.vectors.row(row).cast<cplx>() * phase)(0);
        }
    }
    return out;
}

std::vector<int> all_sites(int N) {
    std::vector<int> s;
    for (int n = -N; n <= N; ++n) s.push_back(n);
    return s;
}

// Integrand of the cycle-k amplitude in phi = alpha lambda, without the tau phase.
struct PartialRule {
    std::vector<double> sin_phi;
    std::vector<cplx> weight;  // quadrature weight times the tau-independent factor
};

PartialRule partial_rule(const ChainSpec& spec, int k, double tau_max) {
    const double c = (1.0 - spec.C2) / spec.C2;
    const double freq = 2.0 * k * (spec.N + 1);
    // phase variation over (-pi/2, pi/2) is at most (|freq| + tau_max) pi
    const double oscillations = 0.5 * (std::abs(freq) + tau_max);
    const int panels = static_cast<int>(std::ceil(oscillations)) + 16;
    const GaussRule& g = gauss_legendre(16);
    const double h = pi / panels;
    PartialRule r;
    r.sin_phi.reserve(static_cast<std::size_t>(panels) * 16);
    r.weight.reserve(static_cast<std::size_t>(panels) * 16);
    for (int p = 0; p < panels; ++p)
        for (std::size_t q = 0; q < g.nodes.size(); ++q) {
            const double phi = -0.5 * pi + h * (p + 0.5 * (g.nodes[q] + 1.0));
            const double s = std::sin(phi), co = std::cos(phi);
            const double theta = std::atan2(co, c * s);
            const double mag = co * co / (c * c * s * s + co * co);
            const cplx f = std::polar(mag, freq * phi - 2.0 * k * theta);
            r.sin_phi.push_back(s);
            r.weight.push_back(0.5 * h * g.weights[q] * f / (pi * spec.C2));
        }
    return r;
}

void require_cycle_map(const ChainSpec& spec) {
    validate(spec);
    if (spec.impurity != 0) throw SpecError("chain cycle integrals need a centred impurity");
    if (spec.N % 2 == 0) throw SpecError("chain cycle integrals need odd N");
    if (spec.C2 <= 0.0) throw SpecError("chain cycle integrals need C^2 > 0");
}

// Cycle-k amplitude on tau0 + i dtau, phases advanced by recurrence and re-anchored every 64 steps.
VectorXcd partial_uniform(const ChainSpec& spec, int k, double tau0, double dtau, int count) {
    const PartialRule r = partial_rule(spec, k, tau0 + dtau * count);
    const std::size_t n = r.weight.size();
    std::vector<cplx> cur(n), step(n);
    VectorXcd out(count);
    for (int i = 0; i < count; ++i) {
        if (i % 64 == 0) {
            const double t = tau0 + dtau * i;
            for (std::size_t q = 0; q < n; ++q) {
                cur[q] = r.weight[q] * std::polar(1.0, -t * r.sin_phi[q]);
                step[q] = std::polar(1.0, -dtau * r.sin_phi[q]);
            }
        }
        cplx acc = 0.0;
        for (std::size_t q = 0; q < n; ++q) {
            acc += cur[q];
            cur[q] *= step[q];
        }
        out(i) = acc;
    }
    return out;
}

} // namespace

ChainSpectrum chain_spectrum(const ChainSpec& spec) {
    validate(spec);
    if (spec.impurity != 0) throw SpecError("chain spectrum needs a centred impurity");
    const int N = spec.N;
    const double alpha = pi / (N + 1);
    ChainSpectrum out;
    out.Gamma = spec.Gamma();
    out.band.resize(N);
    out.couplings.resize(N);
    for (int j = 1; j <= N; ++j) {
        out.band(j - 1) = 2.0 * std::cos(alpha * j);
        // each half-chain standing wave couples with C sqrt(2/(N+1)) sin; the symmetric pair adds sqrt 2
        out.couplings(j - 1) = 2.0 * spec.C() * std::sin(alpha * j) / std::sqrt(N + 1.0);
    }
    out.antisymmetric_roots = out.band.reverse();

    std::vector<double> theta;
    if (spec.C2 == 0.0) {
        // decoupled impurity; it keeps its level 0 with full weight
        theta.push_back(0.5 * pi);
    } else {
        // one root in (0, theta_1), one between consecutive band angles, one in (theta_N, pi)
        std::vector<double> edges{0.0};
        for (int j = 1; j <= N; ++j) edges.push_back(alpha * j);
        edges.push_back(pi);
        for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
            const double lo = edges[i] + (i == 0 ? 1e-14 : 0.0);
            const double hi = edges[i + 1] - (i + 2 == edges.size() ? 1e-14 : 0.0);
            if ((symmetric_condition(N, spec.C2, lo) < 0) == (symmetric_condition(N, spec.C2, hi) < 0))
                throw NumericError("chain symmetric root not bracketed; C^2 too large for an in-band spectrum");
            theta.push_back(bisect(N, spec.C2, lo, hi));
        }
    }
    const Eigen::Index S = static_cast<Eigen::Index>(theta.size());
    out.symmetric_angles.resize(S);
    out.symmetric_roots.resize(S);
    out.symmetric_weights.resize(S);
    // ascending energy = descending angle
    for (Eigen::Index i = 0; i < S; ++i) {
        const double th = theta[static_cast<std::size_t>(S - 1 - i)];
        out.symmetric_angles(i) = th;
        out.symmetric_roots(i) = 2.0 * std::cos(th);
        if (spec.C2 == 0.0) {
            out.symmetric_weights(i) = 1.0;
            continue;
        }
        const double psi0 = std::sin((N + 1) * th) / spec.C();
        double norm = psi0 * psi0;
        for (int m = 1; m <= N; ++m) norm += 2.0 * std::pow(std::sin(m * th), 2);
        out.symmetric_weights(i) = psi0 * psi0 / norm;
    }

    // every symmetric and antisymmetric root must be a dense eigenvalue
    const VectorXd dense = dense_eigenpairs(spec).energies;
    std::vector<double> mine(out.symmetric_roots.data(), out.symmetric_roots.data() + S);
    if (spec.C2 == 0.0)
        for (int j = 0; j < N; ++j) mine.push_back(out.band(j));
    for (int j = 0; j < N; ++j) mine.push_back(out.band(j));
    std::sort(mine.begin(), mine.end());
    double dev = 0.0;
    for (Eigen::Index i = 0; i < dense.size(); ++i) dev = std::max(dev, std::abs(dense(i) - mine[static_cast<std::size_t>(i)]));
    out.dense_deviation = dev;
    return out;
}

MatrixXcd chain_oracle(const ChainSpec& spec, const VectorXd& tau) {
    validate(spec);
    return dense_sites(spec, tau, all_sites(spec.N));
}

VectorXcd chain_partial_amplitude(const ChainSpec& spec, int k, const VectorXd& tau) {
    require_cycle_map(spec);
    const double tmax = tau.size() ? tau.cwiseAbs().maxCoeff() : 0.0;
    const PartialRule r = partial_rule(spec, k, tmax);
    VectorXcd out(tau.size());
    for (Eigen::Index i = 0; i < tau.size(); ++i) {
        cplx acc = 0.0;
        for (std::size_t q = 0; q < r.weight.size(); ++q) acc += r.weight[q] * std::polar(1.0, -tau(i) * r.sin_phi[q]);
        out(i) = acc;
    }
    return out;
}

namespace {

// Number of cycles before and after the causal one kept in the chain cycle sum.
constexpr int chain_cycles_before = 6;
constexpr int chain_cycles_after = 3;

VectorXcd impurity_cycles(const ChainSpec& spec, const VectorXd& tau) {
    require_cycle_map(spec);
    VectorXcd out = VectorXcd::Zero(tau.size());
    if (tau.size() == 0) return out;
    const double T = spec.period();
    const int k_hi = static_cast<int>(std::floor(tau.maxCoeff() / T)) + chain_cycles_after;
    const int k_lo = -chain_cycles_before;
    for (int k = k_lo; k <= k_hi; ++k) {
        // only the times whose causal cycle lies within the kept band around k
        std::vector<Eigen::Index> idx;
        for (Eigen::Index i = 0; i < tau.size(); ++i) {
            const int kc = static_cast<int>(std::floor(tau(i) / T));
            if (k >= kc - chain_cycles_before && k <= kc + chain_cycles_after) idx.push_back(i);
        }
        if (idx.empty()) continue;
        VectorXd sub(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) sub(static_cast<Eigen::Index>(i)) = tau(idx[i]);
        const VectorXcd part = chain_partial_amplitude(spec, k, sub);
        for (std::size_t i = 0; i < idx.size(); ++i) out(idx[i]) += part(static_cast<Eigen::Index>(i));
    }
    return out;
}

PoleSet chain_pole_set(const ChainSpec& spec) {
    // two half-chains of lengths N + n0 and N - n0 seen from the impurity
    PoleSet set;
    std::vector<double> poles, weights;
    for (int L : {spec.N + spec.impurity, spec.N - spec.impurity}) {
        for (int j = 1; j <= L; ++j) {
            const double x = pi * j / (L + 1);
            poles.push_back(2.0 * std::cos(x));
            weights.push_back(spec.C2 * 2.0 / (L + 1) * std::pow(std::sin(x), 2));
        }
    }
    set.poles = Eigen::Map<VectorXd>(poles.data(), static_cast<Eigen::Index>(poles.size()));
    set.weights = Eigen::Map<VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
    return set;
}

int bessel_order_bound(double tau_max) {
    const double m = tau_max + 30.0 + 10.0 * std::cbrt(tau_max);
    if (m > 200000.0) throw NumericError("Bessel expansion truncation overflow: order bound exceeds 200000");
    return static_cast<int>(std::ceil(m));
}

MatrixXcd bessel_sites(const ChainSpec& spec, const VectorXd& tau, const std::vector<int>& sites) {
    validate(spec);
    if (spec.impurity != 0) throw SpecError("Bessel expansion needs a centred impurity");
    if (spec.C2 > 0.5) throw SpecError("Bessel expansion is limited to C^2 <= 1/2");
    const ChainSpectrum sp = chain_spectrum(spec);
    const int N = spec.N;
    const double tmax = tau.size() ? tau.cwiseAbs().maxCoeff() : 0.0;
    const int M = bessel_order_bound(tmax);
    const Eigen::Index S = sp.symmetric_angles.size();
    const Eigen::Index P = static_cast<Eigen::Index>(sites.size());

    // psi_n psi_0 / norm for every symmetric state
    MatrixXd overlap(P, S);
    for (Eigen::Index j = 0; j < S; ++j) {
        const double th = sp.symmetric_angles(j);
        if (spec.C2 == 0.0) {
            for (Eigen::Index p = 0; p < P; ++p) overlap(p, j) = sites[static_cast<std::size_t>(p)] == 0 ? 1.0 : 0.0;
            continue;
        }
        const double psi0 = std::sin((N + 1) * th) / spec.C();
        const double w = sp.symmetric_weights(j);  // psi0^2 / norm
        for (Eigen::Index p = 0; p < P; ++p) {
            const int n = sites[static_cast<std::size_t>(p)];
            const double psin = n == 0 ? psi0 : std::sin((N + 1 - std::abs(n)) * th);
            overlap(p, j) = psin * w / psi0;
        }
    }
    // S_nm = sum_j overlap_nj cos(m theta_j)
    MatrixXd cosm(S, M + 1);
    for (Eigen::Index j = 0; j < S; ++j)
        for (int m = 0; m <= M; ++m) cosm(j, m) = std::cos(m * sp.symmetric_angles(j));
    const MatrixXd Snm = overlap * cosm;

    MatrixXcd out(tau.size(), P);
    VectorXcd coeff(M + 1);
    for (Eigen::Index i = 0; i < tau.size(); ++i) {
        const std::vector<double> J = bessel_j_all(M, tau(i));
        cplx unit = 1.0;  // (-i)^m
        for (int m = 0; m <= M; ++m) {
            coeff(m) = unit * (m == 0 ? 1.0 : 2.0) * J[static_cast<std::size_t>(m)];
            unit *= cplx(0.0, -1.0);
        }
        out.row(i) = (Snm.cast<cplx>() * coeff).transpose();
    }
    return out;
}

} // namespace

AmplitudeSeries impurity_amplitude(const ChainSpec& spec, const VectorXd& tau, Method method) {
    validate(spec);
    AmplitudeSeries s;
    s.t = tau;
    s.method = method;
    switch (method) {
    case Method::Fourier: {
        s.a_s = VectorXcd::Zero(tau.size());
        if (spec.C2 == 0.0) {
            s.a_s.setOnes();
            return s;
        }
        const SpectrumSolution sol = solve_secular(chain_pole_set(spec));
        for (Eigen::Index i = 0; i < tau.size(); ++i)
            for (Eigen::Index j = 0; j < sol.roots.size(); ++j)
                s.a_s(i) += sol.weights(j) * std::polar(1.0, -0.5 * sol.roots(j) * tau(i));
        return s;
    }
    case Method::CycleSum:
        s.a_s = impurity_cycles(spec, tau);
        return s;
    case Method::Bessel:
        s.a_s = bessel_sites(spec, tau, {0}).col(0);
        return s;
    case Method::OracleEigen:
    case Method::OracleOde:
        s.a_s = dense_sites(spec, tau, {spec.impurity}).col(0);
        return s;
    }
    throw SpecError("unknown method");
}

MatrixXcd site_amplitudes(const ChainSpec& spec, const VectorXd& tau, const std::vector<int>& sites, Method method) {
    validate(spec);
    for (int n : sites)
        if (std::abs(n) > spec.N) throw SpecError("site outside the chain");
    switch (method) {
    case Method::Bessel:
        return bessel_sites(spec, tau, sites);
    case Method::OracleEigen:
    case Method::OracleOde:
    case Method::Fourier:
        // the eigen-decomposition is the Fourier sum over all eigenstates
        return dense_sites(spec, tau, sites);
    default:
        throw SpecError("site amplitudes are available from the Bessel, Fourier and oracle paths");
    }
}

ChainCriticalCycle chain_critical_cycle(const ChainSpec& spec, int k_limit) {
    require_cycle_map(spec);
    ChainCriticalCycle out;
    out.formula = spec.C2 >= 1.0 ? std::numeric_limits<double>::infinity() : (spec.N + 1) * spec.C2 / (1.0 - spec.C2);
    out.k_overlap = out.k_oscillation = k_limit + 1;
    const double T = spec.period();
    const double dtau = 0.25;
    for (int k = 1; k <= k_limit; ++k) {
        // window from a quarter period before the cycle start to one and a half periods after it
        const double start = (k - 0.25) * T;
        const int count = static_cast<int>(std::ceil(1.75 * T / dtau)) + 1;
        const VectorXd pop = partial_uniform(spec, k, start, dtau, count).cwiseAbs2();
        const double peak = pop.maxCoeff();
        if (peak <= 0.0) continue;

        double spill = 0.0;
        std::vector<double> maxima;
        for (int i = 0; i < count; ++i) {
            const double tau = start + dtau * i;
            if (tau >= (k + 1) * T) spill = std::max(spill, pop(i));
            if (i > 0 && i + 1 < count && tau >= k * T && tau < (k + 1) * T && pop(i) > pop(i - 1) && pop(i) >= pop(i + 1))
                maxima.push_back(pop(i));
        }
        std::sort(maxima.rbegin(), maxima.rend());
        if (out.k_overlap > k_limit && spill >= 0.5 * peak) out.k_overlap = k;
        if (out.k_oscillation > k_limit && maxima.size() >= 2 && maxima[1] >= 0.5 * maxima[0]) out.k_oscillation = k;
        if (out.k_overlap <= k_limit || out.k_oscillation <= k_limit) break;
    }
    out.detected = std::min(out.k_overlap, out.k_oscillation);
    return out;
}

std::vector<FrontArrival> front_arrivals(const ChainSpec& spec, const std::vector<int>& sites, double threshold,
                                         double samples_per_unit) {
    validate(spec);
    const double T = spec.period();
    const VectorXd tau = uniform_grid(T, samples_per_unit);
    const MatrixXd pop = site_amplitudes(spec, tau, sites, Method::OracleEigen).cwiseAbs2();
    std::vector<FrontArrival> out;
    for (std::size_t s = 0; s < sites.size(); ++s) {
        FrontArrival f;
        f.site = sites[s];
        const double d = std::abs(f.site - spec.impurity);
        f.arrival_law = d;
        f.departure_law = T - d;
        const auto col = pop.col(static_cast<Eigen::Index>(s));
        const double peak = col.maxCoeff();
        if (peak > 0.0)
            for (Eigen::Index i = 0; i < tau.size(); ++i)
                if (col(i) >= threshold * peak) {
                    f.arrival = tau(i);
                    break;
                }
        out.push_back(f);
    }
    return out;
}

MatrixXd space_time(const ChainSpec& spec, const VectorXd& tau) {
    return chain_oracle(spec, tau).cwiseAbs2().transpose();
}

} // namespace zwanzig
