#include "zwanzig/tls.hpp"

#include <cmath>

#include "zwanzig/echo.hpp"
#include "zwanzig/quadrature.hpp"
#include "zwanzig/special.hpp"

namespace zwanzig {

void validate(const TlsSpec& spec) {
    if (spec.N < 1) throw SpecError("TLS reservoir truncation must be at least 1");
    if (spec.C < 0) throw SpecError("coupling must be non-negative");
    if (spec.gamma < 0 || spec.gamma0 < 0) throw SpecError("widths must be non-negative");
    if (!std::isfinite(spec.Delta)) throw SpecError("Delta must be finite");
}

namespace {

PoleSet parity_poles(const TlsSpec& spec, double energy) {
    PoleSet set;
    const int L = 2 * spec.N + 1;
    set.poles = VectorXd::LinSpaced(L, -spec.N, spec.N);
    set.weights = VectorXd::Constant(L, spec.C * spec.C);
    set.initial_energy = energy;
    return set;
}

ReservoirSpec side_spec(const TlsSpec& spec) {
    ReservoirSpec r;
    r.N = spec.N;
    r.C = spec.C;
    r.gamma = spec.gamma;
    r.gamma_s = spec.gamma0;
    return r;
}

} // namespace

TlsSpectrum tls_spectrum(const TlsSpec& spec) {
    validate(spec);
    return {solve_secular(parity_poles(spec, spec.Delta)), solve_secular(parity_poles(spec, -spec.Delta))};
}

MatrixXcd tls_hamiltonian(const TlsSpec& spec) {
    validate(spec);
    const int M = 2 * spec.N + 1;
    const int dim = 2 + 2 * M;
    MatrixXcd H = MatrixXcd::Zero(dim, dim);
    H(0, 0) = H(1, 1) = cplx(0.0, -spec.gamma0);
    H(0, 1) = H(1, 0) = spec.Delta;
    for (int i = 0; i < M; ++i) {
        const double e = i - spec.N;
        for (int side = 0; side < 2; ++side) {
            const int j = 2 + side * M + i;
            H(j, j) = cplx(e, -spec.gamma);
            H(side, j) = H(j, side) = spec.C;
        }
    }
    return H;
}

VectorXd TlsSeries::total_population() const {
    VectorXd p = a_L.cwiseAbs2() + a_R.cwiseAbs2();
    if (reservoir_L) p += reservoir_L->cwiseAbs2().rowwise().sum();
    if (reservoir_R) p += reservoir_R->cwiseAbs2().rowwise().sum();
    return p;
}

ParityAmplitudes tls_parity_amplitudes(const TlsSpec& spec, const VectorXd& grid, Method method,
                                       bool finite_band_correction) {
    validate(spec);
    ParityAmplitudes out;
    const double G = spec.Gamma();
    switch (method) {
    case Method::Fourier: {
        if (spec.gamma != spec.gamma0) throw SpecError("Fourier TLS path needs gamma == gamma0");
        const TlsSpectrum sp = tls_spectrum(spec);
        FourierOptions fo;
        fo.common_width = spec.gamma;
        out.plus = evolve_fourier(sp.even, grid, fo).a_s;
        out.minus = evolve_fourier(sp.odd, grid, fo).a_s;
        return out;
    }
    case Method::CycleSum: {
        const int k_max = grid.size() ? static_cast<int>(std::floor(grid.maxCoeff() / (2.0 * pi))) : 0;
        if (finite_band_correction && spec.gamma == spec.gamma0 && spec.C != 0.0) {
            auto p = truncated_cycle_sum(grid, spec.C, spec.N, spec.Delta, spec.gamma, k_max);
            auto m = truncated_cycle_sum(grid, spec.C, spec.N, -spec.Delta, spec.gamma, k_max);
            out.plus = p.partials.rowwise().sum() - p.correction;
            out.minus = m.partials.rowwise().sum() - m.correction;
            return out;
        }
        out.plus = VectorXcd::Zero(grid.size());
        out.minus = VectorXcd::Zero(grid.size());
        for (Eigen::Index i = 0; i < grid.size(); ++i)
            for (int k = 0; 2.0 * pi * k <= grid(i) + 1e-12; ++k) {
                out.plus(i) += partial_amplitude_bare(k, grid(i), G, spec.gamma, cplx(spec.Delta, -spec.gamma0));
                out.minus(i) += partial_amplitude_bare(k, grid(i), G, spec.gamma, cplx(-spec.Delta, -spec.gamma0));
            }
        return out;
    }
    default: {
        // a single bare reservoir with shifted initial energy, through the dense/arrow oracle
        auto evolve = [&](double energy) {
            HamiltonianMatrix H = build_hamiltonian(side_spec(spec));
            H.initial_energy = energy;
            OracleOptions oo;
            oo.kind = method == Method::OracleOde ? OracleKind::Ode : OracleKind::Auto;
            return evolve_oracle(H, grid, oo).a_s;
        };
        out.plus = evolve(spec.Delta);
        out.minus = evolve(-spec.Delta);
        return out;
    }
    }
}

TlsSeries tls_evolve(const TlsSpec& spec, const VectorXd& grid, const TlsOptions& opt) {
    validate(spec);
    TlsSeries s;
    s.t = grid;
    s.method = opt.method;
    if (opt.method == Method::Bessel) throw SpecError("Bessel method is not available for the TLS");

    if (opt.method == Method::OracleEigen || opt.method == Method::OracleOde) {
        const MatrixXcd H = tls_hamiltonian(spec);
        VectorXcd psi0 = VectorXcd::Zero(H.rows());
        psi0(opt.start_right ? 1 : 0) = 1.0;
        OracleOptions oo;
        oo.kind = opt.method == Method::OracleOde ? OracleKind::Ode : OracleKind::Eigen;
        oo.reservoir = true;
        oo.ode_tolerance = opt.ode_tolerance;
        AmplitudeSeries full = evolve_dense(H, psi0, grid, oo, 0);
        // a_n holds components 1 .. dim-1
        const MatrixXcd& rest = *full.a_n;
        const Eigen::Index M = 2 * spec.N + 1;
        s.a_L = full.a_s;
        s.a_R = rest.col(0);
        if (opt.reservoir) {
            s.reservoir_L = rest.middleCols(1, M);
            s.reservoir_R = rest.middleCols(1 + M, M);
        }
        return s;
    }
    if (opt.reservoir) throw SpecError("reservoir blocks are only produced by the oracle methods");
    const ParityAmplitudes p = tls_parity_amplitudes(spec, grid, opt.method, opt.finite_band_correction);
    const VectorXcd sum = 0.5 * (p.plus + p.minus);
    const VectorXcd diff = 0.5 * (p.plus - p.minus);
    s.a_L = opt.start_right ? diff : sum;
    s.a_R = opt.start_right ? sum : diff;
    return s;
}

double tls_decay_rate(const TlsSpec& spec, double t) { return spec.Gamma() + spec.Delta * std::tan(spec.Delta * t); }

TlsRates tls_rates(const TlsSpec& spec) {
    validate(spec);
    TlsRates r;
    const double G = spec.Gamma();
    const double D = spec.Delta;
    r.in_regime = std::abs(D) < G;
    if (G <= 0) throw SpecError("TLS rates need a positive Gamma");
    r.k_LR = D * D / G;
    r.ratio_estimate = D / G;
    if (D == 0.0) {
        r.t_m = r.t_m_printed = r.t_m_detected = 1.0 / G;
        return r;
    }
    r.t_m = std::atan(D / G) / D;
    r.t_m_printed = std::tan(D / G) / D;
    r.ratio_RL = std::abs(std::tan(D * r.t_m));
    // golden-section search on |a_R^(0)| = e^{-(G + g0) t} |sin(D t)| over its first lobe
    const double decay = G + spec.gamma0;
    auto f = [&](double t) { return -std::exp(-decay * t) * std::abs(std::sin(D * t)); };
    double a = 0.0, b = pi / std::abs(D);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 200 && b - a > 1e-13 * (1.0 + b); ++it) {
        if (f1 < f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - g * (b - a); f1 = f(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + g * (b - a); f2 = f(x2);
        }
    }
    r.t_m_detected = 0.5 * (a + b);
    return r;
}

double fitted_transfer_rate(const TlsSpec& spec) {
    validate(spec);
    const VectorXd grid = uniform_grid(2.0 * pi, 200.0);
    TlsOptions opt;
    opt.reservoir = true;
    const TlsSeries s = tls_evolve(spec, grid, opt);
    const Eigen::Index last = grid.size() - 1;
    const double right = std::norm(s.a_R(last)) + s.reservoir_R->row(last).cwiseAbs2().sum();
    // trapezoid is plenty on this grid; the integrand is smooth
    double integral = 0.0;
    for (Eigen::Index i = 0; i < last; ++i)
        integral += 0.5 * (grid(i + 1) - grid(i)) * (std::norm(s.a_L(i)) + std::norm(s.a_L(i + 1)));
    return right / integral;
}

std::vector<TlsCycleAverage> tls_cycle_averages(const TlsSpec& spec, int k_first, int k_last) {
    validate(spec);
    if (k_first < 0 || k_last < k_first) throw SpecError("invalid cycle range");
    const double G = spec.Gamma();
    if (G <= 0) throw SpecError("cycle averages need a positive Gamma");
    const double alpha = spec.Delta / G;
    const GaussRule& rule = gauss_legendre(16);
    std::vector<TlsCycleAverage> out;
    for (int k = k_first; k <= k_last; ++k) {
        TlsCycleAverage c;
        c.k = k;
        const double a = 2.0 * pi * k;
        const int panels = 64 + 8 * k;
        const double h = 2.0 * pi / panels;
        for (int p = 0; p < panels; ++p)
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const double t = a + p * h + 0.5 * h * (rule.nodes[q] + 1.0);
                const double w = 0.5 * h * rule.weights[q];
                cplx plus = 0.0, minus = 0.0;
                for (int j = 0; j <= k; ++j) {
                    plus += partial_amplitude_bare(j, t, G, spec.gamma, cplx(spec.Delta, -spec.gamma0));
                    minus += partial_amplitude_bare(j, t, G, spec.gamma, cplx(-spec.Delta, -spec.gamma0));
                }
                c.left += w * std::norm(0.5 * (plus + minus));
                c.right += w * std::norm(0.5 * (plus - minus));
            }
        c.total = c.left + c.right;
        c.total_law = std::exp(-4.0 * pi * k * spec.gamma) / G;
        const double a2 = 1.0 + alpha * alpha;
        const double j0 = bessel_j(0, 4.0 * k * alpha * std::pow(a2, -1.0 / 3.0));
        c.left_law = (1.0 + j0 / a2) / (2.0 * G);
        c.right_law = (1.0 - j0 / a2) / (2.0 * G);
        out.push_back(c);
    }
    return out;
}

} // namespace zwanzig
