#include "zwanzig/dynamics.hpp"

#include <algorithm>
#include <numeric>
#include <cmath>
#include <iomanip>
#include <stdexcept>

namespace zwanzig {

std::string to_string(Method m) {
    switch (m) {
        case Method::OracleEigen: return "oracle-eigen";
        case Method::OracleOde: return "oracle-ode";
        case Method::Fourier: return "fourier";
        case Method::CycleSum: return "cycle-sum";
        case Method::Bessel: return "bessel";
    }
    return "unknown";
}

VectorXd AmplitudeSeries::total_population() const {
    if (!a_n) throw std::logic_error("total population needs the reservoir amplitudes");
    return a_s.cwiseAbs2() + a_n->cwiseAbs2().rowwise().sum();
}

VectorXd uniform_grid(double t_max, double samples_per_unit) {
    if (!(t_max >= 0) || !(samples_per_unit > 0)) throw SpecError("grid needs t_max >= 0 and positive density");
    const auto n = static_cast<Eigen::Index>(std::ceil(t_max * samples_per_unit - 1e-9)) + 1;
    if (n == 1) return VectorXd::Zero(1);
    // uniform step no larger than 1/samples_per_unit, ending exactly at t_max
    return VectorXd::LinSpaced(n, 0.0, t_max);
}

namespace {

void check_grid(const VectorXd& grid) {
    if (grid.size() == 0) throw SpecError("empty time grid");
    for (Eigen::Index i = 1; i < grid.size(); ++i)
        if (!(grid(i) > grid(i - 1))) throw SpecError("time grid must be strictly increasing");
}

// Symmetric matrix on indices 0..m: full border row 0, band of width two elsewhere.
class ArrowBand {
public:
    explicit ArrowBand(const HamiltonianMatrix& H)
        : m_(static_cast<int>(H.energies.size())), d_(m_ + 1), e1_(m_ + 2, 0.0), e2_(m_ + 3, 0.0), b_(m_ + 1, 0.0) {
        d_[0] = H.initial_energy;
        for (int i = 1; i <= m_; ++i) {
            d_[i] = H.energies(i - 1);
            b_[i] = H.couplings(i - 1);
        }
    }

    double get(int i, int j) const {
        if (i > j) std::swap(i, j);
        if (i == 0) return j == 0 ? d_[0] : b_[j];
        switch (j - i) {
            case 0: return d_[i];
            case 1: return e1_[i];
            case 2: return e2_[i];
            default: return 0.0;
        }
    }
    void set(int i, int j, double v) {
        if (i > j) std::swap(i, j);
        if (i == 0) {
            (j == 0 ? d_[0] : b_[j]) = v;
            return;
        }
        switch (j - i) {
            case 0: d_[i] = v; return;
            case 1: e1_[i] = v; return;
            case 2: e2_[i] = v; return;
            default:
                if (v != 0.0) throw NumericError("arrow reduction left the band");
        }
    }

    // Similarity by the Givens rotation acting on rows/cols (p, p+1) chosen to
    // annihilate entry (k, p+1) against (k, p).
    void annihilate(int k, int p) {
        const double x = get(k, p), y = get(k, p + 1);
        if (y == 0.0) return;
        const double r = std::hypot(x, y);
        const double c = x / r, s = y / r;
        const int cand[5] = {0, p - 2, p - 1, p + 2, p + 3};
        for (int idx = 0; idx < 5; ++idx) {
            const int q = cand[idx];
            if (idx > 0 && q < 1) continue;  // row 0 is handled once, as the border
            if (q > m_ || q == p || q == p + 1) continue;
            const double xq = get(q, p), yq = get(q, p + 1);
            if (xq == 0.0 && yq == 0.0) continue;
            set(q, p, c * xq + s * yq);
            set(q, p + 1, -s * xq + c * yq);
        }
        const double a = get(p, p), b = get(p, p + 1), e = get(p + 1, p + 1);
        set(p, p, c * c * a + 2 * c * s * b + s * s * e);
        set(p + 1, p + 1, s * s * a - 2 * c * s * b + c * c * e);
        set(p, p + 1, c * s * (e - a) + (c * c - s * s) * b);
        set(k, p + 1, 0.0);
    }

    void reduce() {
        for (int i = m_; i >= 2; --i) {
            if (b_[i] == 0.0) continue;
            annihilate(0, i - 1);
            for (int q = i - 1; q + 2 <= m_ && e2_[q] != 0.0; ++q) annihilate(q, q + 1);
        }
    }

    void tridiagonal(std::vector<double>& diag, std::vector<double>& off) const {
        diag = d_;
        off.assign(static_cast<std::size_t>(m_) + 1, 0.0);
        if (m_ >= 1) off[0] = b_[1];
        for (int j = 1; j < m_; ++j) off[static_cast<std::size_t>(j)] = e1_[static_cast<std::size_t>(j)];
    }

private:
    int m_;
    std::vector<double> d_, e1_, e2_, b_;
};

// Implicit QL on a symmetric tridiagonal matrix (diag d, off-diagonal e with
// e[i] coupling i and i+1), accumulating only the first row of the
// eigenvector matrix into z.
void tql_first_row(std::vector<double>& d, std::vector<double>& e, std::vector<double>& z) {
    const int n = static_cast<int>(d.size());
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= 1e-16 * dd) break;
            }
            if (m != l) {
                if (iter++ == 200) throw NumericError("tridiagonal QL did not converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                int i;
                for (i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    f = z[i + 1];
                    z[i + 1] = s * z[i] + c * f;
                    z[i] = c * z[i] - s * f;
                }
                if (r == 0.0 && i >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

AmplitudeSeries propagate_spectral(const VectorXd& grid, const VectorXcd& freqs, const VectorXcd& amp_s,
                                   const MatrixXcd* amp_n, Method method) {
    AmplitudeSeries out;
    out.t = grid;
    out.method = method;
    out.a_s.resize(grid.size());
    if (amp_n) out.a_n = MatrixXcd(grid.size(), amp_n->rows());
    VectorXcd phase(freqs.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        for (Eigen::Index j = 0; j < freqs.size(); ++j) phase(j) = std::exp(-I * freqs(j) * grid(i));
        out.a_s(i) = (amp_s.array() * phase.array()).sum();
        if (amp_n) out.a_n->row(i) = ((*amp_n) * phase).transpose();
    }
    return out;
}

} // namespace

ArrowSpectrum arrow_spectrum(const HamiltonianMatrix& H) {
    if (!H.hermitian()) throw SpecError("arrow QL path needs a Hermitian (zero-width) Hamiltonian");
    ArrowBand band(H);
    band.reduce();
    std::vector<double> d, e;
    band.tridiagonal(d, e);
    std::vector<double> z(d.size(), 0.0);
    z[0] = 1.0;
    tql_first_row(d, e, z);
    std::vector<std::size_t> order(d.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return d[a] < d[b]; });
    ArrowSpectrum out;
    out.eigenvalues.resize(static_cast<Eigen::Index>(d.size()));
    out.first_weights.resize(static_cast<Eigen::Index>(z.size()));
    for (std::size_t i = 0; i < order.size(); ++i) {
        out.eigenvalues(static_cast<Eigen::Index>(i)) = d[order[i]];
        out.first_weights(static_cast<Eigen::Index>(i)) = z[order[i]] * z[order[i]];
    }
    return out;
}

MatrixXcd integrate_dp45(const OdeRhs& f, const VectorXcd& y0, const VectorXd& grid, double tol) {
    check_grid(grid);
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;

    const Eigen::Index n = y0.size();
    MatrixXcd out(grid.size(), n);
    VectorXcd y = y0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n), err(n);
    double t = 0.0;
    if (grid(0) != 0.0) throw SpecError("oracle grid must start at t = 0");
    out.row(0) = y.transpose();
    double h = 1e-3;
    f(t, y, k1);
    for (Eigen::Index gi = 1; gi < grid.size(); ++gi) {
        const double target = grid(gi);
        int guard = 0;
        while (t < target) {
            if (++guard > 50'000'000) throw NumericError("DP45: too many steps");
            bool last = false;
            double step = h;
            if (t + step >= target) {
                step = target - t;
                last = true;
            }
            if (step < 1e-14 * std::max(1.0, std::abs(t))) throw NumericError("DP45: step size underflow");
            tmp = y + step * a21 * k1;
            f(t + c2 * step, tmp, k2);
            tmp = y + step * (a31 * k1 + a32 * k2);
            f(t + c3 * step, tmp, k3);
            tmp = y + step * (a41 * k1 + a42 * k2 + a43 * k3);
            f(t + c4 * step, tmp, k4);
            tmp = y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            f(t + c5 * step, tmp, k5);
            tmp = y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            f(t + step, tmp, k6);
            ynew = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            f(t + step, ynew, k7);
            err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            double en = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double sc = tol * (1.0 + std::max(std::abs(y(i)), std::abs(ynew(i))));
                en = std::max(en, std::abs(err(i)) / sc);
            }
            if (en <= 1.0) {
                t = last ? target : t + step;
                y = ynew;
                k1 = k7;
                const double grow = en == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(en, -0.2));
                if (!last) h = step * grow;
            } else {
                h = step * std::max(0.1, 0.9 * std::pow(en, -0.2));
            }
        }
        out.row(gi) = y.transpose();
    }
    return out;
}

AmplitudeSeries evolve_dense(const MatrixXcd& H, const VectorXcd& psi0, const VectorXd& grid,
                             const OracleOptions& opt, Eigen::Index tracked) {
    check_grid(grid);
    const Eigen::Index n = H.rows();
    const bool hermitian = (H - H.adjoint()).cwiseAbs().maxCoeff() == 0.0;
    OracleKind kind = opt.kind;
    if (kind == OracleKind::Auto) kind = OracleKind::Eigen;

    auto split = [&](const MatrixXcd& states) {
        AmplitudeSeries out;
        out.t = grid;
        out.a_s = states.col(tracked);
        if (opt.reservoir) {
            MatrixXcd rest(states.rows(), n - 1);
            Eigen::Index c = 0;
            for (Eigen::Index j = 0; j < n; ++j)
                if (j != tracked) rest.col(c++) = states.col(j);
            out.a_n = rest;
        }
        return out;
    };

    if (kind == OracleKind::Ode) {
        OdeRhs rhs = [&](double, const VectorXcd& y, VectorXcd& dy) { dy.noalias() = -I * (H * y); };
        AmplitudeSeries out = split(integrate_dp45(rhs, psi0, grid, opt.ode_tolerance));
        out.method = Method::OracleOde;
        return out;
    }

    MatrixXcd V;
    VectorXcd lambda, coeff;
    if (hermitian) {
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(H);
        V = es.eigenvectors();
        lambda = es.eigenvalues().cast<cplx>();
        coeff = V.adjoint() * psi0;
    } else {
        Eigen::ComplexEigenSolver<MatrixXcd> es(H);
        if (es.info() != Eigen::Success) throw NumericError("complex eigendecomposition failed");
        V = es.eigenvectors();
        lambda = es.eigenvalues();
        coeff = V.partialPivLu().solve(psi0);
    }
    MatrixXcd states(grid.size(), n);
    VectorXcd c(n);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        for (Eigen::Index j = 0; j < n; ++j) c(j) = coeff(j) * std::exp(-I * lambda(j) * grid(i));
        states.row(i) = (V * c).transpose();
    }
    AmplitudeSeries out = split(states);
    out.method = Method::OracleEigen;
    return out;
}

AmplitudeSeries evolve_oracle(const HamiltonianMatrix& H, const VectorXd& grid, const OracleOptions& opt) {
    check_grid(grid);
    const int dim = H.dimension();
    OracleKind kind = opt.kind;
    if (kind == OracleKind::Auto) kind = OracleKind::Eigen;

    if (kind == OracleKind::Eigen && H.hermitian() && !opt.reservoir) {
        ArrowSpectrum as = arrow_spectrum(H);
        return propagate_spectral(grid, as.eigenvalues.cast<cplx>(), as.first_weights.cast<cplx>(), nullptr,
                                  Method::OracleEigen);
    }
    VectorXcd psi0 = VectorXcd::Zero(dim);
    psi0(0) = 1.0;
    if (kind == OracleKind::Ode) {
        OdeRhs rhs = [&](double, const VectorXcd& y, VectorXcd& dy) { dy = -I * H.apply(y); };
        MatrixXcd states = integrate_dp45(rhs, psi0, grid, opt.ode_tolerance);
        AmplitudeSeries out;
        out.t = grid;
        out.method = Method::OracleOde;
        out.a_s = states.col(0);
        if (opt.reservoir) out.a_n = states.rightCols(dim - 1);
        return out;
    }
    return evolve_dense(H.dense<cplx>(), psi0, grid, opt, 0);
}

AmplitudeSeries evolve_fourier(const SpectrumSolution& sol, const VectorXd& grid, const FourierOptions& opt) {
    check_grid(grid);
    if (sol.roots.size() == 0 || sol.weights.size() != sol.roots.size()) throw NumericError("missing spectral weights");
    VectorXcd freqs = sol.roots.cast<cplx>();
    freqs.array() -= I * opt.common_width;
    return propagate_spectral(grid, freqs, sol.weights.cast<cplx>(), nullptr, Method::Fourier);
}

AmplitudeSeries evolve_fourier(const ReservoirSpec& spec, const VectorXd& grid, bool reservoir) {
    auto lv = levels(spec);
    bool common = true;
    for (const auto& l : lv) common = common && (l.width == spec.gamma_s);
    if (!common) throw SpecError("Fourier path needs one common width for every level");
    const double width = spec.gamma_s;

    PoleSet set = PoleSet::from_spec(spec);
    SpectrumSolution sol = solve_secular(set);
    FourierOptions opt;
    opt.common_width = width;
    if (!reservoir) return evolve_fourier(sol, grid, opt);

    // Reservoir amplitudes: a_n(t) = sum_j C_n w_j / (eps*_j - eps_n) e^{-i eps*_j t}.
    // Degenerate or decoupled levels are not supported on this path.
    if ((sol.interval.size() > 0) && std::any_of(sol.interval.begin(), sol.interval.end(), [](int v) { return v == -2; }))
        throw SpecError("Fourier reservoir amplitudes need distinct, coupled levels");
    const Eigen::Index L = static_cast<Eigen::Index>(lv.size());
    MatrixXcd comp(L, sol.roots.size());
    for (Eigen::Index n = 0; n < L; ++n)
        for (Eigen::Index j = 0; j < sol.roots.size(); ++j)
            comp(n, j) = lv[static_cast<std::size_t>(n)].coupling * sol.weights(j) /
                         (sol.roots(j) - lv[static_cast<std::size_t>(n)].energy);
    VectorXcd freqs = sol.roots.cast<cplx>();
    freqs.array() -= I * width;
    return propagate_spectral(grid, freqs, sol.weights.cast<cplx>(), &comp, Method::Fourier);
}

void write_series(std::ostream& os, const AmplitudeSeries& s, char delim, bool reservoir_columns) {
    os << "# t" << delim << "re" << delim << "im" << delim << "pop";
    if (reservoir_columns && s.a_n)
        for (Eigen::Index j = 0; j < s.a_n->cols(); ++j) os << delim << "pop_" << j;
    os << '\n';
    os << std::setprecision(12);
    for (Eigen::Index i = 0; i < s.t.size(); ++i) {
        os << s.t(i) << delim << s.a_s(i).real() << delim << s.a_s(i).imag() << delim << std::norm(s.a_s(i));
        if (reservoir_columns && s.a_n)
            for (Eigen::Index j = 0; j < s.a_n->cols(); ++j) os << delim << std::norm((*s.a_n)(i, j));
        os << '\n';
    }
}

} // namespace zwanzig
