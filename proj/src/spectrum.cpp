#include "zwanzig/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace zwanzig {

PoleSet PoleSet::from_spec(const ReservoirSpec& spec) {
    validate(spec);
    PoleSet set;
    auto lv = levels(spec);
    set.poles.resize(static_cast<Eigen::Index>(lv.size()));
    set.weights.resize(static_cast<Eigen::Index>(lv.size()));
    for (std::size_t i = 0; i < lv.size(); ++i) {
        set.poles(static_cast<Eigen::Index>(i)) = lv[i].energy;
        set.weights(static_cast<Eigen::Index>(i)) = lv[i].coupling * lv[i].coupling;
    }
    return set;
}

double PoleSet::value(double eps) const {
    double s = 0.0;
    for (Eigen::Index j = 0; j < poles.size(); ++j) s += weights(j) / (eps - poles(j));
    return eps - initial_energy - s;
}

double PoleSet::derivative(double eps) const {
    double s = 0.0;
    for (Eigen::Index j = 0; j < poles.size(); ++j) {
        const double d = eps - poles(j);
        s += weights(j) / (d * d);
    }
    return 1.0 + s;
}

double secular_value(const ReservoirSpec& spec, double eps) {
    PoleSet set = PoleSet::from_spec(spec);
    for (Eigen::Index j = 0; j < set.poles.size(); ++j)
        if (set.weights(j) != 0.0 && std::abs(eps - set.poles(j)) < 1e-14 * (1.0 + std::abs(eps)))
            throw PoleError("secular function evaluated at a pole");
    return set.value(eps);
}

cplx secular_value_closed(double C, double gamma, cplx eps) {
    const cplx z = eps + I * gamma;
    return z - pi * C * C * std::cos(pi * z) / std::sin(pi * z);
}

namespace {

// Secular function in coordinates centred on pole `origin`: eps = p_origin + u.
struct Local {
    const std::vector<double>& p;
    const std::vector<double>& w;
    double e_s;
    std::size_t origin;

    double value(double u) const {
        const double po = p[origin];
        double s = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) s += w[j] / ((po - p[j]) + u);
        return po + u - e_s - s;
    }
    double derivative(double u) const {
        const double po = p[origin];
        double s = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double d = (po - p[j]) + u;
            s += w[j] / (d * d);
        }
        return 1.0 + s;
    }
};

// F is strictly increasing between poles; f(lo) < 0 < f(hi).
double bracketed_root(const Local& f, double lo, double hi) {
    const double width0 = hi - lo;
    const double bisect_to = std::min(1e-4, 1e-4 * width0);
    int guard = 0;
    while (hi - lo > bisect_to && guard++ < 200) {
        const double mid = 0.5 * (lo + hi);
        if (f.value(mid) < 0) lo = mid;
        else hi = mid;
    }
    double u = 0.5 * (lo + hi);
    for (int it = 0; it < 100; ++it) {
        const double fv = f.value(u);
        if (fv == 0.0) return u;
        if (fv < 0) lo = u;
        else hi = u;
        double next = u - fv / f.derivative(u);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - u);
        u = next;
        if (step <= 4e-16 * std::max(std::abs(u), 1e-300) || hi - lo <= 4e-16 * std::max(std::abs(u), 1e-300))
            break;
    }
    return u;
}

SpectrumSolution dense_solve(const PoleSet& set) {
    const Eigen::Index L = set.poles.size();
    MatrixXd H = MatrixXd::Zero(L + 1, L + 1);
    H(0, 0) = set.initial_energy;
    for (Eigen::Index i = 0; i < L; ++i) {
        H(i + 1, i + 1) = set.poles(i);
        H(0, i + 1) = H(i + 1, 0) = std::sqrt(set.weights(i));
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(H);
    SpectrumSolution out;
    out.poles = set.poles;
    out.roots = es.eigenvalues();
    out.weights = es.eigenvectors().row(0).transpose().array().square();
    out.residuals = VectorXd::Zero(L + 1);
    out.interval.assign(static_cast<std::size_t>(L + 1), -2);
    out.dense_fallback = true;
    return out;
}

} // namespace

SpectrumSolution solve_secular(const PoleSet& set) {
    // Collect coupled poles, merging exact degeneracies; decoupled copies become
    // zero-weight roots sitting on the pole.
    std::vector<std::pair<double, double>> raw;
    std::vector<double> decoupled;
    for (Eigen::Index j = 0; j < set.poles.size(); ++j) {
        if (set.weights(j) == 0.0) decoupled.push_back(set.poles(j));
        else raw.emplace_back(set.poles(j), set.weights(j));
    }
    std::sort(raw.begin(), raw.end());
    std::vector<double> p, w;
    for (auto& [e, c2] : raw) {
        if (!p.empty() && std::abs(e - p.back()) <= 1e-13 * (1.0 + std::abs(e))) {
            // Two degenerate levels: one symmetric combination couples with the
            // summed weight, the orthogonal one decouples at the pole.
            w.back() += c2;
            decoupled.push_back(e);
        } else {
            p.push_back(e);
            w.push_back(c2);
        }
    }

    SpectrumSolution out;
    const std::size_t P = p.size();
    std::vector<double> roots, weights, residuals;
    std::vector<int> interval;

    auto record = [&](const Local& f, double u, int iv) {
        roots.push_back(p[f.origin] + u);
        weights.push_back(1.0 / f.derivative(u));
        residuals.push_back(std::abs(f.value(u)));
        interval.push_back(iv);
    };

    if (P == 0) {
        roots.push_back(set.initial_energy);
        weights.push_back(1.0);
        residuals.push_back(0.0);
        interval.push_back(-1);
    } else {
        // below the lowest pole
        {
            Local f{p, w, set.initial_energy, 0};
            double lo = -1.0;
            int guard = 0;
            while (f.value(lo) >= 0 && guard++ < 200) lo *= 2;
            record(f, bracketed_root(f, lo, 0.0), -1);
        }
        for (std::size_t i = 0; i + 1 < P; ++i) {
            const double d = p[i + 1] - p[i];
            Local left{p, w, set.initial_energy, i};
            // locate the root coarsely, then refine in the frame of the nearer pole
            double lo = 0.0, hi = d;
            for (int b = 0; b < 3; ++b) {
                const double mid = 0.5 * (lo + hi);
                if (left.value(mid) < 0) lo = mid;
                else hi = mid;
            }
            if (lo >= 0.5 * d) {
                Local right{p, w, set.initial_energy, i + 1};
                record(right, bracketed_root(right, lo - d, hi - d), static_cast<int>(i));
            } else {
                record(left, bracketed_root(left, lo, hi), static_cast<int>(i));
            }
        }
        {
            Local f{p, w, set.initial_energy, P - 1};
            double hi = 1.0;
            int guard = 0;
            while (f.value(hi) <= 0 && guard++ < 200) hi *= 2;
            record(f, bracketed_root(f, 0.0, hi), static_cast<int>(P) - 1);
        }
    }
    for (double e : decoupled) {
        roots.push_back(e);
        weights.push_back(0.0);
        residuals.push_back(0.0);
        interval.push_back(-2);
    }

    for (double r : residuals)
        if (!std::isfinite(r)) return dense_solve(set);

    // ascending order of roots
    std::vector<std::size_t> order(roots.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return roots[a] < roots[b]; });
    const auto M = static_cast<Eigen::Index>(roots.size());
    out.roots.resize(M);
    out.weights.resize(M);
    out.residuals.resize(M);
    out.interval.resize(roots.size());
    for (Eigen::Index k = 0; k < M; ++k) {
        auto s = order[static_cast<std::size_t>(k)];
        out.roots(k) = roots[s];
        out.weights(k) = weights[s];
        out.residuals(k) = residuals[s];
        out.interval[static_cast<std::size_t>(k)] = interval[s];
    }
    out.poles = Eigen::Map<const VectorXd>(p.data(), static_cast<Eigen::Index>(P));
    return out;
}

SpectrumSolution solve_spectrum(const ReservoirSpec& spec) { return solve_secular(PoleSet::from_spec(spec)); }

VectorXd absorption_band(const ReservoirSpec& spec, const VectorXd& eps_grid) {
    auto lv = levels(spec);
    for (const auto& l : lv)
        if (!(l.width > 0)) throw SpecError("absorption band needs positive level widths");
    const double G = spec.Gamma();
    VectorXd rho(eps_grid.size());
    for (Eigen::Index i = 0; i < eps_grid.size(); ++i) {
        const double e = eps_grid(i);
        double comb = 0.0;
        for (const auto& l : lv) {
            const double d = e - l.energy;
            comb += l.width / (d * d + l.width * l.width);
        }
        rho(i) = G / (e * e + G * G) * comb / (pi * pi);
    }
    return rho;
}

bool components_resolved(double gamma) {
    if (gamma <= 0) return true;
    const double c = 1.0 / std::tanh(pi * gamma);
    return c * c >= 2.0;
}

MomentsTable moments(const ReservoirSpec& spec, int n, int nu_max, double small_gap) {
    auto lv = levels(spec);
    const Level& base = lv.at(static_cast<std::size_t>(n + spec.N));
    MomentsTable t;
    t.n = n;
    t.moments.assign(static_cast<std::size_t>(nu_max) + 1, 0.0);
    t.smallest_gap = std::numeric_limits<double>::infinity();
    for (int m = -spec.N; m <= spec.N; ++m) {
        if (m == n) continue;
        const Level& l = lv[static_cast<std::size_t>(m + spec.N)];
        const double gap = l.energy - base.energy;
        t.gaps.push_back(gap);
        t.smallest_gap = std::min(t.smallest_gap, std::abs(gap));
        if (std::abs(gap) < small_gap) {
            t.small_denominator = true;
            continue;
        }
        double p = gap;
        for (int nu = 0; nu <= nu_max; ++nu) {
            t.moments[static_cast<std::size_t>(nu)] += l.coupling * l.coupling / p;
            p *= gap;
        }
    }
    return t;
}

MixingThreshold critical_mixing_deformation(double Gamma, int K, double delta_max) {
    if (!(Gamma > 0)) throw SpecError("Gamma must be positive");
    MixingThreshold out;
    if (K < 2) return out;

    auto spec_at = [&](double delta) {
        ReservoirSpec s;
        MixingSublattices m;
        m.K = K;
        for (int k = 1; k < K; ++k) m.deltas.push_back(k * delta);
        s.variant = m;
        s.N = static_cast<int>(std::ceil(Gamma)) + K + 2;
        s.C = std::sqrt(Gamma / pi);
        return s;
    };
    // first permuted pair whose energies both lie inside |eps| <= Gamma
    auto permuted = [&](double delta, int* which) {
        ReservoirSpec s = spec_at(delta);
        for (auto [a, b] : level_permutations(s)) {
            if (a < 0) continue;
            const double ea = level(s, a).energy, eb = level(s, b).energy;
            if (std::abs(ea) <= Gamma && std::abs(eb) <= Gamma) {
                if (which) *which = a;
                return true;
            }
        }
        return false;
    };

    const double step = 1e-3;
    double prev = 0.0;
    for (double d = step; d <= delta_max + 1e-12; d += step) {
        if (permuted(d, nullptr)) {
            double lo = prev, hi = d;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (permuted(mid, nullptr)) hi = mid;
                else lo = mid;
            }
            int which = 0;
            permuted(hi, &which);
            out.delta_c = hi;
            out.lower_level = which;
            return out;
        }
        prev = d;
    }
    return out;
}

} // namespace zwanzig
