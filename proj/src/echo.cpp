#include "zwanzig/echo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "zwanzig/quadrature.hpp"
#include "zwanzig/special.hpp"
#include "zwanzig/spectrum.hpp"

namespace zwanzig {

// ---------------------------------------------------------------------------
// Bare partial amplitudes
// ---------------------------------------------------------------------------

cplx partial_amplitude_bare(int k, double t, double Gamma, double gamma, cplx initial_energy) {
    if (k < 0) throw SpecError("cycle index must be non-negative");
    if (k == 0) return t < 0 ? cplx(0.0) : std::exp(-Gamma * t - I * initial_energy * t);
    const double s = t - 2.0 * pi * k;
    if (s <= 0.0 || Gamma <= 0.0) return 0.0;
    const double tau = 2.0 * Gamma * s;
    const double envelope = -(tau / k) * laguerre_scaled(k, tau);
    return envelope * std::exp(-2.0 * pi * k * gamma) * std::exp(-I * initial_energy * s);
}

cplx partial_amplitude_bare(int k, double t, const ReservoirSpec& spec) {
    return partial_amplitude_bare(k, t, spec.Gamma(), spec.gamma, cplx(0.0, -spec.gamma_s));
}

VectorXd CycleDecomposition::local_times(int k) const {
    VectorXd tau(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) tau(i) = local_time(Gamma, k, t(i));
    return tau;
}

namespace {

// Band-edge kink of a reservoir cut at |n| <= W, seen at distance s from a cycle start.
double band_edge_kink(double s, double W) {
    s = std::abs(s);
    return std::cos(W * s) / W - s * (pi / 2 - sine_integral(W * s));
}

int causal_k(double t) { return t < 0 ? -1 : static_cast<int>(std::floor(t / (2.0 * pi) + 1e-12)); }

} // namespace

TruncatedCycles truncated_cycle_sum(const VectorXd& grid, double C, int N, double E, double width, int k_max) {
    if (N < 1) throw SpecError("truncation must be positive");
    if (std::abs(E) >= N) throw SpecError("initial energy outside the reservoir band");
    const double C2 = C * C;
    // levels beyond |n| > N: their self-energy near E, to first order in (eps - E)
    const double x = C2 * (trigamma(N + 1.0 - E) + trigamma(N + 1.0 + E));
    const double shift = C2 * (digamma(N + 1.0 - E) - digamma(N + 1.0 + E));
    const double Gamma = pi * C2 / (1.0 - x);
    const double E_eff = E - shift / (1.0 - x);
    const double scale = 1.0 / (1.0 - x);
    const double J = -2.0 * Gamma / (1.0 - x);

    TruncatedCycles out;
    out.partials = MatrixXcd::Zero(grid.size(), k_max + 1);
    out.correction = VectorXcd::Zero(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const double t = grid(i);
        const int top = std::min(k_max, causal_k(t));
        for (int k = 0; k <= top; ++k)
            out.partials(i, k) = scale * partial_amplitude_bare(k, t, Gamma, width, cplx(E_eff, -width));
        cplx r = 0.0;
        for (int k = -1; k <= causal_k(t) + 1; ++k) {
            const double s = t - 2.0 * pi * k;
            r += -(J / pi) * band_edge_kink(s, N) * std::exp(-I * E * s);
        }
        out.correction(i) = r * std::exp(-width * t);
    }
    return out;
}

std::pair<AmplitudeSeries, CycleDecomposition> assemble_cycles(const ReservoirSpec& spec, const VectorXd& grid,
                                                               int k_max, const CycleOptions& opt) {
    validate(spec);
    if (k_max < 0) throw SpecError("k_max must be non-negative");
    const Eigen::Index T = grid.size();
    CycleDecomposition dec;
    dec.t = grid;
    dec.Gamma = spec.Gamma();
    dec.partials = MatrixXcd::Zero(T, k_max + 1);
    dec.band_correction = VectorXcd::Zero(T);

    const bool bare = std::holds_alternative<Bare>(spec.variant);
    if (bare) {
        const bool correct = opt.finite_band_correction && spec.gamma == spec.gamma_s && spec.C != 0.0;
        if (correct) {
            auto tc = truncated_cycle_sum(grid, spec.C, spec.N, 0.0, spec.gamma, k_max);
            dec.partials = std::move(tc.partials);
            dec.band_correction = std::move(tc.correction);
            dec.finite_band_corrected = true;
        } else {
            for (Eigen::Index i = 0; i < T; ++i) {
                const int top = std::min(k_max, causal_k(grid(i)));
                for (int k = 0; k <= top; ++k) dec.partials(i, k) = partial_amplitude_bare(k, grid(i), spec);
            }
        }
    } else {
        auto map = scaling_map(spec);
        if (!map) throw SpecError("cycle decomposition needs a bare or homogeneously deformed reservoir");
        if (spec.gamma != 0.0 || spec.gamma_s != 0.0)
            throw SpecError("deformed cycle amplitudes are implemented for zero widths");
        for (Eigen::Index i = 0; i < T; ++i)
            for (int k = 0; k <= k_max; ++k) {
                auto r = partial_amplitude_deformed(k, grid(i), *map);
                if (!r.converged) throw NumericError("deformed partial amplitude did not converge");
                dec.partials(i, k) = r.value;
            }
    }

    AmplitudeSeries s;
    s.t = grid;
    s.method = Method::CycleSum;
    s.a_s = dec.partials.rowwise().sum() - dec.band_correction;
    return {std::move(s), std::move(dec)};
}

std::pair<AmplitudeSeries, CycleDecomposition> assemble_cycles(const ReservoirSpec& spec, const VectorXd& grid) {
    const double tmax = grid.size() ? grid.maxCoeff() : 0.0;
    return assemble_cycles(spec, grid, std::max(0, causal_k(tmax)));
}

// ---------------------------------------------------------------------------
// Deformed spectra
// ---------------------------------------------------------------------------

ScalingMap bare_map(double Gamma) {
    ScalingMap m;
    m.energy = [](cplx l) { return l; };
    m.slope = [](cplx) { return cplx(1.0); };
    m.P = [Gamma](cplx) { return cplx(Gamma); };
    m.Q = [Gamma](cplx l) { return l / Gamma; };
    return m;
}

ScalingMap homogeneous_map(const HomogeneousDeformation& d, double C) {
    const double a2 = d.a * d.a, b2 = d.b * d.b, C2 = C * C;
    const double half = 0.5 * d.sign;
    auto E = [a2, half](cplx l) { return l * std::pow(1.0 + a2 * l * l, half); };
    // d/dl [l (1 + a^2 l^2)^h] = (1 + a^2 l^2)^(h-1) (1 + (1 + 2h) a^2 l^2)
    auto dE = [a2, half](cplx l) {
        const cplx u = 1.0 + a2 * l * l;
        return std::pow(u, half - 1.0) * (1.0 + (1.0 + 2.0 * half) * a2 * l * l);
    };
    auto P = [=](cplx l) { return pi * C2 * std::pow(1.0 + b2 * l * l, double(d.sign)) / dE(l); };
    ScalingMap m;
    m.energy = E;
    m.slope = dE;
    m.P = P;
    m.Q = [=](cplx l) { return E(l) / P(l); };
    return m;
}

ScalingMap polynomial_map(double Gamma, double eta, int s) {
    const int p = 2 * s + 1;
    ScalingMap m;
    m.Q = [=](cplx l) { const cplx y = l / Gamma; return y + eta * std::pow(y, p); };
    m.P = [Gamma](cplx) { return cplx(Gamma); };
    m.energy = [=](cplx l) { const cplx y = l / Gamma; return Gamma * (y + eta * std::pow(y, p)); };
    m.slope = [=](cplx l) { const cplx y = l / Gamma; return 1.0 + eta * double(p) * std::pow(y, p - 1); };
    return m;
}

std::optional<ScalingMap> scaling_map(const ReservoirSpec& spec) {
    if (std::holds_alternative<Bare>(spec.variant)) return bare_map(spec.Gamma());
    if (auto* h = std::get_if<HomogeneousDeformation>(&spec.variant)) return homogeneous_map(*h, spec.C);
    return std::nullopt;
}

DeformedAmplitude partial_amplitude_deformed(int k, double t, const ScalingMap& map, const DeformedOptions& opt) {
    if (k < 0) throw SpecError("cycle index must be non-negative");
    const double Gamma = std::abs(map.P(0.0));
    double L = opt.half_width > 0 ? opt.half_width : std::max(40.0, 12.0 * Gamma);
    auto integrand = [&](cplx l) -> cplx {
        const cplx Q = map.Q(l);
        const cplx qp = Q + I;
        const cplx ratio = (Q - I) / qp;
        cplx power = 1.0;
        if (k >= 1) power = std::pow(ratio, k - 1);
        else power = 1.0 / ratio;
        const cplx phase = std::exp(-I * (map.energy(l) * t - 2.0 * pi * k * l));
        return phase * (map.slope(l) / map.P(l)) * power / (qp * qp) / pi;
    };
    auto direction = [&](double x0) { return std::real(map.slope(x0)) * t - 2.0 * pi * k >= 0 ? -1.0 : 1.0; };

    // The vertical rays at +-L are only usable if the integrand decays along
    // their whole length. A stretched spectrum bends the phase far from the
    // axis (E ~ a lambda^2), which the local drift at L does not see, so the
    // segment grows until both rays decay at every probe height.
    auto rays_decay = [&](double Lc) {
        for (int side : {-1, +1}) {
            const double x0 = side * Lc;
            const double sigma = direction(x0);
            const double base = std::max(std::abs(integrand(cplx(x0, 0.0))), 1e-300);
            for (double y = 1.0; y <= 1e6; y *= 4.0) {
                const double v = std::abs(integrand(cplx(x0, sigma * y)));
                if (!std::isfinite(v) || v > 10.0 * base) return false;
            }
        }
        return true;
    };
    DeformedAmplitude out;
    while (!rays_decay(L)) {
        L *= 1.5;
        if (L > 2e4) {
            out.converged = false;
            return out;
        }
    }

    // real segment, split into panels of a few oscillations each
    const double freq = std::abs(std::real(map.slope(L))) * std::abs(t) + 2.0 * pi * k + 1.0;
    const int panels = std::max(8, static_cast<int>(std::ceil(2.0 * L * freq / (4.0 * pi))));
    const double h = 2.0 * L / panels;
    for (int p = 0; p < panels; ++p) {
        const double a = -L + p * h, b = a + h;
        auto r = integrate_gk([&](double x) { return integrand(cplx(x, 0.0)); }, a, b,
                              opt.abs_tol / panels, opt.rel_tol, 200);
        out.value += r.value;
        out.error_estimate += r.error_estimate;
        out.converged = out.converged && r.converged;
    }

    // vertical rays at +-L into the half plane where the local phase decays
    for (int side : {-1, +1}) {
        const double x0 = side * L;
        const double sigma = direction(x0);  // Im(lambda) direction
        auto ray = [&](double u) -> cplx {
            const double y = u / (1.0 - u);
            const double dy = 1.0 / ((1.0 - u) * (1.0 - u));
            return integrand(cplx(x0, sigma * y)) * (sigma * I) * dy;
        };
        auto r = integrate_gk(ray, 0.0, 1.0, opt.abs_tol, opt.rel_tol, 2000);
        // right ray runs outward (+), left ray runs inward (-)
        out.value += side > 0 ? r.value : -r.value;
        out.error_estimate += r.error_estimate;
        out.converged = out.converged && r.converged;
    }
    if (!std::isfinite(out.value.real()) || !std::isfinite(out.value.imag())) out.converged = false;
    return out;
}

std::array<cplx, 3> polynomial_poles(double eta) {
    std::array<cplx, 3> out{};
    if (eta == 0.0) {
        out[0] = I;
        out[1] = out[2] = cplx(std::numeric_limits<double>::infinity());
        return out;
    }
    // eta u^3 - u + 1 = 0 via the companion matrix
    Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
    M(0, 1) = 1.0;
    M(1, 2) = 1.0;
    M(2, 0) = -1.0 / eta;
    M(2, 1) = 1.0 / eta;
    Eigen::EigenSolver<Eigen::Matrix3d> es(M);
    std::vector<cplx> u(3);
    for (int i = 0; i < 3; ++i) u[i] = es.eigenvalues()(i);
    // order: smallest magnitude first, then by decreasing real part
    std::sort(u.begin(), u.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
    if (std::real(u[1]) < std::real(u[2])) std::swap(u[1], u[2]);
    for (int i = 0; i < 3; ++i) out[i] = I * u[i];
    return out;
}

std::array<cplx, 3> polynomial_pole_series(double eta) {
    const double r = 1.0 / std::sqrt(eta);
    return {I * (1.0 + eta + 3.0 * eta * eta), I * (r - 0.5), -I * (r + 0.5)};
}

VectorXd effective_decrement(const AmplitudeSeries& series) {
    const Eigen::Index n = series.t.size();
    if (n < 2) throw SpecError("decrement needs at least two samples");
    VectorXd logs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = std::abs(series.a_s(i));
        if (!(m > 1e-12)) throw NumericError("amplitude underflow in effective decrement");
        logs(i) = std::log(m);
    }
    VectorXd d(n);
    d(0) = -(logs(1) - logs(0)) / (series.t(1) - series.t(0));
    d(n - 1) = -(logs(n - 1) - logs(n - 2)) / (series.t(n - 1) - series.t(n - 2));
    for (Eigen::Index i = 1; i + 1 < n; ++i) d(i) = -(logs(i + 1) - logs(i - 1)) / (series.t(i + 1) - series.t(i - 1));
    return d;
}

// ---------------------------------------------------------------------------
// Critical cycle and metrics
// ---------------------------------------------------------------------------

CriticalCycle critical_cycle(const ReservoirSpec& spec) {
    CriticalCycle out;
    const double C2 = spec.C * spec.C;
    const double kc = pi * pi * C2;
    if (std::holds_alternative<Bare>(spec.variant)) {
        out.k_c = kc;
        return out;
    }
    if (auto* m = std::get_if<MixingSublattices>(&spec.variant)) {
        const double delta = m->deltas.empty() ? 0.0 : m->deltas.front();
        if (m->K != 3) out.warnings.push_back("interpolation calibrated for K = 3 only");
        if (delta < 0.0 || delta > 0.15) out.warnings.push_back("delta outside the interpolation range [0, 0.15]");
        if (C2 < 1.0 || C2 > 4.0) out.warnings.push_back("C^2 outside the interpolation range [1, 4]");
        out.k_c = kc > 0 ? 1.0 / (1.0 / kc + 3.0 * delta) : 0.0;
        return out;
    }
    out.k_c = kc;
    out.warnings.push_back("no critical-cycle law for variant " + spec.variant_name() + "; bare value reported");
    return out;
}

namespace {

// |a^(k)(tau)|^2 sampled on [0, tau_max] with step h.
VectorXd cycle_population(int k, double tau_max, double h, VectorXd& taus) {
    const auto n = static_cast<Eigen::Index>(std::ceil(tau_max / h)) + 1;
    taus = VectorXd::LinSpaced(n, 0.0, h * double(n - 1));
    VectorXd P(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double a = (taus(i) / k) * laguerre_scaled(k, taus(i));
        P(i) = a * a;
    }
    return P;
}

double cycle_extent(int k) { return 4.0 * k + 20.0 * std::cbrt(double(k)) + 30.0; }

} // namespace

double cycle_outer_edge(int k) {
    if (k < 1) throw SpecError("outer edge defined for k >= 1");
    VectorXd taus;
    const VectorXd P = cycle_population(k, cycle_extent(k), 0.005, taus);
    Eigen::Index last = -1;
    for (Eigen::Index i = 1; i + 1 < P.size(); ++i)
        if (P(i) > P(i - 1) && P(i) >= P(i + 1)) last = i;
    if (last < 0) throw NumericError("no lobe found in cycle amplitude");
    const double half = 0.5 * P(last);
    for (Eigen::Index i = last; i + 1 < P.size(); ++i)
        if (P(i + 1) < half) {
            const double f = (P(i) - half) / (P(i) - P(i + 1));
            return taus(i) + f * (taus(i + 1) - taus(i));
        }
    return taus(P.size() - 1);
}

int overlap_cycle(double Gamma, int k_limit) {
    if (!(Gamma > 0)) throw SpecError("Gamma must be positive");
    const double period = 4.0 * pi * Gamma;
    // the edge grows like 4k, so start near the crossing and step down/up
    int k = std::max(1, static_cast<int>(std::floor(period / 4.0)) - 4);
    while (k > 1 && cycle_outer_edge(k - 1) >= period) --k;
    while (k <= k_limit && cycle_outer_edge(k) < period) ++k;
    return k;
}

CycleAverage cycle_average(int k, const ReservoirSpec& spec) {
    if (k < 0) throw SpecError("cycle index must be non-negative");
    const double G = spec.Gamma();
    const cplx Es(0.0, -spec.gamma_s);
    const double a = 2.0 * pi * k, b = 2.0 * pi * (k + 1);
    const int panels = 64 + 8 * k;
    const GaussRule& rule = gauss_legendre(16);
    const double h = (b - a) / panels;
    CycleAverage out;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const double t = lo + 0.5 * h * (rule.nodes[q] + 1.0);
            const double w = 0.5 * h * rule.weights[q];
            cplx sum = 0.0, part = 0.0;
            for (int j = 0; j <= k; ++j) {
                const cplx v = partial_amplitude_bare(j, t, G, spec.gamma, Es);
                sum += v;
                if (j == k) part = v;
            }
            out.total += w * std::norm(sum);
            out.partial += w * std::norm(part);
        }
    }
    return out;
}

EchoMetrics echo_metrics(const ReservoirSpec& spec, int k_max) {
    EchoMetrics m;
    m.k_c = critical_cycle(spec).k_c;
    const double G = spec.Gamma();
    if (G > 0) m.k_c_detected = overlap_cycle(G);
    const double period = 4.0 * pi * G;
    for (int k = 1; k <= k_max; ++k) {
        CycleMetrics c;
        c.k = k;
        VectorXd taus;
        const VectorXd P = cycle_population(k, cycle_extent(k), 0.005, taus);
        for (Eigen::Index i = 1; i + 1 < P.size(); ++i)
            if (P(i) > P(i - 1) && P(i) >= P(i + 1) && P(i) > 1e-14) ++c.component_count;
        c.zero_count = 1;  // tau = 0
        double prev = laguerre_scaled(k, 1e-9);
        for (Eigen::Index i = 1; i < taus.size(); ++i) {
            const double cur = laguerre_scaled(k, taus(i));
            if (std::abs(cur) < 1e-300) continue;
            if ((cur < 0) != (prev < 0)) ++c.zero_count;
            prev = cur;
        }
        c.outer_edge = cycle_outer_edge(k);
        c.overlaps_next = G > 0 && c.outer_edge >= period;
        if (G > 0) c.mean_population = cycle_average(k, spec).total;
        m.cycles.push_back(c);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Langevin form
// ---------------------------------------------------------------------------

LangevinResidual langevin_residual(const AmplitudeSeries& series, const ReservoirSpec& spec) {
    const Eigen::Index n = series.t.size();
    if (n < 5) throw SpecError("Langevin residual needs at least five samples");
    const double h = series.t(1) - series.t(0);
    for (Eigen::Index i = 1; i < n; ++i)
        if (std::abs(series.t(i) - series.t(i - 1) - h) > 1e-9 * std::max(1.0, h))
            throw SpecError("Langevin residual needs a uniform grid");
    if (h > 0.05) throw SpecError("grid too coarse for the Langevin residual");
    const double C2 = spec.C * spec.C;
    const VectorXcd& a = series.a_s;

    VectorXcd da(n);
    da(0) = (a(1) - a(0)) / h;
    da(n - 1) = (a(n - 1) - a(n - 2)) / h;
    for (Eigen::Index i = 1; i + 1 < n; ++i) da(i) = (a(i + 1) - a(i - 1)) / (2 * h);
    auto da_at = [&](double t) -> cplx {
        const double x = (t - series.t(0)) / h;
        auto i = static_cast<Eigen::Index>(std::floor(x));
        i = std::clamp<Eigen::Index>(i, 0, n - 2);
        const double f = x - double(i);
        return (1.0 - f) * da(i) + f * da(i + 1);
    };

    LangevinResidual out;
    std::vector<double> ts, rs;
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        const double t = series.t(i);
        const double phase = std::fmod(t, 2.0 * pi);
        if (phase < 2 * h || 2.0 * pi - phase < 2 * h) continue;
        const cplx dda = (a(i + 1) - 2.0 * a(i) + a(i - 1)) / (h * h);
        // int_0^t a'(t') G(t - t') dt' with the comb: half weight at t' = t
        cplx comb = pi * da(i);
        for (int k = 1; 2.0 * pi * k < t; ++k) comb += 2.0 * pi * da_at(t - 2.0 * pi * k);
        const cplx integral = comb - (a(i) - a(0));
        const cplx r = dda + C2 * a(i) + C2 * integral - C2;
        ts.push_back(t);
        rs.push_back(std::abs(r));
    }
    out.t = Eigen::Map<VectorXd>(ts.data(), static_cast<Eigen::Index>(ts.size()));
    out.residual = Eigen::Map<VectorXd>(rs.data(), static_cast<Eigen::Index>(rs.size()));
    out.linf = out.residual.size() ? out.residual.maxCoeff() : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Reservoir amplitudes
// ---------------------------------------------------------------------------

namespace {

struct ReservoirKernel {
    int k;
    cplx shift;  // integrand x L e^{-x/2} e^{-shift x}
    cplx operator()(double x) const { return x * laguerre_scaled(k, x) * std::exp(-shift * x); }
};

// cycle-0 contribution, closed form
cplx reservoir_cycle0(int n, double t, const ReservoirSpec& spec) {
    const double G = spec.Gamma();
    const cplx decay = G + spec.gamma_s;          // a_s^(0) = e^{-decay t}
    const cplx own = I * double(n) + spec.gamma;  // reservoir propagator e^{-own (t - t')}
    const cplx d = own - decay;
    if (std::abs(d) < 1e-14) return -I * spec.C * t * std::exp(-decay * t);
    return -I * spec.C * (std::exp(-decay * t) - std::exp(-own * t)) / d;
}

double kernel_cutoff(int k) { return 4.0 * k + 20.0 * std::cbrt(double(k)) + 60.0; }

} // namespace

VectorXcd reservoir_partial_series(int n, int k, const VectorXd& taus, const ReservoirSpec& spec) {
    const double G = spec.Gamma();
    VectorXcd out = VectorXcd::Zero(taus.size());
    if (G <= 0.0) return out;
    if (k == 0) {
        for (Eigen::Index i = 0; i < taus.size(); ++i)
            out(i) = taus(i) < 0 ? cplx(0.0) : reservoir_cycle0(n, taus(i) / (2.0 * G), spec);
        return out;
    }
    const cplx s = 0.5 + (spec.gamma_s - spec.gamma) / (2.0 * G) - I * double(n) / (2.0 * G);
    const ReservoirKernel f{k, s - 0.5};
    const double cut = kernel_cutoff(k);
    const GaussRule& rule = gauss_legendre(16);
    // panel length resolves both the Laguerre zeros and the detuning phase
    const double osc = std::abs(double(n)) / (2.0 * G);
    const double hmax = std::min(1.0, 1.0 / (osc + 1e-12));

    cplx acc = 0.0;
    double at = 0.0;
    auto advance = [&](double to) {
        const double end = std::min(to, cut);
        if (end <= at) return;
        const int panels = std::max(1, static_cast<int>(std::ceil((end - at) / hmax)));
        const double h = (end - at) / panels;
        for (int p = 0; p < panels; ++p) {
            const double lo = at + p * h;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q)
                acc += 0.5 * h * rule.weights[q] * f(lo + 0.5 * h * (rule.nodes[q] + 1.0));
        }
        at = end;
    };
    for (Eigen::Index i = 0; i < taus.size(); ++i) {
        if (i > 0 && taus(i) < taus(i - 1)) throw SpecError("local times must be ascending");
        const double tau = taus(i);
        if (tau <= 0.0) continue;
        advance(tau);
        const cplx pre = I * spec.C / (2.0 * k * G) * std::exp(-(I * double(n) + spec.gamma) * tau / (2.0 * G)) *
                         std::exp(-2.0 * pi * k * spec.gamma);
        out(i) = pre * acc;
    }
    return out;
}

cplx reservoir_partial(int n, int k, double tau, const ReservoirSpec& spec) {
    VectorXd one(1);
    one(0) = tau;
    return reservoir_partial_series(n, k, one, spec)(0);
}

VectorXcd reservoir_amplitude_cycles(int n, const VectorXd& grid, const ReservoirSpec& spec) {
    for (Eigen::Index i = 1; i < grid.size(); ++i)
        if (grid(i) < grid(i - 1)) throw SpecError("grid must be ascending");
    const double G = spec.Gamma();
    VectorXcd out = VectorXcd::Zero(grid.size());
    if (grid.size() == 0) return out;
    const int top = causal_k(grid.maxCoeff());
    for (int k = 0; k <= top; ++k) {
        VectorXd taus(grid.size());
        for (Eigen::Index i = 0; i < grid.size(); ++i) taus(i) = local_time(G, k, grid(i));
        out += reservoir_partial_series(n, k, taus, spec);
    }
    return out;
}

VectorXcd reservoir_amplitude_spectral(int n, const VectorXd& grid, const ReservoirSpec& spec) {
    if (spec.gamma != spec.gamma_s) throw SpecError("spectral reservoir amplitude needs a common width");
    if (std::abs(n) > spec.N) throw SpecError("reservoir index outside the truncation");
    const Level lv = level(spec, n);
    const SpectrumSolution sol = solve_spectrum(spec);
    VectorXcd out = VectorXcd::Zero(grid.size());
    for (Eigen::Index j = 0; j < sol.roots.size(); ++j) {
        if (sol.weights(j) == 0.0) continue;
        const double d = sol.roots(j) - lv.energy;
        if (std::abs(d) < 1e-300) continue;
        const double amp = sol.weights(j) * lv.coupling / d;
        for (Eigen::Index i = 0; i < grid.size(); ++i) out(i) += amp * std::exp(-I * sol.roots(j) * grid(i));
    }
    for (Eigen::Index i = 0; i < grid.size(); ++i) out(i) *= std::exp(-spec.gamma * grid(i));
    return out;
}

cplx end_of_cycle_closed(int n, int k, const ReservoirSpec& spec) {
    const double G = spec.Gamma();
    const cplx p = G + I * double(n), m = G - I * double(n);
    return I * spec.C * (k % 2 ? -1.0 : 1.0) * std::pow(p, k - 1) / std::pow(m, k);
}

EndOfCycle end_of_cycle(int n, int k, const ReservoirSpec& spec) {
    if (k < 1) throw SpecError("end of cycle defined for k >= 1");
    EndOfCycle e;
    e.n = n;
    e.k = k;
    const double G = spec.Gamma();
    VectorXd t(1);
    t(0) = 2.0 * pi * k;
    // cycle k itself starts exactly at t; only cycles 0..k-1 contribute
    for (int j = 0; j < k; ++j) {
        VectorXd tau(1);
        tau(0) = local_time(G, j, t(0));
        e.amplitude += reservoir_partial_series(n, j, tau, spec)(0);
    }
    e.lorentzian = G / (pi * (G * G + double(n) * n));
    e.geometric_phase = std::atan2(double(n), G);
    return e;
}

DoubleResonance double_resonance(int n, int k, const ReservoirSpec& spec) {
    if (k < 1) throw SpecError("double resonance defined for k >= 1");
    const double G = spec.Gamma();
    DoubleResonance r;
    r.n = n;
    r.k = k;
    const double base = 4.0 * k - 0.74 * std::cbrt(double(k));
    r.tau_estimate = n == 0 ? base : base * (G / n) * std::atan(double(n) / G);
    r.half_width_estimate = std::cbrt(32.0 * k);
    const double kc = pi * G;
    r.k_n_estimate = n == 0 ? std::numeric_limits<double>::infinity() : 0.25 * std::pow(kc / std::abs(n), 3);

    const double period = 4.0 * pi * G;
    const double step = 0.005;
    const auto m = static_cast<Eigen::Index>(std::floor(period / step)) + 1;
    VectorXd taus = VectorXd::LinSpaced(m, 0.0, step * double(m - 1));
    VectorXd grid = (2.0 * pi * k + taus.array() / (2.0 * G)).matrix();
    const VectorXcd a = reservoir_amplitude_cycles(n, grid, spec);

    if (n == 0) {
        std::optional<Eigen::Index> best;
        double best_tau = 0.0;
        for (Eigen::Index i = 0; i + 1 < m; ++i) {
            const double y0 = a(i).imag(), y1 = a(i + 1).imag();
            if ((y0 < 0) != (y1 < 0)) {
                const double z = taus(i) + step * y0 / (y0 - y1);
                if (!best || std::abs(z - r.tau_estimate) < std::abs(best_tau - r.tau_estimate)) {
                    best = i;
                    best_tau = z;
                }
            }
        }
        if (!best) return r;
        r.tau_detected = best_tau;
        const double level_half = 0.5 * spec.C / G;
        Eigen::Index lo = *best, hi = *best + 1;
        while (lo > 0 && std::abs(a(lo)) < level_half) --lo;
        while (hi < m - 1 && std::abs(a(hi)) < level_half) ++hi;
        auto cross = [&](Eigen::Index i, Eigen::Index j) {
            const double u = std::abs(a(i)), v = std::abs(a(j));
            return taus(i) + (taus(j) - taus(i)) * (level_half - u) / (v - u);
        };
        if (lo > 0 && hi < m - 1) r.half_width_detected = cross(hi - 1, hi) - cross(lo, lo + 1);
    } else {
        Eigen::Index arg = 0;
        (a.cwiseAbs()).minCoeff(&arg);
        r.tau_detected = taus(arg);
    }
    return r;
}

} // namespace zwanzig
