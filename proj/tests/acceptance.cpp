// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit if any fails.
// Usage: acceptance <path-to-zwanzig-cli> <scratch-directory>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "zwanzig/chain.hpp"
#include "zwanzig/echo.hpp"
#include "zwanzig/special.hpp"
#include "zwanzig/spectrum.hpp"
#include "zwanzig/tls.hpp"

using namespace zwanzig;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

ReservoirSpec bare(int N, double C2) {
    ReservoirSpec s;
    s.N = N;
    s.C = std::sqrt(C2);
    return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome three_way() {
    const auto t0 = std::chrono::steady_clock::now();
    const ReservoirSpec s = bare(2000, 1.0);
    const VectorXd g = uniform_grid(6.0 * pi, 20.0);
    OracleOptions o;
    o.kind = OracleKind::Eigen;
    const VectorXd oracle = evolve_oracle(build_hamiltonian(s), g, o).a_s.cwiseAbs();
    const VectorXd fourier = evolve_fourier(s, g).a_s.cwiseAbs();
    const VectorXd cycles = assemble_cycles(s, g).first.a_s.cwiseAbs();
    const double wall = seconds_since(t0);
    const double d = std::max({(oracle - fourier).cwiseAbs().maxCoeff(), (oracle - cycles).cwiseAbs().maxCoeff(),
                               (fourier - cycles).cwiseAbs().maxCoeff()});
    return {d < 1e-5 && wall < 30.0, "max |Δ|a_s|| = " + fmt("%.2e", d) + ", wall " + fmt("%.1f s", wall)};
}

Outcome cycle_zero() {
    // Scored on the pure exponential. The detail also reports the
    // band-corrected cycle-0 amplitude and the pure law at N=2000, which
    // separate the band-edge transient at t < 1/N from the law itself.
    auto deviation = [](int N, bool corrected) {
        const ReservoirSpec s = bare(N, 1.0);
        const VectorXd g = uniform_grid(1.0, 200.0);
        const VectorXcd a = evolve_oracle(build_hamiltonian(s), g).a_s;
        const VectorXcd c = assemble_cycles(s, g, 0).first.a_s;
        double worst = 0.0;
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            const cplx law = corrected ? c(i) : cplx(std::exp(-s.Gamma() * g(i)));
            worst = std::max(worst, std::abs(a(i) - law));
        }
        return worst;
    };
    const double pure = deviation(200, false);
    return {pure < 1e-3, "max |a - e^{-Γt}| = " + fmt("%.2e", pure) + " at N=200 (" + fmt("%.2e", deviation(2000, false)) +
                             " at N=2000; band-corrected cycle 0 at N=200: " + fmt("%.2e", deviation(200, true)) + ")"};
}

Outcome norm_conservation() {
    const double t_max = 10.0 * pi;
    OracleOptions o;
    o.kind = OracleKind::Eigen;
    o.reservoir = true;
    const VectorXd g = uniform_grid(t_max, 4.0);
    const double bare_dev = (evolve_oracle(build_hamiltonian(bare(200, 1.0)), g, o).total_population().array() - 1.0)
                                .abs()
                                .maxCoeff();
    TlsSpec t;
    t.Delta = 0.5;
    t.N = 100;
    TlsOptions to;
    to.reservoir = true;
    const double tls_dev = (tls_evolve(t, g, to).total_population().array() - 1.0).abs().maxCoeff();
    ChainSpec c;
    const VectorXd tau = uniform_grid(2.0 * t_max, 4.0);  // chain times are tau = 2t
    const double chain_dev = (chain_oracle(c, tau).cwiseAbs2().rowwise().sum().array() - 1.0).abs().maxCoeff();
    const double worst = std::max({bare_dev, tls_dev, chain_dev});
    return {worst < 1e-10, "bare " + fmt("%.1e", bare_dev) + ", tls " + fmt("%.1e", tls_dev) + ", chain " +
                               fmt("%.1e", chain_dev)};
}

Outcome critical_cycle_detector() {
    bool ok = true;
    std::string d;
    for (double C2 : {0.5, 1.0, 2.0}) {
        const int k = overlap_cycle(pi * C2);
        const double law = pi * pi * C2;
        ok = ok && std::abs(k - law) <= 2.0;
        d += "C²=" + fmt("%g", C2) + ": " + std::to_string(k) + " vs " + fmt("%.2f", law) + "; ";
    }
    return {ok, d};
}

Outcome reservoir_lorentzian() {
    const ReservoirSpec s = bare(2000, 1.0);
    const double G = s.Gamma();
    const VectorXd g = (VectorXd(3) << 2.0 * pi, 4.0 * pi, 6.0 * pi).finished();
    double worst = 0.0;
    for (int n = 0; n <= static_cast<int>(std::floor(2.0 * G)); ++n) {
        const VectorXcd a = reservoir_amplitude_spectral(n, g, s);
        const double law = G / (pi * (G * G + double(n) * n));
        for (Eigen::Index k = 0; k < 3; ++k) worst = std::max(worst, std::abs(std::norm(a(k)) / law - 1.0));
    }
    return {worst < 0.03, "worst relative deviation " + fmt("%.2e", worst)};
}

Outcome double_resonances() {
    const ReservoirSpec s = bare(400, 1.0);
    double worst_t = 0.0, worst_w = 0.0;
    bool found = true;
    for (int k = 1; k <= 6; ++k) {
        const DoubleResonance r = double_resonance(0, k, s);
        if (k <= 5) {
            const double law = 4.0 * k - 0.74 * std::cbrt(double(k));
            if (!r.tau_detected) found = false;
            else worst_t = std::max(worst_t, std::abs(*r.tau_detected / law - 1.0));
        }
        if (k >= 2) {
            if (!r.half_width_detected) found = false;
            else worst_w = std::max(worst_w, std::abs(*r.half_width_detected / std::cbrt(32.0 * k) - 1.0));
        }
    }
    return {found && worst_t < 0.05 && worst_w < 0.15,
            "crossing times within " + fmt("%.1f%%", 100 * worst_t) + ", half-widths within " + fmt("%.1f%%", 100 * worst_w)};
}

Outcome mixing_threshold() {
    bool ok = true;
    std::string d;
    for (double G : {2.0, 4.0, 8.0}) {
        const MixingThreshold m = critical_mixing_deformation(G, 3);
        if (!m.delta_c) {
            ok = false;
            d += "Γ=" + fmt("%g", G) + ": no permutation; ";
            continue;
        }
        const double p = *m.delta_c * G;
        ok = ok && p >= 0.20 && p <= 0.35;
        d += "Γ=" + fmt("%g", G) + ": δ_c·Γ=" + fmt("%.3f", p) + "; ";
    }
    return {ok, d};
}

Outcome tls_limits() {
    // Delta = 0 against the bare reservoir through the parity construction
    TlsSpec z;
    z.N = 150;
    const VectorXd g = uniform_grid(6.0 * pi, 10.0);
    TlsOptions f;
    f.method = Method::Fourier;
    const TlsSeries zs = tls_evolve(z, g, f);
    ReservoirSpec b = bare(150, 1.0);
    const double aR = zs.a_R.cwiseAbs().maxCoeff();
    const double aL = (zs.a_L - evolve_fourier(b, g).a_s).cwiseAbs().maxCoeff();
    const bool parity_ok = aR == 0.0 && aL < 1e-13;

    // fitted transfer rate for Delta / Gamma <= 0.2
    double worst_rate = 0.0;
    for (double ratio : {0.05, 0.1, 0.2}) {
        TlsSpec s;
        s.N = 200;
        s.Delta = ratio * pi;
        const double law = s.Delta * s.Delta / s.Gamma();
        worst_rate = std::max(worst_rate, std::abs(fitted_transfer_rate(s) / law - 1.0));
    }

    // per-cycle totals with gamma = 0.01 over the echo cycles k = 1..10
    // (cycle 0 holds 1/(2 Gamma), not 1/Gamma)
    TlsSpec w;
    w.Delta = 0.2 * pi;
    w.gamma = w.gamma0 = 0.01;
    auto worst_totals = [](const TlsSpec& spec, int& last_good) {
        double worst = 0.0;
        last_good = 0;
        for (const auto& c : tls_cycle_averages(spec, 1, 10)) {
            const double dev = std::abs(c.total / c.total_law - 1.0);
            worst = std::max(worst, dev);
            if (worst < 0.10) last_good = c.k;
        }
        return worst;
    };
    int good = 0, good_strong = 0;
    const double worst_total = worst_totals(w, good);
    // diagnostic only: a stronger coupling pushes the critical cycle past k = 10
    TlsSpec strong = w;
    strong.C = 2.0;
    const double worst_strong = worst_totals(strong, good_strong);

    const bool ok = parity_ok && worst_rate < 0.10 && worst_total < 0.10;
    return {ok, "Δ=0: max|a_R| " + fmt("%.0e", aR) + ", |a_L - bare| " + fmt("%.0e", aL) + "; rate within " +
                    fmt("%.1f%%", 100 * worst_rate) + "; totals within " + fmt("%.1f%%", 100 * worst_total) +
                    " at C²=1 (under 10% up to k=" + std::to_string(good) + "; C²=4 gives " +
                    fmt("%.1f%%", 100 * worst_strong) + ")"};
}

Outcome chain_ballistics() {
    ChainSpec c;
    c.N = 49;
    c.C2 = 0.5;
    std::vector<int> sites;
    for (int n = 5; n <= 20; ++n) sites.push_back(n);
    double worst = 0.0;
    bool all = true;
    for (const auto& f : front_arrivals(c, sites)) {
        if (!f.arrival) {
            all = false;
            continue;
        }
        worst = std::max(worst, std::abs(*f.arrival - f.arrival_law));
    }
    ChainSpec q;
    q.C2 = 0.25;
    std::vector<int> every;
    for (int n = -49; n <= 49; ++n) every.push_back(n);
    const VectorXd tau = uniform_grid(300.0, 4.0);
    const double d = (site_amplitudes(q, tau, every, Method::Bessel) - site_amplitudes(q, tau, every, Method::OracleEigen))
                         .cwiseAbs()
                         .maxCoeff();
    return {all && worst <= 2.0 && d < 1e-6, "max |arrival - n| = " + fmt("%.2f", worst) + ", Bessel vs oracle " + fmt("%.1e", d)};
}

Outcome chain_scan() {
    double best_c2 = 0.0;
    int best = -1;
    std::string table;
    for (int i = 1; i <= 19; ++i) {
        ChainSpec c;
        c.C2 = 0.05 * i;
        const int k = chain_critical_cycle(c).detected;
        table += std::to_string(k) + (i < 19 ? "," : "");
        if (k > best) {
            best = k;
            best_c2 = c.C2;
        }
    }
    return {best_c2 >= 0.3 - 1e-12 && best_c2 <= 0.5 + 1e-12, "argmax C²=" + fmt("%.2f", best_c2) + " (k_c: " + table + ")"};
}

Outcome special_functions() {
    std::mt19937_64 rng(20240611);
    std::uniform_int_distribution<int> kd(1, 200), nd(0, 1000);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double lag = 0.0, bes = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const int k = kd(rng);
        const double x = 5.0 * k * u(rng);
        const double want = oracle::laguerre_scaled(k, x);
        lag = std::max(lag, std::abs(laguerre_scaled(k, x) - want) / std::abs(want));
    }
    int used = 0;
    for (int i = 0; i < 1000; ++i) {
        const int n = nd(rng);
        const double x = 200.0 * u(rng);
        const double want = oracle::bessel_j(n, x);
        if (std::abs(want) < 1e-290) continue;  // not representable as a normal double
        ++used;
        bes = std::max(bes, std::abs(bessel_j(n, x) - want) / std::abs(want));
    }
    const double fixed_l = std::abs(laguerre_scaled(50, 100.0) / oracle::laguerre_scaled(50, 100.0) - 1.0);
    const double fixed_j = std::abs(bessel_j(100, 100.0) / oracle::bessel_j(100, 100.0) - 1.0);
    const double worst = std::max({lag, bes, fixed_l, fixed_j});
    return {worst < 1e-10, "Laguerre " + fmt("%.1e", lag) + ", Bessel " + fmt("%.1e", bes) + " (" + std::to_string(used) +
                               " representable points), L(50,100) " + fmt("%.1e", fixed_l) + ", J100(100) " + fmt("%.1e", fixed_j)};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

Outcome cli_determinism(const std::string& cli, const fs::path& work) {
    fs::create_directories(work);
    const fs::path config = work / "determinism.json";
    {
        std::ofstream f(config);
        f << R"({
  "model": { "type": "ensemble", "base": { "variant": "bare", "N": 40, "C2": 1.0 },
             "dispersion0": 0.05, "members": 40 },
  "grid": { "t_max": 14, "samples_per_unit": 10 },
  "method": "fourier"
})";
    }
    std::vector<std::string> first;
    for (int run = 0; run < 2; ++run) {
        const fs::path out = work / ("run" + std::to_string(run));
        fs::remove_all(out);
        const std::string cmd = "\"" + cli + "\" run \"" + config.string() + "\" --seed 4242 --threads " +
                                std::to_string(run + 1) + " --out \"" + out.string() + "\" > /dev/null";
        if (std::system(cmd.c_str()) != 0) return {false, "CLI run failed: " + cmd};
    }
    int compared = 0;
    for (const auto& e : fs::directory_iterator(work / "run0")) {
        const std::string name = e.path().filename().string();
        if (name == "manifest.json") continue;  // carries the wall time
        ++compared;
        if (slurp(e.path()) != slurp(work / "run1" / name)) return {false, name + " differs between runs"};
    }
    return {compared >= 2, std::to_string(compared) + " files byte-identical across two runs (1 and 2 threads)"};
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: %s <zwanzig-cli> <scratch-dir>\n", argv[0]);
        return 2;
    }
    const std::string cli = argv[1];
    const fs::path work = argv[2];

    const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
        {"three-way equivalence (bare, N=2000)", three_way},
        {"cycle-0 exponential law", cycle_zero},
        {"norm conservation (bare, TLS, chain)", norm_conservation},
        {"critical cycle from the overlap detector", critical_cycle_detector},
        {"reservoir Lorentzian at cycle ends", reservoir_lorentzian},
        {"double-resonance times and widths", double_resonances},
        {"mixing threshold delta_c * Gamma", mixing_threshold},
        {"two-level system limits", tls_limits},
        {"chain ballistic front and Bessel sites", chain_ballistics},
        {"chain crossover scan maximum", chain_scan},
        {"special-function kernels", special_functions},
        {"CLI determinism", [&] { return cli_determinism(cli, work); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = checks[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, checks[i].first.c_str(), o.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria pass\n", static_cast<int>(checks.size()) - failed, checks.size());
    return failed == 0 ? 0 : 1;
}
