#include "scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "zwanzig/chain.hpp"
#include "zwanzig/dynamics.hpp"
#include "zwanzig/echo.hpp"
#include "zwanzig/ensemble.hpp"
#include "zwanzig/model.hpp"
#include "zwanzig/spectrum.hpp"
#include "zwanzig/tls.hpp"

namespace zwanzig::cli {

namespace {

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

enum class Kind { Number, Integer, Bool, String, Numbers, Integers, Strings, NumberOrNumbers, Levels };

struct Field {
    std::string name;
    Kind kind;
    json fallback;          // used when the key is absent
    bool required = false;
};

const char* kind_name(Kind k) {
    switch (k) {
    case Kind::Number: return "a number";
    case Kind::Integer: return "an integer";
    case Kind::Bool: return "true or false";
    case Kind::String: return "a string";
    case Kind::Numbers: return "a list of numbers";
    case Kind::Integers: return "a list of integers";
    case Kind::Strings: return "a list of strings";
    case Kind::NumberOrNumbers: return "a number or a list of numbers";
    case Kind::Levels: return "a list of [energy, coupling, width] triples";
    }
    return "?";
}

bool integral(const json& v) {
    if (v.is_number_integer()) return true;
    if (!v.is_number_float()) return false;
    const double d = v.get<double>();
    return std::isfinite(d) && std::floor(d) == d && std::abs(d) < 9e15;
}

// Returns the canonical value or throws.
json coerce(const json& v, Kind kind, const std::string& path) {
    auto fail = [&]() -> json { throw ConfigError(path + ": expected " + kind_name(kind)); };
    auto number = [&](const json& x) {
        if (!x.is_number()) fail();
        const double d = x.get<double>();
        if (!std::isfinite(d)) fail();
        return json(d);
    };
    switch (kind) {
    case Kind::Number:
        return number(v);
    case Kind::Integer:
        if (!integral(v)) return fail();
        return json(static_cast<std::int64_t>(v.get<double>()));
    case Kind::Bool:
        if (!v.is_boolean()) return fail();
        return v;
    case Kind::String:
        if (!v.is_string()) return fail();
        return v;
    case Kind::Numbers: {
        if (!v.is_array()) return fail();
        json out = json::array();
        for (const auto& x : v) out.push_back(number(x));
        return out;
    }
    case Kind::Integers: {
        if (!v.is_array()) return fail();
        json out = json::array();
        for (const auto& x : v) {
            if (!integral(x)) fail();
            out.push_back(static_cast<std::int64_t>(x.get<double>()));
        }
        return out;
    }
    case Kind::Strings: {
        if (!v.is_array()) return fail();
        for (const auto& x : v)
            if (!x.is_string()) fail();
        return v;
    }
    case Kind::NumberOrNumbers:
        if (v.is_array()) return coerce(v, Kind::Numbers, path);
        return number(v);
    case Kind::Levels: {
        if (!v.is_array()) return fail();
        json out = json::array();
        for (const auto& row : v) {
            if (!row.is_array() || row.size() != 3) fail();
            out.push_back(json::array({number(row[0]), number(row[1]), number(row[2])}));
        }
        return out;
    }
    }
    return fail();
}

json apply_fields(const json& in, const std::vector<Field>& fields, const std::string& path,
                  const std::set<std::string>& passthrough = {}) {
    if (!in.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& [key, value] : in.items()) {
        (void)value;
        const bool known = std::any_of(fields.begin(), fields.end(), [&](const Field& f) { return f.name == key; });
        if (!known && !passthrough.count(key)) throw ConfigError(path + "." + key + ": unknown key");
    }
    json out = json::object();
    for (const Field& f : fields) {
        const std::string where = path + "." + f.name;
        if (in.contains(f.name)) {
            out[f.name] = coerce(in.at(f.name), f.kind, where);
        } else if (f.required) {
            throw ConfigError(where + ": required key missing");
        } else if (!f.fallback.is_null()) {
            out[f.name] = f.fallback;
        }
    }
    return out;
}

const std::vector<std::string> model_types{"reservoir", "tls", "chain", "ensemble"};
const std::vector<std::string> variants{"bare", "homogeneous", "sublattices", "mixing", "explicit"};
const std::vector<std::string> methods{"oracle", "oracle-ode", "fourier", "cycle-sum", "bessel", "all"};

void require_one_of(const std::string& v, const std::vector<std::string>& allowed, const std::string& path) {
    if (std::find(allowed.begin(), allowed.end(), v) != allowed.end()) return;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    throw ConfigError(path + ": \"" + v + "\" is not one of " + list);
}

json normalize_reservoir(const json& in, const std::string& path, const std::set<std::string>& passthrough) {
    const std::string variant = in.contains("variant") && in.at("variant").is_string() ? in.at("variant").get<std::string>() : "bare";
    require_one_of(variant, variants, path + ".variant");
    std::vector<Field> fields{{"variant", Kind::String, "bare"},
                              {"N", Kind::Integer, -1},
                              {"C2", Kind::Number, 1.0},
                              {"gamma", Kind::Number, 0.0},
                              {"gamma_s", Kind::Number, 0.0}};
    if (variant == "homogeneous") {
        fields.push_back({"a", Kind::Number, 0.0});
        fields.push_back({"b", Kind::Number, 0.0});
        fields.push_back({"sign", Kind::Integer, 1});
    } else if (variant == "sublattices") {
        fields.push_back({"K", Kind::Integer, 1});
        fields.push_back({"offsets", Kind::Numbers, json::array()});
    } else if (variant == "mixing") {
        fields.push_back({"K", Kind::Integer, 3});
        fields.push_back({"deltas", Kind::Numbers, json::array()});
    } else if (variant == "explicit") {
        fields.push_back({"levels", Kind::Levels, nullptr, true});
    }
    json out = apply_fields(in, fields, path, passthrough);
    if (out["N"].get<std::int64_t>() < 0) {
        if (variant == "explicit") {
            out["N"] = static_cast<std::int64_t>((out["levels"].size() - 1) / 2);
        } else {
            const double c2 = out["C2"].get<double>();
            out["N"] = default_truncation(std::sqrt(std::max(c2, 0.0)));
        }
    }
    return out;
}

json normalize_model(const json& in) {
    if (!in.is_object()) throw ConfigError("model: expected an object");
    const std::string type = in.contains("type") && in.at("type").is_string() ? in.at("type").get<std::string>() : "reservoir";
    require_one_of(type, model_types, "model.type");
    json out;
    if (type == "reservoir") {
        out = normalize_reservoir(in, "model", {"type"});
    } else if (type == "tls") {
        out = apply_fields(in,
                           {{"type", Kind::String, "tls"},
                            {"Delta", Kind::Number, 0.0},
                            {"C2", Kind::Number, 1.0},
                            {"gamma0", Kind::Number, 0.0},
                            {"gamma", Kind::Number, 0.0},
                            {"N", Kind::Integer, 50}},
                           "model");
    } else if (type == "chain") {
        out = apply_fields(in,
                           {{"type", Kind::String, "chain"},
                            {"N", Kind::Integer, 49},
                            {"C2", Kind::Number, 0.5},
                            {"impurity", Kind::Integer, 0}},
                           "model");
    } else {
        out = apply_fields(in,
                           {{"type", Kind::String, "ensemble"},
                            {"dispersion0", Kind::NumberOrNumbers, 0.0},
                            {"mean_shifts", Kind::Numbers, json::array()},
                            {"widths", Kind::Numbers, json::array()},
                            {"temperature", Kind::Number, 0.0},
                            {"phonon_energy", Kind::Number, 1.0},
                            {"members", Kind::Integer, 100}},
                           "model", {"base"});
        out["base"] = normalize_reservoir(in.contains("base") ? in.at("base") : json::object(), "model.base", {});
    }
    json ordered = json::object();
    ordered["type"] = type;
    for (const auto& [k, v] : out.items())
        if (k != "type") ordered[k] = v;
    return ordered;
}

// Analysis entries per model type.
const std::map<std::string, std::map<std::string, std::vector<Field>>>& analysis_schema() {
    static const std::map<std::string, std::map<std::string, std::vector<Field>>> schema{
        {"reservoir",
         {{"echo_metrics", {{"k_max", Kind::Integer, 10}}},
          {"critical_cycle", {}},
          {"double_resonance", {{"n", Kind::Integers, json::array({0})}, {"k", Kind::Integers, json::array({1, 2, 3, 4, 5})}}},
          {"averages", {{"k_first", Kind::Integer, 0}, {"k_last", Kind::Integer, 10}}},
          {"reservoir_levels", {{"levels", Kind::Integers, json::array({0, 1, 2})}}},
          {"end_of_cycle", {{"levels", Kind::Integers, json::array({0, 1, 2})}, {"k", Kind::Integers, json::array({1, 2, 3})}}},
          {"mixing_threshold", {{"K", Kind::Integer, 3}, {"delta_max", Kind::Number, 1.0}}},
          {"absorption", {{"eps_min", Kind::Number, -10.0}, {"eps_max", Kind::Number, 10.0}, {"points", Kind::Integer, 2001}}},
          {"partial_amplitude",
           {{"k", Kind::Integer, 1}, {"t_min", Kind::Number, 0.0}, {"t_max", Kind::Number, 20.0}, {"samples_per_unit", Kind::Number, 20.0}}},
          {"langevin", {}}}},
        {"tls", {{"rates", {}}, {"transfer_rate", {}}, {"averages", {{"k_first", Kind::Integer, 1}, {"k_last", Kind::Integer, 10}}}}},
        {"chain",
         {{"critical_cycle", {{"k_limit", Kind::Integer, 60}}},
          {"front_tracking", {{"sites", Kind::Integers, json::array({5, 10, 15, 20})}, {"threshold", Kind::Number, 0.2}}},
          {"space_time", {{"samples_per_unit", Kind::Number, 2.0}}}}},
        {"ensemble",
         {{"lineshape",
           {{"gamma", Kind::Number, 0.05}, {"delta", Kind::Number, 0.05}, {"eps_min", Kind::Number, -1.0}, {"eps_max", Kind::Number, 1.0},
            {"points", Kind::Integer, 401}}},
          {"resolution", {{"threshold", Kind::Number, 0.25}}}}},
    };
    return schema;
}

json normalize_analysis(const json& in, const std::string& type) {
    if (!in.is_object()) throw ConfigError("analysis: expected an object");
    const auto& entries = analysis_schema().at(type);
    json out = json::object();
    for (const auto& [key, value] : in.items())
        if (!entries.count(key)) throw ConfigError("analysis." + key + ": unknown key for a " + type + " model");
    // fixed order: the schema order, so canonical output does not depend on the input order
    for (const auto& [key, fields] : entries) {
        if (!in.contains(key)) continue;
        const json& v = in.at(key);
        if (v.is_boolean()) {
            if (v.get<bool>()) out[key] = apply_fields(json::object(), fields, "analysis." + key);
            continue;
        }
        out[key] = apply_fields(v, fields, "analysis." + key);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Spec construction
// ---------------------------------------------------------------------------

ReservoirSpec reservoir_from(const json& m) {
    ReservoirSpec s;
    const double c2 = m.at("C2").get<double>();
    if (!(c2 >= 0.0)) throw ConfigError("model.C2: must be non-negative");
    s.C = std::sqrt(c2);
    s.N = static_cast<int>(m.at("N").get<std::int64_t>());
    s.gamma = m.at("gamma").get<double>();
    s.gamma_s = m.at("gamma_s").get<double>();
    const std::string v = m.at("variant").get<std::string>();
    if (v == "homogeneous") {
        s.variant = HomogeneousDeformation{m.at("a").get<double>(), m.at("b").get<double>(), static_cast<int>(m.at("sign").get<std::int64_t>())};
    } else if (v == "sublattices") {
        s.variant = Sublattices{static_cast<int>(m.at("K").get<std::int64_t>()), m.at("offsets").get<std::vector<double>>()};
    } else if (v == "mixing") {
        s.variant = MixingSublattices{static_cast<int>(m.at("K").get<std::int64_t>()), m.at("deltas").get<std::vector<double>>()};
    } else if (v == "explicit") {
        ExplicitLevels e;
        for (const auto& row : m.at("levels")) e.levels.push_back({row[0].get<double>(), row[1].get<double>(), row[2].get<double>()});
        s.variant = std::move(e);
    }
    return s;
}

TlsSpec tls_from(const json& m) {
    TlsSpec s;
    const double c2 = m.at("C2").get<double>();
    if (!(c2 >= 0.0)) throw ConfigError("model.C2: must be non-negative");
    s.C = std::sqrt(c2);
    s.Delta = m.at("Delta").get<double>();
    s.gamma0 = m.at("gamma0").get<double>();
    s.gamma = m.at("gamma").get<double>();
    s.N = static_cast<int>(m.at("N").get<std::int64_t>());
    return s;
}

ChainSpec chain_from(const json& m) {
    ChainSpec s;
    s.N = static_cast<int>(m.at("N").get<std::int64_t>());
    s.C2 = m.at("C2").get<double>();
    s.impurity = static_cast<int>(m.at("impurity").get<std::int64_t>());
    return s;
}

EnsembleSpec ensemble_from(const json& m, std::uint64_t seed) {
    EnsembleSpec e;
    e.base = reservoir_from(m.at("base"));
    const json& d = m.at("dispersion0");
    e.dispersion0 = d.is_array() ? d.get<std::vector<double>>() : std::vector<double>{d.get<double>()};
    e.mean_shifts = m.at("mean_shifts").get<std::vector<double>>();
    e.widths = m.at("widths").get<std::vector<double>>();
    e.temperature = m.at("temperature").get<double>();
    e.phonon_energy = m.at("phonon_energy").get<double>();
    e.members = static_cast<int>(m.at("members").get<std::int64_t>());
    e.seed = seed;
    return e;
}

std::uint64_t seed_of(const json& c) { return c.at("seed").get<std::uint64_t>(); }

// Methods run for a config; "all" expands to the applicable ones.
std::vector<std::string> method_list(const json& c, std::vector<std::string>* skipped = nullptr) {
    const std::string type = c.at("model").at("type").get<std::string>();
    const std::string m = c.at("method").get<std::string>();
    if (type == "ensemble") {
        if (m != "fourier") throw ConfigError("method: ensembles run with \"fourier\" (members pick their own path)");
        return {"fourier"};
    }
    std::vector<std::string> candidates;
    if (type == "chain") candidates = {"oracle", "fourier", "cycle-sum", "bessel"};
    else candidates = {"oracle", "oracle-ode", "fourier", "cycle-sum"};
    if (m != "all") {
        if (std::find(candidates.begin(), candidates.end(), m) == candidates.end())
            throw ConfigError("method: \"" + m + "\" is not available for a " + type + " model");
        return {m};
    }
    std::vector<std::string> out;
    for (const auto& cand : candidates) {
        bool ok = true;
        if (type == "chain") {
            const ChainSpec s = chain_from(c.at("model"));
            if (cand == "cycle-sum") ok = s.impurity == 0 && s.N % 2 == 1 && s.C2 > 0.0;
            if (cand == "bessel") ok = s.impurity == 0 && s.C2 <= 0.5;
        } else if (type == "reservoir") {
            const ReservoirSpec s = reservoir_from(c.at("model"));
            if (cand == "fourier") {
                for (const Level& l : levels(s)) ok = ok && l.width == s.gamma_s;
            }
            if (cand == "oracle-ode") ok = false;  // the eigen oracle covers "all"
        } else if (type == "tls") {
            const TlsSpec s = tls_from(c.at("model"));
            if (cand == "fourier") ok = s.gamma == s.gamma0;
            if (cand == "oracle-ode") ok = false;
        }
        if (ok) out.push_back(cand);
        else if (skipped && cand != "oracle-ode") skipped->push_back(cand);
    }
    return out;
}

Method method_enum(const std::string& m) {
    if (m == "oracle") return Method::OracleEigen;
    if (m == "oracle-ode") return Method::OracleOde;
    if (m == "fourier") return Method::Fourier;
    if (m == "cycle-sum") return Method::CycleSum;
    return Method::Bessel;
}

template <class F>
auto as_config_error(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const SpecError& e) {
        throw ConfigError(e.what());
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Reading and normalisation
// ---------------------------------------------------------------------------

json parse_config_text(const std::string& text) {
    try {
        return json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        const long line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto ? upto - 1 : 0), '\n');
        throw ConfigError("line " + std::to_string(line) + ": " + e.what());
    }
}

json read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

json normalize(const json& config) {
    if (!config.is_object()) throw ConfigError("config: expected an object at top level");
    static const std::set<std::string> top{"model", "grid", "method", "analysis", "output", "seed", "sweep"};
    for (const auto& [key, value] : config.items()) {
        (void)value;
        if (!top.count(key)) throw ConfigError(key + ": unknown key");
    }
    if (!config.contains("model")) throw ConfigError("model: required block missing");
    json out = json::object();
    out["model"] = normalize_model(config.at("model"));
    const std::string type = out["model"]["type"].get<std::string>();
    out["grid"] = apply_fields(config.value("grid", json::object()),
                               {{"t_max", Kind::Number, 20.0}, {"samples_per_unit", Kind::Number, 20.0}}, "grid");
    const json method = config.contains("method") ? coerce(config.at("method"), Kind::String, "method") : json("fourier");
    require_one_of(method.get<std::string>(), methods, "method");
    out["method"] = method;
    out["analysis"] = normalize_analysis(config.value("analysis", json::object()), type);
    out["output"] = apply_fields(config.value("output", json::object()),
                                 {{"directory", Kind::String, "out"}, {"format", Kind::String, "tsv"}, {"scan_metrics", Kind::Strings, json::array()}},
                                 "output");
    require_one_of(out["output"]["format"].get<std::string>(), {"tsv", "csv"}, "output.format");
    const json seed = config.contains("seed") ? coerce(config.at("seed"), Kind::Integer, "seed") : json(0);
    if (seed.get<std::int64_t>() < 0) throw ConfigError("seed: must be non-negative");
    out["seed"] = seed.get<std::uint64_t>();
    if (config.contains("sweep")) {
        const json& s = config.at("sweep");
        if (!s.is_object()) throw ConfigError("sweep: expected an object");
        for (const auto& [key, value] : s.items()) {
            (void)value;
            if (key != "param" && key != "values") throw ConfigError("sweep." + key + ": unknown key");
        }
        if (!s.contains("param") || !s.at("param").is_string()) throw ConfigError("sweep.param: required string missing");
        if (!s.contains("values") || !s.at("values").is_array() || s.at("values").empty())
            throw ConfigError("sweep.values: expected a non-empty list");
        out["sweep"] = json{{"param", s.at("param")}, {"values", s.at("values")}};
    }
    return out;
}

void check_physics(const json& c) {
    const json& m = c.at("model");
    const std::string type = m.at("type").get<std::string>();
    const json& g = c.at("grid");
    if (!(g.at("t_max").get<double>() > 0.0)) throw ConfigError("grid.t_max: must be positive");
    if (!(g.at("samples_per_unit").get<double>() > 0.0)) throw ConfigError("grid.samples_per_unit: must be positive");
    as_config_error([&] {
        if (type == "reservoir") validate(reservoir_from(m));
        else if (type == "tls") validate(tls_from(m));
        else if (type == "chain") validate(chain_from(m));
        else validate(ensemble_from(m, seed_of(c)));
        return 0;
    });
    const std::vector<std::string> run = method_list(c);
    if (type == "chain") {
        const ChainSpec s = chain_from(m);
        for (const auto& name : run) {
            if (name == "cycle-sum" && (s.impurity != 0 || s.N % 2 == 0 || s.C2 <= 0.0))
                throw ConfigError("method: chain cycle sum needs a centred impurity, odd N and C2 > 0");
            if (name == "bessel" && (s.impurity != 0 || s.C2 > 0.5))
                throw ConfigError("method: chain Bessel expansion needs a centred impurity and C2 <= 1/2");
        }
        const json& a = c.at("analysis");
        if (a.contains("critical_cycle") && (s.impurity != 0 || s.N % 2 == 0 || s.C2 <= 0.0 || s.C2 >= 1.0))
            throw ConfigError("analysis.critical_cycle: needs a centred impurity, odd N and 0 < C2 < 1");
        if (a.contains("front_tracking"))
            for (const auto& site : a.at("front_tracking").at("sites"))
                if (std::abs(site.get<int>()) > s.N) throw ConfigError("analysis.front_tracking.sites: site outside the chain");
    }
    if (type == "reservoir") {
        const ReservoirSpec s = reservoir_from(m);
        for (const auto& name : run) {
            if (name == "fourier") {
                for (const Level& l : levels(s))
                    if (l.width != s.gamma_s) throw ConfigError("method: Fourier path needs one common width (gamma == gamma_s)");
            }
        }
        const json& a = c.at("analysis");
        if (a.contains("absorption") && !(s.gamma > 0.0)) throw ConfigError("analysis.absorption: needs gamma > 0");
        if (a.contains("langevin") && !std::holds_alternative<Bare>(s.variant))
            throw ConfigError("analysis.langevin: defined for the bare variant only");
        if (a.contains("averages") && !std::holds_alternative<Bare>(s.variant))
            throw ConfigError("analysis.averages: defined for the bare variant only");
    }
    if (type == "tls") {
        const TlsSpec s = tls_from(m);
        for (const auto& name : run)
            if (name == "fourier" && s.gamma != s.gamma0) throw ConfigError("method: TLS Fourier path needs gamma == gamma0");
    }
    if (type == "ensemble" && c.at("analysis").contains("lineshape")) {
        const json& l = c.at("analysis").at("lineshape");
        if (l.at("gamma").get<double>() == 0.0 && l.at("delta").get<double>() == 0.0)
            throw ConfigError("analysis.lineshape: gamma and delta cannot both be zero");
    }
}

Diagnostics diagnose(const json& config) {
    Diagnostics d;
    json canonical;
    try {
        canonical = normalize(config);
        for (const json& c : expand_sweep(canonical)) {
            const json& m = c.at("model");
            const std::string type = m.at("type").get<std::string>();
            std::vector<std::string> soft;
            if (type == "reservoir") soft = diagnostics(reservoir_from(m));
            if (type == "ensemble") {
                const EnsembleSpec e = ensemble_from(m, seed_of(c));
                soft = diagnostics(e.base);
                const Resolution r = resolution(e);
                if (!r.resolved) soft.push_back("ensemble dispersion is not small against the level spacing; fine structure is washed out");
            }
            if (type == "tls") {
                const TlsSpec s = tls_from(m);
                if (!(std::abs(s.Delta) < s.Gamma())) soft.push_back("Delta >= Gamma: outside the slow-tunnelling regime");
            }
            if (type == "chain" && m.at("C2").get<double>() > 0.5)
                soft.push_back("C2 > 1/2: band-edge states dominate; the Bessel expansion is not used");
            for (auto& w : soft) d.warnings.push_back(w);
        }
    } catch (const ConfigError& e) {
        d.errors.push_back(e.what());
    }
    return d;
}

json::json_pointer leaf_pointer(const json& canonical, const std::string& dotted) {
    std::string ptr;
    std::stringstream ss(dotted);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (part.empty()) throw ConfigError("scan parameter \"" + dotted + "\" is malformed");
        ptr += "/" + part;
    }
    json::json_pointer p(ptr);
    if (!canonical.contains(p)) throw ConfigError("scan parameter \"" + dotted + "\" does not exist");
    if (canonical.at(p).is_object()) throw ConfigError("scan parameter \"" + dotted + "\" is not a leaf");
    return p;
}

std::vector<json> expand_sweep(const json& canonical) {
    std::vector<json> out;
    if (!canonical.contains("sweep")) {
        check_physics(canonical);
        out.push_back(canonical);
        return out;
    }
    json base = canonical;
    base.erase("sweep");
    const std::string param = canonical.at("sweep").at("param").get<std::string>();
    const json::json_pointer p = leaf_pointer(base, param);
    for (const json& v : canonical.at("sweep").at("values")) {
        json c = base;
        c[p] = v;
        // the type of the swept value is checked by a second normalisation
        c = normalize(c);
        check_physics(c);
        out.push_back(c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

struct Writer {
    char delim;
    std::ostringstream os;
    explicit Writer(char d) : delim(d) { os << std::setprecision(12); }
    template <class... T>
    void header(const T&... names) {
        os << "#";
        bool first = true;
        ((os << (first ? " " : std::string(1, delim)) << names, first = false), ...);
        os << '\n';
    }
    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) os << (i ? std::string(1, delim) : "") << values[i];
        os << '\n';
    }
};

double max_abs_diff(const VectorXcd& a, const VectorXcd& b) { return (a - b).cwiseAbs().maxCoeff(); }

json series_summary(const VectorXcd& a) {
    const VectorXd p = a.cwiseAbs2();
    return json{{"final_population", p(p.size() - 1)}, {"mean_population", p.mean()}, {"min_population", p.minCoeff()}};
}

json agreement(const std::vector<std::pair<std::string, VectorXcd>>& runs) {
    json out = json::object();
    for (std::size_t i = 1; i < runs.size(); ++i)
        out[runs[i].first + "_vs_" + runs[0].first] = max_abs_diff(runs[i].second, runs[0].second);
    return out;
}

void evaluate_reservoir(const json& c, const VectorXd& grid, char delim, bool series, Evaluation& ev) {
    const ReservoirSpec spec = reservoir_from(c.at("model"));
    const std::string ext = delim == ',' ? ".csv" : ".tsv";
    std::vector<std::string> skipped;
    std::vector<std::pair<std::string, VectorXcd>> runs;
    if (series) {
        json mj = json::object();
        for (const auto& name : method_list(c, &skipped)) {
            AmplitudeSeries s;
            if (name == "oracle" || name == "oracle-ode") {
                OracleOptions oo;
                oo.kind = name == "oracle" ? OracleKind::Auto : OracleKind::Ode;
                s = evolve_oracle(build_hamiltonian(spec), grid, oo);
            } else if (name == "fourier") {
                s = evolve_fourier(spec, grid);
            } else {
                s = assemble_cycles(spec, grid).first;
            }
            std::ostringstream os;
            write_series(os, s, delim);
            ev.files.push_back({"series_" + name + ext, os.str()});
            mj[name] = series_summary(s.a_s);
            runs.emplace_back(name, s.a_s);
        }
        ev.metrics["methods"] = mj;
        if (runs.size() > 1) ev.metrics["agreement"] = agreement(runs);
        if (!skipped.empty()) ev.metrics["skipped_methods"] = skipped;
    }
    const json& a = c.at("analysis");
    json am = json::object();
    if (a.contains("critical_cycle")) {
        const CriticalCycle cc = critical_cycle(spec);
        am["critical_cycle"] = json{{"k_c", cc.k_c}, {"k_overlap", overlap_cycle(spec.Gamma())}, {"warnings", cc.warnings}};
    }
    if (a.contains("echo_metrics")) {
        const EchoMetrics em = echo_metrics(spec, a.at("echo_metrics").at("k_max").get<int>());
        json cycles = json::array();
        for (const CycleMetrics& m : em.cycles)
            cycles.push_back(json{{"k", m.k}, {"zero_count", m.zero_count}, {"component_count", m.component_count},
                                  {"outer_edge", m.outer_edge}, {"overlaps_next", m.overlaps_next}, {"mean_population", m.mean_population}});
        am["echo_metrics"] = json{{"k_c", em.k_c}, {"k_c_detected", em.k_c_detected}, {"cycles", cycles}};
    }
    if (a.contains("double_resonance")) {
        json rows = json::array();
        for (const auto& n : a.at("double_resonance").at("n"))
            for (const auto& k : a.at("double_resonance").at("k")) {
                const DoubleResonance d = double_resonance(n.get<int>(), k.get<int>(), spec);
                json r{{"n", d.n}, {"k", d.k}, {"tau_estimate", d.tau_estimate}, {"half_width_estimate", d.half_width_estimate}};
                r["tau_detected"] = d.tau_detected ? json(*d.tau_detected) : json(nullptr);
                r["half_width_detected"] = d.half_width_detected ? json(*d.half_width_detected) : json(nullptr);
                rows.push_back(r);
            }
        am["double_resonance"] = rows;
    }
    if (a.contains("averages")) {
        json out = json::object();
        for (int k = a.at("averages").at("k_first").get<int>(); k <= a.at("averages").at("k_last").get<int>(); ++k) {
            const CycleAverage av = cycle_average(k, spec);
            out["k" + std::to_string(k)] = json{{"total", av.total}, {"partial", av.partial}, {"total_times_Gamma", av.total * spec.Gamma()}};
        }
        am["averages"] = out;
    }
    if (a.contains("reservoir_levels")) {
        const auto lv = a.at("reservoir_levels").at("levels").get<std::vector<int>>();
        Writer w(delim);
        w.os << "# t";
        for (int n : lv) w.os << delim << "pop_" << n;
        w.os << '\n';
        std::vector<VectorXcd> cols;
        for (int n : lv) cols.push_back(reservoir_amplitude_spectral(n, grid, spec));
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            std::vector<double> row{grid(i)};
            for (const auto& col : cols) row.push_back(std::norm(col(i)));
            w.row(row);
        }
        ev.files.push_back({"reservoir_levels" + ext, w.os.str()});
    }
    if (a.contains("end_of_cycle")) {
        json rows = json::array();
        for (const auto& n : a.at("end_of_cycle").at("levels"))
            for (const auto& k : a.at("end_of_cycle").at("k")) {
                const EndOfCycle e = end_of_cycle(n.get<int>(), k.get<int>(), spec);
                const double pop = std::norm(e.amplitude);
                rows.push_back(json{{"n", e.n}, {"k", e.k}, {"population", pop}, {"lorentzian", e.lorentzian},
                                    {"relative_error", std::abs(pop - e.lorentzian) / e.lorentzian}});
            }
        am["end_of_cycle"] = rows;
    }
    if (a.contains("mixing_threshold")) {
        const MixingThreshold mt = critical_mixing_deformation(spec.Gamma(), a.at("mixing_threshold").at("K").get<int>(),
                                                               a.at("mixing_threshold").at("delta_max").get<double>());
        json r{{"Gamma", spec.Gamma()}, {"lower_level", mt.lower_level}};
        r["delta_c"] = mt.delta_c ? json(*mt.delta_c) : json(nullptr);
        r["delta_c_Gamma"] = mt.delta_c ? json(*mt.delta_c * spec.Gamma()) : json(nullptr);
        am["mixing_threshold"] = r;
    }
    if (a.contains("absorption")) {
        const json& b = a.at("absorption");
        const VectorXd eps = VectorXd::LinSpaced(b.at("points").get<int>(), b.at("eps_min").get<double>(), b.at("eps_max").get<double>());
        const VectorXd band = absorption_band(spec, eps);
        Writer w(delim);
        w.header("eps", "absorption");
        for (Eigen::Index i = 0; i < eps.size(); ++i) w.row({eps(i), band(i)});
        ev.files.push_back({"absorption" + ext, w.os.str()});
        am["absorption"] = json{{"resolved", components_resolved(spec.gamma)}};
    }
    if (a.contains("partial_amplitude")) {
        const json& p = a.at("partial_amplitude");
        const int k = p.at("k").get<int>();
        const double t0 = p.at("t_min").get<double>(), t1 = p.at("t_max").get<double>();
        const int count = static_cast<int>(std::ceil((t1 - t0) * p.at("samples_per_unit").get<double>())) + 1;
        const VectorXd ts = VectorXd::LinSpaced(count, t0, t1);
        const std::optional<ScalingMap> map = scaling_map(spec);
        const bool bare = std::holds_alternative<Bare>(spec.variant);
        if (!map && !bare) throw ConfigError("analysis.partial_amplitude: variant has no level map");
        Writer w(delim);
        w.header("t", "re", "im", "pop");
        double backward = 0.0;
        for (Eigen::Index i = 0; i < ts.size(); ++i) {
            const cplx v = bare && spec.gamma == 0.0 ? partial_amplitude_bare(k, ts(i), spec) : partial_amplitude_deformed(k, ts(i), *map).value;
            w.row({ts(i), v.real(), v.imag(), std::norm(v)});
            if (ts(i) < 2.0 * pi * k) backward = std::max(backward, std::norm(v));
        }
        ev.files.push_back({"partial_k" + std::to_string(k) + ext, w.os.str()});
        am["partial_amplitude"] = json{{"k", k}, {"backward_max_population", backward}};
    }
    if (a.contains("langevin")) {
        CycleOptions co;
        co.finite_band_correction = false;
        const AmplitudeSeries s = assemble_cycles(spec, grid, static_cast<int>(std::floor(grid.maxCoeff() / (2.0 * pi))), co).first;
        am["langevin"] = json{{"residual_linf", langevin_residual(s, spec).linf}};
    }
    if (!am.empty()) ev.metrics["analysis"] = am;
}

void evaluate_tls(const json& c, const VectorXd& grid, char delim, bool series, Evaluation& ev) {
    const TlsSpec spec = tls_from(c.at("model"));
    const std::string ext = delim == ',' ? ".csv" : ".tsv";
    if (series) {
        std::vector<std::string> skipped;
        std::vector<std::pair<std::string, VectorXcd>> runs;
        json mj = json::object();
        for (const auto& name : method_list(c, &skipped)) {
            TlsOptions opt;
            opt.method = method_enum(name);
            const TlsSeries s = tls_evolve(spec, grid, opt);
            Writer w(delim);
            w.header("t", "re_L", "im_L", "pop_L", "re_R", "im_R", "pop_R");
            for (Eigen::Index i = 0; i < grid.size(); ++i)
                w.row({grid(i), s.a_L(i).real(), s.a_L(i).imag(), std::norm(s.a_L(i)), s.a_R(i).real(), s.a_R(i).imag(), std::norm(s.a_R(i))});
            ev.files.push_back({"series_" + name + ext, w.os.str()});
            json sm = series_summary(s.a_L);
            sm["final_population_R"] = std::norm(s.a_R(s.a_R.size() - 1));
            mj[name] = sm;
            VectorXcd both(2 * grid.size());
            both << s.a_L, s.a_R;
            runs.emplace_back(name, both);
        }
        ev.metrics["methods"] = mj;
        if (runs.size() > 1) ev.metrics["agreement"] = agreement(runs);
        if (!skipped.empty()) ev.metrics["skipped_methods"] = skipped;
    }
    const json& a = c.at("analysis");
    json am = json::object();
    if (a.contains("rates")) {
        const TlsRates r = tls_rates(spec);
        am["rates"] = json{{"k_LR", r.k_LR}, {"t_m", r.t_m}, {"t_m_printed", r.t_m_printed}, {"t_m_detected", r.t_m_detected},
                           {"ratio_RL", r.ratio_RL}, {"ratio_estimate", r.ratio_estimate}, {"in_regime", r.in_regime}};
    }
    if (a.contains("transfer_rate")) {
        const double fit = fitted_transfer_rate(spec);
        const double law = spec.Delta * spec.Delta / spec.Gamma();
        am["transfer_rate"] = json{{"fitted", fit}, {"law", law}, {"relative_error", law > 0 ? std::abs(fit - law) / law : 0.0}};
    }
    if (a.contains("averages")) {
        json out = json::object();
        for (const TlsCycleAverage& av : tls_cycle_averages(spec, a.at("averages").at("k_first").get<int>(), a.at("averages").at("k_last").get<int>()))
            out["k" + std::to_string(av.k)] = json{{"left", av.left}, {"right", av.right}, {"total", av.total}, {"total_law", av.total_law},
                                                 {"left_law", av.left_law}, {"right_law", av.right_law}};
        am["averages"] = out;
    }
    if (!am.empty()) ev.metrics["analysis"] = am;
}

void evaluate_chain(const json& c, const VectorXd& grid, char delim, bool series, Evaluation& ev) {
    const ChainSpec spec = chain_from(c.at("model"));
    const std::string ext = delim == ',' ? ".csv" : ".tsv";
    if (series) {
        std::vector<std::string> skipped;
        std::vector<std::pair<std::string, VectorXcd>> runs;
        json mj = json::object();
        for (const auto& name : method_list(c, &skipped)) {
            const AmplitudeSeries s = impurity_amplitude(spec, grid, method_enum(name));
            std::ostringstream os;
            write_series(os, s, delim);
            ev.files.push_back({"series_" + name + ext, os.str()});
            mj[name] = series_summary(s.a_s);
            runs.emplace_back(name, s.a_s);
        }
        ev.metrics["methods"] = mj;
        if (runs.size() > 1) ev.metrics["agreement"] = agreement(runs);
        if (!skipped.empty()) ev.metrics["skipped_methods"] = skipped;
    }
    const json& a = c.at("analysis");
    json am = json::object();
    if (a.contains("critical_cycle")) {
        const ChainCriticalCycle cc = chain_critical_cycle(spec, a.at("critical_cycle").at("k_limit").get<int>());
        am["critical_cycle"] = json{{"formula", cc.formula}, {"detected", cc.detected}, {"k_overlap", cc.k_overlap}, {"k_oscillation", cc.k_oscillation}};
    }
    if (a.contains("front_tracking")) {
        const json& f = a.at("front_tracking");
        const auto fronts = front_arrivals(spec, f.at("sites").get<std::vector<int>>(), f.at("threshold").get<double>());
        json rows = json::array();
        // least-squares speed |n - n0| / tau over the detected arrivals
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int used = 0;
        for (const FrontArrival& fa : fronts) {
            json r{{"site", fa.site}, {"arrival_law", fa.arrival_law}, {"departure_law", fa.departure_law}};
            r["arrival"] = fa.arrival ? json(*fa.arrival) : json(nullptr);
            rows.push_back(r);
            if (fa.arrival) {
                sx += *fa.arrival;
                sy += fa.arrival_law;
                sxx += *fa.arrival * *fa.arrival;
                sxy += *fa.arrival * fa.arrival_law;
                ++used;
            }
        }
        json out{{"sites", rows}};
        const double den = used * sxx - sx * sx;
        out["speed"] = used >= 2 && den != 0.0 ? json((used * sxy - sx * sy) / den) : json(nullptr);
        am["front_tracking"] = out;
    }
    if (a.contains("space_time")) {
        const VectorXd tau = uniform_grid(grid.maxCoeff(), a.at("space_time").at("samples_per_unit").get<double>());
        const MatrixXd st = space_time(spec, tau);
        Writer w(delim);
        w.os << "# t";
        for (int n = -spec.N; n <= spec.N; ++n) w.os << delim << "pop_" << n;
        w.os << '\n';
        for (Eigen::Index i = 0; i < tau.size(); ++i) {
            std::vector<double> row{tau(i)};
            for (Eigen::Index s = 0; s < st.rows(); ++s) row.push_back(st(s, i));
            w.row(row);
        }
        ev.files.push_back({"space_time" + ext, w.os.str()});
    }
    if (!am.empty()) ev.metrics["analysis"] = am;
}

void evaluate_ensemble(const json& c, const VectorXd& grid, char delim, bool series, int threads, Evaluation& ev) {
    const EnsembleSpec spec = ensemble_from(c.at("model"), seed_of(c));
    const std::string ext = delim == ',' ? ".csv" : ".tsv";
    if (series) {
        const EnsembleDynamics d = ensemble_dynamics(spec, grid, spec.members, threads);
        Writer w(delim);
        w.header("t", "pop_mean", "pop_stderr", "re_mean", "im_mean");
        for (Eigen::Index i = 0; i < grid.size(); ++i)
            w.row({grid(i), d.mean_population(i), d.stderr_population(i), d.mean_amplitude(i).real(), d.mean_amplitude(i).imag()});
        ev.files.push_back({"series_ensemble" + ext, w.os.str()});
        ev.metrics["methods"] = json{{"ensemble", json{{"members", d.members},
                                                       {"final_population", d.mean_population(grid.size() - 1)},
                                                       {"max_stderr", d.stderr_population.maxCoeff()}}}};
    }
    const json& a = c.at("analysis");
    json am = json::object();
    if (a.contains("lineshape")) {
        const json& l = a.at("lineshape");
        const double g = l.at("gamma").get<double>(), dl = l.at("delta").get<double>();
        const VectorXd eps = VectorXd::LinSpaced(l.at("points").get<int>(), l.at("eps_min").get<double>(), l.at("eps_max").get<double>());
        const VectorXd v = lineshape(g, dl, eps);
        Writer w(delim);
        w.header("eps", "profile");
        for (Eigen::Index i = 0; i < eps.size(); ++i) w.row({eps(i), v(i)});
        ev.files.push_back({"lineshape" + ext, w.os.str()});
    }
    if (a.contains("resolution")) {
        const Resolution r = resolution(spec, a.at("resolution").at("threshold").get<double>());
        am["resolution"] = json{{"worst_ratio", r.worst_ratio}, {"worst_level", r.worst_level}, {"resolved", r.resolved}};
    }
    if (!am.empty()) ev.metrics["analysis"] = am;
}

} // namespace

Evaluation evaluate(const json& c, int threads, bool series) {
    Evaluation ev;
    ev.metrics = json::object();
    const std::string type = c.at("model").at("type").get<std::string>();
    const VectorXd grid = uniform_grid(c.at("grid").at("t_max").get<double>(), c.at("grid").at("samples_per_unit").get<double>());
    const char delim = c.at("output").at("format").get<std::string>() == "csv" ? ',' : '\t';
    as_config_error([&] {
        if (type == "reservoir") evaluate_reservoir(c, grid, delim, series, ev);
        else if (type == "tls") evaluate_tls(c, grid, delim, series, ev);
        else if (type == "chain") evaluate_chain(c, grid, delim, series, ev);
        else evaluate_ensemble(c, grid, delim, series, threads, ev);
        return 0;
    });
    return ev;
}

std::vector<std::pair<std::string, json>> scalar_metrics(const json& metrics) {
    std::vector<std::pair<std::string, json>> out;
    std::function<void(const json&, const std::string&)> walk = [&](const json& node, const std::string& prefix) {
        if (node.is_object()) {
            for (const auto& [k, v] : node.items()) walk(v, prefix.empty() ? k : prefix + "." + k);
        } else if (!node.is_array()) {
            out.emplace_back(prefix, node);
        }
    };
    walk(metrics, "");
    return out;
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace zwanzig::cli
