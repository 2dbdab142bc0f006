// Command-line front end: run, validate and scan scenario configs.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "scenario.hpp"
#include "zwanzig/core.hpp"

namespace fs = std::filesystem;
using namespace zwanzig::cli;

namespace {

constexpr const char* version = ZWANZIG_VERSION;

struct Common {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
};

json load(const Common& o) {
    json c = normalize(read_config(o.config));
    if (!o.out.empty()) c["output"]["directory"] = o.out;
    if (o.seed_set) c["seed"] = o.seed;
    return c;
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << content;
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json manifest(const std::string& command, const json& canonical, int threads, double wall, const std::vector<std::string>& files) {
    return json{{"tool", "zwanzig"},
                {"version", version},
                {"command", command},
                {"config_hash", hex(fnv1a(canonical.dump()))},
                {"seed", canonical.at("seed")},
                {"threads", threads},
                {"wall_time_seconds", wall},
                {"files", files},
                {"config", canonical}};
}

std::string label(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sweep_%02zu", i);
    return buf;
}

int cmd_run(const Common& o) {
    const auto start = std::chrono::steady_clock::now();
    const json canonical = load(o);
    const std::vector<json> configs = expand_sweep(canonical);
    const fs::path dir = canonical.at("output").at("directory").get<std::string>();
    std::vector<std::string> files;
    json metrics;
    const bool swept = canonical.contains("sweep");
    if (swept) metrics["sweep"] = json{{"param", canonical.at("sweep").at("param")}, {"runs", json::array()}};
    for (std::size_t i = 0; i < configs.size(); ++i) {
        const Evaluation ev = evaluate(configs[i], o.threads);
        const std::string prefix = swept ? label(i) + "/" : "";
        for (const Artifact& a : ev.files) {
            write_file(dir / (prefix + a.name), a.content);
            files.push_back(prefix + a.name);
        }
        if (swept) {
            const json::json_pointer p = leaf_pointer(configs[i], canonical.at("sweep").at("param").get<std::string>());
            metrics["sweep"]["runs"].push_back(json{{"label", label(i)}, {"value", configs[i].at(p)}, {"metrics", ev.metrics}});
        } else {
            metrics = ev.metrics;
        }
    }
    write_file(dir / "metrics.json", metrics.dump(2) + "\n");
    files.push_back("metrics.json");
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file(dir / "manifest.json", manifest("run", canonical, o.threads, wall, files).dump(2) + "\n");
    std::cout << "wrote " << files.size() + 1 << " files to " << dir.string() << "\n";
    return 0;
}

int cmd_validate(const Common& o) {
    const Diagnostics d = diagnose(read_config(o.config));
    for (const auto& e : d.errors) std::cout << "error: " << e << "\n";
    for (const auto& w : d.warnings) std::cout << "warning: " << w << "\n";
    if (d.ok()) std::cout << "ok\n";
    return d.ok() ? 0 : 1;
}

int cmd_scan(const Common& o, const std::string& param, const std::string& values) {
    const auto start = std::chrono::steady_clock::now();
    json canonical = load(o);
    canonical.erase("sweep");
    const json list = parse_config_text("[" + values + "]");
    if (list.empty()) throw ConfigError("--values: empty list");
    canonical["sweep"] = json{{"param", param}, {"values", list}};
    const std::vector<json> configs = expand_sweep(canonical);
    const std::vector<std::string> wanted = canonical.at("output").at("scan_metrics").get<std::vector<std::string>>();

    // values run in parallel; results land in their own slot, so the table order is fixed
    std::vector<Evaluation> results(configs.size());
    std::vector<std::exception_ptr> errors(configs.size());
    const int workers = std::max(1, std::min<int>(o.threads, static_cast<int>(configs.size())));
    auto work = [&](int w) {
        for (std::size_t i = static_cast<std::size_t>(w); i < configs.size(); i += static_cast<std::size_t>(workers)) {
            try {
                results[i] = evaluate(configs[i], 1, false);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<std::string> columns;
    if (wanted.empty()) {
        for (const auto& r : results)
            for (const auto& [k, v] : scalar_metrics(r.metrics)) {
                (void)v;
                if (std::find(columns.begin(), columns.end(), k) == columns.end()) columns.push_back(k);
            }
    } else {
        for (const auto& name : wanted) {
            std::string ptr = "/" + name;
            std::replace(ptr.begin(), ptr.end(), '.', '/');
            const json::json_pointer p(ptr);
            for (const auto& r : results)
                if (r.metrics.contains(p) && (r.metrics.at(p).is_object() || r.metrics.at(p).is_array()))
                    throw ConfigError("scan metric \"" + name + "\" is not a scalar");
            columns.push_back(name);
        }
    }
    const char delim = canonical.at("output").at("format").get<std::string>() == "csv" ? ',' : '\t';
    std::ostringstream os;
    os << "# " << param;
    for (const auto& c : columns) os << delim << c;
    os << '\n';
    for (std::size_t i = 0; i < configs.size(); ++i) {
        os << list[i].dump();
        const auto scalars = scalar_metrics(results[i].metrics);
        for (const auto& c : columns) {
            auto it = std::find_if(scalars.begin(), scalars.end(), [&](const auto& kv) { return kv.first == c; });
            os << delim << (it == scalars.end() ? "nan" : it->second.dump());
        }
        os << '\n';
    }
    const fs::path dir = canonical.at("output").at("directory").get<std::string>();
    const std::string table = delim == ',' ? "scan.csv" : "scan.tsv";
    write_file(dir / table, os.str());
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file(dir / "manifest.json", manifest("scan", canonical, o.threads, wall, {table}).dump(2) + "\n");
    std::cout << "wrote " << (dir / table).string() << "\n";
    return 0;
}

void common_options(CLI::App* sub, Common& o) {
    sub->add_option("config", o.config, "scenario config file")->required();
    sub->add_option("--out", o.out, "output directory (overrides output.directory)");
    sub->add_option_function<std::uint64_t>("--seed", [&o](const std::uint64_t& s) { o.seed = s; o.seed_set = true; }, "RNG seed");
    sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete-spectrum reservoir simulations"};
    app.set_version_flag("--version", version);
    app.require_subcommand(1);
    Common o;
    std::string param, values;
    CLI::App* run = app.add_subcommand("run", "run a scenario and write its artifacts");
    common_options(run, o);
    CLI::App* val = app.add_subcommand("validate", "check a scenario config without computing");
    val->add_option("config", o.config, "scenario config file")->required();
    CLI::App* scan = app.add_subcommand("scan", "tabulate scalar metrics over one parameter");
    common_options(scan, o);
    scan->add_option("--param", param, "dotted config path, e.g. model.C2")->required();
    scan->add_option("--values", values, "comma-separated values (JSON literals)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    try {
        if (*run) return cmd_run(o);
        if (*val) return cmd_validate(o);
        return cmd_scan(o, param, values);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const zwanzig::SpecError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    }
}
