#include <doctest.h>

#include <filesystem>

#include "scenario.hpp"

using namespace zwanzig::cli;
namespace fs = std::filesystem;

namespace {

json small_bare() {
    return parse_config_text(R"({
      // bare reservoir, short run
      "model": { "type": "reservoir", "variant": "bare", "N": 60, "C2": 1.0 },
      "grid": { "t_max": 8, "samples_per_unit": 5 },
      "method": "all",
      "analysis": { "echo_metrics": { "k_max": 3 } }
    })");
}

} // namespace

TEST_CASE("every preset normalizes to a fixed point and passes validation") {
    int seen = 0;
    for (const auto& entry : fs::directory_iterator(PRESET_DIR)) {
        if (entry.path().extension() != ".json") continue;
        ++seen;
        CAPTURE(entry.path().string());
        const json raw = read_config(entry.path().string());
        const json once = normalize(raw);
        CHECK(normalize(once) == once);
        CHECK(normalize(parse_config_text(once.dump())) == once);
        CHECK(diagnose(raw).ok());
        CHECK_FALSE(expand_sweep(once).empty());
    }
    CHECK(seen == 8);
}

TEST_CASE("defaults are filled in") {
    const json c = normalize(parse_config_text(R"({"model": {"type": "chain"}})"));
    CHECK(c.at("model").at("N") == 49);
    CHECK(c.at("model").at("C2") == 0.5);
    CHECK(c.at("grid").at("t_max") == 20);
    CHECK(c.at("method") == "fourier");
    CHECK(c.at("output").at("format") == "tsv");
    CHECK(c.contains("seed"));
    const json r = normalize(parse_config_text(R"({"model": {"type": "reservoir", "C2": 4.0}})"));
    CHECK(r.at("model").at("N") == 126);
}

TEST_CASE("malformed configs are rejected with a readable message") {
    CHECK_THROWS_AS(normalize(parse_config_text(R"({"model": {"type": "chain"}, "grid": {"tmax": 3}})")), ConfigError);
    CHECK_THROWS_AS(normalize(parse_config_text(R"({"model": {"type": "nonsense"}})")), ConfigError);
    CHECK_THROWS_AS(normalize(parse_config_text(R"({"model": {"type": "chain", "C2": "big"}})")), ConfigError);
    try {
        parse_config_text("{\n  \"model\": {\n    \"type\": \"chain\",\n  }\n}");
        FAIL("expected a parse error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
    const Diagnostics d = diagnose(parse_config_text(R"({"model": {"type": "chain", "C2": 1.2}})"));
    CHECK_FALSE(d.ok());
    const Diagnostics m = diagnose(parse_config_text(
        R"({"model": {"type": "reservoir", "variant": "mixing", "K": 3, "deltas": [0.2, 0.1]}})"));
    CHECK_FALSE(m.ok());
}

TEST_CASE("sweep expansion and leaf pointers") {
    json c = normalize(small_bare());
    CHECK(leaf_pointer(c, "model.C2").to_string() == "/model/C2");
    CHECK_THROWS_AS(leaf_pointer(c, "model"), ConfigError);
    CHECK_THROWS_AS(leaf_pointer(c, "model.nothing"), ConfigError);
    c["sweep"] = json{{"param", "model.C2"}, {"values", {0.5, 1.0, 2.0}}};
    const auto runs = expand_sweep(normalize(c));
    REQUIRE(runs.size() == 3u);
    CHECK(runs[2].at("model").at("C2") == 2.0);
    CHECK_FALSE(runs[0].contains("sweep"));
}

TEST_CASE("evaluation is deterministic and reports every method") {
    const json c = normalize(small_bare());
    const Evaluation a = evaluate(c, 1);
    const Evaluation b = evaluate(c, 1);
    REQUIRE(a.files.size() == b.files.size());
    for (std::size_t i = 0; i < a.files.size(); ++i) {
        CHECK(a.files[i].name == b.files[i].name);
        CHECK(a.files[i].content == b.files[i].content);
    }
    CHECK(a.metrics == b.metrics);
    CHECK(a.metrics.at("methods").size() >= 3u);
    bool has_metric = false;
    for (const auto& [k, v] : scalar_metrics(a.metrics)) {
        has_metric |= k.rfind("analysis.", 0) == 0;
        CHECK_FALSE(v.is_structured());
    }
    CHECK(has_metric);
}

TEST_CASE("seeded ensemble evaluation depends on the seed only") {
    json c = normalize(parse_config_text(R"({
      "model": { "type": "ensemble", "base": { "variant": "bare", "N": 30, "C2": 1.0 },
                 "dispersion0": 0.05, "members": 20 },
      "grid": { "t_max": 8, "samples_per_unit": 4 },
      "seed": 99
    })"));
    const Evaluation one = evaluate(c, 1), two = evaluate(c, 2);
    REQUIRE_FALSE(one.files.empty());
    CHECK(one.files[0].content == two.files[0].content);
    c["seed"] = 100;
    CHECK(evaluate(c, 1).files[0].content != one.files[0].content);
}

TEST_CASE("FNV-1a reference values") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}
