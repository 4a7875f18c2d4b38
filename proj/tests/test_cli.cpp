// End-to-end tests that drive the mbr4 binary. argv[1] is the binary path,
// argv[2] the results schema.
#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "mbr4/extremes.hpp"
#include "mbr4/field.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_cli;
std::string g_schema;

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    std::string out_file = (fs::temp_directory_path() / "mbr4_cli_out.txt").string();
    std::string cmd = g_cli + " " + args + " > " + out_file + " 2>&1";
    int rc = std::system(cmd.c_str());
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WEXITSTATUS(rc), ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("mbr4_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Minimal checker for the subset of JSON Schema the shipped schema uses:
// type (incl. unions), required, properties, items, minimum.
bool check_type(const json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "integer") return v.is_number_integer() || v.is_number_unsigned();
    if (t == "number") return v.is_number();
    if (t == "null") return v.is_null();
    if (t == "boolean") return v.is_boolean();
    return false;
}

bool validate(const json& instance, const json& schema, std::string& why) {
    if (schema.contains("type")) {
        const json& t = schema["type"];
        bool ok = false;
        if (t.is_string()) {
            ok = check_type(instance, t.get<std::string>());
        } else {
            for (const auto& alt : t) ok = ok || check_type(instance, alt.get<std::string>());
        }
        if (!ok) {
            why = "type mismatch against " + t.dump() + " at " + instance.dump().substr(0, 80);
            return false;
        }
    }
    if (schema.contains("required"))
        for (const auto& key : schema["required"])
            if (!instance.contains(key.get<std::string>())) {
                why = "missing required key " + key.get<std::string>();
                return false;
            }
    if (schema.contains("properties") && instance.is_object())
        for (const auto& [key, sub] : schema["properties"].items())
            if (instance.contains(key) && !validate(instance[key], sub, why)) return false;
    if (schema.contains("items") && instance.is_array())
        for (const auto& item : instance)
            if (!validate(item, schema["items"], why)) return false;
    if (schema.contains("minimum") && instance.is_number())
        if (instance.get<double>() < schema["minimum"].get<double>()) {
            why = "value below minimum";
            return false;
        }
    return true;
}

void check_schema(const fs::path& file) {
    json schema = json::parse(slurp(g_schema));
    json doc = json::parse(slurp(file));
    std::string why;
    bool ok = validate(doc, schema, why);
    if (!ok) MESSAGE("schema violation in ", file.string(), ": ", why);
    CHECK(ok);
}

} // namespace

TEST_CASE("sample is deterministic and round-trips") {
    auto d1 = fresh_dir("sample1"), d2 = fresh_dir("sample2");
    auto r1 = run_cli("sample --field membrane --n-side 4 --reps 2 --seed 7 --out " + d1.string());
    auto r2 = run_cli("sample --field membrane --n-side 4 --reps 2 --seed 7 --out " + d2.string());
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    for (const char* name : {"membrane_N4_rep0000.mbr4", "membrane_N4_rep0001.mbr4"}) {
        std::string a = slurp(d1 / name), b = slurp(d2 / name);
        REQUIRE(!a.empty());
        CHECK(a == b);
        mbr4::Field f = mbr4::read_field((d1 / name).string());
        CHECK(f.lattice.n_side() == 4);
        CHECK(f.seed == 7);
        CHECK(f.kind == mbr4::FieldKind::Membrane);
    }
    CHECK(slurp(d1 / "membrane_N4_rep0000.mbr4") != slurp(d1 / "membrane_N4_rep0001.mbr4"));
    check_schema(d1 / "sample.json");
}

TEST_CASE("hierarchical fields persist with their provenance") {
    auto dir = fresh_dir("sample_mbrw");
    auto r = run_cli("sample --field mbrw --depth 2 --reps 1 --seed 3 --out " + dir.string());
    REQUIRE(r.exit_code == 0);
    mbr4::Field f = mbr4::read_field((dir / "mbrw_N4_rep0000.mbr4").string());
    CHECK(f.kind == mbr4::FieldKind::Mbrw);
}

TEST_CASE("cov-check against the closed form") {
    auto dir = fresh_dir("cov");
    auto r = run_cli(
        "cov-check --field mbrw --depth 2 --reps 1500 --pairs 6 --seed 11 --out " + dir.string());
    REQUIRE(r.exit_code == 0);
    json doc = json::parse(slurp(dir / "cov_check.json"));
    CHECK(doc["details"]["failures"].get<int>() == 0);
    CHECK(doc["estimates"].size() == 6);
    check_schema(dir / "cov_check.json");
}

TEST_CASE("extremes CSV matches a re-scan of the persisted field") {
    auto dir = fresh_dir("extremes");
    auto r = run_cli("extremes --n-side 8 --r 2 --reps 1 --seed 3 --out " + dir.string());
    REQUIRE(r.exit_code == 0);
    mbr4::Field f = mbr4::read_field((dir / "field_rep0000.mbr4").string());

    // Definition re-scan, independent of the extractor.
    std::size_t atoms = 0;
    for (std::size_t i = 0; i < f.lattice.vertex_count(); ++i) {
        mbr4::Vec4i x = f.lattice.vertex(i);
        double best = -1e300;
        for (const mbr4::Vec4i& z : mbr4::ball(x, 2, mbr4::Norm::L1, f.lattice))
            best = std::max(best, f.at(z));
        if (f.values[i] == best) ++atoms;
    }
    std::string csv = slurp(dir / "atoms_rep0000.csv");
    std::size_t rows = std::count(csv.begin(), csv.end(), '\n');
    CHECK(rows == atoms + 1);
    check_schema(dir / "extremes_summary.json");
}

TEST_CASE("invalid flags exit with code 2 and an error line") {
    auto dir = fresh_dir("bad");
    auto r = run_cli("sample --field nosuch --n-side 4 --out " + dir.string());
    CHECK(r.exit_code == 2);
    auto r2 = run_cli("sample --n-side 4");
    CHECK(r2.exit_code == 2); // missing --out
    auto r3 = run_cli("dyson-check --n-side 8 --t 99 --reps 2 --out " + dir.string());
    CHECK(r3.exit_code == 2); // t >= g ln N
    CHECK(r3.output.find("error:") != std::string::npos);
}

TEST_CASE("geometry and intensity emit schema-valid documents") {
    auto dir = fresh_dir("geo");
    auto r = run_cli("geometry --n-side 16 --radii 3,4 --reps 24 --seed 5 --out " + dir.string());
    REQUIRE(r.exit_code == 0);
    check_schema(dir / "geometry.json");
    std::string csv = slurp(dir / "geometry.csv");
    CHECK(csv.rfind("r,probability,std_error,replicates\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

    auto dir2 = fresh_dir("inten");
    auto r2 = run_cli("intensity --n-side 8 --r 1 --reps 150 --seed 5 --out " + dir2.string());
    REQUIRE(r2.exit_code == 0);
    check_schema(dir2 / "intensity.json");
    json doc = json::parse(slurp(dir2 / "intensity.json"));
    CHECK(doc["details"]["exceedances"].get<int>() >= 50);
}

TEST_CASE("dyson-check reports both sides and their gap") {
    auto dir = fresh_dir("dyson");
    auto r = run_cli("dyson-check --n-side 8 --r 2 --t 0.5 --reps 60 --seed 9 --out " +
                     dir.string());
    REQUIRE(r.exit_code == 0);
    json doc = json::parse(slurp(dir / "dyson_check.json"));
    REQUIRE(doc["estimates"].size() == 3);
    CHECK(doc["estimates"][0]["name"] == "laplace_f");
    CHECK(doc["estimates"][1]["name"] == "laplace_f_t");
    CHECK(doc["estimates"][2]["name"] == "gap");
    for (int i = 0; i < 2; ++i) {
        double v = doc["estimates"][i]["value"].get<double>();
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
    }
    check_schema(dir / "dyson_check.json");
}

TEST_CASE("report aggregates prior outputs and is pure") {
    auto dir = fresh_dir("report_in");
    REQUIRE(run_cli("cov-check --field brw --depth 2 --reps 1000 --pairs 3 --seed 2 --out " +
                    dir.string())
                .exit_code == 0);
    REQUIRE(run_cli("extremes --n-side 4 --r 2 --reps 2 --seed 2 --no-save-fields --out " +
                    dir.string())
                .exit_code == 0);
    auto out1 = fresh_dir("report1"), out2 = fresh_dir("report2");
    std::string inputs =
        (dir / "cov_check.json").string() + " " + (dir / "extremes_summary.json").string();
    REQUIRE(run_cli("report " + inputs + " --out " + out1.string()).exit_code == 0);
    REQUIRE(run_cli("report " + inputs + " --out " + out2.string()).exit_code == 0);
    std::string md = slurp(out1 / "report.md");
    CHECK(md.find("cov-check") != std::string::npos);
    CHECK(md.find("extremes") != std::string::npos);
    CHECK(md.find("centered_max") != std::string::npos);
    CHECK(md == slurp(out2 / "report.md"));
}

TEST_CASE("config file feeds defaults and flags win") {
    auto dir = fresh_dir("cfg");
    std::ofstream cfg(dir / "run.toml");
    cfg << "# sample config\nfield = \"membrane\"\nn_side = 4\nreps = 3\nseed = 21\n";
    cfg.close();
    auto out1 = fresh_dir("cfg_out1");
    auto r = run_cli("sample --config " + (dir / "run.toml").string() + " --reps 1 --out " +
                     out1.string());
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists(out1 / "membrane_N4_rep0000.mbr4"));
    CHECK_FALSE(fs::exists(out1 / "membrane_N4_rep0001.mbr4")); // flag beat the file
    json doc = json::parse(slurp(out1 / "sample.json"));
    CHECK(doc["config"]["seed"].get<std::uint64_t>() == 21);
}

TEST_CASE("MBR4_SEED is the fallback master seed") {
    auto d1 = fresh_dir("env1"), d2 = fresh_dir("env2");
    std::string base = "sample --field membrane --n-side 4 --reps 1 --out ";
    std::string out_file = (fs::temp_directory_path() / "mbr4_env_out.txt").string();
    int rc = std::system(("MBR4_SEED=99 " + g_cli + " " + base + d1.string() + " > " + out_file +
                          " 2>&1")
                             .c_str());
    REQUIRE(WEXITSTATUS(rc) == 0);
    REQUIRE(run_cli(base + d2.string() + " --seed 99").exit_code == 0);
    CHECK(slurp(d1 / "membrane_N4_rep0000.mbr4") == slurp(d2 / "membrane_N4_rep0000.mbr4"));
}

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: test_cli <mbr4-binary> <schema>\n");
        return 2;
    }
    g_cli = argv[1];
    g_schema = argv[2];
    doctest::Context context;
    return context.run();
}
