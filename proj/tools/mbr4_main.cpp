// Command-line surface for the membrane extremes laboratory: samplers,
// covariance checks, extremal statistics, and the named experiments, all
// emitting deterministic artifacts for a fixed seed.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mbr4/experiments.hpp"
#include "mbr4/solver.hpp"

namespace {

using mbr4::ExperimentConfig;
using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitSolver = 3;
constexpr int kExitIo = 4;

void fail_line(int code, const std::string& message) {
    json err{{"code", code}, {"message", message}};
    std::cerr << "error: " << err.dump() << "\n";
}

// Minimal flat TOML subset: `key = value` lines, # comments, strings in
// quotes, ints/floats/bools bare, [a, b] integer arrays. Flags win over
// file values because the file is applied before CLI11 parses.
void apply_config_file(const std::string& path, ExperimentConfig& config) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    auto trim = [](std::string s) {
        const char* ws = " \t\r\n";
        auto b = s.find_first_not_of(ws);
        auto e = s.find_last_not_of(ws);
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("bad config line: " + line);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        auto unquote = [&](const std::string& v) {
            if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
                return v.substr(1, v.size() - 2);
            return v;
        };
        auto as_int_list = [&](const std::string& v) {
            std::vector<int> out;
            std::string body = v;
            if (!body.empty() && body.front() == '[') body = body.substr(1, body.size() - 2);
            std::stringstream ss(body);
            std::string item;
            while (std::getline(ss, item, ','))
                if (!trim(item).empty()) out.push_back(std::stoi(trim(item)));
            return out;
        };
        if (key == "field") config.field = unquote(value);
        else if (key == "n_side") config.n_side = std::stoi(value);
        else if (key == "depth") config.depth = std::stoi(value);
        else if (key == "radius" || key == "r") config.radius = std::stoi(value);
        else if (key == "radii") config.radii = as_int_list(value);
        else if (key == "t") config.t = std::stod(value);
        else if (key == "lambda") config.lambda = std::stod(value);
        else if (key == "ells") config.ells = as_int_list(value);
        else if (key == "pairs") config.pairs = std::stoi(value);
        else if (key == "replicates" || key == "reps") config.replicates = std::stoi(value);
        else if (key == "seed") config.seed = std::stoull(value);
        else if (key == "threads") config.threads = std::stoi(value);
        else if (key == "solver") config.solver = unquote(value);
        else if (key == "preconditioner") config.preconditioner = unquote(value);
        else if (key == "geometry_c") config.geometry_c = std::stod(value);
        else if (key == "intensity_offset") config.intensity_offset = std::stod(value);
        else if (key == "bump_amplitude") config.bump_amplitude = std::stod(value);
        else if (key == "bump_center") config.bump_center = std::stod(value);
        else if (key == "bump_halfwidth") config.bump_halfwidth = std::stod(value);
        else if (key == "pair_norm") config.pair_norm = unquote(value);
        else if (key == "save_fields") config.save_fields = (value == "true" || value == "1");
        else if (key == "out") config.out_dir = unquote(value);
        else throw std::runtime_error("unknown config key: " + key);
    }
}

void add_common_flags(CLI::App* cmd, ExperimentConfig& config) {
    static std::string config_sink;
    cmd->add_option("--config", config_sink,
                    "Flat TOML-style config file (applied first; flags win)");
    cmd->add_option("--seed", config.seed, "Master seed (fallback: MBR4_SEED, then 1)");
    cmd->add_option("--threads", config.threads, "Worker threads (0 = available parallelism)");
    cmd->add_option("--solver", config.solver, "Solver tier override: dense|banded|iterative")
        ->check(CLI::IsMember({"", "dense", "banded", "iterative"}));
    cmd->add_option("--preconditioner", config.preconditioner,
                    "Iterative preconditioner: fast|jacobi")
        ->check(CLI::IsMember({"fast", "jacobi"}));
    cmd->add_option("--out", config.out_dir, "Output directory")->required();
}

void write_results(const ExperimentConfig& config, const json& doc, const std::string& name) {
    mbr4::write_text_file(
        (std::filesystem::path(config.out_dir) / name).string(), doc.dump(2) + "\n");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"4D membrane-model extremes laboratory"};
    app.require_subcommand(1);

    ExperimentConfig config;
    if (const char* env_seed = std::getenv("MBR4_SEED")) {
        try {
            config.seed = std::stoull(env_seed);
        } catch (...) {
            fail_line(kExitUsage, "MBR4_SEED is not an integer");
            return kExitUsage;
        }
    }

    // --config is applied before regular parsing so explicit flags win.
    std::string config_path;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
    if (!config_path.empty()) {
        try {
            apply_config_file(config_path, config);
        } catch (const std::exception& e) {
            fail_line(kExitUsage, e.what());
            return kExitUsage;
        }
    }
    auto* sample = app.add_subcommand("sample", "Draw fields and persist them in binary form");
    sample->add_option("--field", config.field, "membrane|brw|mbrw")
        ->check(CLI::IsMember({"membrane", "brw", "mbrw"}));
    sample->add_option("--n-side", config.n_side, "Box side N (membrane)");
    sample->add_option("--depth", config.depth, "Dyadic levels n, N = 2^n (brw/mbrw)");
    sample->add_option("--reps", config.replicates, "Replicates");
    add_common_flags(sample, config);

    auto* cov = app.add_subcommand("cov-check", "Empirical vs. exact covariances");
    cov->add_option("--field", config.field)->check(CLI::IsMember({"membrane", "brw", "mbrw"}));
    cov->add_option("--n-side", config.n_side);
    cov->add_option("--depth", config.depth);
    cov->add_option("--pairs", config.pairs, "Random vertex pairs to check");
    cov->add_option("--reps", config.replicates);
    add_common_flags(cov, config);

    auto* ext = app.add_subcommand("extremes", "Extract the point process and summary statistics");
    ext->add_option("--field", config.field)->check(CLI::IsMember({"membrane", "brw", "mbrw"}));
    ext->add_option("--n-side", config.n_side);
    ext->add_option("--depth", config.depth);
    ext->add_option("--r", config.radius, "Local-maximum radius");
    ext->add_option("--lambda", config.lambda, "Level-set depth");
    ext->add_option("--ells", config.ells, "Top-sum sizes");
    ext->add_option("--reps", config.replicates);
    ext->add_option("--pair-norm", config.pair_norm)->check(CLI::IsMember({"linf", "l2"}));
    ext->add_flag("--save-fields,!--no-save-fields", config.save_fields,
                  "Persist each replicate's field");
    add_common_flags(ext, config);

    auto* dyson = app.add_subcommand("dyson-check", "Laplace functionals of f and f_t");
    dyson->add_option("--n-side", config.n_side);
    dyson->add_option("--r", config.radius);
    dyson->add_option("--t", config.t, "Diffusion time");
    dyson->add_option("--reps", config.replicates, "Replicates per side");
    dyson->add_option("--bump-amplitude", config.bump_amplitude);
    dyson->add_option("--bump-center", config.bump_center);
    dyson->add_option("--bump-halfwidth", config.bump_halfwidth);
    add_common_flags(dyson, config);

    auto* geo = app.add_subcommand("geometry", "Near-maxima pair probabilities per radius");
    geo->add_option("--n-side", config.n_side);
    geo->add_option("--radii", config.radii, "Radius sweep (default: --r)")->delimiter(',');
    geo->add_option("--r", config.radius);
    geo->add_option("--c", config.geometry_c, "Depth constant in m_N - c ln ln r");
    geo->add_option("--reps", config.replicates);
    geo->add_option("--pair-norm", config.pair_norm)->check(CLI::IsMember({"linf", "l2"}));
    geo->add_flag("--tightness", config.tightness, "Also track log(1+|A_{N,2}|)");
    add_common_flags(geo, config);

    auto* inten = app.add_subcommand("intensity", "Exponential tail fit of pooled local maxima");
    inten->add_option("--n-side", config.n_side);
    inten->add_option("--r", config.radius);
    inten->add_option("--offset", config.intensity_offset, "Threshold below the centering");
    inten->add_option("--reps", config.replicates);
    add_common_flags(inten, config);

    auto* report = app.add_subcommand("report", "Aggregate results JSONs into Markdown");
    std::vector<std::string> inputs;
    report->add_option("inputs", inputs, "Results JSON files")->required();
    report->add_option("--out", config.out_dir, "Output directory")->required();

    auto* dump = app.add_subcommand("dump-precision",
                                    "Coordinate-format text dump of the precision operator");
    dump->add_option("--n-side", config.n_side);
    dump->add_option("--out", config.out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::stringstream usage;
        usage << app.help();
        app.exit(e);
        return kExitUsage;
    }

    try {
        json doc;
        if (sample->parsed()) {
            config.experiment = "sample";
            doc = mbr4::run_sample(config);
            write_results(config, doc, "sample.json");
        } else if (cov->parsed()) {
            config.experiment = "cov-check";
            doc = mbr4::run_cov_check(config);
        } else if (ext->parsed()) {
            config.experiment = "extremes";
            doc = mbr4::run_extremes(config);
        } else if (dyson->parsed()) {
            config.experiment = "dyson-check";
            doc = mbr4::run_dyson_check(config);
        } else if (geo->parsed()) {
            config.experiment = "geometry";
            doc = mbr4::run_geometry(config);
        } else if (inten->parsed()) {
            config.experiment = "intensity";
            doc = mbr4::run_intensity(config);
        } else if (report->parsed()) {
            std::vector<json> docs;
            for (const std::string& path : inputs)
                docs.push_back(json::parse(mbr4::read_text_file(path)));
            std::filesystem::create_directories(config.out_dir);
            mbr4::write_text_file(
                (std::filesystem::path(config.out_dir) / "report.md").string(),
                mbr4::build_report(docs));
            std::cout << "report.md written to " << config.out_dir << "\n";
            return 0;
        } else if (dump->parsed()) {
            mbr4::PrecisionOperator op{mbr4::Lattice4(config.n_side)};
            std::filesystem::create_directories(config.out_dir);
            std::string name = "precision_N" + std::to_string(config.n_side) + ".txt";
            mbr4::write_text_file((std::filesystem::path(config.out_dir) / name).string(),
                                  op.dump_coordinate_text());
            std::cout << name << " written to " << config.out_dir << "\n";
            return 0;
        }
        std::cout << doc["experiment"].get<std::string>() << " done in "
                  << doc["wall_time_s"].get<double>() << " s, " << doc["estimates"].size()
                  << " estimates -> " << config.out_dir << "\n";
        return 0;
    } catch (const mbr4::SolverError& e) {
        fail_line(kExitSolver, e.what());
        return kExitSolver;
    } catch (const std::invalid_argument& e) {
        fail_line(kExitUsage, e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        fail_line(kExitIo, e.what());
        return kExitIo;
    }
}
