#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "mbr4/extremes.hpp"
#include "mbr4/solver.hpp"

namespace mbr4 {

/// Knobs shared by every experiment; each driver reads the subset it needs.
struct ExperimentConfig {
    std::string experiment;
    std::string field = "membrane"; // membrane | brw | mbrw
    int n_side = 8;                 // membrane box side
    int depth = 0;                  // dyadic levels for brw/mbrw (N = 2^depth)
    int radius = 2;                 // extraction / pair window radius
    std::vector<int> radii;         // geometry sweep
    double t = 0.5;                 // diffusion time
    double lambda = 2.0;            // level-set depth
    std::vector<int> ells{1, 2, 4, 8};
    int pairs = 20;
    int replicates = 2;
    std::uint64_t seed = 1;
    int threads = 0; // 0 = available parallelism
    std::string solver;             // "" = tier by size; dense|banded|iterative
    std::string preconditioner = "fast"; // fast | jacobi
    double geometry_c = 0.25;
    double intensity_offset = 1.5;  // exceedance threshold m_N - offset
    double bump_amplitude = 1.0;
    double bump_center = 1.5;
    double bump_halfwidth = 1.5;
    std::string pair_norm = "linf"; // linf | l2
    std::string out_dir;            // "" = no artifacts on disk
    bool save_fields = true;        // extremes persists its fields
    bool tightness = false;         // geometry also tracks log(1+|A_{N,2}|)
};

/// Config echo with the constants every output must carry.
nlohmann::json config_json(const ExperimentConfig& config);

/// Assembles the results document skeleton shared by every experiment.
nlohmann::json results_skeleton(const ExperimentConfig& config);

Norm parse_norm(const std::string& name);

/// Solver handle per the config's lattice side and overrides; assembled
/// once and cached by (side, mode, preconditioner) within the process.
std::shared_ptr<const SolverHandle> membrane_handle(const ExperimentConfig& config);

TestFunction config_bump(const ExperimentConfig& config);

/// Drivers. Artifacts are written under config.out_dir when set; the
/// returned document is the results JSON.
nlohmann::json run_sample(const ExperimentConfig& config);
nlohmann::json run_cov_check(const ExperimentConfig& config);
nlohmann::json run_extremes(const ExperimentConfig& config);
nlohmann::json run_dyson_check(const ExperimentConfig& config);
nlohmann::json run_geometry(const ExperimentConfig& config);
nlohmann::json run_intensity(const ExperimentConfig& config);

/// Markdown summary over previously emitted results documents; a pure
/// function of its inputs.
std::string build_report(const std::vector<nlohmann::json>& results);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

} // namespace mbr4
