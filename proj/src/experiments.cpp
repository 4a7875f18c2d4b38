#include "mbr4/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>

#include "mbr4/conditional.hpp"
#include "mbr4/harness.hpp"
#include "mbr4/hierarchical.hpp"
#include "mbr4/sampler.hpp"

namespace mbr4 {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kPurposeStreamBase = 0x8000000000000000ull;

double elapsed(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

json estimate_json(const EstimatorResult& r) {
    return json{{"name", r.name},
                {"value", r.estimate},
                {"std_error", r.std_error},
                {"replicates", r.replicates}};
}

json estimate_json(const std::string& name, double value, double se, int reps) {
    return json{{"name", name}, {"value", value}, {"std_error", se}, {"replicates", reps}};
}

std::string artifact_path(const ExperimentConfig& config, const std::string& name) {
    std::filesystem::create_directories(config.out_dir);
    return (std::filesystem::path(config.out_dir) / name).string();
}

std::string vertex_name(const Vec4i& v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "(%d,%d,%d,%d)", v[0], v[1], v[2], v[3]);
    return buf;
}

int effective_side(const ExperimentConfig& config) {
    if (config.field == "membrane") return config.n_side;
    if (config.depth < 1)
        throw std::invalid_argument("hierarchical field needs --depth >= 1");
    return 1 << config.depth;
}

} // namespace

Norm parse_norm(const std::string& name) {
    if (name == "linf") return Norm::LInf;
    if (name == "l2") return Norm::L2;
    throw std::invalid_argument("unknown pair norm: " + name);
}

json config_json(const ExperimentConfig& config) {
    json c{{"experiment", config.experiment},
           {"field", config.field},
           {"n_side", config.n_side},
           {"depth", config.depth},
           {"radius", config.radius},
           {"radii", config.radii},
           {"t", config.t},
           {"lambda", config.lambda},
           {"ells", config.ells},
           {"pairs", config.pairs},
           {"replicates", config.replicates},
           {"seed", config.seed},
           // The worker count is an execution detail: results are
           // bit-identical for any value, so it is not part of the
           // experiment's identity.
           {"solver", config.solver.empty() ? std::string("auto") : config.solver},
           {"preconditioner", config.preconditioner},
           {"geometry_c", config.geometry_c},
           {"intensity_offset", config.intensity_offset},
           {"bump_amplitude", config.bump_amplitude},
           {"bump_center", config.bump_center},
           {"bump_halfwidth", config.bump_halfwidth},
           {"pair_norm", config.pair_norm},
           {"save_fields", config.save_fields}};
    c["constants"] = json{{"gamma", kGamma},
                          {"intensity_rate_target", std::numbers::pi},
                          {"field_scale", kFieldScale},
                          {"covariance_scale", kCovarianceScale}};
    return c;
}

json results_skeleton(const ExperimentConfig& config) {
    return json{{"experiment", config.experiment}, {"config", config_json(config)},
                {"estimates", json::array()},     {"seed", config.seed},
                {"wall_time_s", 0.0},             {"git_describe", MBR4_GIT_DESCRIBE}};
}

std::shared_ptr<const SolverHandle> membrane_handle(const ExperimentConfig& config) {
    struct Key {
        int side;
        std::string solver, precond;
        auto operator<=>(const Key&) const = default;
    };
    static std::map<Key, std::shared_ptr<const SolverHandle>> cache;
    static std::mutex mutex;

    Key key{config.n_side, config.solver, config.preconditioner};
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    auto op = std::make_shared<PrecisionOperator>(Lattice4(config.n_side));
    SolverHandle::Options options;
    options.mode = config.solver.empty() ? default_solver_mode(config.n_side)
                                         : parse_solver_mode(config.solver);
    options.preconditioner =
        config.preconditioner == "jacobi" ? Preconditioner::Jacobi : Preconditioner::FastPoisson;
    auto handle = SolverHandle::create(std::move(op), options);
    cache.emplace(key, handle);
    return handle;
}

TestFunction config_bump(const ExperimentConfig& config) {
    return standard_bump(config.bump_amplitude, config.bump_center, config.bump_halfwidth);
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << contents;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

Field sample_field(const ExperimentConfig& config,
                   const std::shared_ptr<const SolverHandle>& handle, std::uint64_t rep,
                   std::uint32_t substream) {
    if (config.field == "membrane")
        return sample_membrane(*handle, config.seed, replicate_stream(rep, substream));
    DyadicDepth depth(config.depth);
    if (config.field == "brw") return sample_brw(depth, config.seed, replicate_stream(rep, substream));
    if (config.field == "mbrw")
        return sample_mbrw(depth, config.seed, replicate_stream(rep, substream));
    throw std::invalid_argument("unknown field kind: " + config.field);
}

} // namespace

json run_sample(const ExperimentConfig& config) {
    auto start = Clock::now();
    json doc = results_skeleton(config);
    std::shared_ptr<const SolverHandle> handle;
    if (config.field == "membrane") handle = membrane_handle(config);

    json files = json::array();
    for (int rep = 0; rep < config.replicates; ++rep) {
        Field field = sample_field(config, handle, static_cast<std::uint64_t>(rep), 0);
        char name[96];
        std::snprintf(name, sizeof name, "%s_N%d_rep%04d.mbr4", config.field.c_str(),
                      field.lattice.n_side(), rep);
        if (!config.out_dir.empty()) write_field(field, artifact_path(config, name));
        files.push_back(name);
    }
    doc["details"] = json{{"files", files}};
    doc["wall_time_s"] = elapsed(start);
    return doc;
}

json run_cov_check(const ExperimentConfig& config) {
    auto start = Clock::now();
    json doc = results_skeleton(config);
    const int side = effective_side(config);
    Lattice4 lat(side);

    // Deterministic pair selection on its own stream.
    RngStream pair_stream(config.seed, kPurposeStreamBase | 1);
    std::vector<std::pair<Vec4i, Vec4i>> pairs;
    auto random_vertex = [&]() {
        Vec4i v;
        for (int i = 0; i < 4; ++i)
            v[i] = static_cast<int>(pair_stream.next_u64() % static_cast<std::uint64_t>(side + 1));
        return v;
    };
    while (pairs.size() < static_cast<std::size_t>(config.pairs)) {
        Vec4i u = random_vertex(), v = random_vertex();
        if (u == v) continue;
        pairs.emplace_back(u, v);
    }

    // Distinct vertices involved, each replicate records their values.
    std::vector<Vec4i> vertices;
    std::map<std::size_t, std::size_t> slot; // lattice index -> position
    auto slot_of = [&](const Vec4i& v) {
        std::size_t idx = lat.index(v);
        auto it = slot.find(idx);
        if (it != slot.end()) return it->second;
        std::size_t pos = vertices.size();
        vertices.push_back(v);
        slot.emplace(idx, pos);
        return pos;
    };
    std::vector<std::pair<std::size_t, std::size_t>> pair_slots;
    pair_slots.reserve(pairs.size());
    for (const auto& [u, v] : pairs) pair_slots.emplace_back(slot_of(u), slot_of(v));

    std::shared_ptr<const SolverHandle> handle;
    if (config.field == "membrane") handle = membrane_handle(config);

    auto statistic = [&](std::uint64_t rep) {
        std::vector<double> values(vertices.size());
        if (config.field == "membrane") {
            Field f = sample_field(config, handle, rep, 0);
            for (std::size_t i = 0; i < vertices.size(); ++i) values[i] = f.at(vertices[i]);
        } else if (config.field == "mbrw") {
            MbrwSample s(DyadicDepth(config.depth), config.seed, replicate_stream(rep, 0));
            for (std::size_t i = 0; i < vertices.size(); ++i) values[i] = s.value(vertices[i]);
        } else {
            BrwSample s(DyadicDepth(config.depth), config.seed, replicate_stream(rep, 0));
            for (std::size_t i = 0; i < vertices.size(); ++i) values[i] = s.value(vertices[i]);
        }
        return values;
    };
    auto per_rep = run_replicates(config.replicates, config.threads, statistic);
    auto estimates = empirical_cov(per_rep, pair_slots);

    // Closed-form or solver oracle per pair.
    std::vector<double> oracle(pairs.size());
    if (config.field == "membrane") {
        std::map<std::size_t, std::vector<double>> columns;
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            std::size_t ui = lat.index(pairs[p].first);
            auto it = columns.find(ui);
            if (it == columns.end())
                it = columns.emplace(ui, handle->green_column(pairs[p].first)).first;
            oracle[p] = it->second[lat.index(pairs[p].second)];
        }
    } else if (config.field == "mbrw") {
        for (std::size_t p = 0; p < pairs.size(); ++p)
            oracle[p] = mbrw_covariance(pairs[p].first, pairs[p].second, DyadicDepth(config.depth));
    } else {
        for (std::size_t p = 0; p < pairs.size(); ++p)
            oracle[p] = brw_covariance(pairs[p].first, pairs[p].second, DyadicDepth(config.depth));
    }

    json checks = json::array();
    int failures = 0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        double gap = std::abs(estimates[p].estimate - oracle[p]);
        bool ok = gap <= 4.0 * estimates[p].std_error;
        if (!ok) ++failures;
        std::string name = "cov" + vertex_name(pairs[p].first) + vertex_name(pairs[p].second);
        doc["estimates"].push_back(
            estimate_json(name, estimates[p].estimate, estimates[p].std_error,
                          config.replicates));
        checks.push_back(json{{"name", name},
                              {"oracle", oracle[p]},
                              {"abs_gap", gap},
                              {"within_4se", ok}});
    }
    doc["details"] = json{{"checks", checks}, {"failures", failures}};
    doc["wall_time_s"] = elapsed(start);
    if (!config.out_dir.empty())
        write_text_file(artifact_path(config, "cov_check.json"), doc.dump(2) + "\n");
    return doc;
}

json run_extremes(const ExperimentConfig& config) {
    auto start = Clock::now();
    json doc = results_skeleton(config);
    const int side = effective_side(config);
    std::shared_ptr<const SolverHandle> handle;
    if (config.field == "membrane") handle = membrane_handle(config);

    const double m_n = centering(side);
    const Norm norm = parse_norm(config.pair_norm);
    const bool window_ok =
        static_cast<double>(config.radius) <= static_cast<double>(side) / config.radius;

    // Per replicate: centered max, |A_{N,lambda}|, pair max (when the
    // window is non-vacuous), S_ell/ell per ell, Z_N, atom count.
    const std::size_t n_ells = config.ells.size();
    auto statistic = [&](std::uint64_t rep) {
        Field f = sample_field(config, handle, rep, 0);
        PointProcessSample pp = extract_extremal_process(f, config.radius);
        std::vector<double> out;
        out.reserve(4 + n_ells);
        out.push_back(f.max_value() - m_n);
        out.push_back(static_cast<double>(level_set(f, config.lambda).size()));
        out.push_back(window_ok ? pair_max(f, config.radius, norm).value : 0.0);
        for (int ell : config.ells) out.push_back(top_sum(f, ell));
        out.push_back(derivative_martingale(f));
        out.push_back(static_cast<double>(pp.atoms.size()));
        if (!config.out_dir.empty()) {
            char name[64];
            std::snprintf(name, sizeof name, "atoms_rep%04d.csv", static_cast<int>(rep));
            write_text_file(artifact_path(config, name), point_process_csv(pp));
            if (config.save_fields) {
                std::snprintf(name, sizeof name, "field_rep%04d.mbr4", static_cast<int>(rep));
                write_field(f, artifact_path(config, name));
            }
        }
        return out;
    };
    auto per_rep = run_replicates(config.replicates, config.threads, statistic);

    doc["estimates"].push_back(
        estimate_json(summarize_mean("centered_max", per_rep, 0, config.seed)));
    doc["estimates"].push_back(
        estimate_json(summarize_mean("level_set_size", per_rep, 1, config.seed)));
    if (window_ok) {
        doc["estimates"].push_back(
            estimate_json(summarize_mean("pair_max", per_rep, 2, config.seed)));
    } else {
        doc["estimates"].push_back(
            json{{"name", "pair_max"}, {"value", nullptr}, {"std_error", nullptr},
                 {"replicates", config.replicates}});
    }
    for (std::size_t e = 0; e < n_ells; ++e) {
        std::string nm = "top_sum_" + std::to_string(config.ells[e]);
        doc["estimates"].push_back(estimate_json(summarize_mean(nm, per_rep, 3 + e, config.seed)));
    }
    doc["estimates"].push_back(estimate_json(
        summarize_mean("derivative_martingale", per_rep, 3 + n_ells, config.seed)));
    doc["estimates"].push_back(
        estimate_json(summarize_mean("atom_count", per_rep, 4 + n_ells, config.seed)));
    doc["details"] = json{{"centering", m_n}, {"pair_window_vacuous", !window_ok}};
    doc["wall_time_s"] = elapsed(start);
    if (!config.out_dir.empty())
        write_text_file(artifact_path(config, "extremes_summary.json"), doc.dump(2) + "\n");
    return doc;
}

json run_dyson_check(const ExperimentConfig& config) {
    auto start = Clock::now();
    json doc = results_skeleton(config);
    auto handle = membrane_handle(config);
    const double g_ln_n = kGamma * std::log(static_cast<double>(config.n_side));
    if (config.t >= g_ln_n)
        throw std::invalid_argument("dyson-check: t must be below g ln N = " +
                                    std::to_string(g_ln_n));

    TestFunction f = config_bump(config);
    TestFunction ft = dyson_transform(f, config.t);

    auto lhs_stat = [&](std::uint64_t rep) {
        Field h = sample_membrane(*handle, config.seed, replicate_stream(rep, 0));
        PointProcessSample pp = extract_extremal_process(h, config.radius);
        return std::vector<double>{laplace_functional(pp, f).exp_neg};
    };
    auto rhs_stat = [&](std::uint64_t rep) {
        Field h = sample_membrane(*handle, config.seed, replicate_stream(rep, 1));
        PointProcessSample pp = extract_extremal_process(h, config.radius);
        return std::vector<double>{laplace_functional(pp, ft).exp_neg};
    };
    auto lhs_vals = run_replicates(config.replicates, config.threads, lhs_stat);
    auto rhs_vals = run_replicates(config.replicates, config.threads, rhs_stat);
    EstimatorResult lhs = summarize_mean("laplace_f", lhs_vals, 0, config.seed);
    EstimatorResult rhs = summarize_mean("laplace_f_t", rhs_vals, 0, config.seed);
    double gap = std::abs(lhs.estimate - rhs.estimate);
    double combined = std::hypot(lhs.std_error, rhs.std_error);

    doc["estimates"].push_back(estimate_json(lhs));
    doc["estimates"].push_back(estimate_json(rhs));
    doc["estimates"].push_back(estimate_json("gap", gap, combined, config.replicates));
    doc["details"] = json{{"t", config.t}, {"g_ln_n", g_ln_n}};
    doc["wall_time_s"] = elapsed(start);
    if (!config.out_dir.empty())
        write_text_file(artifact_path(config, "dyson_check.json"), doc.dump(2) + "\n");
    return doc;
}

json run_geometry(const ExperimentConfig& config) {
    auto start = Clock::now();
    json doc = results_skeleton(config);
    auto handle = membrane_handle(config);
    std::vector<int> radii = config.radii.empty() ? std::vector<int>{config.radius} : config.radii;
    for (int r : radii)
        if (r < 3) throw std::invalid_argument("geometry: need r >= 3 (ln ln r > 0)");
    const Norm norm = parse_norm(config.pair_norm);

    auto statistic = [&](std::uint64_t rep) {
        Field h = sample_membrane(*handle, config.seed, replicate_stream(rep, 0));
        std::vector<double> out;
        out.reserve(radii.size() + (config.tightness ? 1 : 0));
        for (int r : radii)
            out.push_back(has_near_maxima_pair(h, r, config.geometry_c, norm) ? 1.0 : 0.0);
        if (config.tightness)
            out.push_back(std::log1p(static_cast<double>(level_set(h, 2.0).size())));
        return out;
    };
    auto per_rep = run_replicates(config.replicates, config.threads, statistic);

    std::string csv = "r,probability,std_error,replicates\n";
    for (std::size_t i = 0; i < radii.size(); ++i) {
        EstimatorResult est = summarize_mean("violating_pair_probability_r" +
                                                 std::to_string(radii[i]),
                                             per_rep, i, config.seed);
        doc["estimates"].push_back(estimate_json(est));
        char line[128];
        std::snprintf(line, sizeof line, "%d,%.12g,%.12g,%d\n", radii[i], est.estimate,
                      est.std_error, est.replicates);
        csv += line;
    }
    if (config.tightness)
        doc["estimates"].push_back(estimate_json(
            summarize_mean("log1p_level_set_size_lambda2", per_rep, radii.size(), config.seed)));
    doc["details"] = json{{"c", config.geometry_c}, {"radii", radii}};
    doc["wall_time_s"] = elapsed(start);
    if (!config.out_dir.empty()) {
        write_text_file(artifact_path(config, "geometry.csv"), csv);
        write_text_file(artifact_path(config, "geometry.json"), doc.dump(2) + "\n");
    }
    return doc;
}

json run_intensity(const ExperimentConfig& config) {
    auto start = Clock::now();
    json doc = results_skeleton(config);
    auto handle = membrane_handle(config);

    // Pool centered local-maxima heights; the threshold sits at
    // m_N - intensity_offset, i.e. -offset after centering.
    auto statistic = [&](std::uint64_t rep) {
        Field h = sample_membrane(*handle, config.seed, replicate_stream(rep, 0));
        PointProcessSample pp = extract_extremal_process(h, config.radius);
        std::vector<double> heights;
        heights.reserve(pp.atoms.size());
        for (const auto& atom : pp.atoms) heights.push_back(atom.height);
        return heights;
    };
    auto per_rep = run_replicates(config.replicates, config.threads, statistic);
    std::vector<double> pooled;
    for (const auto& v : per_rep) pooled.insert(pooled.end(), v.begin(), v.end());

    TailFit fit = fit_exponential_tail(pooled, -config.intensity_offset);
    doc["estimates"].push_back(
        estimate_json("exponential_rate", fit.rate, fit.std_error, config.replicates));
    doc["details"] = json{{"threshold_centered", fit.threshold},
                          {"exceedances", fit.exceedances},
                          {"pooled_heights", pooled.size()}};
    doc["wall_time_s"] = elapsed(start);
    if (!config.out_dir.empty())
        write_text_file(artifact_path(config, "intensity.json"), doc.dump(2) + "\n");
    return doc;
}

std::string build_report(const std::vector<json>& results) {
    std::ostringstream md;
    md << "# Experiment report\n\n";
    for (const json& doc : results) {
        md << "## " << doc.value("experiment", std::string("?")) << "\n\n";
        if (doc.contains("config")) {
            const json& c = doc["config"];
            md << "- field: " << c.value("field", std::string("?"))
               << ", N: " << (c.value("field", std::string()) == "membrane"
                                  ? c.value("n_side", 0)
                                  : (1 << c.value("depth", 0)))
               << ", replicates: " << c.value("replicates", 0)
               << ", seed: " << c.value("seed", std::uint64_t{0}) << "\n";
        }
        md << "- git: " << doc.value("git_describe", std::string("?"))
           << ", wall time: " << doc.value("wall_time_s", 0.0) << " s\n\n";
        md << "| estimate | value | std error | replicates |\n";
        md << "|---|---|---|---|\n";
        if (doc.contains("estimates"))
            for (const json& e : doc["estimates"]) {
                md << "| " << e.value("name", std::string("?")) << " | ";
                if (e.contains("value") && !e["value"].is_null())
                    md << e["value"].get<double>();
                else
                    md << "-";
                md << " | ";
                if (e.contains("std_error") && !e["std_error"].is_null())
                    md << e["std_error"].get<double>();
                else
                    md << "-";
                md << " | " << e.value("replicates", 0) << " |\n";
            }
        md << "\n";
    }
    return md.str();
}

} // namespace mbr4
