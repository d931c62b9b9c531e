#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "obsdesign/io.hpp"
#include "obsdesign/optimizer.hpp"
#include "obsdesign/svg_report.hpp"
#include "obsdesign/synthetic.hpp"

namespace obsdesign {

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> gamma;
    int threads = 1;
};

namespace detail {

inline void apply_overrides(DesignConfig& cfg, const CliOverrides& ov) {
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.gamma) cfg.gamma = *ov.gamma;
}

inline std::string safe_name(const std::string& id) {
    std::string out;
    for (char c : id)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

inline void warn_all(const Dataset& data) {
    for (const auto& w : data.warnings) std::cerr << "warning: " << w << "\n";
}

} // namespace detail

/// bounds: per-stratum confidence regions plus the rectangle dump.
inline int run_bounds(const std::filesystem::path& data_path,
                      const std::optional<std::filesystem::path>& strata_path,
                      const std::filesystem::path& config_path,
                      const std::filesystem::path& out_dir, const CliOverrides& ov) {
    const Dataset data = load_dataset(data_path, strata_path);
    detail::warn_all(data);
    DesignConfig cfg = load_config(config_path);
    detail::apply_overrides(cfg, ov);
    validate_config(cfg, data.strata.size());

    const std::size_t k = data.strata.size();
    std::vector<std::pair<std::string, std::vector<ReplicateRectangle>>> all_rects(k);
    std::vector<NamedRegion> regions(k);
    parallel_for(k, ov.threads, [&](std::size_t i) {
        const auto& sample = data.strata[i];
        auto rects = bootstrap_rectangles(sample, cfg.gamma, cfg.bootstrap_reps, cfg.seed);
        regions[i] = {sample.stratum_id, region_from_rectangles(rects, cfg),
                      sigma_point_estimate(sample)};
        all_rects[i] = {sample.stratum_id, std::move(rects)};
    });

    std::filesystem::create_directories(out_dir);
    write_regions_json(out_dir / "regions.json", regions);
    write_rectangles_csv(out_dir / "rectangles.csv", all_rects);
    std::vector<std::filesystem::path> inputs{data_path, config_path};
    if (strata_path) inputs.push_back(*strata_path);
    write_manifest(out_dir, "bounds", cfg.seed, config_to_json(cfg), inputs,
                   {"regions.json", "rectangles.csv"});
    return 0;
}

/// design: regret-minimizing allocation plus reference plans.
inline int run_design(const std::filesystem::path& data_path,
                      const std::optional<std::filesystem::path>& strata_path,
                      const std::filesystem::path& config_path,
                      const std::filesystem::path& out_dir, const CliOverrides& ov) {
    const Dataset data = load_dataset(data_path, strata_path);
    detail::warn_all(data);
    DesignConfig cfg = load_config(config_path);
    detail::apply_overrides(cfg, ov);
    validate_config(cfg, data.strata.size());

    const std::vector<double> weights = data.weights();
    std::vector<std::string> ids;
    for (const auto& s : data.strata) ids.push_back(s.stratum_id);

    const auto regions = build_all_regions(data, cfg, ov.threads);
    const AllocationPlan default_plan = default_allocation(cfg, data);
    const SolveReport rep = maximize_worst_case(regions, weights, cfg, default_plan);

    std::vector<SigmaSd> sds(data.strata.size());
    for (std::size_t i = 0; i < data.strata.size(); ++i) {
        const Vec2 p = sigma_point_estimate(data.strata[i]);
        sds[i] = {std::sqrt(p.x), std::sqrt(p.y)};
    }
    const AllocationPlan naive_plan = naive_allocation(sds, weights, cfg.n_r);

    std::filesystem::create_directories(out_dir);
    write_alloc_csv(out_dir / "design_allocation.csv", ids, rep.plan.integer);
    write_alloc_csv(out_dir / "design_continuous.csv", ids, rep.plan.continuous);
    write_alloc_csv(out_dir / "naive_allocation.csv", ids, naive_plan.integer);
    write_alloc_csv(out_dir / "default_allocation.csv", ids, default_plan.integer);
    write_file_bytes(out_dir / "solve_report.json", solve_report_to_json(rep, ids).dump(2) + "\n");
    std::vector<std::filesystem::path> inputs{data_path, config_path};
    if (strata_path) inputs.push_back(*strata_path);
    write_manifest(out_dir, "design", cfg.seed, config_to_json(cfg), inputs,
                   {"design_allocation.csv", "design_continuous.csv", "naive_allocation.csv",
                    "default_allocation.csv", "solve_report.json"});

    if (!rep.converged) {
        std::cerr << "error: solver did not converge within max_iters (report written)\n";
        return 3;
    }
    return 0;
}

/// simulate: benchmark of Equal/Weighted/Naive/RegretMin designs.
inline int run_simulate(const std::filesystem::path& spec_path,
                        const std::filesystem::path& config_path,
                        const std::filesystem::path& out_dir, const CliOverrides& ov) {
    SyntheticSpec spec = load_synthetic_spec(spec_path);
    DesignConfig cfg = load_config(config_path);
    detail::apply_overrides(cfg, ov);
    if (ov.seed) spec.seed = *ov.seed;
    if (ov.gamma) spec.gammas = {*ov.gamma};

    const BenchmarkReport report = benchmark(spec, cfg, ov.threads);

    std::filesystem::create_directories(out_dir);
    write_benchmark_csv(out_dir / "benchmark.csv", report);
    write_manifest(out_dir, "simulate", spec.seed, config_to_json(cfg),
                   {spec_path, config_path}, {"benchmark.csv"});
    return 0;
}

/// report: SVG plots from previously written artifacts.
inline int run_report(const std::filesystem::path& regions_path,
                      const std::filesystem::path& rects_path,
                      const std::optional<std::filesystem::path>& benchmark_path,
                      const std::filesystem::path& out_dir) {
    const auto regions = load_regions_json(regions_path);
    const auto rects = read_rectangles_csv(rects_path);

    std::filesystem::create_directories(out_dir);
    std::vector<std::string> files;
    for (const auto& nr : regions) {
        const std::vector<ReplicateRectangle>* mine = nullptr;
        for (const auto& [id, list] : rects)
            if (id == nr.stratum) mine = &list;
        if (mine == nullptr || mine->empty())
            std::cerr << "warning: no rectangles for stratum '" << nr.stratum
                      << "'; plotting region only\n";
        static const std::vector<ReplicateRectangle> none;
        const std::string fname = "region_" + detail::safe_name(nr.stratum) + ".svg";
        write_file_bytes(out_dir / fname, region_svg(nr, mine ? *mine : none));
        files.push_back(fname);
    }
    if (benchmark_path) {
        const BenchmarkReport rep = read_benchmark_csv(*benchmark_path);
        write_file_bytes(out_dir / "loss_bars.svg", loss_bars_svg(rep));
        files.push_back("loss_bars.svg");
    }
    write_file_bytes(out_dir / "index.html", report_index_html(files));
    files.push_back("index.html");

    std::vector<std::filesystem::path> inputs{regions_path, rects_path};
    if (benchmark_path) inputs.push_back(*benchmark_path);
    write_manifest(out_dir, "report", 0, ordered_json(nullptr), inputs, files);
    return 0;
}

} // namespace obsdesign
