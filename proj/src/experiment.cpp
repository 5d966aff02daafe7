#include "tenseg/experiment.hpp"

#include "tenseg/errors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace tenseg {

const std::vector<std::string>& benchmark_ids() {
    static const std::vector<std::string> ids{"dbar", "prism", "lander"};
    return ids;
}

Structure benchmark_structure(const std::string& id) {
    if (id == "dbar") return generate_dbar();
    if (id == "prism") return generate_prism();
    if (id == "lander") return generate_lander();
    throw InvalidParameter("unknown structure id '" + id + "' (expected dbar, prism or lander)");
}

void ReproduceConfig::validate() const {
    benchmark_structure(experiment);
    if (sizes.empty()) throw InvalidParameter("reproduce: sizes must not be empty");
    for (int n : sizes) {
        if (n < 1) throw InvalidParameter("reproduce: sizes must be positive");
    }
    if (trials < 1) throw InvalidParameter("reproduce: trials must be at least 1");
    for (int h : hidden) {
        if (h < 1) throw InvalidParameter("reproduce: hidden widths must be positive");
    }
    if (threads < 1) throw InvalidParameter("reproduce: threads must be at least 1");
    train.validate();
    solver.validate();
}

// Stream 1 feeds sampling; streams 1000 + n feed the trials at size n.
std::uint64_t dataset_seed(std::uint64_t master) { return derive_seed(master, 1); }

std::uint64_t trials_seed(std::uint64_t master, int size) {
    return derive_seed(master, 1000 + static_cast<std::uint64_t>(size));
}

nlohmann::json reproduce_config_to_json(const ReproduceConfig& cfg) {
    const auto& t = cfg.train;
    const auto& s = cfg.solver;
    return {{"experiment", cfg.experiment},
            {"master_seed", cfg.master_seed},
            {"dataset_seed", dataset_seed(cfg.master_seed)},
            {"sizes", cfg.sizes},
            {"trials", cfg.trials},
            {"hidden", cfg.hidden},
            {"train",
             {{"learning_rate", t.learning_rate}, {"epochs", t.epochs}, {"batch_size", t.batch_size},
              {"beta1", t.beta1}, {"beta2", t.beta2}, {"epsilon", t.epsilon}}},
            {"solver",
             {{"tolerance", s.tolerance}, {"shift", s.shift}, {"max_iterations", s.max_iterations},
              {"line_search_tol", s.line_search_tol}, {"line_search_max_iter", s.line_search_max_iter}}},
            {"train_fraction", 0.8}};
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error("failed writing " + path.string());
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

ReproduceResult reproduce(const ReproduceConfig& cfg, std::ostream* progress) {
    cfg.validate();
    const Structure structure = benchmark_structure(cfg.experiment);
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    nlohmann::json config = reproduce_config_to_json(cfg);
    write_text(dir / "config.json", config.dump(2) + "\n");

    int largest = 0;
    for (int n : cfg.sizes) largest = std::max(largest, n);
    if (progress) *progress << "[" << cfg.experiment << "] generating " << largest << " samples\n";
    GenerationStats gen_stats;
    Dataset full;
    try {
        full = generate(structure, benchmark_sampling(cfg.experiment, largest, dataset_seed(cfg.master_seed)),
                        cfg.solver, cfg.threads, &gen_stats);
    } catch (const Error& e) {
        throw Error("reproduce " + cfg.experiment + ": dataset generation failed: " + e.what());
    }
    full.provenance["experiment"] = config;
    ReproduceResult result;
    result.dataset_path = (dir / "dataset.csv").string();
    save_dataset(full, result.dataset_path);
    if (progress) *progress << "[" << cfg.experiment << "] dataset done in " << gen_stats.seconds << " s\n";

    std::string mse_csv = "size,mse_coords,mse_forces,mse_freqs,mse_total\n";
    std::string runtime_csv = "size,train_s,test_s\n";
    for (int n : cfg.sizes) {
        TrainConfig tc = cfg.train;
        tc.seed = trials_seed(cfg.master_seed, n);
        EvalReport report;
        try {
            report = run_trials(full.head(n), cfg.hidden, tc, cfg.trials, cfg.threads);
        } catch (const Error& e) {
            throw Error("reproduce " + cfg.experiment + ": size " + std::to_string(n) + ": " + e.what());
        }
        nlohmann::json rj = report_to_json(report);
        rj["size"] = n;
        rj["trials_seed"] = tc.seed;
        rj["config"] = config;
        write_text(dir / ("report_" + std::to_string(n) + ".json"), rj.dump(2) + "\n");
        mse_csv += std::to_string(n) + "," + fmt(report.mse_coords) + "," + fmt(report.mse_forces) + "," +
                   fmt(report.mse_freqs) + "," + fmt(report.mse_total) + "\n";
        runtime_csv += std::to_string(n) + "," + fmt(report.train_seconds) + "," + fmt(report.test_seconds) + "\n";
        if (progress) {
            *progress << "[" << cfg.experiment << "] n=" << n << " mse_total=" << report.mse_total
                      << " (coords " << report.mse_coords << ", forces " << report.mse_forces << ", freqs "
                      << report.mse_freqs << "), train " << report.train_seconds << " s/trial\n";
        }
        result.sizes.push_back({n, std::move(report)});
    }
    write_text(dir / "mse_vs_samples.csv", mse_csv);
    write_text(dir / "runtime.csv", runtime_csv);
    return result;
}

}  // namespace tenseg
