#pragma once

#include "tenseg/surrogate.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tenseg {

/// Ids of the built-in benchmark structures.
const std::vector<std::string>& benchmark_ids();

/// The benchmark structure for `id` with its default dimensions.
/// Throws InvalidParameter for an unknown id.
Structure benchmark_structure(const std::string& id);

/// End-to-end learning-curve experiment: one dataset of the largest size is generated,
/// smaller sizes are its leading rows, and each size is evaluated over `trials` trials.
struct ReproduceConfig {
    std::string experiment = "dbar";
    std::uint64_t master_seed = 0;
    std::vector<int> sizes{1000, 2000, 3000, 4000, 5000};
    int trials = 20;
    std::vector<int> hidden{64, 64, 64};
    TrainConfig train;  // seed is ignored; it is derived from master_seed
    SolverConfig solver;
    std::string out_dir = "results";
    int threads = 1;

    void validate() const;
};

/// Seed derivation shared by every stage, independent of the structure.
std::uint64_t dataset_seed(std::uint64_t master);
std::uint64_t trials_seed(std::uint64_t master, int size);

struct SizeResult {
    int size = 0;
    EvalReport report;
};

struct ReproduceResult {
    std::vector<SizeResult> sizes;
    std::string dataset_path;
};

/// Runs the experiment and writes into cfg.out_dir:
///   dataset.csv (+ .meta.json), config.json, report_<size>.json,
///   mse_vs_samples.csv (size, mse_coords, mse_forces, mse_freqs, mse_total) and
///   runtime.csv (size, train_s, test_s).
/// Everything except runtime.csv is a deterministic function of the config.
ReproduceResult reproduce(const ReproduceConfig& cfg, std::ostream* progress = nullptr);

nlohmann::json reproduce_config_to_json(const ReproduceConfig& cfg);

}  // namespace tenseg
