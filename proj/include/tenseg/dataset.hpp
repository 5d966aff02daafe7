#pragma once

#include "tenseg/modal.hpp"
#include "tenseg/statics.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace tenseg {

struct SamplingSpec {
    std::vector<std::pair<double, double>> ranges;  // per actuated cable, [lo, hi) in m
    int sample_count = 1000;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Column groups of a dataset row, in storage order: coordinates, forces, frequencies.
struct OutputLayout {
    int coords = 0;
    int forces = 0;
    int freqs = 0;

    int total() const { return coords + forces + freqs; }
    bool operator==(const OutputLayout&) const = default;
};

struct OutputScales {
    double force = 1e3;  // N
    double freq = 1e6;   // applied to omega in rad/s
    bool operator==(const OutputScales&) const = default;
};

/// Rows are samples. Outputs are stored normalized: forces / force scale,
/// frequencies / frequency scale, coordinates as-is.
struct Dataset {
    DenseMatrix inputs;
    DenseMatrix outputs;
    OutputLayout layout;
    OutputScales scales;
    std::uint64_t seed = 0;
    std::string structure_fingerprint;
    nlohmann::json provenance;  // structure, solver config, sampling ranges

    int rows() const { return static_cast<int>(inputs.rows()); }
    int input_dim() const { return static_cast<int>(inputs.cols()); }
    int output_dim() const { return static_cast<int>(outputs.cols()); }

    Dataset subset(const std::vector<int>& rows) const;
    Dataset head(int n) const;
};

/// Rigidly re-aligns a free-floating solution onto the as-built geometry (least-squares
/// rotation plus translation). Structures with fixed nodes are returned unchanged.
NodeSet canonical_frame(const Structure& s, const NodeSet& solved);

/// Coordinate outputs for one solved state, in the canonical frame.
Vector reduced_coordinates(const Structure& s, const EquilibriumState& state);

/// Number of non-zero frequencies expected for the structure: free DOFs minus six
/// rigid-body modes when no node is fixed.
int expected_frequency_count(const Structure& s);

/// One output row (normalized) from a solved state and its modal result.
Vector output_row(const Structure& s, const EquilibriumState& state, const ModalResult& modal,
                  const OutputScales& scales);

struct GenerationStats {
    std::vector<int> iterations;  // per sample
    double seconds = 0.0;
};

/// Draws every sample's actuation from the seeded stream first (row order), then
/// solves the samples on `threads` workers; the result does not depend on `threads`.
/// Throws Error naming the sample index and actuation on any failure.
Dataset generate(const Structure& s, const SamplingSpec& spec, const SolverConfig& cfg = {}, int threads = 1,
                 GenerationStats* stats = nullptr);

/// Shuffles rows with a seeded permutation; the first floor(fraction * n) go to train.
std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction, std::uint64_t seed);

/// `path` names the CSV; the sidecar is the same path with ".csv" replaced by ".meta.json".
void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);
std::string meta_path_for(const std::string& csv_path);

/// The canonical benchmark sampling ranges.
SamplingSpec benchmark_sampling(const std::string& id, int sample_count, std::uint64_t seed);

}  // namespace tenseg
