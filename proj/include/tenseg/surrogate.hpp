#pragma once

#include "tenseg/dataset.hpp"

#include <cstdint>
#include <vector>

namespace tenseg {

struct TrainConfig {
    double learning_rate = 0.01;
    int epochs = 200;
    int batch_size = 32;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Feedforward network: ReLU on every hidden layer, identity on the output layer.
struct MlpModel {
    std::vector<int> layer_dims;        // input, hidden..., output
    std::vector<DenseMatrix> weights;   // layer l maps dims[l] -> dims[l+1], shape dims[l+1] x dims[l]
    std::vector<Vector> biases;
    std::uint64_t seed = 0;
    TrainConfig train_config;
    OutputLayout layout;  // set when trained on a dataset

    int layer_count() const { return static_cast<int>(weights.size()); }
    int input_dim() const { return layer_dims.front(); }
    int output_dim() const { return layer_dims.back(); }
    std::size_t parameter_count() const;
    void validate() const;
};

/// Weights uniform in +-sqrt(6 / fan_in), biases zero.
MlpModel init_mlp(const std::vector<int>& layer_dims, std::uint64_t seed);

Vector forward(const MlpModel& model, const Vector& input);
/// Batched forward pass; rows of `inputs` are samples.
DenseMatrix predict(const MlpModel& model, const DenseMatrix& inputs);

struct MlpGradients {
    double loss = 0.0;
    std::vector<DenseMatrix> weights;
    std::vector<Vector> biases;
};

/// Mean over rows and columns of the squared error.
double mse_loss(const MlpModel& model, const DenseMatrix& inputs, const DenseMatrix& targets);
/// Backpropagated gradient of mse_loss.
MlpGradients loss_gradients(const MlpModel& model, const DenseMatrix& inputs, const DenseMatrix& targets);

struct TrainLog {
    std::vector<double> epoch_loss;  // mean batch loss per epoch
};

/// Adam on mini-batches from a seeded per-epoch shuffle. `hidden` lists the hidden
/// widths; input and output widths come from the dataset. Throws TrainingError on a
/// non-finite loss.
MlpModel train(const Dataset& train_data, const std::vector<int>& hidden, const TrainConfig& cfg,
               TrainLog* log = nullptr);

struct TrialResult {
    double mse_total = 0.0;
    double mse_coords = 0.0;
    double mse_forces = 0.0;
    double mse_freqs = 0.0;
    double train_seconds = 0.0;
    double test_seconds = 0.0;
};

struct EvalReport {
    double mse_total = 0.0;
    double mse_coords = 0.0;
    double mse_forces = 0.0;
    double mse_freqs = 0.0;
    int trials = 0;
    std::vector<TrialResult> per_trial;
    double train_seconds = 0.0;  // mean per trial
    double test_seconds = 0.0;
};

/// Per-group and total MSE of the model on `test_data`, in normalized units.
EvalReport evaluate(const MlpModel& model, const Dataset& test_data);

/// Seeds used by trial `t` of run_trials.
struct TrialSeeds {
    std::uint64_t split;
    std::uint64_t init;
};
TrialSeeds trial_seeds(std::uint64_t base_seed, int trial);

/// Repeats split(0.8) + train + evaluate with trial-indexed seeds derived from
/// cfg.seed, and averages. Trials run on up to `threads` workers; results do not
/// depend on the worker count.
EvalReport run_trials(const Dataset& data, const std::vector<int>& hidden, const TrainConfig& cfg, int trials,
                      int threads = 1, double train_fraction = 0.8);

nlohmann::json model_to_json(const MlpModel& m);
MlpModel model_from_json(const nlohmann::json& j);
void save_model(const MlpModel& m, const std::string& path);
MlpModel load_model(const std::string& path);
nlohmann::json report_to_json(const EvalReport& r);

}  // namespace tenseg
