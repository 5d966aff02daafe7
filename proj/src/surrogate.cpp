#include "tenseg/surrogate.hpp"

#include "tenseg/errors.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace tenseg {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw InvalidParameter("TrainConfig: learning_rate must be positive");
    if (epochs < 1) throw InvalidParameter("TrainConfig: epochs must be at least 1");
    if (batch_size < 1) throw InvalidParameter("TrainConfig: batch_size must be at least 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw InvalidParameter("TrainConfig: Adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw InvalidParameter("TrainConfig: epsilon must be positive");
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (int l = 0; l < layer_count(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

void MlpModel::validate() const {
    if (layer_dims.size() < 2) throw InvalidParameter("MlpModel: needs at least input and output layers");
    if (weights.size() != layer_dims.size() - 1 || biases.size() != weights.size()) {
        throw DimensionMismatch("MlpModel: one weight matrix and bias per layer");
    }
    for (int l = 0; l < layer_count(); ++l) {
        if (weights[l].rows() != layer_dims[l + 1] || weights[l].cols() != layer_dims[l] ||
            biases[l].size() != layer_dims[l + 1]) {
            throw DimensionMismatch("MlpModel: layer " + std::to_string(l) + " has inconsistent shape");
        }
        if (!weights[l].allFinite() || !biases[l].allFinite()) {
            throw InvalidParameter("MlpModel: layer " + std::to_string(l) + " has non-finite parameters");
        }
    }
}

MlpModel init_mlp(const std::vector<int>& layer_dims, std::uint64_t seed) {
    for (int d : layer_dims) {
        if (d < 1) throw InvalidParameter("init_mlp: layer widths must be positive");
    }
    if (layer_dims.size() < 2) throw InvalidParameter("init_mlp: needs at least input and output layers");
    MlpModel m;
    m.layer_dims = layer_dims;
    m.seed = seed;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const double limit = std::sqrt(6.0 / layer_dims[l]);
        DenseMatrix w(layer_dims[l + 1], layer_dims[l]);
        // Row-major draw order, independent of Eigen's storage order.
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
        }
        m.weights.push_back(std::move(w));
        m.biases.push_back(Vector::Zero(layer_dims[l + 1]));
    }
    return m;
}

namespace {

/// Activations are column-per-sample.
DenseMatrix forward_columns(const MlpModel& model, const DenseMatrix& x) {
    DenseMatrix a = x;
    for (int l = 0; l < model.layer_count(); ++l) {
        DenseMatrix z = model.weights[l] * a;
        z.colwise() += model.biases[l];
        if (l + 1 < model.layer_count()) z = z.cwiseMax(0.0);
        a = std::move(z);
    }
    return a;
}

}  // namespace

Vector forward(const MlpModel& model, const Vector& input) {
    if (input.size() != model.input_dim()) throw DimensionMismatch("forward: input width differs from model");
    return forward_columns(model, input);
}

DenseMatrix predict(const MlpModel& model, const DenseMatrix& inputs) {
    if (inputs.cols() != model.input_dim()) throw DimensionMismatch("predict: input width differs from model");
    return forward_columns(model, inputs.transpose()).transpose();
}

double mse_loss(const MlpModel& model, const DenseMatrix& inputs, const DenseMatrix& targets) {
    const DenseMatrix pred = predict(model, inputs);
    if (pred.rows() != targets.rows() || pred.cols() != targets.cols()) {
        throw DimensionMismatch("mse_loss: target shape differs from predictions");
    }
    return (pred - targets).squaredNorm() / static_cast<double>(targets.size());
}

namespace {

/// Reusable buffers for one forward/backward pass over a column batch.
struct Workspace {
    std::vector<DenseMatrix> pre;   // z per layer
    std::vector<DenseMatrix> act;   // act[0] = input, act[l+1] = sigma(z_l)
    DenseMatrix delta;
    DenseMatrix back;
    std::vector<DenseMatrix> grad_w;
    std::vector<Vector> grad_b;

    explicit Workspace(const MlpModel& m)
        : pre(m.layer_count()), act(m.layer_count() + 1), grad_w(m.layer_count()), grad_b(m.layer_count()) {
        for (int l = 0; l < m.layer_count(); ++l) {
            grad_w[l].resize(m.weights[l].rows(), m.weights[l].cols());
            grad_b[l].resize(m.biases[l].size());
        }
    }

    /// Fills grad_w / grad_b for targets y (columns) and returns the mean squared error.
    double backprop(const MlpModel& m, const DenseMatrix& x, const DenseMatrix& y) {
        const int layers = m.layer_count();
        act[0] = x;
        for (int l = 0; l < layers; ++l) {
            pre[l].noalias() = m.weights[l] * act[l];
            pre[l].colwise() += m.biases[l];
            if (l + 1 < layers) {
                act[l + 1] = pre[l].cwiseMax(0.0);
            } else {
                act[l + 1] = pre[l];
            }
        }
        delta = act[layers] - y;
        const double count = static_cast<double>(y.size());
        const double loss = delta.squaredNorm() / count;
        delta *= 2.0 / count;
        for (int l = layers - 1; l >= 0; --l) {
            grad_w[l].noalias() = delta * act[l].transpose();
            grad_b[l] = delta.rowwise().sum();
            if (l > 0) {
                back.noalias() = m.weights[l].transpose() * delta;
                delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
            }
        }
        return loss;
    }
};

void check_layout(const Dataset& d, const MlpModel& m) {
    if (d.input_dim() != m.input_dim() || d.output_dim() != m.output_dim()) {
        throw DimensionMismatch("dataset layout does not match the model's input/output widths");
    }
}

}  // namespace

MlpGradients loss_gradients(const MlpModel& model, const DenseMatrix& inputs, const DenseMatrix& targets) {
    model.validate();
    if (inputs.cols() != model.input_dim() || targets.cols() != model.output_dim() ||
        inputs.rows() != targets.rows()) {
        throw DimensionMismatch("loss_gradients: data shape differs from model");
    }
    Workspace ws(model);
    MlpGradients g;
    g.loss = ws.backprop(model, inputs.transpose(), targets.transpose());
    g.weights = std::move(ws.grad_w);
    g.biases = std::move(ws.grad_b);
    return g;
}

MlpModel train(const Dataset& train_data, const std::vector<int>& hidden, const TrainConfig& cfg, TrainLog* log) {
    cfg.validate();
    const int n = train_data.rows();
    if (cfg.batch_size > n) throw InvalidParameter("train: batch_size exceeds the training set size");
    std::vector<int> dims;
    dims.push_back(train_data.input_dim());
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(train_data.output_dim());

    // Initialization and shuffling use separate streams of the same seed.
    MlpModel model = init_mlp(dims, derive_seed(cfg.seed, 1));
    model.seed = cfg.seed;
    model.train_config = cfg;
    model.layout = train_data.layout;
    Rng shuffle(derive_seed(cfg.seed, 2));

    const DenseMatrix x_all = train_data.inputs.transpose();
    const DenseMatrix y_all = train_data.outputs.transpose();
    Workspace ws(model);

    std::vector<DenseMatrix> m_w, v_w;
    std::vector<Vector> m_b, v_b;
    for (int l = 0; l < model.layer_count(); ++l) {
        m_w.push_back(DenseMatrix::Zero(model.weights[l].rows(), model.weights[l].cols()));
        v_w.push_back(m_w.back());
        m_b.push_back(Vector::Zero(model.biases[l].size()));
        v_b.push_back(m_b.back());
    }
    double beta1_t = 1.0;
    double beta2_t = 1.0;

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    DenseMatrix xb;
    DenseMatrix yb;
    if (log) log->epoch_loss.clear();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int i = n - 1; i > 0; --i) {
            std::swap(order[i], order[static_cast<int>(shuffle.below(static_cast<std::uint64_t>(i) + 1))]);
        }
        double epoch_loss = 0.0;
        int batches = 0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int size = std::min(cfg.batch_size, n - start);
            xb.resize(x_all.rows(), size);
            yb.resize(y_all.rows(), size);
            for (int c = 0; c < size; ++c) {
                xb.col(c) = x_all.col(order[start + c]);
                yb.col(c) = y_all.col(order[start + c]);
            }
            const double loss = ws.backprop(model, xb, yb);
            if (!std::isfinite(loss)) {
                std::ostringstream msg;
                msg << "train: loss became non-finite at epoch " << epoch + 1 << ", batch " << batches + 1;
                throw TrainingError(msg.str(), epoch + 1, batches + 1);
            }
            epoch_loss += loss;
            ++batches;

            beta1_t *= cfg.beta1;
            beta2_t *= cfg.beta2;
            const double c1 = 1.0 / (1.0 - beta1_t);
            const double c2 = 1.0 / (1.0 - beta2_t);
            auto adam = [&](auto& param, auto& m, auto& v, const auto& g) {
                m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
                v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
                param.array() -= cfg.learning_rate * (m.array() * c1) / ((v.array() * c2).sqrt() + cfg.epsilon);
            };
            for (int l = 0; l < model.layer_count(); ++l) {
                adam(model.weights[l], m_w[l], v_w[l], ws.grad_w[l]);
                adam(model.biases[l], m_b[l], v_b[l], ws.grad_b[l]);
            }
        }
        if (log) log->epoch_loss.push_back(epoch_loss / batches);
    }
    return model;
}

EvalReport evaluate(const MlpModel& model, const Dataset& test_data) {
    check_layout(test_data, model);
    if (!(test_data.layout == model.layout) && model.layout.total() != 0) {
        throw DimensionMismatch("evaluate: dataset column groups differ from the model's");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const DenseMatrix err = predict(model, test_data.inputs) - test_data.outputs;
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto& lay = test_data.layout;
    const double rows = static_cast<double>(err.rows());
    auto group = [&](int first, int count) {
        if (count == 0) return 0.0;
        return err.middleCols(first, count).squaredNorm() / (rows * count);
    };
    EvalReport r;
    r.mse_coords = group(0, lay.coords);
    r.mse_forces = group(lay.coords, lay.forces);
    r.mse_freqs = group(lay.coords + lay.forces, lay.freqs);
    r.mse_total = err.squaredNorm() / static_cast<double>(err.size());
    r.trials = 1;
    r.test_seconds = seconds;
    r.per_trial.push_back({r.mse_total, r.mse_coords, r.mse_forces, r.mse_freqs, 0.0, seconds});
    return r;
}

TrialSeeds trial_seeds(std::uint64_t base_seed, int trial) {
    return {derive_seed(base_seed, 2 * static_cast<std::uint64_t>(trial)),
            derive_seed(base_seed, 2 * static_cast<std::uint64_t>(trial) + 1)};
}

EvalReport run_trials(const Dataset& data, const std::vector<int>& hidden, const TrainConfig& cfg, int trials,
                      int threads, double train_fraction) {
    if (trials < 1) throw InvalidParameter("run_trials: trials must be at least 1");
    std::vector<TrialResult> results(trials);
    parallel_for(trials, threads, [&](int t) {
        const TrialSeeds seeds = trial_seeds(cfg.seed, t);
        const auto [train_set, test_set] = split(data, train_fraction, seeds.split);
        TrainConfig trial_cfg = cfg;
        trial_cfg.seed = seeds.init;
        const auto t0 = std::chrono::steady_clock::now();
        const MlpModel model = train(train_set, hidden, trial_cfg);
        const double train_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const EvalReport one = evaluate(model, test_set);
        results[t] = one.per_trial.front();
        results[t].train_seconds = train_s;
    });

    EvalReport r;
    r.trials = trials;
    r.per_trial = results;
    for (const auto& t : results) {
        r.mse_total += t.mse_total;
        r.mse_coords += t.mse_coords;
        r.mse_forces += t.mse_forces;
        r.mse_freqs += t.mse_freqs;
        r.train_seconds += t.train_seconds;
        r.test_seconds += t.test_seconds;
    }
    const double n = trials;
    r.mse_total /= n;
    r.mse_coords /= n;
    r.mse_forces /= n;
    r.mse_freqs /= n;
    r.train_seconds /= n;
    r.test_seconds /= n;
    return r;
}

// ------------------------------------------------------------------ JSON

nlohmann::json model_to_json(const MlpModel& m) {
    nlohmann::json j;
    j["format"] = "tenseg-mlp-1";
    j["layer_dims"] = m.layer_dims;
    j["activations"] = {{"hidden", "relu"}, {"output", "identity"}};
    j["weights"] = nlohmann::json::array();
    j["biases"] = nlohmann::json::array();
    for (int l = 0; l < m.layer_count(); ++l) {
        std::vector<double> flat;
        flat.reserve(m.weights[l].size());
        for (Eigen::Index r = 0; r < m.weights[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < m.weights[l].cols(); ++c) flat.push_back(m.weights[l](r, c));
        }
        j["weights"].push_back(flat);
        j["biases"].push_back(std::vector<double>(m.biases[l].data(), m.biases[l].data() + m.biases[l].size()));
    }
    j["seed"] = m.seed;
    const auto& c = m.train_config;
    j["train_config"] = {{"learning_rate", c.learning_rate}, {"epochs", c.epochs}, {"batch_size", c.batch_size},
                         {"beta1", c.beta1}, {"beta2", c.beta2}, {"epsilon", c.epsilon}, {"seed", c.seed}};
    j["layout"] = {{"coords", m.layout.coords}, {"forces", m.layout.forces}, {"freqs", m.layout.freqs}};
    return j;
}

MlpModel model_from_json(const nlohmann::json& j) {
    try {
        MlpModel m;
        m.layer_dims = j.at("layer_dims").get<std::vector<int>>();
        const auto& acts = j.value("activations", nlohmann::json::object());
        if (acts.value("hidden", "relu") != "relu" || acts.value("output", "identity") != "identity") {
            throw FormatError("model file: only relu hidden / identity output activations are supported");
        }
        const auto& jw = j.at("weights");
        const auto& jb = j.at("biases");
        if (jw.size() + 1 != m.layer_dims.size() || jb.size() != jw.size()) {
            throw FormatError("model file: layer count differs from layer_dims");
        }
        for (std::size_t l = 0; l < jw.size(); ++l) {
            const auto flat = jw[l].get<std::vector<double>>();
            const int rows = m.layer_dims[l + 1];
            const int cols = m.layer_dims[l];
            if (static_cast<int>(flat.size()) != rows * cols) throw FormatError("model file: weight size mismatch");
            DenseMatrix w(rows, cols);
            for (int r = 0; r < rows; ++r) {
                for (int c = 0; c < cols; ++c) w(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
            }
            m.weights.push_back(std::move(w));
            const auto b = jb[l].get<std::vector<double>>();
            m.biases.push_back(Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size())));
        }
        m.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("train_config")) {
            const auto& c = j["train_config"];
            m.train_config.learning_rate = c.value("learning_rate", 0.01);
            m.train_config.epochs = c.value("epochs", 200);
            m.train_config.batch_size = c.value("batch_size", 32);
            m.train_config.beta1 = c.value("beta1", 0.9);
            m.train_config.beta2 = c.value("beta2", 0.999);
            m.train_config.epsilon = c.value("epsilon", 1e-8);
            m.train_config.seed = c.value("seed", std::uint64_t{0});
        }
        if (j.contains("layout")) {
            m.layout = {j["layout"].at("coords").get<int>(), j["layout"].at("forces").get<int>(),
                        j["layout"].at("freqs").get<int>()};
        }
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model file: ") + e.what());
    }
}

void save_model(const MlpModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << model_to_json(m).dump() << '\n';
}

MlpModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    return model_from_json(j);
}

nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["trials"] = r.trials;
    j["mse_total"] = r.mse_total;
    j["mse_coords"] = r.mse_coords;
    j["mse_forces"] = r.mse_forces;
    j["mse_freqs"] = r.mse_freqs;
    j["mean_train_seconds"] = r.train_seconds;
    j["mean_test_seconds"] = r.test_seconds;
    nlohmann::json per = nlohmann::json::array();
    for (const auto& t : r.per_trial) {
        per.push_back({{"mse_total", t.mse_total}, {"mse_coords", t.mse_coords}, {"mse_forces", t.mse_forces},
                       {"mse_freqs", t.mse_freqs}, {"train_seconds", t.train_seconds},
                       {"test_seconds", t.test_seconds}});
    }
    j["per_trial"] = std::move(per);
    return j;
}

}  // namespace tenseg
