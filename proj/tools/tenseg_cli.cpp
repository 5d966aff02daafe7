/// Command-line front end: structure generation, equilibrium solves, modal analysis,
/// dataset generation, surrogate training/evaluation and learning-curve experiments.

#include "tenseg/errors.hpp"
#include "tenseg/experiment.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace tenseg;

namespace {

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::string config_path;
    int threads = 0;
    nlohmann::json config = nlohmann::json::object();
};

int default_threads() {
    if (const char* env = std::getenv("TENSEG_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (const std::exception&) {
        }
        throw InvalidParameter(std::string("TENSEG_THREADS must be a positive integer, got '") + env + "'");
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Fills `value` from the config file when the option was not given on the command line.
template <typename T>
void from_config(const GlobalOptions& g, const CLI::Option* opt, const nlohmann::json::json_pointer& key, T& value) {
    if (opt && opt->count() > 0) return;
    if (g.config.contains(key)) value = g.config.at(key).get<T>();
}

nlohmann::json::json_pointer ptr(const std::string& p) { return nlohmann::json::json_pointer(p); }

/// A structure argument is either a JSON file or a benchmark id.
Structure resolve_structure(const std::string& arg) {
    if (fs::exists(arg)) return load_structure(arg);
    for (const auto& id : benchmark_ids()) {
        if (arg == id) return benchmark_structure(id);
    }
    throw InvalidParameter("structure '" + arg + "' is neither an existing file nor one of dbar, prism, lander");
}

Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

fs::path output_path(const GlobalOptions& g, const std::string& given, const std::string& fallback) {
    if (!given.empty()) return given;
    return fs::path(g.out_dir) / fallback;
}

void apply_solver_config(const GlobalOptions& g, SolverConfig& cfg) {
    if (!g.config.contains("solver")) return;
    const auto& s = g.config["solver"];
    cfg.tolerance = s.value("tolerance", cfg.tolerance);
    cfg.shift = s.value("shift", cfg.shift);
    cfg.max_iterations = s.value("max_iterations", cfg.max_iterations);
    cfg.line_search_tol = s.value("line_search_tol", cfg.line_search_tol);
    cfg.line_search_max_iter = s.value("line_search_max_iter", cfg.line_search_max_iter);
}

struct SolverFlags {
    SolverConfig cfg;
    CLI::Option* tol = nullptr;
    CLI::Option* shift = nullptr;
    CLI::Option* max_iter = nullptr;

    void add(CLI::App* app) {
        tol = app->add_option("--tol", cfg.tolerance, "Residual tolerance (N)");
        shift = app->add_option("--shift", cfg.shift, "Regularization shift mu");
        max_iter = app->add_option("--max-iter", cfg.max_iterations, "Iteration cap");
    }
    SolverConfig resolve(const GlobalOptions& g) const {
        SolverConfig out;
        apply_solver_config(g, out);
        if (tol->count()) out.tolerance = cfg.tolerance;
        if (shift->count()) out.shift = cfg.shift;
        if (max_iter->count()) out.max_iterations = cfg.max_iterations;
        out.validate();
        return out;
    }
};

struct TrainFlags {
    TrainConfig cfg;
    std::vector<int> hidden{64, 64, 64};
    CLI::Option* hidden_opt = nullptr;
    CLI::Option* epochs = nullptr;
    CLI::Option* lr = nullptr;
    CLI::Option* batch = nullptr;

    void add(CLI::App* app) {
        hidden_opt = app->add_option("--hidden", hidden, "Hidden layer widths")->delimiter(',');
        epochs = app->add_option("--epochs", cfg.epochs, "Training epochs");
        lr = app->add_option("--lr", cfg.learning_rate, "Adam learning rate");
        batch = app->add_option("--batch-size", cfg.batch_size, "Mini-batch size");
    }
    void resolve(const GlobalOptions& g) {
        from_config(g, hidden_opt, ptr("/hidden"), hidden);
        from_config(g, epochs, ptr("/train/epochs"), cfg.epochs);
        from_config(g, lr, ptr("/train/learning_rate"), cfg.learning_rate);
        from_config(g, batch, ptr("/train/batch_size"), cfg.batch_size);
        if (g.config.contains("train")) {
            const auto& t = g.config["train"];
            cfg.beta1 = t.value("beta1", cfg.beta1);
            cfg.beta2 = t.value("beta2", cfg.beta2);
            cfg.epsilon = t.value("epsilon", cfg.epsilon);
        }
        cfg.validate();
    }
};

void print_solve_summary(const Structure& s, const EquilibriumState& st, const ModalResult& modal) {
    std::cout << "structure   " << s.name() << '\n';
    std::cout << "residual    " << st.residual_norm << " N\n";
    std::cout << "iterations  " << st.iterations << '\n';
    std::cout << "force range [" << st.member_forces.minCoeff() << ", " << st.member_forces.maxCoeff() << "] N\n";
    std::cout << "zero modes  " << modal.zero_mode_count << '\n';
    std::cout << "frequencies " << modal.frequencies.size() << " non-zero";
    if (modal.unstable_mode_count > 0) std::cout << " (" << modal.unstable_mode_count << " unstable)";
    std::cout << '\n';
    for (Eigen::Index i = 0; i < modal.frequencies.size(); ++i) {
        if (modal.frequencies[i] > 0.0) {
            std::cout << "first non-zero frequency " << modal.frequencies[i] << " rad/s ("
                      << modal.hz_frequencies[i] << " Hz)\n";
            break;
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tensegrity form-finding, modal analysis and surrogate modelling"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalOptions g;
    auto* seed_opt = app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
    auto* out_opt = app.add_option("--out-dir", g.out_dir, "Directory for output files")->capture_default_str();
    app.add_option("--config", g.config_path, "JSON config supplying options not given on the command line")
        ->check(CLI::ExistingFile);
    auto* threads_opt =
        app.add_option("--threads", g.threads, "Worker threads (default: $TENSEG_THREADS, else all cores)")
            ->check(CLI::PositiveNumber);

    // gen ---------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "Write a benchmark structure to JSON");
    std::string gen_id;
    double radius = 0.25, height = 0.5, twist = -5.0 * std::numbers::pi / 6.0, bar_length = 0.0,
           separation = 0.5;
    std::string gen_out;
    gen->add_option("--structure", gen_id, "dbar | prism | lander")
        ->required()
        ->check(CLI::IsMember({"dbar", "prism", "lander"}));
    gen->add_option("--radius", radius, "Prism radius (m)");
    gen->add_option("--height", height, "Prism height (m)");
    gen->add_option("--twist", twist, "Prism twist of top over bottom triangle (rad)");
    gen->add_option("--bar-length", bar_length, "Bar length (m); D-bar default sqrt(2), lander default 1");
    gen->add_option("--separation", separation, "Lander bar-pair separation / bar length");
    gen->add_option("-o,--output", gen_out, "Output file (default <out-dir>/<id>.json)");

    // solve / modal -----------------------------------------------------
    auto* solve = app.add_subcommand("solve", "Find the equilibrium for given cable actuations");
    auto* modal_cmd = app.add_subcommand("modal", "Equilibrium plus full modal analysis with mode shapes");
    std::string solve_structure;
    std::vector<double> dl;
    std::string solve_out;
    SolverFlags solve_flags, modal_flags;
    for (auto* cmd : {solve, modal_cmd}) {
        cmd->add_option("--structure", solve_structure, "Structure JSON file or benchmark id")->required();
        cmd->add_option("--dl", dl, "Rest-length change per actuated cable (m)")->delimiter(',')->required();
        cmd->add_option("-o,--output", solve_out, "Output JSON (default <out-dir>/state.json or modal.json)");
        (cmd == solve ? solve_flags : modal_flags).add(cmd);
    }

    // dataset -----------------------------------------------------------
    auto* dataset_cmd = app.add_subcommand("dataset", "Generate a seeded dataset of solved samples");
    std::string ds_structure;
    int ds_n = 1000;
    std::vector<std::string> ds_ranges;
    std::string ds_out;
    SolverFlags ds_flags;
    auto* ds_structure_opt =
        dataset_cmd->add_option("--structure", ds_structure, "Structure JSON file or benchmark id");
    auto* ds_n_opt = dataset_cmd->add_option("--n", ds_n, "Number of samples")->check(CLI::PositiveNumber);
    auto* ds_ranges_opt = dataset_cmd->add_option(
        "--range", ds_ranges, "Per-cable range lo:hi (repeat or comma-separate); default: benchmark ranges");
    ds_ranges_opt->delimiter(',');
    dataset_cmd->add_option("-o,--output", ds_out, "Output CSV (default <out-dir>/dataset.csv)");
    ds_flags.add(dataset_cmd);

    // train -------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "Train a surrogate on every row of a dataset");
    std::string tr_data;
    std::string tr_out;
    TrainFlags tr_flags;
    train_cmd->add_option("--data", tr_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("-o,--output", tr_out, "Model JSON (default <out-dir>/model.json)");
    tr_flags.add(train_cmd);

    // eval --------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand(
        "eval", "Evaluate a model on a dataset; with --trials > 1, rerun the model's recipe over seeded splits");
    std::string ev_model, ev_data, ev_out;
    int ev_trials = 1;
    eval_cmd->add_option("--model", ev_model, "Model JSON")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--data", ev_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
    auto* ev_trials_opt = eval_cmd->add_option("--trials", ev_trials, "Trials")->check(CLI::PositiveNumber);
    eval_cmd->add_option("-o,--output", ev_out, "Report JSON (default <out-dir>/report.json)");

    // reproduce ---------------------------------------------------------
    auto* repro = app.add_subcommand("reproduce", "Learning-curve experiment over dataset sizes and trials");
    ReproduceConfig rc;
    TrainFlags rc_flags;
    auto* rc_exp = repro->add_option("--experiment", rc.experiment, "dbar | prism | lander")
                       ->check(CLI::IsMember({"dbar", "prism", "lander"}));
    auto* rc_sizes = repro->add_option("--sizes", rc.sizes, "Dataset sizes")->delimiter(',');
    auto* rc_trials = repro->add_option("--trials", rc.trials, "Trials per size")->check(CLI::PositiveNumber);
    rc_flags.add(repro);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (!g.config_path.empty()) {
            std::ifstream in(g.config_path);
            try {
                in >> g.config;
            } catch (const nlohmann::json::exception& e) {
                throw FormatError(g.config_path + ": " + e.what());
            }
        }
        from_config(g, seed_opt, ptr("/seed"), g.seed);
        from_config(g, out_opt, ptr("/out_dir"), g.out_dir);
        from_config(g, threads_opt, ptr("/threads"), g.threads);
        if (g.threads <= 0) g.threads = default_threads();

        if (gen->parsed()) {
            Structure s = gen_id == "dbar"    ? generate_dbar(bar_length > 0 ? bar_length : std::sqrt(2.0))
                          : gen_id == "prism" ? generate_prism(radius, height, twist)
                                              : generate_lander(bar_length > 0 ? bar_length : 1.0, separation);
            const fs::path out = output_path(g, gen_out, gen_id + ".json");
            if (out.has_parent_path()) fs::create_directories(out.parent_path());
            save_structure(s, out.string());
            std::cout << "wrote " << out.string() << ": " << s.node_count() << " nodes, " << s.bar_count()
                      << " bars, " << s.string_count() << " strings, " << s.actuated_cables().size()
                      << " actuated\n";
        } else if (solve->parsed() || modal_cmd->parsed()) {
            const bool full = modal_cmd->parsed();
            const Structure s = resolve_structure(solve_structure);
            const SolverConfig cfg = (full ? modal_flags : solve_flags).resolve(g);
            EquilibriumState st;
            try {
                st = form_find(s, to_vector(dl), LoadCase::none(s), cfg);
            } catch (const NonConvergence& e) {
                std::cerr << "error: " << e.what() << " (residual " << e.residual() << " N after "
                          << e.iterations() << " iterations)\n";
                return 2;
            }
            const ModalResult modal = modal_analysis(s, st);
            print_solve_summary(s, st, modal);
            if (full) {
                std::cout << "all frequencies (rad/s):";
                for (Eigen::Index i = 0; i < modal.frequencies.size(); ++i) std::cout << ' ' << modal.frequencies[i];
                std::cout << '\n';
            }
            nlohmann::json j;
            j["structure"] = structure_to_json(s);
            j["structure_fingerprint"] = fingerprint(s);
            j["dl"] = dl;
            j["solver"] = {{"tolerance", cfg.tolerance}, {"shift", cfg.shift},
                           {"max_iterations", cfg.max_iterations}};
            j["state"] = state_to_json(st);
            j["modal"] = modal_to_json(modal, full);
            const fs::path out = output_path(g, solve_out, full ? "modal.json" : "state.json");
            write_json(out, j);
            std::cout << "wrote " << out.string() << '\n';
        } else if (dataset_cmd->parsed()) {
            from_config(g, ds_structure_opt, ptr("/structure"), ds_structure);
            from_config(g, ds_n_opt, ptr("/sampling/n"), ds_n);
            if (ds_structure.empty()) throw InvalidParameter("dataset: --structure is required");
            const Structure s = resolve_structure(ds_structure);
            SamplingSpec spec;
            spec.sample_count = ds_n;
            spec.seed = dataset_seed(g.seed);
            if (ds_ranges_opt->count() > 0) {
                for (const auto& r : ds_ranges) {
                    const auto colon = r.find(':');
                    if (colon == std::string::npos) throw InvalidParameter("--range expects lo:hi, got '" + r + "'");
                    spec.ranges.emplace_back(std::stod(r.substr(0, colon)), std::stod(r.substr(colon + 1)));
                }
            } else if (g.config.contains(ptr("/sampling/ranges"))) {
                spec.ranges = g.config.at(ptr("/sampling/ranges")).get<std::vector<std::pair<double, double>>>();
            } else {
                spec.ranges = benchmark_sampling(s.name(), ds_n, spec.seed).ranges;
            }
            GenerationStats stats;
            Dataset d = generate(s, spec, ds_flags.resolve(g), g.threads, &stats);
            d.provenance["master_seed"] = g.seed;
            const fs::path out = output_path(g, ds_out, "dataset.csv");
            if (out.has_parent_path()) fs::create_directories(out.parent_path());
            save_dataset(d, out.string());
            std::cout << "wrote " << out.string() << ": " << d.rows() << " x (" << d.input_dim() << " + "
                      << d.output_dim() << ") in " << stats.seconds << " s\n";
        } else if (train_cmd->parsed()) {
            tr_flags.resolve(g);
            const Dataset d = load_dataset(tr_data);
            TrainConfig cfg = tr_flags.cfg;
            cfg.seed = g.seed;
            TrainLog log;
            const MlpModel m = train(d, tr_flags.hidden, cfg, &log);
            nlohmann::json j = model_to_json(m);
            j["dataset_fingerprint"] = d.structure_fingerprint;
            j["dataset_seed"] = d.seed;
            j["final_train_loss"] = log.epoch_loss.back();
            const fs::path out = output_path(g, tr_out, "model.json");
            write_json(out, j);
            std::cout << "wrote " << out.string() << ": " << m.parameter_count() << " parameters, final loss "
                      << log.epoch_loss.back() << '\n';
        } else if (eval_cmd->parsed()) {
            from_config(g, ev_trials_opt, ptr("/trials"), ev_trials);
            const MlpModel m = load_model(ev_model);
            const Dataset d = load_dataset(ev_data);
            EvalReport r;
            if (ev_trials <= 1) {
                r = evaluate(m, d);
            } else {
                const std::vector<int> hidden(m.layer_dims.begin() + 1, m.layer_dims.end() - 1);
                TrainConfig cfg = m.train_config;
                cfg.seed = g.seed;
                r = run_trials(d, hidden, cfg, ev_trials, g.threads);
            }
            nlohmann::json j = report_to_json(r);
            j["model"] = ev_model;
            j["data"] = ev_data;
            j["seed"] = g.seed;
            const fs::path out = output_path(g, ev_out, "report.json");
            write_json(out, j);
            std::cout << "mse total " << r.mse_total << ", coords " << r.mse_coords << ", forces " << r.mse_forces
                      << ", freqs " << r.mse_freqs << " over " << r.trials << " trial(s)\n";
            std::cout << "wrote " << out.string() << '\n';
        } else if (repro->parsed()) {
            from_config(g, rc_exp, ptr("/experiment"), rc.experiment);
            from_config(g, rc_sizes, ptr("/sizes"), rc.sizes);
            from_config(g, rc_trials, ptr("/trials"), rc.trials);
            rc_flags.resolve(g);
            rc.train = rc_flags.cfg;
            rc.hidden = rc_flags.hidden;
            apply_solver_config(g, rc.solver);
            rc.master_seed = g.seed;
            rc.threads = g.threads;
            rc.out_dir = out_opt->count() || g.config.contains("out_dir") ? g.out_dir
                                                                           : (fs::path("results") / rc.experiment).string();
            const ReproduceResult res = reproduce(rc, &std::cout);
            std::cout << "wrote " << rc.out_dir << "/mse_vs_samples.csv and runtime.csv\n";
            (void)res;
        }
    } catch (const NonConvergence& e) {
        std::cerr << "error: " << e.what() << " (residual " << e.residual() << " N)\n";
        return 2;
    } catch (const TrainingError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
