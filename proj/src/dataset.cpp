#include "tenseg/dataset.hpp"

#include "tenseg/errors.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace tenseg {

void SamplingSpec::validate() const {
    if (sample_count < 1) throw InvalidParameter("SamplingSpec: sample_count must be at least 1");
    for (const auto& [lo, hi] : ranges) {
        if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
            throw InvalidParameter("SamplingSpec: every range needs lo <= hi");
        }
    }
}

Dataset Dataset::subset(const std::vector<int>& rows) const {
    Dataset out = *this;
    out.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
    out.outputs.resize(static_cast<Eigen::Index>(rows.size()), outputs.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] < 0 || rows[r] >= this->rows()) throw InvalidParameter("Dataset::subset: row out of range");
        out.inputs.row(static_cast<Eigen::Index>(r)) = inputs.row(rows[r]);
        out.outputs.row(static_cast<Eigen::Index>(r)) = outputs.row(rows[r]);
    }
    return out;
}

Dataset Dataset::head(int n) const {
    if (n < 1 || n > rows()) throw InvalidParameter("Dataset::head: size out of range");
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return subset(idx);
}

// -------------------------------------------------------------- outputs

NodeSet canonical_frame(const Structure& s, const NodeSet& solved) {
    if (!s.free_map().all_free()) return solved;
    const Eigen::Matrix3Xd& p = solved.matrix();
    const Eigen::Matrix3Xd& q = s.nodes().matrix();
    const Eigen::Vector3d pc = p.rowwise().mean();
    const Eigen::Vector3d qc = q.rowwise().mean();
    const Eigen::Matrix3Xd pd = p.colwise() - pc;
    const Eigen::Matrix3Xd qd = q.colwise() - qc;
    const Eigen::Matrix3d h = pd * qd.transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double d = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    const Eigen::Matrix3d r = svd.matrixV() * Eigen::Vector3d(1.0, 1.0, d).asDiagonal() * svd.matrixU().transpose();
    Eigen::Matrix3Xd aligned = (r * pd).colwise() + qc;
    return NodeSet(std::move(aligned));
}

Vector reduced_coordinates(const Structure& s, const EquilibriumState& state) {
    const NodeSet frame = canonical_frame(s, state.coords);
    const auto& picks = s.reported_coordinates();
    if (picks.empty()) return frame.flat();
    Vector out(static_cast<Eigen::Index>(picks.size()));
    for (std::size_t i = 0; i < picks.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = frame.matrix()(picks[i].second, picks[i].first);
    }
    return out;
}

int expected_frequency_count(const Structure& s) {
    return s.free_map().dof() - (s.free_map().all_free() ? 6 : 0);
}

Vector output_row(const Structure& s, const EquilibriumState& state, const ModalResult& modal,
                  const OutputScales& scales) {
    const Vector coords = reduced_coordinates(s, state);
    Vector row(coords.size() + state.member_forces.size() + modal.frequencies.size());
    row << coords, state.member_forces / scales.force, modal.frequencies / scales.freq;
    return row;
}

// ----------------------------------------------------------- generation

Dataset generate(const Structure& s, const SamplingSpec& spec, const SolverConfig& cfg, int threads,
                 GenerationStats* stats) {
    spec.validate();
    cfg.validate();
    const int k = static_cast<int>(s.actuated_cables().size());
    if (static_cast<int>(spec.ranges.size()) != k) {
        throw InvalidParameter("generate: one sampling range per actuated cable is required");
    }
    const auto t0 = std::chrono::steady_clock::now();

    // All draws happen before any solve so the worker count cannot change the data.
    Rng rng(spec.seed);
    DenseMatrix inputs(spec.sample_count, k);
    for (int i = 0; i < spec.sample_count; ++i) {
        for (int j = 0; j < k; ++j) inputs(i, j) = rng.uniform(spec.ranges[j].first, spec.ranges[j].second);
    }

    const int coord_count = s.reported_coordinates().empty() ? 3 * s.node_count()
                                                              : static_cast<int>(s.reported_coordinates().size());
    const OutputLayout layout{coord_count, s.member_count(), expected_frequency_count(s)};
    const OutputScales scales;
    DenseMatrix outputs(spec.sample_count, layout.total());
    std::vector<int> iterations(spec.sample_count, 0);
    const LoadCase load = LoadCase::none(s);

    parallel_for(spec.sample_count, threads, [&](int i) {
        const Vector dl = inputs.row(i).transpose();
        try {
            const EquilibriumState st = form_find(s, dl, load, cfg);
            const ModalResult modal = modal_analysis(s, st);
            if (modal.frequencies.size() != layout.freqs) {
                std::ostringstream msg;
                msg << modal.frequencies.size() << " non-zero modes (" << modal.zero_mode_count
                    << " zero modes), expected " << layout.freqs;
                throw Error(msg.str());
            }
            outputs.row(i) = output_row(s, st, modal, scales).transpose();
            iterations[i] = st.iterations;
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << std::setprecision(17) << "sample " << i << " (dl0 =";
            for (int j = 0; j < k; ++j) msg << ' ' << dl[j];
            msg << "): " << e.what();
            throw Error(msg.str());
        }
    });

    Dataset d;
    d.inputs = std::move(inputs);
    d.outputs = std::move(outputs);
    d.layout = layout;
    d.scales = scales;
    d.seed = spec.seed;
    d.structure_fingerprint = fingerprint(s);
    nlohmann::json ranges = nlohmann::json::array();
    for (const auto& [lo, hi] : spec.ranges) ranges.push_back({lo, hi});
    d.provenance = {{"structure", structure_to_json(s)},
                    {"sampling", {{"ranges", ranges}, {"sample_count", spec.sample_count}, {"seed", spec.seed}}},
                    {"solver",
                     {{"tolerance", cfg.tolerance},
                      {"shift", cfg.shift},
                      {"max_iterations", cfg.max_iterations},
                      {"line_search_tol", cfg.line_search_tol}}}};
    if (stats) {
        stats->iterations = std::move(iterations);
        stats->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return d;
}

std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw InvalidParameter("split: train_fraction must lie in (0, 1)");
    }
    const int n = d.rows();
    const int n_train = static_cast<int>(std::floor(train_fraction * n));
    if (n_train < 1 || n_train >= n) throw InvalidParameter("split: one side of the split would be empty");
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[i], perm[j]);
    }
    std::vector<int> train(perm.begin(), perm.begin() + n_train);
    std::vector<int> test(perm.begin() + n_train, perm.end());
    return {d.subset(train), d.subset(test)};
}

// ------------------------------------------------------------------ I/O

std::string meta_path_for(const std::string& csv_path) {
    const std::string ext = ".csv";
    if (csv_path.size() >= ext.size() && csv_path.compare(csv_path.size() - ext.size(), ext.size(), ext) == 0) {
        return csv_path.substr(0, csv_path.size() - ext.size()) + ".meta.json";
    }
    return csv_path + ".meta.json";
}

namespace {

void append_number(std::string& line, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    line += buf;
}

}  // namespace

void save_dataset(const Dataset& d, const std::string& path) {
    std::ofstream csv(path);
    if (!csv) throw Error("cannot open " + path + " for writing");
    std::string header;
    auto add = [&](const std::string& prefix, int count) {
        for (int i = 1; i <= count; ++i) {
            if (!header.empty()) header += ',';
            header += prefix + std::to_string(i);
        }
    };
    add("dl_", d.input_dim());
    add("coord_", d.layout.coords);
    add("force_", d.layout.forces);
    add("freq_", d.layout.freqs);
    csv << header << '\n';
    std::string line;
    for (int r = 0; r < d.rows(); ++r) {
        line.clear();
        for (int c = 0; c < d.input_dim(); ++c) {
            if (c) line += ',';
            append_number(line, d.inputs(r, c));
        }
        for (int c = 0; c < d.output_dim(); ++c) {
            line += ',';
            append_number(line, d.outputs(r, c));
        }
        csv << line << '\n';
    }

    nlohmann::json meta;
    meta["format"] = "tenseg-dataset-1";
    meta["rows"] = d.rows();
    meta["inputs"] = d.input_dim();
    meta["layout"] = {{"coords", d.layout.coords}, {"forces", d.layout.forces}, {"freqs", d.layout.freqs}};
    meta["scales"] = {{"force", d.scales.force}, {"freq", d.scales.freq}};
    meta["seed"] = d.seed;
    meta["structure_fingerprint"] = d.structure_fingerprint;
    meta["provenance"] = d.provenance;
    std::ofstream side(meta_path_for(path));
    if (!side) throw Error("cannot open " + meta_path_for(path) + " for writing");
    side << std::setw(2) << meta << '\n';
}

Dataset load_dataset(const std::string& path) {
    std::ifstream side(meta_path_for(path));
    if (!side) throw Error("missing dataset sidecar " + meta_path_for(path));
    nlohmann::json meta;
    Dataset d;
    int rows = 0;
    int inputs = 0;
    try {
        side >> meta;
        rows = meta.at("rows").get<int>();
        inputs = meta.at("inputs").get<int>();
        d.layout = {meta.at("layout").at("coords").get<int>(), meta.at("layout").at("forces").get<int>(),
                    meta.at("layout").at("freqs").get<int>()};
        d.scales = {meta.at("scales").at("force").get<double>(), meta.at("scales").at("freq").get<double>()};
        d.seed = meta.at("seed").get<std::uint64_t>();
        d.structure_fingerprint = meta.value("structure_fingerprint", std::string{});
        d.provenance = meta.value("provenance", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(meta_path_for(path) + ": " + e.what());
    }

    std::ifstream csv(path);
    if (!csv) throw Error("cannot open " + path);
    std::string line;
    std::getline(csv, line);  // header
    const int cols = inputs + d.layout.total();
    d.inputs.resize(rows, inputs);
    d.outputs.resize(rows, d.layout.total());
    for (int r = 0; r < rows; ++r) {
        if (!std::getline(csv, line)) throw FormatError(path + ": fewer rows than the sidecar declares");
        const char* p = line.c_str();
        for (int c = 0; c < cols; ++c) {
            char* end = nullptr;
            const double v = std::strtod(p, &end);
            if (end == p) throw FormatError(path + ": bad number on row " + std::to_string(r + 1));
            if (c < inputs) {
                d.inputs(r, c) = v;
            } else {
                d.outputs(r, c - inputs) = v;
            }
            p = end;
            if (c + 1 < cols) {
                if (*p != ',') throw FormatError(path + ": too few columns on row " + std::to_string(r + 1));
                ++p;
            }
        }
    }
    return d;
}

SamplingSpec benchmark_sampling(const std::string& id, int sample_count, std::uint64_t seed) {
    SamplingSpec spec;
    spec.sample_count = sample_count;
    spec.seed = seed;
    if (id == "dbar") {
        spec.ranges.assign(2, {-1.0, 0.0});
    } else if (id == "prism") {
        spec.ranges.assign(3, {-0.15, 0.0});
    } else if (id == "lander") {
        spec.ranges.assign(2, {-0.3, 0.0});
    } else {
        throw InvalidParameter("unknown benchmark '" + id + "'");
    }
    return spec;
}

}  // namespace tenseg
