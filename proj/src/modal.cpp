#include "tenseg/modal.hpp"

#include "tenseg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tenseg {

DenseMatrix mass_matrix(const Structure& s) {
    const int nn = s.node_count();
    DenseMatrix nodal = DenseMatrix::Zero(nn, nn);  // |C|^T diag(m) |C|
    const auto& c = s.connectivity();
    for (int k = 0; k < s.member_count(); ++k) {
        const double m = s.members()[k].mass();
        if (!(m > 0.0)) throw MassError("mass_matrix: member " + std::to_string(k) + " has no mass");
        const auto& e = c.ends(k);
        nodal(e.tail, e.tail) += m;
        nodal(e.head, e.head) += m;
        nodal(e.tail, e.head) += m;
        nodal(e.head, e.tail) += m;
    }
    // Adding the diagonal part doubles it: per member m/3 on the diagonal, m/6 off it.
    nodal.diagonal() *= 2.0;
    nodal /= 6.0;
    return kron_identity3(nodal);
}

std::vector<bool> slack_mask(const Structure& s, const Vector& lengths, const Vector& rest_lengths) {
    if (lengths.size() != s.member_count() || rest_lengths.size() != s.member_count()) {
        throw DimensionMismatch("slack_mask: one length per member is required");
    }
    std::vector<bool> slack(s.member_count(), false);
    for (int k = s.bar_count(); k < s.member_count(); ++k) slack[k] = lengths[k] < rest_lengths[k];
    return slack;
}

DenseMatrix tangent_stiffness(const Structure& s, const NodeSet& coords, const Vector& x,
                              const std::vector<bool>& slack) {
    if (x.size() != s.member_count()) throw DimensionMismatch("tangent_stiffness: x needs one entry per member");
    if (!slack.empty() && static_cast<int>(slack.size()) != s.member_count()) {
        throw DimensionMismatch("tangent_stiffness: slack mask size");
    }
    const MemberGeometry g = member_geometry(s, coords);
    const auto& c = s.connectivity();
    DenseMatrix kt = DenseMatrix::Zero(3 * s.node_count(), 3 * s.node_count());
    for (int k = 0; k < s.member_count(); ++k) {
        const double l = g.lengths[k];
        const bool is_slack = !slack.empty() && slack[k];
        const double w = is_slack ? 0.0 : s.members()[k].axial_rigidity() / (l * l * l);
        const Eigen::Vector3d v = g.vectors.col(k);
        const Eigen::Matrix3d block = x[k] * Eigen::Matrix3d::Identity() + w * v * v.transpose();
        const int i = 3 * c.ends(k).tail;
        const int j = 3 * c.ends(k).head;
        kt.block<3, 3>(i, i) += block;
        kt.block<3, 3>(j, j) += block;
        kt.block<3, 3>(i, j) -= block;
        kt.block<3, 3>(j, i) -= block;
    }
    return kt;
}

DenseMatrix tangent_stiffness_at(const Structure& s, const NodeSet& coords, const Vector& rest_lengths) {
    const MemberGeometry g = member_geometry(s, coords);
    const Vector x = force_density(s, rest_lengths, g.lengths);
    return tangent_stiffness(s, coords, x, slack_mask(s, g.lengths, rest_lengths));
}

ModalResult modal_analysis(const Structure& s, const EquilibriumState& state, const ModalOptions& opt) {
    const auto& fm = s.free_map();
    const auto slack = slack_mask(s, state.lengths, state.rest_lengths_actual);
    const DenseMatrix kaa = fm.gather(tangent_stiffness(s, state.coords, state.force_density, slack));
    const DenseMatrix maa = fm.gather(mass_matrix(s));
    EigenDecomposition eig = gen_sym_eig(kaa, maa);

    ModalResult r;
    r.eigenvalues = eig.values;
    r.mode_shapes = std::move(eig.vectors);
    const double scale = r.eigenvalues.size() ? r.eigenvalues.cwiseAbs().maxCoeff() : 0.0;
    const double cut = opt.zero_tol * scale;
    std::vector<double> freqs;
    for (double lambda : r.eigenvalues) {
        if (std::abs(lambda) < cut || scale == 0.0) {
            ++r.zero_mode_count;
            continue;
        }
        if (lambda < 0.0) ++r.unstable_mode_count;
        freqs.push_back(std::sqrt(std::max(lambda, 0.0)));
    }
    std::sort(freqs.begin(), freqs.end());
    r.frequencies = Eigen::Map<Vector>(freqs.data(), static_cast<Eigen::Index>(freqs.size()));
    r.hz_frequencies = r.frequencies / (2.0 * std::numbers::pi);
    return r;
}

nlohmann::json modal_to_json(const ModalResult& r, bool include_shapes) {
    auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    nlohmann::json j;
    j["eigenvalues"] = vec(r.eigenvalues);
    j["frequencies_rad_s"] = vec(r.frequencies);
    j["frequencies_hz"] = vec(r.hz_frequencies);
    j["zero_mode_count"] = r.zero_mode_count;
    j["unstable_mode_count"] = r.unstable_mode_count;
    if (include_shapes) {
        nlohmann::json shapes = nlohmann::json::array();
        for (Eigen::Index c = 0; c < r.mode_shapes.cols(); ++c) shapes.push_back(vec(r.mode_shapes.col(c)));
        j["mode_shapes"] = std::move(shapes);
    }
    return j;
}

}  // namespace tenseg
