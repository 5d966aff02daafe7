#pragma once

/// Independent reference computations shared by the unit tests and the acceptance runner.

#include "tenseg/dataset.hpp"
#include "tenseg/modal.hpp"
#include "tenseg/statics.hpp"
#include "tenseg/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tenseg::oracle {

/// Nodal residual as a function of the full coordinate vector with rest lengths held fixed.
inline Vector residual_at(const Structure& s, const Vector& flat, const Vector& rest) {
    const NodeSet coords = NodeSet::from_flat(flat);
    const Vector x = force_density(s, rest, member_geometry(s, coords).lengths);
    return unbalanced_force(s, coords, x, LoadCase::none(s));
}

/// Central-difference Jacobian of the residual; the tangent stiffness should equal its negative.
inline DenseMatrix fd_jacobian(const Structure& s, const NodeSet& coords, const Vector& rest, double h = 1e-6) {
    const Vector n0 = coords.flat();
    const int dof = static_cast<int>(n0.size());
    DenseMatrix jac(s.free_map().dof(), dof);
    for (int i = 0; i < dof; ++i) {
        Vector plus = n0;
        Vector minus = n0;
        plus[i] += h;
        minus[i] -= h;
        jac.col(i) = (residual_at(s, plus, rest) - residual_at(s, minus, rest)) / (2 * h);
    }
    return jac;
}

/// A random non-equilibrium state away from the slack boundary: strings clearly taut,
/// bars clearly compressed, nodes jittered around the as-built geometry.
struct RandomState {
    NodeSet coords;
    Vector rest;
};

inline RandomState random_state(const Structure& s, Rng& rng, double jitter = 0.02) {
    Eigen::Matrix3Xd c = s.nodes().matrix();
    for (int j = 0; j < c.cols(); ++j) {
        for (int i = 0; i < 3; ++i) c(i, j) += rng.uniform(-jitter, jitter);
    }
    const NodeSet coords(c);
    const Vector len = member_geometry(s, coords).lengths;
    Vector rest(s.member_count());
    for (int k = 0; k < s.member_count(); ++k) {
        rest[k] = s.is_string(k) ? len[k] * rng.uniform(0.8, 0.95) : len[k] * rng.uniform(1.02, 1.1);
    }
    return {coords, rest};
}

/// Equilibrium twist of a symmetric prism from the force-density method alone.
///
/// With equal force densities per member family (bars q_b, triangle strings q_t, verticals
/// q_v), equilibrium at bottom node 0 is three linear equations in (q_b, q_t, q_v). A
/// self-stress exists exactly where their determinant vanishes; the root is bracketed on
/// the tensegrity branch and found by bisection.
inline double prism_determinant(double twist, double radius = 0.25, double height = 0.5) {
    auto bottom = [&](int i) {
        const double t = 2 * std::numbers::pi * i / 3;
        return Eigen::Vector3d(radius * std::cos(t), radius * std::sin(t), 0.0);
    };
    auto top = [&](int i) {
        const double t = 2 * std::numbers::pi * i / 3 + twist;
        return Eigen::Vector3d(radius * std::cos(t), radius * std::sin(t), height);
    };
    const Eigen::Vector3d b0 = bottom(0);
    Eigen::Matrix3d a;
    a.col(0) = top(0) - b0;                            // bar b0-t0
    a.col(1) = (bottom(1) - b0) + (bottom(2) - b0);    // bottom triangle
    a.col(2) = top(1) - b0;                            // vertical b0-t1
    return a.determinant();
}

inline double prism_twist_oracle(double lo = -std::numbers::pi + 0.1, double hi = -std::numbers::pi / 2) {
    double flo = prism_determinant(lo);
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = prism_determinant(mid);
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Twist of the top triangle relative to the bottom one in a solved prism, measured about
/// the axis joining the triangle centroids (so rigid motions do not matter).
inline double measured_prism_twist(const NodeSet& coords) {
    const Eigen::Vector3d cb = (coords.node(0) + coords.node(1) + coords.node(2)) / 3.0;
    const Eigen::Vector3d ct = (coords.node(3) + coords.node(4) + coords.node(5)) / 3.0;
    const Eigen::Vector3d axis = (ct - cb).normalized();
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) {
        Eigen::Vector3d u = coords.node(i) - cb;
        Eigen::Vector3d v = coords.node(3 + i) - ct;
        u -= u.dot(axis) * axis;
        v -= v.dot(axis) * axis;
        sum += std::atan2(axis.dot(u.cross(v)), u.dot(v));
    }
    return sum / 3.0;
}

/// Worst disagreement between stored dataset rows and an independent re-solve of a
/// seeded random subset: forces compared in N, frequencies relative.
struct PipelineCheck {
    int rows_checked = 0;
    double force_abs = 0.0;
    double freq_rel = 0.0;
    double coord_abs = 0.0;
};

inline PipelineCheck recheck_rows(const Structure& s, const Dataset& d, double fraction, std::uint64_t seed) {
    const int count = std::min(d.rows(), std::max(1, static_cast<int>(std::ceil(fraction * d.rows()))));
    Rng rng(seed);
    std::vector<int> perm(d.rows());
    for (int i = 0; i < d.rows(); ++i) perm[i] = i;
    for (int i = d.rows() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    PipelineCheck out;
    const auto& lay = d.layout;
    for (int r = 0; r < count; ++r) {
        const int row = perm[r];
        const Vector dl = d.inputs.row(row).transpose();
        const EquilibriumState st = form_find(s, dl, LoadCase::none(s));
        const ModalResult modal = modal_analysis(s, st);
        const Vector coords = reduced_coordinates(s, st);
        for (int c = 0; c < lay.coords; ++c) {
            out.coord_abs = std::max(out.coord_abs, std::abs(d.outputs(row, c) - coords[c]));
        }
        for (int c = 0; c < lay.forces; ++c) {
            const double stored = d.outputs(row, lay.coords + c) * d.scales.force;
            out.force_abs = std::max(out.force_abs, std::abs(stored - st.member_forces[c]));
        }
        for (int c = 0; c < lay.freqs; ++c) {
            const double stored = d.outputs(row, lay.coords + lay.forces + c) * d.scales.freq;
            const double fresh = modal.frequencies[c];
            // A saddle mode reports omega = 0; compare those absolutely.
            const double err = fresh == 0.0 ? std::abs(stored) : std::abs(stored - fresh) / std::abs(fresh);
            out.freq_rel = std::max(out.freq_rel, err);
        }
        ++out.rows_checked;
    }
    return out;
}

/// Largest relative disagreement between backpropagated gradients and central finite
/// differences of the loss, over every weight and bias. Entries where both are below
/// `floor` in magnitude are compared absolutely against it.
inline double gradient_check(const MlpModel& model, const DenseMatrix& x, const DenseMatrix& y, double h = 1e-6,
                             double floor = 1e-8) {
    const MlpGradients g = loss_gradients(model, x, y);
    double worst = 0.0;
    auto compare = [&](double analytic, double numeric) {
        const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
        worst = std::max(worst, std::abs(analytic - numeric) / scale);
    };
    MlpModel m = model;
    for (int l = 0; l < m.layer_count(); ++l) {
        for (Eigen::Index i = 0; i < m.weights[l].size(); ++i) {
            double& w = m.weights[l].data()[i];
            const double keep = w;
            w = keep + h;
            const double up = mse_loss(m, x, y);
            w = keep - h;
            const double down = mse_loss(m, x, y);
            w = keep;
            compare(g.weights[l].data()[i], (up - down) / (2 * h));
        }
        for (Eigen::Index i = 0; i < m.biases[l].size(); ++i) {
            double& b = m.biases[l][i];
            const double keep = b;
            b = keep + h;
            const double up = mse_loss(m, x, y);
            b = keep - h;
            const double down = mse_loss(m, x, y);
            b = keep;
            compare(g.biases[l][i], (up - down) / (2 * h));
        }
    }
    return worst;
}

/// A dataset whose outputs all sit in one column group, for synthetic learning tests.
inline Dataset synthetic_dataset(DenseMatrix inputs, DenseMatrix outputs) {
    Dataset d;
    d.layout = {static_cast<int>(outputs.cols()), 0, 0};
    d.inputs = std::move(inputs);
    d.outputs = std::move(outputs);
    return d;
}

}  // namespace tenseg::oracle
