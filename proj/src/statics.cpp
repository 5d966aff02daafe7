#include "tenseg/statics.hpp"

#include "tenseg/errors.hpp"
#include "tenseg/modal.hpp"

#include <cmath>
#include <sstream>

namespace tenseg {

// --------------------------------------------------------------- LoadCase

LoadCase LoadCase::none(const Structure& s) { return make(s, Vector::Zero(3 * s.node_count())); }

LoadCase LoadCase::make(const Structure& s, Vector external_force, bool gravity_enabled, double gravity_accel) {
    if (external_force.size() != 3 * s.node_count()) {
        throw DimensionMismatch("LoadCase: external force needs 3 entries per node");
    }
    if (!external_force.allFinite()) throw InvalidParameter("LoadCase: external force must be finite");
    if (gravity_enabled && s.free_map().all_free()) {
        throw InvalidParameter("LoadCase: gravity on a structure without fixed nodes has no static equilibrium");
    }
    LoadCase lc;
    lc.external_ = std::move(external_force);
    lc.gravity_ = gravity_enabled;
    lc.accel_ = gravity_accel;
    lc.weights_ = Vector::Zero(3 * s.node_count());
    if (gravity_enabled) {
        const auto& c = s.connectivity();
        for (int k = 0; k < s.member_count(); ++k) {
            const double half = 0.5 * s.members()[k].mass() * gravity_accel;
            lc.weights_[3 * c.ends(k).tail + 2] += half;
            lc.weights_[3 * c.ends(k).head + 2] += half;
        }
    }
    return lc;
}

void SolverConfig::validate() const {
    if (!(tolerance > 0.0)) throw InvalidParameter("SolverConfig: tolerance must be positive");
    if (!(shift > 0.0)) throw InvalidParameter("SolverConfig: shift must be positive");
    if (max_iterations < 1) throw InvalidParameter("SolverConfig: max_iterations must be at least 1");
    if (!(line_search_tol > 0.0)) throw InvalidParameter("SolverConfig: line_search_tol must be positive");
}

// -------------------------------------------------------------- operators

Vector force_density(const Structure& s, const Vector& rest_lengths, const Vector& current_lengths) {
    const int ne = s.member_count();
    if (rest_lengths.size() != ne || current_lengths.size() != ne) {
        throw DimensionMismatch("force_density: one length per member is required");
    }
    Vector x(ne);
    for (int k = 0; k < ne; ++k) {
        if (!(rest_lengths[k] > 0.0)) {
            throw InvalidParameter("force_density: member " + std::to_string(k) + " has non-positive rest length");
        }
        if (!(current_lengths[k] > 0.0)) {
            throw DegenerateGeometry("force_density: member " + std::to_string(k) + " has zero length", k);
        }
        x[k] = s.members()[k].axial_rigidity() * (1.0 / rest_lengths[k] - 1.0 / current_lengths[k]);
        if (s.is_string(k) && x[k] < 0.0) x[k] = 0.0;
    }
    return x;
}

DenseMatrix stiffness_matrix(const Structure& s, const Vector& x) {
    if (x.size() != s.member_count()) throw DimensionMismatch("stiffness_matrix: x needs one entry per member");
    const auto& c = s.connectivity();
    DenseMatrix lap = DenseMatrix::Zero(s.node_count(), s.node_count());  // C^T diag(x) C
    for (int k = 0; k < s.member_count(); ++k) {
        const int i = c.ends(k).tail;
        const int j = c.ends(k).head;
        lap(i, i) += x[k];
        lap(j, j) += x[k];
        lap(i, j) -= x[k];
        lap(j, i) -= x[k];
    }
    return kron_identity3(lap);
}

DenseMatrix equilibrium_matrix(const Structure& s, const NodeSet& coords) {
    const MemberGeometry g = member_geometry(s, coords);
    const DenseMatrix ct = kron_identity3(s.connectivity().matrix().transpose());
    DenseMatrix at = ct * g.block_diagonal();
    for (int k = 0; k < s.member_count(); ++k) at.col(k) /= g.lengths[k];
    return at;
}

namespace {

/// K n without forming K: member k pushes -x v on its tail and +x v on its head.
Vector stiffness_times_coords(const Structure& s, const NodeSet& coords, const Vector& x) {
    const auto& c = s.connectivity();
    Vector kn = Vector::Zero(3 * s.node_count());
    for (int k = 0; k < s.member_count(); ++k) {
        const int i = c.ends(k).tail;
        const int j = c.ends(k).head;
        const Eigen::Vector3d v = coords.node(j) - coords.node(i);
        kn.segment<3>(3 * i) -= x[k] * v;
        kn.segment<3>(3 * j) += x[k] * v;
    }
    return kn;
}

double strain_energy_term(double ea, double rest, double l, bool is_string) {
    if (is_string && l < rest) return 0.0;
    const double d = l - rest;
    return ea * d * d / (2.0 * rest);
}

/// V(n + step) - V(n) evaluated member by member. The length change is formed as
/// (|v + dv|^2 - |v|^2) / (l' + l) so small steps keep full relative precision.
double energy_change(const Structure& s, const NodeSet& coords, const Vector& step, const Vector& rest,
                     const Vector& lengths, const Vector& linear_load) {
    const auto& c = s.connectivity();
    double dv_total = -linear_load.dot(step);
    for (int k = 0; k < s.member_count(); ++k) {
        const int i = c.ends(k).tail;
        const int j = c.ends(k).head;
        const Eigen::Vector3d v = coords.node(j) - coords.node(i);
        const Eigen::Vector3d dv = step.segment<3>(3 * j) - step.segment<3>(3 * i);
        const double l0 = lengths[k];
        const double l1 = (v + dv).norm();
        const double ea = s.members()[k].axial_rigidity();
        const bool str = s.is_string(k);
        const bool taut0 = !(str && l0 < rest[k]);
        const bool taut1 = !(str && l1 < rest[k]);
        if (taut0 && taut1) {
            const double denom = l1 + l0;
            const double dl = denom > 0.0 ? (2.0 * v.dot(dv) + dv.squaredNorm()) / denom : 0.0;
            dv_total += ea / (2.0 * rest[k]) * dl * (l1 + l0 - 2.0 * rest[k]);
        } else {
            dv_total += strain_energy_term(ea, rest[k], l1, str) - strain_energy_term(ea, rest[k], l0, str);
        }
    }
    return dv_total;
}

}  // namespace

Vector unbalanced_force(const Structure& s, const NodeSet& coords, const Vector& x, const LoadCase& load) {
    if (x.size() != s.member_count()) throw DimensionMismatch("unbalanced_force: x needs one entry per member");
    if (coords.count() != s.node_count()) throw DimensionMismatch("unbalanced_force: node count differs");
    const Vector full = load.net_load() - stiffness_times_coords(s, coords, x);
    return s.free_map().gather(full);
}

double potential_energy(const Structure& s, const NodeSet& coords, const Vector& rest_lengths,
                        const LoadCase& load) {
    if (rest_lengths.size() != s.member_count()) throw DimensionMismatch("potential_energy: rest length count");
    const auto& c = s.connectivity();
    double v = 0.0;
    for (int k = 0; k < s.member_count(); ++k) {
        if (!(rest_lengths[k] > 0.0)) {
            throw InvalidParameter("potential_energy: member " + std::to_string(k) + " has non-positive rest length");
        }
        const double l = (coords.node(c.ends(k).head) - coords.node(c.ends(k).tail)).norm();
        v += strain_energy_term(s.members()[k].axial_rigidity(), rest_lengths[k], l, s.is_string(k));
    }
    const Vector n = coords.flat();
    v += load.gravity_vector().dot(n) - load.external_force().dot(n);
    return v;
}

Vector rest_lengths_from_prestress(const Structure& s, const Vector& x0) {
    if (x0.size() != s.member_count()) throw DimensionMismatch("rest_lengths_from_prestress: size");
    const MemberGeometry g = member_geometry(s);
    Vector rest(s.member_count());
    for (int k = 0; k < s.member_count(); ++k) {
        const double ea = s.members()[k].axial_rigidity();
        const double l = g.lengths[k];
        rest[k] = ea * l / (x0[k] * l + ea);
        if (!(rest[k] > 0.0)) {
            throw InvalidParameter("rest_lengths_from_prestress: member " + std::to_string(k) +
                                   " prestress leaves no positive rest length");
        }
    }
    return rest;
}

Vector actuated_rest_lengths(const Structure& s, const Vector& dl0) {
    const auto& act = s.actuated_cables();
    if (dl0.size() != static_cast<Eigen::Index>(act.size())) {
        std::ostringstream msg;
        msg << "actuation has " << dl0.size() << " entries, structure has " << act.size() << " actuated cables";
        throw InvalidActuation(msg.str());
    }
    Vector rest = s.rest_lengths();
    for (std::size_t j = 0; j < act.size(); ++j) {
        const int k = s.actuated_member(static_cast<int>(j));
        rest[k] += dl0[static_cast<Eigen::Index>(j)];
        if (!(rest[k] > 0.0) || !std::isfinite(rest[k])) {
            std::ostringstream msg;
            msg << "actuated cable " << j << " (member " << k << ") ends with rest length " << rest[k];
            throw InvalidActuation(msg.str());
        }
    }
    return rest;
}

EquilibriumState form_find(const Structure& s, const Vector& dl0, const LoadCase& load,
                           const SolverConfig& cfg, const SolverObserver& observer) {
    return form_find_rest(s, actuated_rest_lengths(s, dl0), load, cfg, observer);
}

EquilibriumState form_find_rest(const Structure& s, const Vector& rest_lengths, const LoadCase& load,
                                const SolverConfig& cfg, const SolverObserver& observer) {
    cfg.validate();
    if (rest_lengths.size() != s.member_count()) throw InvalidActuation("form_find: one rest length per member");
    for (int k = 0; k < s.member_count(); ++k) {
        if (!(rest_lengths[k] > 0.0)) {
            throw InvalidActuation("form_find: member " + std::to_string(k) + " has non-positive rest length");
        }
    }
    const auto& fm = s.free_map();
    const Vector linear_load = load.net_load();

    Vector n = s.nodes().flat();
    NodeSet coords = s.nodes();
    MemberGeometry geom = member_geometry(s, coords);
    Vector x = force_density(s, rest_lengths, geom.lengths);
    Vector fa = unbalanced_force(s, coords, x, load);
    double residual = fa.norm();

    int iter = 0;
    while (residual > cfg.tolerance) {
        if (iter >= cfg.max_iterations) {
            std::ostringstream msg;
            msg << "form_find: no convergence after " << iter << " iterations, residual " << residual << " N";
            throw NonConvergence(msg.str(), residual, iter);
        }
        const DenseMatrix kaa = fm.gather(
            tangent_stiffness(s, coords, x, slack_mask(s, geom.lengths, rest_lengths)));
        const double lambda = sym_eig(kaa).values[0];
        const double shift = lambda < 0.0 ? cfg.shift + std::abs(lambda) : cfg.shift;
        DenseMatrix shifted = kaa;
        shifted.diagonal().array() += shift;
        const Vector dna = solve_spd(shifted, fa);

        Vector dn = Vector::Zero(n.size());
        fm.scatter(dna, dn);
        auto change = [&](double delta) {
            return energy_change(s, coords, delta * dn, rest_lengths, geom.lengths, linear_load);
        };
        const ScalarMinimum ls =
            minimize_scalar(change, 0.0, 1.0, cfg.line_search_tol, cfg.line_search_max_iter);

        SolverIterate trace;
        if (observer) {
            trace.iteration = iter + 1;
            trace.residual_before = residual;
            trace.lambda_min = lambda;
            trace.step = ls.argmin;
            trace.energy_before = potential_energy(s, coords, rest_lengths, load);
        }

        n += ls.argmin * dn;
        coords = NodeSet::from_flat(n);
        geom = member_geometry(s, coords);
        x = force_density(s, rest_lengths, geom.lengths);
        fa = unbalanced_force(s, coords, x, load);
        residual = fa.norm();
        ++iter;

        if (observer) {
            trace.residual_after = residual;
            trace.energy_after = trace.energy_before + ls.value;
            observer(trace);
        }
    }

    EquilibriumState st;
    st.coords = coords;
    st.force_density = x;
    st.lengths = geom.lengths;
    st.member_forces = x.cwiseProduct(geom.lengths);
    st.rest_lengths_actual = rest_lengths;
    st.residual_norm = residual;
    st.iterations = iter;
    return st;
}

nlohmann::json state_to_json(const EquilibriumState& st) {
    auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    nlohmann::json j;
    nlohmann::json nodes = nlohmann::json::array();
    for (int i = 0; i < st.coords.count(); ++i) {
        const auto p = st.coords.node(i);
        nodes.push_back({p.x(), p.y(), p.z()});
    }
    j["coordinates"] = std::move(nodes);
    j["force_density"] = vec(st.force_density);
    j["member_forces"] = vec(st.member_forces);
    j["lengths"] = vec(st.lengths);
    j["rest_lengths"] = vec(st.rest_lengths_actual);
    j["residual_norm"] = st.residual_norm;
    j["iterations"] = st.iterations;
    return j;
}

}  // namespace tenseg
