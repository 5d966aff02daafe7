#pragma once

#include "tenseg/topology.hpp"

#include <functional>
#include <optional>

namespace tenseg {

/// External nodal loads and optional self-weight.
class LoadCase {
public:
    /// No loads, gravity off.
    static LoadCase none(const Structure& s);
    /// Throws InvalidParameter when gravity is requested for a structure with no
    /// fixed nodes: a free-floating body under net load has no static equilibrium.
    static LoadCase make(const Structure& s, Vector external_force, bool gravity_enabled = false,
                         double gravity_accel = 9.80665);

    const Vector& external_force() const { return external_; }
    bool gravity_enabled() const { return gravity_; }
    double gravity_accel() const { return accel_; }
    /// Nodal weight vector g (positive along +z); half of each member's weight goes to each end.
    const Vector& gravity_vector() const { return weights_; }
    /// f_ex - g
    Vector net_load() const { return external_ - weights_; }

private:
    Vector external_;
    Vector weights_;
    bool gravity_ = false;
    double accel_ = 9.80665;
};

struct SolverConfig {
    double tolerance = 1e-6;  // N, Euclidean norm of the free-DOF residual
    double shift = 0.1;       // mu
    int max_iterations = 10000;
    double line_search_tol = 1e-8;
    int line_search_max_iter = 100;

    void validate() const;
};

struct EquilibriumState {
    NodeSet coords;
    Vector force_density;        // x, N/m
    Vector member_forces;        // t = x .* l, N (negative = compression)
    Vector lengths;              // l at the solution, m
    Vector rest_lengths_actual;  // rest lengths after actuation, m
    double residual_norm = 0.0;  // N
    int iterations = 0;
};

/// One Newton iteration of form_find, reported to an optional observer.
struct SolverIterate {
    int iteration = 0;
    double residual_before = 0.0;
    double residual_after = 0.0;
    double lambda_min = 0.0;  // smallest eigenvalue of K_Taa before the shift
    double step = 0.0;        // delta from the line search
    double energy_before = 0.0;
    double energy_after = 0.0;
};
using SolverObserver = std::function<void(const SolverIterate&)>;

/// x_k = E_k A_k (1/rest_k - 1/l_k); strings are clipped below at zero.
Vector force_density(const Structure& s, const Vector& rest_lengths, const Vector& current_lengths);

/// K = (C^T diag(x) C) kron I_3, 3 n_n x 3 n_n.
DenseMatrix stiffness_matrix(const Structure& s, const Vector& x);

/// A_t = (C^T kron I_3) b.d.(N C^T) diag(l)^-1, 3 n_n x n_e.
DenseMatrix equilibrium_matrix(const Structure& s, const NodeSet& coords);

/// f_a = E_a^T (f_ex - g - K n) at the given coordinates and force densities.
Vector unbalanced_force(const Structure& s, const NodeSet& coords, const Vector& x, const LoadCase& load);

/// Total potential energy: linear-elastic strain energy (slack strings contribute
/// nothing) plus gravity potential minus external work.
double potential_energy(const Structure& s, const NodeSet& coords, const Vector& rest_lengths,
                        const LoadCase& load);

/// Rest lengths that produce prestress x0 at the structure's current geometry:
/// l0 = EA l / (x0 l + EA).
Vector rest_lengths_from_prestress(const Structure& s, const Vector& x0);

/// Rest lengths after adding `dl0` to the actuated cables. Throws InvalidActuation
/// on a size mismatch or a non-positive result.
Vector actuated_rest_lengths(const Structure& s, const Vector& dl0);

/// Form-finding under cable actuation: regularized Newton with an eigenvalue shift
/// on the tangent stiffness and a golden-section line search on the potential energy.
EquilibriumState form_find(const Structure& s, const Vector& dl0, const LoadCase& load,
                           const SolverConfig& cfg = {}, const SolverObserver& observer = {});

/// Same solver with every member's rest length given explicitly.
EquilibriumState form_find_rest(const Structure& s, const Vector& rest_lengths, const LoadCase& load,
                                const SolverConfig& cfg = {}, const SolverObserver& observer = {});

nlohmann::json state_to_json(const EquilibriumState& st);

}  // namespace tenseg
