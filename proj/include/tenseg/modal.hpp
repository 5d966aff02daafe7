#pragma once

#include "tenseg/statics.hpp"

#include <vector>

namespace tenseg {

struct ModalResult {
    /// All generalized eigenvalues omega^2, ascending.
    Vector eigenvalues;
    /// Mode shapes, M_aa-orthonormal; column i pairs with eigenvalues[i].
    DenseMatrix mode_shapes;
    /// omega = sqrt(max(lambda, 0)) for every non-zero mode, ascending (rad/s).
    Vector frequencies;
    Vector hz_frequencies;
    int zero_mode_count = 0;
    /// Non-zero modes with negative eigenvalue (the equilibrium is a saddle along them).
    int unstable_mode_count = 0;
};

/// Consistent mass matrix (1/6)(|C|^T m |C| + diag(|C|^T m |C|)) kron I_3 with
/// member masses rho A l0. Throws MassError if any member mass is not positive.
DenseMatrix mass_matrix(const Structure& s);

/// Strings whose current length is below their rest length.
std::vector<bool> slack_mask(const Structure& s, const Vector& lengths, const Vector& rest_lengths);

/// K_T = (C^T diag(x) C) kron I_3 + A_1 diag(EA / l^3) A_1^T. Members flagged in
/// `slack` contribute no material term.
DenseMatrix tangent_stiffness(const Structure& s, const NodeSet& coords, const Vector& x,
                              const std::vector<bool>& slack = {});

/// Tangent stiffness with x and the slack set derived from rest lengths.
DenseMatrix tangent_stiffness_at(const Structure& s, const NodeSet& coords, const Vector& rest_lengths);

struct ModalOptions {
    /// |lambda| < zero_tol * max|lambda| marks a zero (rigid-body) mode.
    double zero_tol = 1e-6;
};

ModalResult modal_analysis(const Structure& s, const EquilibriumState& state, const ModalOptions& opt = {});

nlohmann::json modal_to_json(const ModalResult& r, bool include_shapes = false);

}  // namespace tenseg
