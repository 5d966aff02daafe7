#include "doctest.h"

#include "oracles.hpp"
#include "tenseg/dataset.hpp"
#include "tenseg/errors.hpp"

#include <cmath>

using namespace tenseg;

namespace {

/// Two nodes, one member from the origin along +x.
Structure single_member(MemberKind kind, double length, double area) {
    Eigen::Matrix3Xd c = Eigen::Matrix3Xd::Zero(3, 2);
    c(0, 1) = length;
    std::vector<MemberEnds> bars, strings;
    (kind == MemberKind::bar ? bars : strings).push_back({0, 1});
    return Structure(NodeSet(c), Connectivity(2, bars, strings),
                     {{kind, steel::kYoungsModulus, area, steel::kDensity, length}}, FreeNodeMap::all(2), {});
}

}  // namespace

TEST_SUITE("statics") {

TEST_CASE("force density: unstretched, stretched and slack") {
    const Structure s = single_member(MemberKind::string, 1.0, steel::string_area());
    Vector one(1), rest(1);
    one << 1.0;
    rest << 1.0;
    CHECK(force_density(s, rest, one)[0] == 0.0);
    rest << 0.9;
    const double ea = 200e9 * steel::string_area();
    CHECK(ea == doctest::Approx(2.5133e6).epsilon(1e-4));
    CHECK(force_density(s, rest, one)[0] == doctest::Approx(ea * (1 / 0.9 - 1)).epsilon(1e-14));
    CHECK(force_density(s, rest, one)[0] == doctest::Approx(2.7926e5).epsilon(1e-4));
    Vector short_len(1);
    short_len << 0.8;
    CHECK(force_density(s, rest, short_len)[0] == 0.0);

    // Bars are never clipped.
    const Structure b = single_member(MemberKind::bar, 1.0, steel::bar_area());
    CHECK(force_density(b, rest, short_len)[0] < 0.0);
    Vector zero(1);
    zero << 0.0;
    CHECK_THROWS_AS(force_density(b, zero, one), InvalidParameter);
}

TEST_CASE("stiffness matrix of a single member") {
    const Structure s = single_member(MemberKind::bar, 1.0, steel::bar_area());
    Vector x(1);
    x << 3.5;
    const DenseMatrix k = stiffness_matrix(s, x);
    DenseMatrix lap(2, 2);
    lap << 1, -1, -1, 1;
    CHECK((k - kron_identity3(3.5 * lap)).norm() == 0.0);
    CHECK(stiffness_matrix(s, Vector::Zero(1)).norm() == 0.0);
}

TEST_CASE("stiffness matrix with non-negative densities is PSD with translations in the kernel") {
    const Structure s = generate_lander();
    Rng rng(3);
    Vector x(s.member_count());
    for (int k = 0; k < x.size(); ++k) x[k] = rng.uniform(0.0, 1e4);
    const DenseMatrix k = stiffness_matrix(s, x);
    CHECK(is_symmetric(k));
    CHECK(sym_eig(k).values[0] > -1e-9 * k.norm());
    for (int axis = 0; axis < 3; ++axis) {
        Vector t = Vector::Zero(3 * s.node_count());
        for (int i = 0; i < s.node_count(); ++i) t[3 * i + axis] = 1.0;
        CHECK((k * t).norm() < 1e-9 * k.norm());
    }
}

TEST_CASE("equilibrium matrix: single member column and unit columns") {
    const Structure s = single_member(MemberKind::bar, 2.0, steel::bar_area());
    const DenseMatrix a = equilibrium_matrix(s, s.nodes());
    Vector expect(6);
    expect << -1, 0, 0, 1, 0, 0;
    CHECK((a.col(0) - expect).norm() < 1e-15);

    const Structure p = generate_prism();
    const DenseMatrix ap = equilibrium_matrix(p, p.nodes());
    for (int k = 0; k < ap.cols(); ++k) CHECK(ap.col(k).norm() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("identity A_t (x l) = K n on random states") {
    Rng rng(17);
    for (const Structure& s : {generate_dbar(), generate_prism(), generate_lander()}) {
        for (int t = 0; t < 20; ++t) {
            const auto st = oracle::random_state(s, rng);
            const Vector len = member_geometry(s, st.coords).lengths;
            const Vector x = force_density(s, st.rest, len);
            const Vector lhs = equilibrium_matrix(s, st.coords) * x.cwiseProduct(len);
            const Vector rhs = stiffness_matrix(s, x) * st.coords.flat();
            CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
        }
    }
}

TEST_CASE("unbalanced force: zero without stress; contracting sign with shortened strings") {
    const Structure s = generate_dbar();
    CHECK(unbalanced_force(s, s.nodes(), Vector::Zero(6), LoadCase::none(s)).norm() == 0.0);
    Vector dl(2);
    dl << -0.5, -0.5;
    const Vector rest = actuated_rest_lengths(s, dl);
    const Vector x = force_density(s, rest, member_geometry(s).lengths);
    const Vector f = unbalanced_force(s, s.nodes(), x, LoadCase::none(s));
    // Node 0 sits at (+1, 0, 0); the shortened diagonal pulls it towards the centre.
    CHECK(f[0] < 0.0);
    CHECK(f[4] < 0.0);  // node 1 at (0, +1, 0)
}

TEST_CASE("potential energy: zero at rest, hand-evaluated stretched string") {
    const Structure s = single_member(MemberKind::string, 1.0, steel::string_area());
    CHECK(potential_energy(s, s.nodes(), s.rest_lengths(), LoadCase::none(s)) == 0.0);
    Vector rest(1);
    rest << 0.9;
    const double ea = 200e9 * steel::string_area();
    const double v = potential_energy(s, s.nodes(), rest, LoadCase::none(s));
    CHECK(v == doctest::Approx(ea * 0.01 / 1.8).epsilon(1e-14));
    CHECK(v == doctest::Approx(1.396e4).epsilon(1e-3));
    rest << 1.1;  // slack string stores nothing
    CHECK(potential_energy(s, s.nodes(), rest, LoadCase::none(s)) == 0.0);
}

TEST_CASE("potential energy includes external work") {
    const Structure s = single_member(MemberKind::bar, 1.0, steel::bar_area());
    Vector f = Vector::Zero(6);
    f[3] = 10.0;  // +x on node 1 at x = 1
    CHECK(potential_energy(s, s.nodes(), s.rest_lengths(), LoadCase::make(s, f)) == doctest::Approx(-10.0));
}

TEST_CASE("gravity requires a fixed node; weights split half per end") {
    const Structure s = generate_dbar();
    CHECK_THROWS_AS(LoadCase::make(s, Vector::Zero(12), true), InvalidParameter);
    const Structure pinned(s.nodes(), s.connectivity(), s.members(), FreeNodeMap({1, 2, 3}, 4), s.actuated_cables());
    const LoadCase g = LoadCase::make(pinned, Vector::Zero(12), true);
    double total = 0.0;
    for (const auto& m : s.members()) total += m.mass();
    CHECK(g.gravity_vector().sum() == doctest::Approx(total * 9.80665).epsilon(1e-14));
}

TEST_CASE("rest lengths from prestress reproduce the prestress") {
    const Structure s = generate_prism();
    Vector x0(s.member_count());
    for (int k = 0; k < x0.size(); ++k) x0[k] = s.is_string(k) ? 1000.0 : -500.0;
    const Vector rest = rest_lengths_from_prestress(s, x0);
    CHECK((force_density(s, rest, member_geometry(s).lengths) - x0).norm() < 1e-6);
}

TEST_CASE("actuation validation") {
    const Structure s = generate_dbar();
    CHECK_THROWS_AS(actuated_rest_lengths(s, Vector::Zero(3)), InvalidActuation);
    Vector dl(2);
    dl << -2.5, 0.0;
    CHECK_THROWS_AS(actuated_rest_lengths(s, dl), InvalidActuation);
    CHECK_THROWS_AS(form_find(s, dl, LoadCase::none(s)), InvalidActuation);
}

TEST_CASE("form_find at zero actuation returns the initial configuration") {
    const Structure s = generate_dbar();
    const auto st = form_find(s, Vector::Zero(2), LoadCase::none(s));
    CHECK(st.iterations <= 1);
    CHECK(st.member_forces.cwiseAbs().maxCoeff() == 0.0);
    CHECK((st.coords.matrix() - s.nodes().matrix()).norm() == 0.0);
}

TEST_CASE("form_find on the D-bar keeps the rhombus symmetry") {
    const Structure s = generate_dbar();
    Vector dl(2);
    dl << -0.5, -0.5;
    const auto st = form_find(s, dl, LoadCase::none(s));
    CHECK(st.residual_norm <= 1e-6);
    const auto& n = st.coords.matrix();
    CHECK(std::abs(std::abs(n(0, 0)) - std::abs(n(0, 2))) < 1e-8);
    CHECK(std::abs(std::abs(n(1, 1)) - std::abs(n(1, 3))) < 1e-8);
    for (int k = 0; k < 4; ++k) CHECK(st.member_forces[k] < 0.0);
    for (int k = 4; k < 6; ++k) CHECK(st.member_forces[k] > 0.0);
    CHECK(unbalanced_force(s, st.coords, st.force_density, LoadCase::none(s)).norm() <= 1e-6);
    CHECK((st.member_forces - st.force_density.cwiseProduct(st.lengths)).norm() == 0.0);
}

TEST_CASE("form_find: energy never increases and the shift keeps steps well posed") {
    const Structure s = generate_lander();
    Vector dl(2);
    dl << -0.25, -0.1;
    std::vector<SolverIterate> trace;
    const auto st = form_find(s, dl, LoadCase::none(s), {}, [&](const SolverIterate& it) { trace.push_back(it); });
    CHECK(st.residual_norm <= 1e-6);
    REQUIRE(!trace.empty());
    CHECK(static_cast<int>(trace.size()) == st.iterations);
    for (const auto& it : trace) {
        CHECK(it.energy_after <= it.energy_before);
        CHECK(it.step > 0.0);
        CHECK(it.step <= 1.0);
    }
    CHECK(trace.back().residual_after == doctest::Approx(st.residual_norm));
}

TEST_CASE("form_find is equivariant under translation of the initial geometry") {
    const Structure s = generate_prism();
    const Eigen::Vector3d shift(1.5, -0.75, 2.0);
    const Structure moved = s.with_nodes(s.nodes().translated(shift));
    Vector dl = Vector::Constant(3, -0.1);
    const auto a = form_find(s, dl, LoadCase::none(s));
    const auto b = form_find(moved, dl, LoadCase::none(moved));
    // Free-floating equilibria are unique only up to a rigid motion, so shapes are compared
    // after aligning both onto the as-built geometry.
    const NodeSet back = b.coords.translated(-shift);
    CHECK((canonical_frame(s, back).matrix() - canonical_frame(s, a.coords).matrix()).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((b.member_forces - a.member_forces).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("form_find: prism twist agrees with the force-density oracle") {
    const double expected = oracle::prism_twist_oracle();
    CHECK(expected == doctest::Approx(-5 * std::numbers::pi / 6).epsilon(1e-12));
    for (double offset : {0.0, -0.15, 0.15}) {
        const Structure s = generate_prism(0.25, 0.5, -5 * std::numbers::pi / 6 + offset);
        const auto st = form_find(s, Vector::Constant(3, -0.1), LoadCase::none(s));
        CHECK(std::abs(oracle::measured_prism_twist(st.coords) - expected) < 1e-3);
    }
}

TEST_CASE("form_find reports non-convergence with the last residual") {
    const Structure s = generate_lander();
    SolverConfig cfg;
    cfg.max_iterations = 1;
    Vector dl(2);
    dl << -0.3, -0.3;
    try {
        form_find(s, dl, LoadCase::none(s), cfg);
        FAIL("expected NonConvergence");
    } catch (const NonConvergence& e) {
        CHECK(e.residual() > cfg.tolerance);
        CHECK(e.iterations() == 1);
    }
}

TEST_CASE("solver config validation") {
    SolverConfig cfg;
    cfg.tolerance = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidParameter);
    cfg = {};
    cfg.shift = -1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidParameter);
}

}  // TEST_SUITE
