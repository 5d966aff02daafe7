#pragma once

#include "tenseg/numerics.hpp"

#include "json.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace tenseg {

/// Default steel constants used by the benchmark generators.
namespace steel {
inline constexpr double kDensity = 7850.0;        // kg/m^3
inline constexpr double kYoungsModulus = 200e9;   // Pa
inline constexpr double kYieldStrength = 300e6;   // Pa, metadata only
inline constexpr double kBarOuterRadius = 0.010;  // m
inline constexpr double kBarInnerRadius = 0.008;  // m
inline constexpr double kStringRadius = 0.002;    // m
double bar_area();
double string_area();
}  // namespace steel

/// Nodal coordinates, stored 3 x n_n. Column i is node i; the flattened vector
/// is column-major so entries 3i..3i+2 hold node i.
class NodeSet {
public:
    NodeSet() = default;
    explicit NodeSet(Eigen::Matrix3Xd coords);
    static NodeSet from_flat(const Vector& flat);

    int count() const { return static_cast<int>(coords_.cols()); }
    const Eigen::Matrix3Xd& matrix() const { return coords_; }
    Eigen::Vector3d node(int i) const { return coords_.col(i); }
    Vector flat() const;

    NodeSet translated(const Eigen::Vector3d& offset) const;
    NodeSet transformed(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& offset) const;

private:
    Eigen::Matrix3Xd coords_;
};

/// A member joins nodes `tail` < `head`; its connectivity row holds -1 at tail, +1 at head.
struct MemberEnds {
    int tail = 0;
    int head = 0;
    bool operator==(const MemberEnds&) const = default;
};

/// Signed incidence of members on nodes, bars stacked before strings.
class Connectivity {
public:
    Connectivity() = default;
    /// Endpoint pairs may be given in either order; they are stored with tail < head.
    Connectivity(int node_count, std::vector<MemberEnds> bars, std::vector<MemberEnds> strings);

    int node_count() const { return node_count_; }
    int bar_count() const { return static_cast<int>(bars_.size()); }
    int string_count() const { return static_cast<int>(strings_.size()); }
    int member_count() const { return bar_count() + string_count(); }

    /// Ends of stacked member k (bars first).
    const MemberEnds& ends(int k) const;
    const std::vector<MemberEnds>& bars() const { return bars_; }
    const std::vector<MemberEnds>& strings() const { return strings_; }

    DenseMatrix bar_matrix() const;     // C_b, n_b x n_n
    DenseMatrix string_matrix() const;  // C_s, n_s x n_n
    DenseMatrix matrix() const;         // C, n_e x n_n

private:
    int node_count_ = 0;
    std::vector<MemberEnds> bars_;
    std::vector<MemberEnds> strings_;
};

enum class MemberKind { bar, string };

struct MemberSpec {
    MemberKind kind = MemberKind::bar;
    double youngs_modulus = 0.0;  // Pa
    double area = 0.0;            // m^2
    double density = 0.0;         // kg/m^3
    double rest_length = 0.0;     // m

    double axial_rigidity() const { return youngs_modulus * area; }
    /// Mass from rest length, so it is unchanged by stretching.
    double mass() const { return density * area * rest_length; }
    void validate(int index) const;
};

/// Ordered free-node indices; the implied selector E_a picks their x, y, z DOFs.
class FreeNodeMap {
public:
    FreeNodeMap() = default;
    FreeNodeMap(std::vector<int> free_indices, int node_count);
    static FreeNodeMap all(int node_count);

    const std::vector<int>& indices() const { return free_; }
    int free_count() const { return static_cast<int>(free_.size()); }
    int node_count() const { return node_count_; }
    int dof() const { return 3 * free_count(); }
    bool all_free() const { return free_count() == node_count_; }

    DenseMatrix selector() const;  // E_a, 3 n_n x 3 n_a
    Vector gather(const Vector& full) const;                   // E_a^T v
    DenseMatrix gather(const DenseMatrix& full) const;         // E_a^T A E_a
    void scatter(const Vector& reduced, Vector& full) const;   // overwrite free entries

private:
    std::vector<int> free_;
    int node_count_ = 0;
};

/// Geometric and material description of a tensegrity. Immutable once built.
class Structure {
public:
    Structure(NodeSet nodes, Connectivity connectivity, std::vector<MemberSpec> members,
              FreeNodeMap free_map, std::vector<int> actuated_cables, std::string name = {});

    const NodeSet& nodes() const { return nodes_; }
    const Connectivity& connectivity() const { return connectivity_; }
    const std::vector<MemberSpec>& members() const { return members_; }
    const FreeNodeMap& free_map() const { return free_map_; }
    /// 0-based indices into the string list.
    const std::vector<int>& actuated_cables() const { return actuated_; }
    const std::string& name() const { return name_; }
    double yield_strength() const { return yield_strength_; }
    void set_yield_strength(double v) { yield_strength_ = v; }

    /// (node, axis) pairs reported as dataset coordinate outputs; empty means every coordinate.
    const std::vector<std::pair<int, int>>& reported_coordinates() const { return reported_; }
    void set_reported_coordinates(std::vector<std::pair<int, int>> coords);

    int node_count() const { return nodes_.count(); }
    int member_count() const { return connectivity_.member_count(); }
    int bar_count() const { return connectivity_.bar_count(); }
    int string_count() const { return connectivity_.string_count(); }
    /// Stacked member index of actuated cable j.
    int actuated_member(int j) const { return bar_count() + actuated_[j]; }
    bool is_string(int k) const { return k >= bar_count(); }

    Vector rest_lengths() const;
    Vector axial_rigidities() const;
    Vector masses() const;

    /// Same structure with different nodal coordinates.
    Structure with_nodes(NodeSet nodes) const;
    /// Same structure with per-member rest lengths replaced.
    Structure with_rest_lengths(const Vector& rest) const;

private:
    NodeSet nodes_;
    Connectivity connectivity_;
    std::vector<MemberSpec> members_;
    FreeNodeMap free_map_;
    std::vector<int> actuated_;
    std::string name_;
    double yield_strength_ = steel::kYieldStrength;
    std::vector<std::pair<int, int>> reported_;
};

struct MemberGeometry {
    Vector lengths;             // l, n_e
    Eigen::Matrix3Xd vectors;   // columns of N C^T: head minus tail
    /// b.d.(N C^T): 3 n_e x n_e, column k carries member k's vector in rows 3k..3k+2.
    DenseMatrix block_diagonal() const;
};

/// Member lengths and edge vectors. Throws DegenerateGeometry on a zero-length member.
MemberGeometry member_geometry(const Structure& s);
MemberGeometry member_geometry(const Structure& s, const NodeSet& coords);

Structure generate_dbar(double bar_length = std::sqrt(2.0));
/// The default twist -5pi/6 is the self-stressable twist for the b_i-t_{i+1} vertical wiring.
Structure generate_prism(double radius = 0.25, double height = 0.5, double twist = -5.0 * std::numbers::pi / 6.0);
Structure generate_lander(double bar_length = 1.0, double separation_ratio = 0.5);

/// Structure file I/O (0-based indices on disk).
nlohmann::json structure_to_json(const Structure& s);
Structure structure_from_json(const nlohmann::json& j);
void save_structure(const Structure& s, const std::string& path);
Structure load_structure(const std::string& path);

/// Stable content hash (FNV-1a over the canonical JSON dump), hex encoded.
std::string fingerprint(const Structure& s);

}  // namespace tenseg
