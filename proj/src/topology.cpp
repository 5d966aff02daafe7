#include "tenseg/topology.hpp"

#include "tenseg/errors.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace tenseg {

namespace steel {
double bar_area() {
    return std::numbers::pi * (kBarOuterRadius * kBarOuterRadius - kBarInnerRadius * kBarInnerRadius);
}
double string_area() { return std::numbers::pi * kStringRadius * kStringRadius; }
}  // namespace steel

// ---------------------------------------------------------------- NodeSet

NodeSet::NodeSet(Eigen::Matrix3Xd coords) : coords_(std::move(coords)) {
    if (coords_.cols() < 2) throw InvalidParameter("NodeSet: at least two nodes are required");
    if (!coords_.allFinite()) throw InvalidParameter("NodeSet: coordinates must be finite");
}

NodeSet NodeSet::from_flat(const Vector& flat) {
    if (flat.size() % 3 != 0) throw DimensionMismatch("NodeSet: flat vector length is not a multiple of 3");
    return NodeSet(Eigen::Map<const Eigen::Matrix3Xd>(flat.data(), 3, flat.size() / 3));
}

Vector NodeSet::flat() const { return Eigen::Map<const Vector>(coords_.data(), coords_.size()); }

NodeSet NodeSet::translated(const Eigen::Vector3d& offset) const {
    Eigen::Matrix3Xd moved = coords_.colwise() + offset;
    return NodeSet(std::move(moved));
}

NodeSet NodeSet::transformed(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& offset) const {
    Eigen::Matrix3Xd moved = (rotation * coords_).colwise() + offset;
    return NodeSet(std::move(moved));
}

// ----------------------------------------------------------- Connectivity

namespace {

MemberEnds ordered(MemberEnds e) {
    if (e.tail > e.head) std::swap(e.tail, e.head);
    return e;
}

DenseMatrix incidence(const std::vector<MemberEnds>& rows, int node_count) {
    DenseMatrix c = DenseMatrix::Zero(static_cast<Eigen::Index>(rows.size()), node_count);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        c(static_cast<Eigen::Index>(k), rows[k].tail) = -1.0;
        c(static_cast<Eigen::Index>(k), rows[k].head) = 1.0;
    }
    return c;
}

}  // namespace

Connectivity::Connectivity(int node_count, std::vector<MemberEnds> bars, std::vector<MemberEnds> strings)
    : node_count_(node_count) {
    if (node_count < 2) throw InvalidParameter("Connectivity: at least two nodes are required");
    for (auto& e : bars) bars_.push_back(ordered(e));
    for (auto& e : strings) strings_.push_back(ordered(e));

    std::set<std::pair<int, int>> seen;
    std::vector<bool> touched(node_count, false);
    for (int k = 0; k < member_count(); ++k) {
        const auto& e = ends(k);
        if (e.tail < 0 || e.head >= node_count) {
            throw InvalidParameter("Connectivity: member " + std::to_string(k) + " references a missing node");
        }
        if (e.tail == e.head) {
            throw InvalidParameter("Connectivity: member " + std::to_string(k) + " connects a node to itself");
        }
        if (!seen.emplace(e.tail, e.head).second) {
            throw InvalidParameter("Connectivity: member " + std::to_string(k) + " duplicates another member");
        }
        touched[e.tail] = touched[e.head] = true;
    }
    for (int i = 0; i < node_count; ++i) {
        if (!touched[i]) throw InvalidParameter("Connectivity: node " + std::to_string(i) + " is isolated");
    }
}

const MemberEnds& Connectivity::ends(int k) const {
    return k < bar_count() ? bars_[k] : strings_[k - bar_count()];
}

DenseMatrix Connectivity::bar_matrix() const { return incidence(bars_, node_count_); }
DenseMatrix Connectivity::string_matrix() const { return incidence(strings_, node_count_); }

DenseMatrix Connectivity::matrix() const {
    DenseMatrix c(member_count(), node_count_);
    c << bar_matrix(), string_matrix();
    return c;
}

// ------------------------------------------------------------- MemberSpec

void MemberSpec::validate(int index) const {
    auto positive = [&](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            std::ostringstream msg;
            msg << "member " << index << ": " << what << " must be positive (got " << v << ")";
            throw InvalidParameter(msg.str());
        }
    };
    positive(youngs_modulus, "Young's modulus");
    positive(area, "area");
    positive(density, "density");
    positive(rest_length, "rest length");
}

// ------------------------------------------------------------ FreeNodeMap

FreeNodeMap::FreeNodeMap(std::vector<int> free_indices, int node_count)
    : free_(std::move(free_indices)), node_count_(node_count) {
    for (std::size_t i = 0; i < free_.size(); ++i) {
        if (free_[i] < 0 || free_[i] >= node_count) throw InvalidParameter("FreeNodeMap: index out of range");
        if (i > 0 && free_[i] <= free_[i - 1]) {
            throw InvalidParameter("FreeNodeMap: indices must be strictly increasing");
        }
    }
}

FreeNodeMap FreeNodeMap::all(int node_count) {
    std::vector<int> idx(node_count);
    for (int i = 0; i < node_count; ++i) idx[i] = i;
    return FreeNodeMap(std::move(idx), node_count);
}

DenseMatrix FreeNodeMap::selector() const {
    DenseMatrix e = DenseMatrix::Zero(3 * node_count_, dof());
    for (int a = 0; a < free_count(); ++a) {
        for (int d = 0; d < 3; ++d) e(3 * free_[a] + d, 3 * a + d) = 1.0;
    }
    return e;
}

Vector FreeNodeMap::gather(const Vector& full) const {
    if (full.size() != 3 * node_count_) throw DimensionMismatch("FreeNodeMap::gather: vector size");
    Vector out(dof());
    for (int a = 0; a < free_count(); ++a) out.segment<3>(3 * a) = full.segment<3>(3 * free_[a]);
    return out;
}

DenseMatrix FreeNodeMap::gather(const DenseMatrix& full) const {
    if (full.rows() != 3 * node_count_ || full.cols() != 3 * node_count_) {
        throw DimensionMismatch("FreeNodeMap::gather: matrix size");
    }
    if (all_free()) return full;
    DenseMatrix out(dof(), dof());
    for (int a = 0; a < free_count(); ++a) {
        for (int b = 0; b < free_count(); ++b) {
            out.block<3, 3>(3 * a, 3 * b) = full.block<3, 3>(3 * free_[a], 3 * free_[b]);
        }
    }
    return out;
}

void FreeNodeMap::scatter(const Vector& reduced, Vector& full) const {
    if (reduced.size() != dof() || full.size() != 3 * node_count_) {
        throw DimensionMismatch("FreeNodeMap::scatter: vector size");
    }
    for (int a = 0; a < free_count(); ++a) full.segment<3>(3 * free_[a]) = reduced.segment<3>(3 * a);
}

// -------------------------------------------------------------- Structure

Structure::Structure(NodeSet nodes, Connectivity connectivity, std::vector<MemberSpec> members,
                     FreeNodeMap free_map, std::vector<int> actuated_cables, std::string name)
    : nodes_(std::move(nodes)),
      connectivity_(std::move(connectivity)),
      members_(std::move(members)),
      free_map_(std::move(free_map)),
      actuated_(std::move(actuated_cables)),
      name_(std::move(name)) {
    if (connectivity_.node_count() != nodes_.count()) {
        throw DimensionMismatch("Structure: connectivity and node counts differ");
    }
    if (static_cast<int>(members_.size()) != connectivity_.member_count()) {
        throw DimensionMismatch("Structure: one MemberSpec per member is required");
    }
    if (free_map_.node_count() != nodes_.count()) {
        throw DimensionMismatch("Structure: free-node map size differs from node count");
    }
    for (int k = 0; k < member_count(); ++k) {
        members_[k].validate(k);
        const MemberKind expected = is_string(k) ? MemberKind::string : MemberKind::bar;
        if (members_[k].kind != expected) {
            throw InvalidParameter("Structure: member " + std::to_string(k) + " kind does not match its block");
        }
    }
    std::set<int> unique;
    for (int a : actuated_) {
        if (a < 0 || a >= string_count()) throw InvalidParameter("Structure: actuated cable is not a string");
        if (!unique.insert(a).second) throw InvalidParameter("Structure: actuated cable listed twice");
    }
}

void Structure::set_reported_coordinates(std::vector<std::pair<int, int>> coords) {
    for (const auto& [node, axis] : coords) {
        if (node < 0 || node >= node_count() || axis < 0 || axis > 2) {
            throw InvalidParameter("Structure: reported coordinate out of range");
        }
    }
    reported_ = std::move(coords);
}

Vector Structure::rest_lengths() const {
    Vector v(member_count());
    for (int k = 0; k < member_count(); ++k) v[k] = members_[k].rest_length;
    return v;
}

Vector Structure::axial_rigidities() const {
    Vector v(member_count());
    for (int k = 0; k < member_count(); ++k) v[k] = members_[k].axial_rigidity();
    return v;
}

Vector Structure::masses() const {
    Vector v(member_count());
    for (int k = 0; k < member_count(); ++k) v[k] = members_[k].mass();
    return v;
}

Structure Structure::with_nodes(NodeSet nodes) const {
    Structure copy = *this;
    if (nodes.count() != node_count()) throw DimensionMismatch("Structure::with_nodes: node count differs");
    copy.nodes_ = std::move(nodes);
    return copy;
}

Structure Structure::with_rest_lengths(const Vector& rest) const {
    if (rest.size() != member_count()) throw DimensionMismatch("Structure::with_rest_lengths: size");
    Structure copy = *this;
    for (int k = 0; k < member_count(); ++k) {
        copy.members_[k].rest_length = rest[k];
        copy.members_[k].validate(k);
    }
    return copy;
}

// --------------------------------------------------------------- geometry

DenseMatrix MemberGeometry::block_diagonal() const {
    const auto ne = vectors.cols();
    DenseMatrix bd = DenseMatrix::Zero(3 * ne, ne);
    for (Eigen::Index k = 0; k < ne; ++k) bd.block<3, 1>(3 * k, k) = vectors.col(k);
    return bd;
}

MemberGeometry member_geometry(const Structure& s) { return member_geometry(s, s.nodes()); }

MemberGeometry member_geometry(const Structure& s, const NodeSet& coords) {
    if (coords.count() != s.node_count()) throw DimensionMismatch("member_geometry: node count differs");
    const auto& c = s.connectivity();
    MemberGeometry g;
    g.lengths.resize(c.member_count());
    g.vectors.resize(3, c.member_count());
    for (int k = 0; k < c.member_count(); ++k) {
        const auto& e = c.ends(k);
        g.vectors.col(k) = coords.node(e.head) - coords.node(e.tail);
        g.lengths[k] = g.vectors.col(k).norm();
        if (!(g.lengths[k] > 0.0) || !std::isfinite(g.lengths[k])) {
            throw DegenerateGeometry("member " + std::to_string(k) + " has zero length", k);
        }
    }
    return g;
}

// ------------------------------------------------------------- generators

namespace {

/// Steel members with rest lengths equal to the as-built lengths (zero prestress).
std::vector<MemberSpec> steel_members(const Connectivity& c, const NodeSet& nodes) {
    std::vector<MemberSpec> members;
    members.reserve(c.member_count());
    for (int k = 0; k < c.member_count(); ++k) {
        const auto& e = c.ends(k);
        const bool bar = k < c.bar_count();
        MemberSpec m;
        m.kind = bar ? MemberKind::bar : MemberKind::string;
        m.youngs_modulus = steel::kYoungsModulus;
        m.area = bar ? steel::bar_area() : steel::string_area();
        m.density = steel::kDensity;
        m.rest_length = (nodes.node(e.head) - nodes.node(e.tail)).norm();
        members.push_back(m);
    }
    return members;
}

Structure assemble(Eigen::Matrix3Xd coords, std::vector<MemberEnds> bars, std::vector<MemberEnds> strings,
                   std::vector<int> actuated, std::string name) {
    NodeSet nodes(std::move(coords));
    Connectivity conn(nodes.count(), std::move(bars), std::move(strings));
    auto members = steel_members(conn, nodes);
    auto free_map = FreeNodeMap::all(nodes.count());
    return Structure(std::move(nodes), std::move(conn), std::move(members), std::move(free_map),
                     std::move(actuated), std::move(name));
}

}  // namespace

Structure generate_dbar(double bar_length) {
    if (!(bar_length > 0.0)) throw InvalidParameter("generate_dbar: bar_length must be positive");
    const double a = bar_length / std::sqrt(2.0);
    Eigen::Matrix3Xd n(3, 4);
    n.col(0) << a, 0, 0;
    n.col(1) << 0, a, 0;
    n.col(2) << -a, 0, 0;
    n.col(3) << 0, -a, 0;
    Structure s = assemble(n, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}, {{0, 2}, {1, 3}}, {0, 1}, "dbar");
    // Symmetry leaves two independent coordinates: x of node 1 and y of node 2.
    s.set_reported_coordinates({{0, 0}, {1, 1}});
    return s;
}

Structure generate_prism(double radius, double height, double twist) {
    if (!(radius > 0.0)) throw InvalidParameter("generate_prism: radius must be positive");
    if (!(height > 0.0)) throw InvalidParameter("generate_prism: height must be positive");
    if (!std::isfinite(twist)) throw InvalidParameter("generate_prism: twist must be finite");
    Eigen::Matrix3Xd n(3, 6);
    for (int i = 0; i < 3; ++i) {
        const double theta = 2.0 * std::numbers::pi * i / 3.0;
        n.col(i) << radius * std::cos(theta), radius * std::sin(theta), 0.0;
        n.col(3 + i) << radius * std::cos(theta + twist), radius * std::sin(theta + twist), height;
    }
    std::vector<MemberEnds> bars{{0, 3}, {1, 4}, {2, 5}};
    std::vector<MemberEnds> strings{{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5},
                                    {0, 4}, {1, 5}, {2, 3}};  // verticals b_i - t_{i+1}
    return assemble(n, bars, strings, {6, 7, 8}, "prism");
}

Structure generate_lander(double bar_length, double separation_ratio) {
    if (!(bar_length > 0.0)) throw InvalidParameter("generate_lander: bar_length must be positive");
    if (!(separation_ratio > 0.0 && separation_ratio < 1.0)) {
        throw InvalidParameter("generate_lander: separation_ratio must lie in (0, 1)");
    }
    const double half = bar_length / 2.0;
    const double off = separation_ratio * bar_length / 2.0;

    // Node for the bar parallel to `axis`, offset sign `sigma` along the next axis,
    // end sign `eps` along `axis`. Ordered axis-major, then sigma (+,-), then eps (+,-).
    auto node_id = [](int axis, int sigma, int eps) {
        return 4 * axis + 2 * (sigma > 0 ? 0 : 1) + (eps > 0 ? 0 : 1);
    };
    Eigen::Matrix3Xd n = Eigen::Matrix3Xd::Zero(3, 12);
    std::vector<MemberEnds> bars;
    for (int axis = 0; axis < 3; ++axis) {
        const int next = (axis + 1) % 3;
        for (int sigma : {1, -1}) {
            for (int eps : {1, -1}) {
                const int id = node_id(axis, sigma, eps);
                n(axis, id) = eps * half;
                n(next, id) = sigma * off;
            }
            bars.push_back({node_id(axis, sigma, 1), node_id(axis, sigma, -1)});
        }
    }

    std::vector<MemberEnds> strings;
    std::set<std::pair<int, int>> seen;
    auto link = [&](int i, int j) {
        MemberEnds e = ordered({i, j});
        if (seen.emplace(e.tail, e.head).second) strings.push_back(e);
    };
    for (int a = 0; a < 3; ++a) {
        const int b = (a + 1) % 3;
        const int c = (b + 1) % 3;
        for (int sigma : {1, -1}) {
            for (int eps : {1, -1}) {
                const int id = node_id(a, sigma, eps);
                // sigma-signed ends of both bars parallel to b (their offsets run along c)
                for (int s2 : {1, -1}) link(id, node_id(b, s2, sigma));
                // both ends of the bar parallel to c whose offset along a has sign eps
                for (int e2 : {1, -1}) link(id, node_id(c, eps, e2));
            }
        }
    }

    // Actuate the two strings from (L/2, d/2, 0) to (0, L/2, d/2) and (d/2, 0, L/2).
    const int hub = node_id(0, 1, 1);
    std::vector<int> actuated;
    for (int target : {node_id(1, 1, 1), node_id(2, 1, 1)}) {
        const MemberEnds e = ordered({hub, target});
        const auto it = std::find(strings.begin(), strings.end(), e);
        actuated.push_back(static_cast<int>(it - strings.begin()));
    }
    return assemble(n, bars, strings, actuated, "lander");
}

// ------------------------------------------------------------------- JSON

nlohmann::json structure_to_json(const Structure& s) {
    using nlohmann::json;
    json j;
    j["name"] = s.name();
    j["nodes"] = json::array();
    for (int i = 0; i < s.node_count(); ++i) {
        const auto p = s.nodes().node(i);
        j["nodes"].push_back({p.x(), p.y(), p.z()});
    }
    auto pairs = [](const std::vector<MemberEnds>& v) {
        json a = json::array();
        for (const auto& e : v) a.push_back({e.tail, e.head});
        return a;
    };
    j["bars"] = pairs(s.connectivity().bars());
    j["strings"] = pairs(s.connectivity().strings());
    j["free_nodes"] = s.free_map().indices();
    j["actuated"] = s.actuated_cables();
    j["members"] = json::array();
    for (const auto& m : s.members()) {
        j["members"].push_back({{"kind", m.kind == MemberKind::bar ? "bar" : "string"},
                                {"E", m.youngs_modulus},
                                {"A", m.area},
                                {"rho", m.density},
                                {"l0", m.rest_length}});
    }
    j["yield_strength"] = s.yield_strength();
    if (!s.reported_coordinates().empty()) {
        j["reported_coords"] = json::array();
        for (const auto& [node, axis] : s.reported_coordinates()) j["reported_coords"].push_back({node, axis});
    }
    return j;
}

Structure structure_from_json(const nlohmann::json& j) {
    try {
        const auto& jn = j.at("nodes");
        Eigen::Matrix3Xd n(3, jn.size());
        for (std::size_t i = 0; i < jn.size(); ++i) {
            if (jn[i].size() != 3) throw FormatError("structure file: node entries need 3 coordinates");
            for (int d = 0; d < 3; ++d) n(d, static_cast<Eigen::Index>(i)) = jn[i][d].get<double>();
        }
        auto pairs = [](const nlohmann::json& a) {
            std::vector<MemberEnds> out;
            for (const auto& p : a) {
                if (p.size() != 2) throw FormatError("structure file: member entries need 2 node indices");
                out.push_back({p[0].get<int>(), p[1].get<int>()});
            }
            return out;
        };
        NodeSet nodes(std::move(n));
        Connectivity conn(nodes.count(), pairs(j.at("bars")), pairs(j.at("strings")));

        std::vector<MemberSpec> members;
        const auto& jm = j.at("members");
        if (static_cast<int>(jm.size()) != conn.member_count()) {
            throw FormatError("structure file: members list length differs from bars + strings");
        }
        for (std::size_t k = 0; k < jm.size(); ++k) {
            MemberSpec m;
            m.kind = static_cast<int>(k) < conn.bar_count() ? MemberKind::bar : MemberKind::string;
            if (jm[k].contains("kind")) {
                const auto kind = jm[k]["kind"].get<std::string>();
                if ((kind == "bar") != (m.kind == MemberKind::bar)) {
                    throw FormatError("structure file: member " + std::to_string(k) + " kind mismatch");
                }
            }
            m.youngs_modulus = jm[k].at("E").get<double>();
            m.area = jm[k].at("A").get<double>();
            m.density = jm[k].at("rho").get<double>();
            m.rest_length = jm[k].at("l0").get<double>();
            members.push_back(m);
        }
        FreeNodeMap free_map = j.contains("free_nodes")
                                   ? FreeNodeMap(j["free_nodes"].get<std::vector<int>>(), nodes.count())
                                   : FreeNodeMap::all(nodes.count());
        auto actuated = j.value("actuated", std::vector<int>{});
        Structure s(std::move(nodes), std::move(conn), std::move(members), std::move(free_map),
                    std::move(actuated), j.value("name", std::string{}));
        if (j.contains("yield_strength")) s.set_yield_strength(j["yield_strength"].get<double>());
        if (j.contains("reported_coords")) {
            std::vector<std::pair<int, int>> rc;
            for (const auto& p : j["reported_coords"]) rc.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
            s.set_reported_coordinates(std::move(rc));
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("structure file: ") + e.what());
    }
}

void save_structure(const Structure& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << std::setw(2) << structure_to_json(s) << '\n';
}

Structure load_structure(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    return structure_from_json(j);
}

std::string fingerprint(const Structure& s) {
    const std::string text = structure_to_json(s).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << h;
    return hex.str();
}

}  // namespace tenseg
