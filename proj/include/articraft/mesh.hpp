#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "articraft/error.hpp"
#include "articraft/math.hpp"

namespace articraft {

// Indexed triangle mesh. Triangles wind counter-clockwise seen from outside;
// every query and export in the project assumes that.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    bool empty() const { return triangles.empty(); }
};

struct Aabb {
    Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
    Vec3 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()};

    bool valid() const { return lo.x <= hi.x && lo.y <= hi.y && lo.z <= hi.z; }
    void expand(const Vec3& p) {
        lo = min_components(lo, p);
        hi = max_components(hi, p);
    }
    void merge(const Aabb& o) {
        lo = min_components(lo, o.lo);
        hi = max_components(hi, o.hi);
    }
    Vec3 center() const { return (lo + hi) * 0.5; }
    Vec3 extent() const { return hi - lo; }
    double volume() const {
        if (!valid()) return 0.0;
        Vec3 e = extent();
        return e.x * e.y * e.z;
    }
    bool contains(const Vec3& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
    }
    static Aabb intersection(const Aabb& a, const Aabb& b) {
        Aabb r;
        r.lo = max_components(a.lo, b.lo);
        r.hi = min_components(a.hi, b.hi);
        return r;
    }
    // Squared distance between two boxes; 0 when they touch or overlap.
    static double distance2(const Aabb& a, const Aabb& b) {
        double d2 = 0.0;
        for (int i = 0; i < 3; ++i) {
            double gap = std::max(std::max(a.lo[i] - b.hi[i], b.lo[i] - a.hi[i]), 0.0);
            d2 += gap * gap;
        }
        return d2;
    }
};

inline Aabb mesh_aabb(const TriMesh& mesh) {
    Aabb box;
    for (const Vec3& v : mesh.vertices) box.expand(v);
    return box;
}

struct WatertightReport {
    bool closed = false;             // every edge shared by exactly two consistently wound triangles
    int boundary_edges = 0;          // undirected edges with one incident triangle
    int nonmanifold_edges = 0;       // undirected edges with >2 incident triangles
    int mismatched_edges = 0;        // edge used twice in the same direction (winding flip)
    int components = 0;              // connected components over shared vertices
    long long euler_characteristic = 0;  // V - E + F; 2 per genus-0 component
};

inline WatertightReport analyze_watertight(const TriMesh& mesh) {
    WatertightReport rep;
    if (mesh.triangles.empty()) return rep;

    struct EdgeUse {
        int forward = 0;
        int backward = 0;
    };
    auto key = [](int a, int b) {
        return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | static_cast<std::uint32_t>(std::max(a, b));
    };
    std::unordered_map<std::uint64_t, EdgeUse> edges;
    edges.reserve(mesh.triangles.size() * 3);
    for (const auto& t : mesh.triangles) {
        for (int e = 0; e < 3; ++e) {
            int a = t[e], b = t[(e + 1) % 3];
            EdgeUse& use = edges[key(a, b)];
            if (a < b)
                ++use.forward;
            else
                ++use.backward;
        }
    }
    for (const auto& [k, use] : edges) {
        int total = use.forward + use.backward;
        if (total == 1) ++rep.boundary_edges;
        if (total > 2) ++rep.nonmanifold_edges;
        if (total == 2 && (use.forward != 1 || use.backward != 1)) ++rep.mismatched_edges;
    }
    rep.closed = rep.boundary_edges == 0 && rep.nonmanifold_edges == 0 && rep.mismatched_edges == 0;

    // Components over triangle-referenced vertices.
    std::vector<int> parent(mesh.vertices.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<char> referenced(mesh.vertices.size(), 0);
    auto find = [&](int v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    };
    for (const auto& t : mesh.triangles) {
        referenced[t[0]] = referenced[t[1]] = referenced[t[2]] = 1;
        int a = find(t[0]);
        int b = find(t[1]);
        int c = find(t[2]);
        parent[b] = a;
        parent[find(c)] = find(a);
    }
    long long v_count = 0;
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        if (!referenced[i]) continue;
        ++v_count;
        if (find(static_cast<int>(i)) == static_cast<int>(i)) ++rep.components;
    }
    rep.euler_characteristic =
        v_count - static_cast<long long>(edges.size()) + static_cast<long long>(mesh.triangles.size());
    return rep;
}

inline bool is_watertight(const TriMesh& mesh) { return analyze_watertight(mesh).closed; }

// Divergence-theorem volume; positive for outward CCW winding.
inline double mesh_volume(const TriMesh& mesh) {
    double six_v = 0.0;
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        six_v += a.dot(b.cross(c));
    }
    return six_v / 6.0;
}

inline double mesh_surface_area(const TriMesh& mesh) {
    double area = 0.0;
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        area += (b - a).cross(c - a).norm() * 0.5;
    }
    return area;
}

struct MassProperties {
    double volume = 0.0;
    double mass = 0.0;
    Vec3 com;
    Mat3 inertia_com = Mat3::zero();  // about com, axes of the mesh frame
};

// M. Kallay, "Computing the Moment of Inertia of a Solid Defined by a
// Triangle Mesh". Signed tetrahedra against the origin; valid for any closed
// mesh regardless of where the origin sits.
inline MassProperties mesh_mass_properties(const TriMesh& mesh, double mass) {
    double vol6 = 0.0;
    Vec3 first;            // 24 * integral of position
    double xx = 0, yy = 0, zz = 0, xy = 0, xz = 0, yz = 0;  // 120 * second moments (diag x 2)
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        double det = a.dot(b.cross(c));
        vol6 += det;
        first += (a + b + c) * det;
        xx += det * (a.x * a.x + b.x * b.x + c.x * c.x + a.x * b.x + a.x * c.x + b.x * c.x);
        yy += det * (a.y * a.y + b.y * b.y + c.y * c.y + a.y * b.y + a.y * c.y + b.y * c.y);
        zz += det * (a.z * a.z + b.z * b.z + c.z * c.z + a.z * b.z + a.z * c.z + b.z * c.z);
        xy += det * (2 * (a.x * a.y + b.x * b.y + c.x * c.y) + a.x * b.y + b.x * a.y + a.x * c.y +
                     c.x * a.y + b.x * c.y + c.x * b.y);
        xz += det * (2 * (a.x * a.z + b.x * b.z + c.x * c.z) + a.x * b.z + b.x * a.z + a.x * c.z +
                     c.x * a.z + b.x * c.z + c.x * b.z);
        yz += det * (2 * (a.y * a.z + b.y * b.z + c.y * c.z) + a.y * b.z + b.y * a.z + a.y * c.z +
                     c.y * a.z + b.y * c.z + c.y * b.z);
    }
    MassProperties mp;
    mp.volume = vol6 / 6.0;
    if (mp.volume <= 0.0) throw Error("invalid_geometry", "mesh volume is not positive");
    mp.mass = mass;
    mp.com = first / (4.0 * vol6);
    double density = mass / mp.volume;
    double ixx = density * (yy + zz) / 60.0;
    double iyy = density * (xx + zz) / 60.0;
    double izz = density * (xx + yy) / 60.0;
    double ixy = -density * xy / 120.0;
    double ixz = -density * xz / 120.0;
    double iyz = -density * yz / 120.0;
    // Shift from origin to com (inverse parallel-axis).
    const Vec3& c = mp.com;
    ixx -= mass * (c.y * c.y + c.z * c.z);
    iyy -= mass * (c.x * c.x + c.z * c.z);
    izz -= mass * (c.x * c.x + c.y * c.y);
    ixy += mass * c.x * c.y;
    ixz += mass * c.x * c.z;
    iyz += mass * c.y * c.z;
    mp.inertia_com.m = {ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz};
    return mp;
}

inline TriMesh transform_mesh(const TriMesh& mesh, const Pose& pose) {
    TriMesh out;
    out.vertices.reserve(mesh.vertices.size());
    for (const Vec3& v : mesh.vertices) out.vertices.push_back(pose.apply(v));
    out.triangles = mesh.triangles;
    return out;
}

inline TriMesh transform_mesh(const TriMesh& mesh, const Transform& t) {
    return transform_mesh(mesh, Pose::from_transform(t));
}

// Appends src as an independent component: vertex sets stay disjoint, so a
// merged mesh is watertight per component.
inline void append_mesh(TriMesh& dst, const TriMesh& src) {
    int base = static_cast<int>(dst.vertices.size());
    dst.vertices.insert(dst.vertices.end(), src.vertices.begin(), src.vertices.end());
    dst.triangles.reserve(dst.triangles.size() + src.triangles.size());
    for (const auto& t : src.triangles)
        dst.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
}

// ---- primitive tessellation ----
// All generators emit closed, consistently wound meshes centered on the
// origin with the axis of symmetry along +Z.

inline int validate_segments(int segments) {
    if (segments < 8) throw Error("invalid_tessellation", "segments must be at least 8");
    return segments;
}

inline TriMesh make_box_mesh(const Vec3& size) {
    double hx = size.x / 2, hy = size.y / 2, hz = size.z / 2;
    TriMesh m;
    m.vertices = {{-hx, -hy, -hz}, {hx, -hy, -hz}, {hx, hy, -hz}, {-hx, hy, -hz},
                  {-hx, -hy, hz},  {hx, -hy, hz},  {hx, hy, hz},  {-hx, hy, hz}};
    m.triangles = {{0, 2, 1}, {0, 3, 2},   // -z
                   {4, 5, 6}, {4, 6, 7},   // +z
                   {0, 1, 5}, {0, 5, 4},   // -y
                   {2, 3, 7}, {2, 7, 6},   // +y
                   {1, 2, 6}, {1, 6, 5},   // +x
                   {3, 0, 4}, {3, 4, 7}};  // -x
    return m;
}

namespace detail {

inline void add_side_band(TriMesh& m, int ring_a, int ring_b, int n) {
    // ring_b sits above ring_a; both have n vertices laid out consecutively.
    for (int i = 0; i < n; ++i) {
        int j = (i + 1) % n;
        m.triangles.push_back({ring_a + i, ring_a + j, ring_b + j});
        m.triangles.push_back({ring_a + i, ring_b + j, ring_b + i});
    }
}

inline void add_cap_fan(TriMesh& m, int center, int ring, int n, bool up) {
    for (int i = 0; i < n; ++i) {
        int j = (i + 1) % n;
        if (up)
            m.triangles.push_back({center, ring + i, ring + j});
        else
            m.triangles.push_back({center, ring + j, ring + i});
    }
}

inline int add_ring(TriMesh& m, double radius, double z, int n, double phase = 0.0) {
    int base = static_cast<int>(m.vertices.size());
    for (int i = 0; i < n; ++i) {
        double a = phase + 2.0 * kPi * i / n;
        m.vertices.push_back({radius * std::cos(a), radius * std::sin(a), z});
    }
    return base;
}

}  // namespace detail

inline TriMesh make_cylinder_mesh(double radius, double length, int segments) {
    int n = validate_segments(segments);
    TriMesh m;
    int bottom = detail::add_ring(m, radius, -length / 2, n);
    int top = detail::add_ring(m, radius, length / 2, n);
    detail::add_side_band(m, bottom, top, n);
    int cb = static_cast<int>(m.vertices.size());
    m.vertices.push_back({0, 0, -length / 2});
    int ct = static_cast<int>(m.vertices.size());
    m.vertices.push_back({0, 0, length / 2});
    detail::add_cap_fan(m, cb, bottom, n, false);
    detail::add_cap_fan(m, ct, top, n, true);
    return m;
}

inline TriMesh make_sphere_mesh(double radius, int segments) {
    int n = validate_segments(segments);
    int stacks = std::max(2, n / 2);
    TriMesh m;
    int south = 0;
    m.vertices.push_back({0, 0, -radius});
    std::vector<int> rings;
    for (int k = 1; k < stacks; ++k) {
        double phi = -kPi / 2 + kPi * k / stacks;
        rings.push_back(detail::add_ring(m, radius * std::cos(phi), radius * std::sin(phi), n));
    }
    int north = static_cast<int>(m.vertices.size());
    m.vertices.push_back({0, 0, radius});
    detail::add_cap_fan(m, south, rings.front(), n, false);
    for (std::size_t k = 0; k + 1 < rings.size(); ++k) detail::add_side_band(m, rings[k], rings[k + 1], n);
    detail::add_cap_fan(m, north, rings.back(), n, true);
    return m;
}

inline TriMesh make_cone_mesh(double r_bottom, double r_top, double length, int segments) {
    int n = validate_segments(segments);
    TriMesh m;
    bool apex_top = r_top <= 0.0;
    bool apex_bottom = r_bottom <= 0.0;
    if (apex_top && apex_bottom) throw Error("invalid_geometry", "cone needs a positive radius");
    if (apex_top) {
        int bottom = detail::add_ring(m, r_bottom, -length / 2, n);
        int apex = static_cast<int>(m.vertices.size());
        m.vertices.push_back({0, 0, length / 2});
        detail::add_cap_fan(m, apex, bottom, n, true);
        int cb = static_cast<int>(m.vertices.size());
        m.vertices.push_back({0, 0, -length / 2});
        detail::add_cap_fan(m, cb, bottom, n, false);
        return m;
    }
    if (apex_bottom) {
        int top = detail::add_ring(m, r_top, length / 2, n);
        int apex = static_cast<int>(m.vertices.size());
        m.vertices.push_back({0, 0, -length / 2});
        detail::add_cap_fan(m, apex, top, n, false);
        int ct = static_cast<int>(m.vertices.size());
        m.vertices.push_back({0, 0, length / 2});
        detail::add_cap_fan(m, ct, top, n, true);
        return m;
    }
    int bottom = detail::add_ring(m, r_bottom, -length / 2, n);
    int top = detail::add_ring(m, r_top, length / 2, n);
    detail::add_side_band(m, bottom, top, n);
    int cb = static_cast<int>(m.vertices.size());
    m.vertices.push_back({0, 0, -length / 2});
    int ct = static_cast<int>(m.vertices.size());
    m.vertices.push_back({0, 0, length / 2});
    detail::add_cap_fan(m, cb, bottom, n, false);
    detail::add_cap_fan(m, ct, top, n, true);
    return m;
}

inline TriMesh make_capsule_mesh(double radius, double length, int segments) {
    int n = validate_segments(segments);
    int stacks = std::max(2, n / 4);
    TriMesh m;
    double hz = length / 2;
    int bottom = detail::add_ring(m, radius, -hz, n);
    int top = detail::add_ring(m, radius, hz, n);
    detail::add_side_band(m, bottom, top, n);

    int prev = top;
    for (int k = 1; k < stacks; ++k) {
        double phi = kPi / 2 * k / stacks;
        int ring = detail::add_ring(m, radius * std::cos(phi), hz + radius * std::sin(phi), n);
        detail::add_side_band(m, prev, ring, n);
        prev = ring;
    }
    int north = static_cast<int>(m.vertices.size());
    m.vertices.push_back({0, 0, hz + radius});
    detail::add_cap_fan(m, north, prev, n, true);

    prev = bottom;
    for (int k = 1; k < stacks; ++k) {
        double phi = kPi / 2 * k / stacks;
        int ring = detail::add_ring(m, radius * std::cos(phi), -hz - radius * std::sin(phi), n);
        detail::add_side_band(m, ring, prev, n);
        prev = ring;
    }
    int south = static_cast<int>(m.vertices.size());
    m.vertices.push_back({0, 0, -hz - radius});
    detail::add_cap_fan(m, south, prev, n, false);
    return m;
}

// ---- OBJ serialization ----
// Plain v/f records, shortest round-trip decimals, 1-based indices. The
// writer output is byte-stable for identical meshes.

inline std::string write_obj(const TriMesh& mesh) {
    std::string out;
    out.reserve(mesh.vertices.size() * 24 + mesh.triangles.size() * 12);
    for (const Vec3& v : mesh.vertices) {
        out += "v ";
        out += format_vec3(v);
        out += '\n';
    }
    for (const auto& t : mesh.triangles) {
        out += "f ";
        out += std::to_string(t[0] + 1);
        out += ' ';
        out += std::to_string(t[1] + 1);
        out += ' ';
        out += std::to_string(t[2] + 1);
        out += '\n';
    }
    return out;
}

inline TriMesh read_obj(const std::string& text) {
    TriMesh m;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("v ", 0) == 0) {
            std::istringstream ls(line.substr(2));
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z)) throw Error("parse_error", "bad OBJ vertex line");
            m.vertices.push_back(v);
        } else if (line.rfind("f ", 0) == 0) {
            std::istringstream ls(line.substr(2));
            std::array<int, 3> tri{};
            std::string tok;
            int count = 0;
            while (ls >> tok) {
                if (count >= 3) throw Error("parse_error", "OBJ faces must be triangles");
                tri[count++] = std::stoi(tok.substr(0, tok.find('/'))) - 1;
            }
            if (count != 3) throw Error("parse_error", "bad OBJ face line");
            m.triangles.push_back(tri);
        }
    }
    for (const auto& t : m.triangles)
        for (int idx : t)
            if (idx < 0 || idx >= static_cast<int>(m.vertices.size()))
                throw Error("parse_error", "OBJ face references a missing vertex");
    return m;
}

}  // namespace articraft
