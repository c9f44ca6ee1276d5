#pragma once

#include <string>
#include <vector>

#include "articraft/mesh.hpp"

namespace articraft {

namespace detail {

// Closed solid between an outer and an inner loop (same point count, both
// CCW viewed from +z, inner strictly inside outer), extruded z_lo..z_hi.
// Outer wall out, inner wall in, ring faces top/bottom.
inline TriMesh make_ring_solid(const std::vector<Vec3>& outer_xy, const std::vector<Vec3>& inner_xy,
                               double z_lo, double z_hi) {
    int n = static_cast<int>(outer_xy.size());
    TriMesh m;
    auto add_loop = [&](const std::vector<Vec3>& pts, double z) {
        int base = static_cast<int>(m.vertices.size());
        for (const Vec3& p : pts) m.vertices.push_back({p.x, p.y, z});
        return base;
    };
    int ob = add_loop(outer_xy, z_lo), ot = add_loop(outer_xy, z_hi);
    int ib = add_loop(inner_xy, z_lo), it = add_loop(inner_xy, z_hi);
    add_side_band(m, ob, ot, n);  // outer wall, outward
    for (int i = 0; i < n; ++i) {
        int j = (i + 1) % n;
        // inner wall, faces the hole
        m.triangles.push_back({it + i, it + j, ib + j});
        m.triangles.push_back({it + i, ib + j, ib + i});
        // top ring, +z
        m.triangles.push_back({ot + i, ot + j, it + j});
        m.triangles.push_back({ot + i, it + j, it + i});
        // bottom ring, -z
        m.triangles.push_back({ib + i, ib + j, ob + j});
        m.triangles.push_back({ib + i, ob + j, ob + i});
    }
    return m;
}

inline std::vector<Vec3> circle_points(double radius, int n, double phase = 0.0) {
    std::vector<Vec3> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
        double a = phase + 2.0 * kPi * i / n;
        pts.push_back({radius * std::cos(a), radius * std::sin(a), 0.0});
    }
    return pts;
}

inline TriMesh make_annulus_solid(double r_outer, double r_inner, double z_lo, double z_hi, int n) {
    return make_ring_solid(circle_points(r_outer, n), circle_points(r_inner, n), z_lo, z_hi);
}

inline TriMesh rotate_z_mesh(const TriMesh& mesh, double angle) {
    Pose p{rotation_z(angle), {}};
    return transform_mesh(mesh, p);
}

}  // namespace detail

// ---- wheel: rim + hub + N spokes, axis +Z ----
// Tessellation is rounded up to a multiple of the spoke count so the whole
// vertex set is invariant under rotation by one spoke pitch.

struct WheelParams {
    double radius = 0.1;
    double width = 0.04;
    int spokes = 6;
    double bore = 0.0;
    int segments = 64;
};

inline TriMesh make_wheel_mesh(const WheelParams& p) {
    validate_segments(p.segments);
    if (p.radius <= 0.0 || p.width <= 0.0) throw Error("invalid_params", "wheel radius and width must be positive");
    if (p.spokes < 3) throw Error("invalid_params", "wheel needs at least 3 spokes");
    if (p.bore < 0.0) throw Error("invalid_params", "wheel bore must be non-negative");
    double rim_depth = 0.25 * p.radius;
    double rim_inner = p.radius - rim_depth;
    double hub_r = std::max(0.3 * p.radius, p.bore + 0.08 * p.radius);
    if (hub_r >= rim_inner) throw Error("invalid_params", "wheel bore too large for the rim");
    int segs = ((p.segments + p.spokes - 1) / p.spokes) * p.spokes;

    TriMesh m = detail::make_annulus_solid(p.radius, rim_inner, -p.width / 2, p.width / 2, segs);
    if (p.bore > 0.0)
        append_mesh(m, detail::make_annulus_solid(hub_r, p.bore, -p.width / 2, p.width / 2, segs));
    else
        append_mesh(m, make_cylinder_mesh(hub_r, p.width, segs));

    // Spokes embed half a wall into hub and rim so the solid reads connected.
    double x0 = p.bore + 0.5 * (hub_r - p.bore);
    double x1 = rim_inner + 0.5 * rim_depth;
    double spoke_w = std::max(0.06 * p.radius, 0.45 * (hub_r - p.bore));
    TriMesh spoke = make_box_mesh({x1 - x0, spoke_w, 0.6 * p.width});
    spoke = transform_mesh(spoke, Transform::translation({(x0 + x1) / 2, 0, 0}));
    for (int k = 0; k < p.spokes; ++k)
        append_mesh(m, detail::rotate_z_mesh(spoke, 2.0 * kPi * k / p.spokes));
    return m;
}

// ---- barrel hinge: two leaves + knuckle barrel, hinge axis +Z ----

struct BarrelHingeParams {
    double leaf_length = 0.06;
    double leaf_width = 0.08;      // along the hinge axis
    double leaf_thickness = 0.004;
    double barrel_radius = 0.008;
    double barrel_length = 0.09;
    std::string piece = "assembly";  // assembly | leaf_a | leaf_b | barrel
    int segments = 32;
};

inline TriMesh make_barrel_hinge_mesh(const BarrelHingeParams& p) {
    validate_segments(p.segments);
    if (p.leaf_length <= 0 || p.leaf_width <= 0 || p.leaf_thickness <= 0 || p.barrel_radius <= 0 ||
        p.barrel_length <= 0)
        throw Error("invalid_params", "barrel hinge dimensions must be positive");
    if (p.piece != "assembly" && p.piece != "leaf_a" && p.piece != "leaf_b" && p.piece != "barrel")
        throw Error("invalid_params", "unknown barrel hinge piece '" + p.piece + "'");

    auto leaf = [&](double dir) {
        double x_in = 0.25 * p.barrel_radius;
        double x_out = p.barrel_radius + p.leaf_length;
        TriMesh box = make_box_mesh({x_out - x_in, p.leaf_thickness, p.leaf_width});
        return transform_mesh(box, Transform::translation({dir * (x_in + x_out) / 2, 0, 0}));
    };
    if (p.piece == "leaf_a") return leaf(1.0);
    if (p.piece == "leaf_b") return leaf(-1.0);
    if (p.piece == "barrel") return make_cylinder_mesh(p.barrel_radius, p.barrel_length, p.segments);
    TriMesh m = make_cylinder_mesh(p.barrel_radius, p.barrel_length, p.segments);
    append_mesh(m, leaf(1.0));
    append_mesh(m, leaf(-1.0));
    return m;
}

// ---- perforated panel: plate minus rows x cols circular holes ----
// Built as one closed solid per grid cell (square ring around its hole), so
// the union is exact and every component is watertight. Plate lies in the XY
// plane, thickness along Z, centered on the origin.

struct PerforatedPanelParams {
    Vec3 size{0.2, 0.1, 0.005};  // width (x), height (y), thickness (z)
    int cols = 3;
    int rows = 2;
    double hole_radius = 0.01;
    int segments = 64;
};

inline TriMesh make_perforated_panel_mesh(const PerforatedPanelParams& p) {
    validate_segments(p.segments);
    if (p.size.x <= 0 || p.size.y <= 0 || p.size.z <= 0)
        throw Error("invalid_params", "panel dimensions must be positive");
    if (p.cols < 1 || p.rows < 1) throw Error("invalid_params", "panel needs at least a 1x1 hole grid");
    if (p.hole_radius <= 0) throw Error("invalid_params", "hole radius must be positive");
    double cell_w = p.size.x / p.cols;
    double cell_h = p.size.y / p.rows;
    if (2 * p.hole_radius >= cell_w || 2 * p.hole_radius >= cell_h)
        throw Error("holes_overlap", "hole pattern does not fit the panel");

    // Outer loop walks the cell rectangle CCW, corners included; the inner
    // circle point i sits at the same polar angle as square point i so the
    // ring faces never twist.
    int quarter = std::max(4, p.segments / 8);
    int n = quarter * 4;
    std::vector<Vec3> square;
    square.reserve(n);
    double hw = cell_w / 2, hh = cell_h / 2;
    const Vec3 corners[4] = {{hw, -hh, 0}, {hw, hh, 0}, {-hw, hh, 0}, {-hw, -hh, 0}};
    for (int side = 0; side < 4; ++side) {
        Vec3 a = corners[side], b = corners[(side + 1) % 4];
        for (int k = 0; k < quarter; ++k) {
            double t = static_cast<double>(k) / quarter;
            square.push_back(a + (b - a) * t);
        }
    }
    std::vector<Vec3> circle;
    circle.reserve(n);
    for (const Vec3& s : square) {
        double a = std::atan2(s.y, s.x);
        circle.push_back({p.hole_radius * std::cos(a), p.hole_radius * std::sin(a), 0});
    }
    TriMesh cell = detail::make_ring_solid(square, circle, -p.size.z / 2, p.size.z / 2);

    TriMesh m;
    for (int r = 0; r < p.rows; ++r)
        for (int c = 0; c < p.cols; ++c) {
            double cx = -p.size.x / 2 + cell_w * (c + 0.5);
            double cy = -p.size.y / 2 + cell_h * (r + 0.5);
            append_mesh(m, transform_mesh(cell, Transform::translation({cx, cy, 0})));
        }
    return m;
}

// ---- swept tube: constant-radius circle along a polyline, mitered joints ----

struct SweptTubeParams {
    std::vector<Vec3> points;
    double radius = 0.01;
    int segments = 32;
};

inline TriMesh make_swept_tube_mesh(const SweptTubeParams& p) {
    int n = validate_segments(p.segments);
    if (p.points.size() < 2) throw Error("invalid_params", "swept tube needs at least 2 points");
    if (p.radius <= 0) throw Error("invalid_params", "tube radius must be positive");
    std::vector<Vec3> dirs;
    for (std::size_t i = 0; i + 1 < p.points.size(); ++i) {
        Vec3 d = p.points[i + 1] - p.points[i];
        if (d.norm() < 1e-9) throw Error("invalid_params", "swept tube has a zero-length segment");
        dirs.push_back(d.normalized());
    }
    for (std::size_t i = 0; i + 1 < dirs.size(); ++i)
        if (dirs[i].dot(dirs[i + 1]) < -1.0 + 1e-9)
            throw Error("invalid_params", "swept tube reverses direction at a joint");

    // Parallel-transport frame for the first segment.
    Vec3 t0 = dirs[0];
    Vec3 up = std::abs(t0.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{0, 1, 0};
    Vec3 u = t0.cross(up).normalized();
    Vec3 v = t0.cross(u);  // u, v, t right-handed-ish; ring wound CCW about +t

    TriMesh m;
    int prev = -1;
    Vec3 cur_u = u, cur_v = v;
    for (std::size_t k = 0; k < p.points.size(); ++k) {
        Vec3 t_in = k == 0 ? dirs[0] : dirs[k - 1];
        // Ring in the plane normal to the incoming direction, projected along
        // it onto the miter plane at interior joints.
        Vec3 plane_n = t_in;
        if (k > 0 && k < dirs.size()) plane_n = (dirs[k - 1] + dirs[k]).normalized();
        int ring = static_cast<int>(m.vertices.size());
        for (int i = 0; i < n; ++i) {
            double a = 2.0 * kPi * i / n;
            Vec3 q = p.points[k] + (cur_u * std::cos(a) + cur_v * std::sin(a)) * p.radius;
            q += t_in * ((p.points[k] - q).dot(plane_n) / t_in.dot(plane_n));
            m.vertices.push_back(q);
        }
        if (prev >= 0) detail::add_side_band(m, prev, ring, n);
        prev = ring;
        if (k < dirs.size() && k > 0) {
            // Transport the frame across the joint onto the next segment.
            Vec3 axis = dirs[k - 1].cross(dirs[k]);
            double s = axis.norm(), c = clamp(dirs[k - 1].dot(dirs[k]), -1.0, 1.0);
            if (s > 1e-12) {
                Mat3 rot = axis_angle(axis / s, std::atan2(s, c));
                cur_u = rot * cur_u;
                cur_v = rot * cur_v;
            }
        }
    }
    int c0 = static_cast<int>(m.vertices.size());
    m.vertices.push_back(p.points.front());
    detail::add_cap_fan(m, c0, 0, n, false);
    int c1 = static_cast<int>(m.vertices.size());
    m.vertices.push_back(p.points.back());
    detail::add_cap_fan(m, c1, static_cast<int>(p.points.size() - 1) * n, n, true);
    return m;
}

}  // namespace articraft
