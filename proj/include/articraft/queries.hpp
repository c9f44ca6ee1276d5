#pragma once

#include <cstdint>
#include <queue>
#include <random>
#include <vector>

#include "articraft/mesh.hpp"

namespace articraft {

inline constexpr double kContactTolerance = 5e-4;       // m
inline constexpr double kPenetrationDepthThreshold = 1e-4;   // m
inline constexpr double kPenetrationVolumeThreshold = 1e-8;  // m^3
inline constexpr std::uint64_t kDefaultMcSeed = 0x5EED;
inline constexpr int kDefaultMcSamples = 4096;

// Raw mt19937_64 draws mapped to [0,1) by hand: uniform_real_distribution is
// implementation-defined, this is bit-identical everywhere.
inline double random_unit(std::mt19937_64& rng) {
    return std::ldexp(static_cast<double>(rng() >> 11), -53);
}

// ---- point / segment / triangle primitives (Ericson, Real-Time Collision
// Detection, ch. 5) ----

inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;
    Vec3 bp = p - b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;
    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));
    Vec3 cp = p - c;
    double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;
    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));
    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

inline double closest_segment_segment(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2,
                                      Vec3& c1, Vec3& c2) {
    Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
    double a = d1.norm2(), e = d2.norm2(), f = d2.dot(r);
    double s = 0.0, t = 0.0;
    constexpr double eps = 1e-30;
    if (a <= eps && e <= eps) {
        c1 = p1;
        c2 = p2;
        return (c1 - c2).norm2();
    }
    if (a <= eps) {
        t = clamp(f / e, 0.0, 1.0);
    } else {
        double c = d1.dot(r);
        if (e <= eps) {
            s = clamp(-c / a, 0.0, 1.0);
        } else {
            double b = d1.dot(d2), denom = a * e - b * b;
            if (denom != 0.0) s = clamp((b * f - c * e) / denom, 0.0, 1.0);
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = clamp(-c / a, 0.0, 1.0);
            } else if (t > 1.0) {
                t = 1.0;
                s = clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    c1 = p1 + d1 * s;
    c2 = p2 + d2 * t;
    return (c1 - c2).norm2();
}

// Proper or touching segment-triangle crossing (plane straddle + barycentric
// containment of the intersection point, boundaries inclusive).
inline bool segment_crosses_triangle(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b,
                                     const Vec3& c, Vec3* hit = nullptr) {
    Vec3 n = (b - a).cross(c - a);
    double dp = n.dot(p - a), dq = n.dot(q - a);
    if (dp * dq > 0.0) return false;
    if (dp == 0.0 && dq == 0.0) return false;  // coplanar handled by distance terms
    double t = dp / (dp - dq);
    Vec3 x = p + (q - p) * t;
    double nn = n.norm2();
    if (nn == 0.0) return false;
    Vec3 w0 = (b - x).cross(c - x), w1 = (c - x).cross(a - x), w2 = (a - x).cross(b - x);
    if (w0.dot(n) < 0.0 || w1.dot(n) < 0.0 || w2.dot(n) < 0.0) return false;
    if (hit) *hit = x;
    return true;
}

struct TriTriResult {
    double distance = 0.0;
    Vec3 point_a, point_b;
    bool crossing = false;  // an edge of one pierces the other's interior
};

// Minimum distance between two triangles: min over 6 vertex-face and 9
// edge-edge candidates, 0 exactly when an edge crosses the other triangle.
inline TriTriResult tri_tri_distance(const Vec3& a0, const Vec3& a1, const Vec3& a2, const Vec3& b0,
                                     const Vec3& b1, const Vec3& b2) {
    TriTriResult best;
    double best2 = std::numeric_limits<double>::infinity();
    auto consider = [&](const Vec3& pa, const Vec3& pb) {
        double d2 = (pa - pb).norm2();
        if (d2 < best2) {
            best2 = d2;
            best.point_a = pa;
            best.point_b = pb;
        }
    };
    const Vec3 ta[3] = {a0, a1, a2};
    const Vec3 tb[3] = {b0, b1, b2};
    for (int i = 0; i < 3; ++i) {
        consider(ta[i], closest_point_on_triangle(ta[i], b0, b1, b2));
        Vec3 q = closest_point_on_triangle(tb[i], a0, a1, a2);
        consider(q, tb[i]);
    }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            Vec3 c1, c2;
            closest_segment_segment(ta[i], ta[(i + 1) % 3], tb[j], tb[(j + 1) % 3], c1, c2);
            consider(c1, c2);
        }
    for (int i = 0; i < 3; ++i) {
        Vec3 hit;
        if (segment_crosses_triangle(ta[i], ta[(i + 1) % 3], b0, b1, b2, &hit)) {
            best.crossing = true;
            best.point_a = best.point_b = hit;
            best.distance = 0.0;
            return best;
        }
        if (segment_crosses_triangle(tb[i], tb[(i + 1) % 3], a0, a1, a2, &hit)) {
            best.crossing = true;
            best.point_a = best.point_b = hit;
            best.distance = 0.0;
            return best;
        }
    }
    best.distance = std::sqrt(best2);
    return best;
}

// ---- BVH over triangles ----

class Bvh {
public:
    struct Node {
        Aabb box;
        int left = -1, right = -1;
        int first = 0, count = 0;  // leaf when count > 0
    };

    Bvh() = default;
    explicit Bvh(const TriMesh& mesh) : mesh_(&mesh) {
        order_.resize(mesh.triangles.size());
        std::iota(order_.begin(), order_.end(), 0);
        if (!order_.empty()) build(0, static_cast<int>(order_.size()));
    }

    const TriMesh& mesh() const { return *mesh_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    int root() const { return nodes_.empty() ? -1 : 0; }
    int tri_index(int ordered) const { return order_[ordered]; }

    Aabb bounds() const { return nodes_.empty() ? Aabb{} : nodes_[0].box; }

private:
    int build(int first, int count) {
        Node node;
        Aabb centroid_box;
        for (int i = 0; i < count; ++i) {
            const auto& t = mesh_->triangles[order_[first + i]];
            Vec3 c;
            for (int k = 0; k < 3; ++k) {
                node.box.expand(mesh_->vertices[t[k]]);
                c += mesh_->vertices[t[k]];
            }
            centroid_box.expand(c / 3.0);
        }
        int index = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        if (count <= 4) {
            nodes_[index].first = first;
            nodes_[index].count = count;
            return index;
        }
        Vec3 ext = centroid_box.extent();
        int axis = ext.x >= ext.y ? (ext.x >= ext.z ? 0 : 2) : (ext.y >= ext.z ? 1 : 2);
        int mid = count / 2;
        std::nth_element(order_.begin() + first, order_.begin() + first + mid,
                         order_.begin() + first + count, [&](int lhs, int rhs) {
                             auto centroid = [&](int tri, int ax) {
                                 const auto& t = mesh_->triangles[tri];
                                 return mesh_->vertices[t[0]][ax] + mesh_->vertices[t[1]][ax] +
                                        mesh_->vertices[t[2]][ax];
                             };
                             double ca = centroid(lhs, axis), cb = centroid(rhs, axis);
                             return ca < cb || (ca == cb && lhs < rhs);
                         });
        int left = build(first, mid);
        int right = build(first + mid, count - mid);
        nodes_[index].left = left;
        nodes_[index].right = right;
        return index;
    }

    const TriMesh* mesh_ = nullptr;
    std::vector<Node> nodes_;
    std::vector<int> order_;
};

struct ProximityResult {
    double distance = std::numeric_limits<double>::infinity();
    Vec3 point_a, point_b;
    bool contact = false;  // distance <= tolerance used by the caller
};

// Exact minimum distance via branch-and-bound on box lower bounds; identical
// to the full triangle-pair scan, just pruned.
inline ProximityResult min_distance(const Bvh& a, const Bvh& b) {
    ProximityResult best;
    if (a.root() < 0 || b.root() < 0) return best;
    double best2 = std::numeric_limits<double>::infinity();

    struct Item {
        double bound2;
        int na, nb;
        bool operator<(const Item& o) const { return bound2 > o.bound2; }
    };
    std::priority_queue<Item> queue;
    auto push = [&](int na, int nb) {
        double bound2 = Aabb::distance2(a.nodes()[na].box, b.nodes()[nb].box);
        if (bound2 < best2) queue.push({bound2, na, nb});
    };
    push(a.root(), b.root());
    while (!queue.empty()) {
        Item item = queue.top();
        queue.pop();
        if (item.bound2 >= best2) continue;
        const Bvh::Node& na = a.nodes()[item.na];
        const Bvh::Node& nb = b.nodes()[item.nb];
        if (na.count > 0 && nb.count > 0) {
            for (int i = 0; i < na.count; ++i)
                for (int j = 0; j < nb.count; ++j) {
                    const auto& ta = a.mesh().triangles[a.tri_index(na.first + i)];
                    const auto& tb = b.mesh().triangles[b.tri_index(nb.first + j)];
                    TriTriResult r = tri_tri_distance(
                        a.mesh().vertices[ta[0]], a.mesh().vertices[ta[1]], a.mesh().vertices[ta[2]],
                        b.mesh().vertices[tb[0]], b.mesh().vertices[tb[1]], b.mesh().vertices[tb[2]]);
                    double d2 = r.distance * r.distance;
                    if (d2 < best2) {
                        best2 = d2;
                        best.point_a = r.point_a;
                        best.point_b = r.point_b;
                        if (best2 == 0.0) {
                            best.distance = 0.0;
                            best.contact = true;
                            return best;
                        }
                    }
                }
        } else if (na.count > 0) {
            push(item.na, nb.left);
            push(item.na, nb.right);
        } else if (nb.count > 0) {
            push(na.left, item.nb);
            push(na.right, item.nb);
        } else {
            push(na.left, nb.left);
            push(na.left, nb.right);
            push(na.right, nb.left);
            push(na.right, nb.right);
        }
    }
    best.distance = std::sqrt(best2);
    best.contact = best.distance <= kContactTolerance;
    return best;
}

inline ProximityResult min_distance(const TriMesh& a, const TriMesh& b) {
    Bvh ba(a), bb(b);
    return min_distance(ba, bb);
}

// Distance from a point to the mesh surface.
inline double distance_to_surface(const Vec3& p, const Bvh& bvh) {
    if (bvh.root() < 0) return std::numeric_limits<double>::infinity();
    double best2 = std::numeric_limits<double>::infinity();
    struct Item {
        double bound2;
        int node;
        bool operator<(const Item& o) const { return bound2 > o.bound2; }
    };
    std::priority_queue<Item> queue;
    auto bound = [&](int n) {
        const Aabb& box = bvh.nodes()[n].box;
        double d2 = 0.0;
        for (int i = 0; i < 3; ++i) {
            double gap = std::max(std::max(box.lo[i] - p[i], p[i] - box.hi[i]), 0.0);
            d2 += gap * gap;
        }
        return d2;
    };
    queue.push({bound(bvh.root()), bvh.root()});
    while (!queue.empty()) {
        Item item = queue.top();
        queue.pop();
        if (item.bound2 >= best2) continue;
        const Bvh::Node& node = bvh.nodes()[item.node];
        if (node.count > 0) {
            for (int i = 0; i < node.count; ++i) {
                const auto& t = bvh.mesh().triangles[bvh.tri_index(node.first + i)];
                Vec3 q = closest_point_on_triangle(p, bvh.mesh().vertices[t[0]],
                                                   bvh.mesh().vertices[t[1]], bvh.mesh().vertices[t[2]]);
                best2 = std::min(best2, (p - q).norm2());
            }
        } else {
            double bl = bound(node.left), br = bound(node.right);
            if (bl < best2) queue.push({bl, node.left});
            if (br < best2) queue.push({br, node.right});
        }
    }
    return std::sqrt(best2);
}

// Generalized winding number (Van Oosterom and Strackee solid angles).
// Robust point-in-solid for closed meshes; multi-component meshes sum, so a
// point inside any component counts as inside.
inline double winding_number(const Vec3& p, const TriMesh& mesh) {
    double total = 0.0;
    for (const auto& t : mesh.triangles) {
        Vec3 a = mesh.vertices[t[0]] - p;
        Vec3 b = mesh.vertices[t[1]] - p;
        Vec3 c = mesh.vertices[t[2]] - p;
        double la = a.norm(), lb = b.norm(), lc = c.norm();
        double denom = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
        double numer = a.dot(b.cross(c));
        total += 2.0 * std::atan2(numer, denom);
    }
    return total / (4.0 * kPi);
}

inline bool point_in_mesh(const Vec3& p, const TriMesh& mesh) {
    return std::abs(winding_number(p, mesh)) > 0.5;
}

struct PenetrationMeasure {
    bool overlapping = false;
    double depth = 0.0;       // m, max over sampled interior points of min distance to either surface
    double volume = 0.0;      // m^3, Monte-Carlo estimate inside the Aabb intersection
    int samples_inside = 0;
    int samples_total = 0;
};

namespace detail {

// Positive depth estimate when the solids share interior volume: a vertex of
// one strictly inside the other, or an edge properly crossing a triangle.
// Boundary touching at measure zero returns 0. Rescues sliver overlaps the
// Monte-Carlo pass misses; the returned magnitude is an estimate only.
inline double interior_witness_depth(const TriMesh& mesh_a, const Bvh& bvh_a,
                                     const TriMesh& mesh_b, const Bvh& bvh_b, const Aabb& region) {
    double depth = 0.0;
    auto vertex_pass = [&](const TriMesh& source, const TriMesh& other, const Bvh& other_bvh) {
        for (const Vec3& v : source.vertices) {
            if (!region.contains(v)) continue;
            if (point_in_mesh(v, other)) depth = std::max(depth, distance_to_surface(v, other_bvh));
        }
    };
    vertex_pass(mesh_a, mesh_b, bvh_b);
    vertex_pass(mesh_b, mesh_a, bvh_a);
    if (depth > 0.0) return depth;

    auto strict_crossing = [](const Vec3& e0, const Vec3& e1, const Vec3& t0, const Vec3& t1,
                              const Vec3& t2) -> double {
        Vec3 n = (t1 - t0).cross(t2 - t0);
        double nn = n.norm();
        if (nn <= 0.0) return 0.0;
        double d0 = n.dot(e0 - t0), d1 = n.dot(e1 - t0);
        if (!(d0 * d1 < 0.0)) return 0.0;
        double t = d0 / (d0 - d1);
        Vec3 hit = e0 + (e1 - e0) * t;
        Vec3 v0 = t1 - t0, v1 = t2 - t0, v2 = hit - t0;
        double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
        double d20 = v2.dot(v0), d21 = v2.dot(v1);
        double denom = d00 * d11 - d01 * d01;
        if (denom <= 0.0) return 0.0;
        double bv = (d11 * d20 - d01 * d21) / denom;
        double bw = (d00 * d21 - d01 * d20) / denom;
        double bu = 1.0 - bv - bw;
        const double eps = 1e-10;
        if (bu <= eps || bv <= eps || bw <= eps) return 0.0;
        return std::min(std::abs(d0), std::abs(d1)) / nn;
    };
    auto tri_pair = [&](const Vec3& a0, const Vec3& a1, const Vec3& a2, const Vec3& b0,
                        const Vec3& b1, const Vec3& b2) {
        depth = std::max(depth, strict_crossing(a0, a1, b0, b1, b2));
        depth = std::max(depth, strict_crossing(a1, a2, b0, b1, b2));
        depth = std::max(depth, strict_crossing(a2, a0, b0, b1, b2));
        depth = std::max(depth, strict_crossing(b0, b1, a0, a1, a2));
        depth = std::max(depth, strict_crossing(b1, b2, a0, a1, a2));
        depth = std::max(depth, strict_crossing(b2, b0, a0, a1, a2));
    };

    std::vector<std::pair<int, int>> stack{{bvh_a.root(), bvh_b.root()}};
    while (!stack.empty()) {
        auto [na, nb] = stack.back();
        stack.pop_back();
        const Bvh::Node& node_a = bvh_a.nodes()[na];
        const Bvh::Node& node_b = bvh_b.nodes()[nb];
        if (Aabb::distance2(node_a.box, node_b.box) > 0.0) continue;
        if (node_a.count > 0 && node_b.count > 0) {
            for (int i = 0; i < node_a.count; ++i) {
                const auto& ta = mesh_a.triangles[bvh_a.tri_index(node_a.first + i)];
                for (int j = 0; j < node_b.count; ++j) {
                    const auto& tb = mesh_b.triangles[bvh_b.tri_index(node_b.first + j)];
                    tri_pair(mesh_a.vertices[ta[0]], mesh_a.vertices[ta[1]], mesh_a.vertices[ta[2]],
                             mesh_b.vertices[tb[0]], mesh_b.vertices[tb[1]], mesh_b.vertices[tb[2]]);
                }
            }
        } else if (node_b.count > 0 || (node_a.count == 0 && node_a.box.volume() >= node_b.box.volume())) {
            stack.emplace_back(node_a.left, nb);
            stack.emplace_back(node_a.right, nb);
        } else {
            stack.emplace_back(na, node_b.left);
            stack.emplace_back(na, node_b.right);
        }
    }
    return depth;
}

}  // namespace detail

struct PenetrationOptions {
    int samples = kDefaultMcSamples;
    std::uint64_t seed = kDefaultMcSeed;
};

// Fixed-seed Monte-Carlo classification inside the Aabb intersection, plus a
// crossing sweep so paper-thin overlaps still report a positive depth.
inline PenetrationMeasure penetration_measure(const TriMesh& mesh_a, const Bvh& bvh_a,
                                              const TriMesh& mesh_b, const Bvh& bvh_b,
                                              const PenetrationOptions& opts = {}) {
    if (!is_watertight(mesh_a) || !is_watertight(mesh_b))
        throw Error("non_watertight_input", "penetration_measure requires watertight meshes");
    PenetrationMeasure out;
    Aabb box = Aabb::intersection(bvh_a.bounds(), bvh_b.bounds());
    if (!box.valid()) return out;

    Vec3 ext = box.extent();
    if (ext.x > 0.0 && ext.y > 0.0 && ext.z > 0.0) {
        std::mt19937_64 rng(opts.seed);
        out.samples_total = opts.samples;
        for (int i = 0; i < opts.samples; ++i) {
            // Draw all three coordinates unconditionally to keep the stream
            // layout independent of classification results.
            double ux = random_unit(rng), uy = random_unit(rng), uz = random_unit(rng);
            Vec3 p{box.lo.x + ext.x * ux, box.lo.y + ext.y * uy, box.lo.z + ext.z * uz};
            if (!point_in_mesh(p, mesh_a) || !point_in_mesh(p, mesh_b)) continue;
            ++out.samples_inside;
            double d = std::min(distance_to_surface(p, bvh_a), distance_to_surface(p, bvh_b));
            out.depth = std::max(out.depth, d);
        }
        if (out.samples_total > 0)
            out.volume = box.volume() * out.samples_inside / out.samples_total;
    }
    out.overlapping = out.samples_inside > 0;

    if (!out.overlapping) {
        double witness = detail::interior_witness_depth(mesh_a, bvh_a, mesh_b, bvh_b, box);
        if (witness > 0.0) {
            out.overlapping = true;
            out.depth = witness;
        }
    }
    return out;
}

inline PenetrationMeasure penetration_measure(const TriMesh& a, const TriMesh& b,
                                              const PenetrationOptions& opts = {}) {
    Bvh ba(a), bb(b);
    return penetration_measure(a, ba, b, bb, opts);
}

// Deterministic area-weighted surface samples (fixed seed per call).
inline std::vector<Vec3> sample_surface_points(const TriMesh& mesh, int count, std::uint64_t seed) {
    std::vector<Vec3> points;
    if (mesh.triangles.empty() || count <= 0) return points;
    std::vector<double> cumulative(mesh.triangles.size());
    double total = 0.0;
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        const auto& t = mesh.triangles[i];
        total += (mesh.vertices[t[1]] - mesh.vertices[t[0]])
                     .cross(mesh.vertices[t[2]] - mesh.vertices[t[0]])
                     .norm() * 0.5;
        cumulative[i] = total;
    }
    std::mt19937_64 rng(seed);
    points.reserve(count);
    for (int i = 0; i < count; ++i) {
        double pick = random_unit(rng) * total;
        auto it = std::lower_bound(cumulative.begin(), cumulative.end(), pick);
        std::size_t tri = std::min<std::size_t>(it - cumulative.begin(), mesh.triangles.size() - 1);
        double su = std::sqrt(random_unit(rng));
        double v = random_unit(rng);
        const auto& t = mesh.triangles[tri];
        Vec3 a = mesh.vertices[t[0]], b = mesh.vertices[t[1]], c = mesh.vertices[t[2]];
        points.push_back(a * (1.0 - su) + b * (su * (1.0 - v)) + c * (su * v));
    }
    return points;
}

}  // namespace articraft
