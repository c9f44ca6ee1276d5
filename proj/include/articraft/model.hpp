#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "articraft/digest.hpp"
#include "articraft/mesh.hpp"
#include "articraft/procedural.hpp"

namespace articraft {

struct Rgba {
    double r = 0.5, g = 0.5, b = 0.5, a = 1.0;
    bool operator==(const Rgba& o) const = default;
};

enum class GeometryKind { Box, Cylinder, Sphere, Cone, Capsule, ProceduralMesh };

inline const char* to_string(GeometryKind k) {
    switch (k) {
        case GeometryKind::Box: return "box";
        case GeometryKind::Cylinder: return "cylinder";
        case GeometryKind::Sphere: return "sphere";
        case GeometryKind::Cone: return "cone";
        case GeometryKind::Capsule: return "capsule";
        case GeometryKind::ProceduralMesh: return "mesh";
    }
    return "?";
}

// Geometry value: five analytic primitives plus cached procedural meshes.
// Center-origin convention, symmetry axis +Z.
struct Geometry {
    GeometryKind kind = GeometryKind::Box;
    Vec3 size{1, 1, 1};                       // box
    double radius = 0.0;                      // cylinder/sphere/capsule
    double length = 0.0;                      // cylinder/cone/capsule
    double r_bottom = 0.0, r_top = 0.0;       // cone
    std::string mesh_kind;                    // procedural generator name
    std::string signature;                    // canonical parameter text, drives digests
    std::shared_ptr<const TriMesh> mesh;      // procedural cache, built once

    static Geometry box(const Vec3& size) {
        if (size.x <= 0 || size.y <= 0 || size.z <= 0)
            throw Error("invalid_geometry", "box dimensions must be positive");
        Geometry g;
        g.kind = GeometryKind::Box;
        g.size = size;
        g.signature = "box(" + format_vec3(size, ',') + ")";
        return g;
    }
    static Geometry cylinder(double radius, double length) {
        if (radius <= 0 || length <= 0)
            throw Error("invalid_geometry", "cylinder radius and length must be positive");
        Geometry g;
        g.kind = GeometryKind::Cylinder;
        g.radius = radius;
        g.length = length;
        g.signature = "cylinder(" + format_double(radius) + "," + format_double(length) + ")";
        return g;
    }
    static Geometry sphere(double radius) {
        if (radius <= 0) throw Error("invalid_geometry", "sphere radius must be positive");
        Geometry g;
        g.kind = GeometryKind::Sphere;
        g.radius = radius;
        g.signature = "sphere(" + format_double(radius) + ")";
        return g;
    }
    static Geometry cone(double r_bottom, double r_top, double length) {
        if (r_bottom < 0 || r_top < 0 || (r_bottom <= 0 && r_top <= 0) || length <= 0)
            throw Error("invalid_geometry", "cone needs non-negative radii (one positive) and positive length");
        Geometry g;
        g.kind = GeometryKind::Cone;
        g.r_bottom = r_bottom;
        g.r_top = r_top;
        g.length = length;
        g.signature = "cone(" + format_double(r_bottom) + "," + format_double(r_top) + "," +
                      format_double(length) + ")";
        return g;
    }
    static Geometry capsule(double radius, double length) {
        if (radius <= 0 || length <= 0)
            throw Error("invalid_geometry", "capsule radius and length must be positive");
        Geometry g;
        g.kind = GeometryKind::Capsule;
        g.radius = radius;
        g.length = length;
        g.signature = "capsule(" + format_double(radius) + "," + format_double(length) + ")";
        return g;
    }
    static Geometry procedural(std::string kind_name, std::string signature, TriMesh mesh) {
        if (mesh.triangles.empty()) throw Error("invalid_geometry", "procedural mesh is empty");
        Geometry g;
        g.kind = GeometryKind::ProceduralMesh;
        g.mesh_kind = std::move(kind_name);
        g.signature = std::move(signature);
        g.mesh = std::make_shared<const TriMesh>(std::move(mesh));
        return g;
    }
};

// Tessellation applies to the analytic primitives; procedural meshes were
// built at construction and come back as-is.
inline TriMesh mesh_from_primitive(const Geometry& g, int tessellation) {
    switch (g.kind) {
        case GeometryKind::Box: return make_box_mesh(g.size);
        case GeometryKind::Cylinder: return make_cylinder_mesh(g.radius, g.length, tessellation);
        case GeometryKind::Sphere: return make_sphere_mesh(g.radius, tessellation);
        case GeometryKind::Cone: return make_cone_mesh(g.r_bottom, g.r_top, g.length, tessellation);
        case GeometryKind::Capsule: return make_capsule_mesh(g.radius, g.length, tessellation);
        case GeometryKind::ProceduralMesh: return *g.mesh;
    }
    throw Error("invalid_geometry", "unknown geometry kind");
}

struct Inertial {
    double mass = 0.0;
    Vec3 center;          // com in the part frame
    Mat3 tensor = Mat3::zero();  // about the com, part-frame axes
};

// Unit-mass moments about the com for each primitive; procedural meshes fall
// back to the divergence integrals.
struct GeometryMassProperties {
    double volume = 0.0;
    Vec3 com;
    Mat3 unit_inertia = Mat3::zero();
};

inline GeometryMassProperties geometry_mass_properties(const Geometry& g) {
    GeometryMassProperties out;
    switch (g.kind) {
        case GeometryKind::Box: {
            double a = g.size.x, b = g.size.y, c = g.size.z;
            out.volume = a * b * c;
            out.unit_inertia = Mat3::diagonal((b * b + c * c) / 12, (a * a + c * c) / 12,
                                              (a * a + b * b) / 12);
            return out;
        }
        case GeometryKind::Cylinder: {
            double r = g.radius, l = g.length;
            out.volume = kPi * r * r * l;
            double ixx = (3 * r * r + l * l) / 12;
            out.unit_inertia = Mat3::diagonal(ixx, ixx, r * r / 2);
            return out;
        }
        case GeometryKind::Sphere: {
            double r = g.radius;
            out.volume = 4.0 / 3.0 * kPi * r * r * r;
            double i = 2.0 / 5.0 * r * r;
            out.unit_inertia = Mat3::diagonal(i, i, i);
            return out;
        }
        case GeometryKind::Cone: {
            // Frustum with radius rad(t) = R + k t, t measured from the base
            // plane at z = -L/2. Polynomial integrals stay stable as k -> 0.
            double R = g.r_bottom, L = g.length, k = (g.r_top - g.r_bottom) / L;
            double L2 = L * L, L3 = L2 * L, L4 = L3 * L, L5 = L4 * L;
            double vol_over_pi = R * R * L + R * k * L2 + k * k * L3 / 3;
            double first_over_pi = R * R * L2 / 2 + 2 * R * k * L3 / 3 + k * k * L4 / 4;
            double rad4 = R * R * R * R * L + 2 * R * R * R * k * L2 + 2 * R * R * k * k * L3 +
                          R * k * k * k * L4 + k * k * k * k * L5 / 5;
            double rad2t2 = R * R * L3 / 3 + R * k * L4 / 2 + k * k * L5 / 5;
            out.volume = kPi * vol_over_pi;
            double zbar = first_over_pi / vol_over_pi;
            out.com = {0, 0, zbar - L / 2};
            double izz = rad4 / (2 * vol_over_pi);
            double ixx = (rad4 / 4 + rad2t2) / vol_over_pi - zbar * zbar;
            out.unit_inertia = Mat3::diagonal(ixx, ixx, izz);
            return out;
        }
        case GeometryKind::Capsule: {
            double r = g.radius, l = g.length;
            double vc = kPi * r * r * l;              // cylinder body
            double vh = 2.0 / 3.0 * kPi * r * r * r;  // one hemisphere
            out.volume = vc + 2 * vh;
            double fc = vc / out.volume, fh = vh / out.volume;  // mass fractions
            double izz = fc * r * r / 2 + 2 * fh * (2.0 / 5.0) * r * r;
            double d = l / 2 + 3.0 * r / 8.0;  // com offset of a hemisphere
            double ixx = fc * (3 * r * r + l * l) / 12 + 2 * (fh * (83.0 / 320.0) * r * r + fh * d * d);
            out.unit_inertia = Mat3::diagonal(ixx, ixx, izz);
            return out;
        }
        case GeometryKind::ProceduralMesh: {
            MassProperties mp = mesh_mass_properties(*g.mesh, 1.0);
            out.volume = mp.volume;
            out.com = mp.com;
            out.unit_inertia = mp.inertia_com;
            return out;
        }
    }
    throw Error("invalid_geometry", "unknown geometry kind");
}

// Inertial from a geometry placed at `origin` in the part frame: the com
// moves as a point, the about-com tensor rotates by similarity.
inline Inertial inertial_from_geometry(const Geometry& g, double mass, const Transform& origin) {
    if (mass <= 0.0) throw Error("invalid_mass", "mass must be positive");
    GeometryMassProperties props = geometry_mass_properties(g);
    Mat3 rot = origin.rotation();
    Inertial inertial;
    inertial.mass = mass;
    inertial.center = origin.apply(props.com);
    inertial.tensor = rot * (props.unit_inertia * mass) * rot.transposed();
    return inertial;
}

enum class JointType { Revolute, Prismatic, Continuous, Fixed };

inline const char* to_string(JointType t) {
    switch (t) {
        case JointType::Revolute: return "revolute";
        case JointType::Prismatic: return "prismatic";
        case JointType::Continuous: return "continuous";
        case JointType::Fixed: return "fixed";
    }
    return "?";
}

inline std::optional<JointType> joint_type_from_string(const std::string& s) {
    if (s == "revolute") return JointType::Revolute;
    if (s == "prismatic") return JointType::Prismatic;
    if (s == "continuous") return JointType::Continuous;
    if (s == "fixed") return JointType::Fixed;
    return std::nullopt;
}

struct MotionLimits {
    double lower = 0.0;     // rad or m
    double upper = 0.0;
    double effort = 0.0;    // N*m or N
    double velocity = 0.0;  // rad/s or m/s
};

struct Mimic {
    std::string source;
    double multiplier = 1.0;
    double offset = 0.0;
};

struct Articulation {
    std::string name;
    JointType type = JointType::Fixed;
    std::string parent;
    std::string child;
    Transform origin;
    Vec3 axis{0, 0, 1};
    std::optional<MotionLimits> limits;
    std::optional<Mimic> mimic;
};

struct VisualElement {
    std::string name;
    Geometry geometry;
    Transform origin;
    std::optional<std::string> material;
};

struct Part {
    std::string name;
    std::vector<VisualElement> visuals;
    std::optional<Inertial> inertial;
};

// Whole asset. Parts, joints and materials keep declaration order; that
// order is part of the observable contract (digests, exports, signals).
struct ArticulatedObject {
    std::string name;
    std::vector<Part> parts;
    std::vector<Articulation> joints;
    std::vector<std::pair<std::string, Rgba>> materials;

    const Part* find_part(const std::string& part_name) const {
        for (const Part& p : parts)
            if (p.name == part_name) return &p;
        return nullptr;
    }
    Part* find_part(const std::string& part_name) {
        for (Part& p : parts)
            if (p.name == part_name) return &p;
        return nullptr;
    }
    const Articulation* find_joint(const std::string& joint_name) const {
        for (const Articulation& j : joints)
            if (j.name == joint_name) return &j;
        return nullptr;
    }
    const Rgba* find_material(const std::string& material_name) const {
        for (const auto& [name, rgba] : materials)
            if (name == material_name) return &rgba;
        return nullptr;
    }
};

inline void check_name(const std::string& name, const char* what) {
    if (name.empty()) throw Error("invalid_name", std::string(what) + " name must not be empty");
    for (char c : name)
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r')
            throw Error("invalid_name", std::string(what) + " name must not contain whitespace");
}

inline ArticulatedObject new_object(const std::string& name) {
    check_name(name, "object");
    ArticulatedObject obj;
    obj.name = name;
    return obj;
}

inline Part& add_part(ArticulatedObject& obj, const std::string& name) {
    check_name(name, "part");
    if (obj.find_part(name)) throw Error("duplicate_part_name", "part '" + name + "' already exists");
    obj.parts.push_back(Part{name, {}, {}});
    return obj.parts.back();
}

inline VisualElement& add_visual(ArticulatedObject& obj, const std::string& part_name,
                                 const Geometry& geometry, const Transform& origin,
                                 const std::string& visual_name,
                                 const std::optional<std::string>& material_name = std::nullopt,
                                 const std::optional<Rgba>& rgba = std::nullopt) {
    Part* part = obj.find_part(part_name);
    if (!part) throw Error("unknown_part", "unknown part '" + part_name + "'");
    check_name(visual_name, "visual");
    for (const VisualElement& v : part->visuals)
        if (v.name == visual_name)
            throw Error("duplicate_visual_name",
                        "visual '" + visual_name + "' already exists on part '" + part_name + "'");
    if (material_name) {
        const Rgba* existing = obj.find_material(*material_name);
        if (!existing) {
            if (!rgba)
                throw Error("unknown_material",
                            "material '" + *material_name + "' used before its rgba was given");
            obj.materials.emplace_back(*material_name, *rgba);
        } else if (rgba && !(*existing == *rgba)) {
            throw Error("material_conflict",
                        "material '" + *material_name + "' re-registered with a different rgba");
        }
    }
    part->visuals.push_back(VisualElement{visual_name, geometry, origin, material_name});
    return part->visuals.back();
}

inline Inertial& set_inertial(ArticulatedObject& obj, const std::string& part_name,
                              const Geometry& source, double mass, const Transform& origin) {
    Part* part = obj.find_part(part_name);
    if (!part) throw Error("unknown_part", "unknown part '" + part_name + "'");
    part->inertial = inertial_from_geometry(source, mass, origin);
    return *part->inertial;
}

inline Articulation& add_articulation(ArticulatedObject& obj, const std::string& name, JointType type,
                                      const std::string& parent, const std::string& child,
                                      const Transform& origin, const Vec3& axis,
                                      const std::optional<MotionLimits>& limits = std::nullopt,
                                      const std::optional<Mimic>& mimic = std::nullopt) {
    check_name(name, "joint");
    if (obj.find_joint(name)) throw Error("duplicate_joint_name", "joint '" + name + "' already exists");
    if (!obj.find_part(parent)) throw Error("unknown_part", "unknown parent part '" + parent + "'");
    if (!obj.find_part(child)) throw Error("unknown_part", "unknown child part '" + child + "'");
    if (parent == child) throw Error("self_joint", "joint '" + name + "' connects a part to itself");

    Articulation joint;
    joint.name = name;
    joint.type = type;
    joint.parent = parent;
    joint.child = child;
    joint.origin = origin;
    if (type != JointType::Fixed || axis.norm2() > 0.0) {
        if (axis.norm() <= 1e-9) throw Error("zero_axis", "joint '" + name + "' axis norm is below 1e-9");
        joint.axis = axis.normalized();
    }
    if (type == JointType::Revolute || type == JointType::Prismatic) {
        if (!limits) throw Error("limits_required", "joint '" + name + "' requires motion limits");
        if (limits->lower > limits->upper)
            throw Error("joint_limits_invalid", "joint '" + name + "' has lower > upper");
        if (limits->effort < 0 || limits->velocity < 0)
            throw Error("joint_limits_invalid", "joint '" + name + "' has negative effort or velocity");
        joint.limits = limits;
    } else if (type == JointType::Continuous && limits) {
        // Continuous joints take effort/velocity ratings but no position range.
        if (limits->lower != 0.0 || limits->upper != 0.0)
            throw Error("limits_forbidden", "joint '" + name + "' is continuous and must carry no position limits");
        if (limits->effort < 0 || limits->velocity < 0)
            throw Error("joint_limits_invalid", "joint '" + name + "' has negative effort or velocity");
        joint.limits = limits;
    } else if (limits) {
        throw Error("limits_forbidden",
                    "joint '" + name + "' is " + to_string(type) + " and must carry no position limits");
    }
    if (mimic) {
        const Articulation* source = obj.find_joint(mimic->source);
        if (!source) throw Error("unknown_joint", "mimic source '" + mimic->source + "' does not exist");
        if (source->type == JointType::Fixed)
            throw Error("invalid_mimic", "mimic source '" + mimic->source + "' is a fixed joint");
        joint.mimic = mimic;
    }
    obj.joints.push_back(joint);

    // Mimic chains must stay acyclic (sources may only point backwards, but a
    // later edit path could still close a loop; re-walk to be sure).
    std::vector<std::string> chain;
    const Articulation* cursor = &obj.joints.back();
    while (cursor && cursor->mimic) {
        for (const std::string& seen : chain)
            if (seen == cursor->name) {
                obj.joints.pop_back();
                throw Error("invalid_mimic", "mimic chain through '" + name + "' forms a cycle");
            }
        chain.push_back(cursor->name);
        cursor = obj.find_joint(cursor->mimic->source);
    }
    return obj.joints.back();
}

struct Violation {
    std::string code;
    std::string message;
};

// Full re-validation of every structural invariant. Construction enforces
// these already; QC re-runs this as its joint sanity pass.
inline std::vector<Violation> validate_object(const ArticulatedObject& obj) {
    std::vector<Violation> out;
    auto flag = [&](const std::string& code, const std::string& message) {
        out.push_back({code, message});
    };
    for (const Articulation& j : obj.joints) {
        if (!obj.find_part(j.parent)) flag("unknown_part", "joint '" + j.name + "' parent is missing");
        if (!obj.find_part(j.child)) flag("unknown_part", "joint '" + j.name + "' child is missing");
        if (j.parent == j.child) flag("self_joint", "joint '" + j.name + "' connects a part to itself");
        if (std::abs(j.axis.norm() - 1.0) > 1e-9)
            flag("zero_axis", "joint '" + j.name + "' axis is not normalized");
        if (j.type == JointType::Revolute || j.type == JointType::Prismatic) {
            if (!j.limits) {
                flag("limits_required", "joint '" + j.name + "' requires motion limits");
            } else {
                if (j.limits->lower > j.limits->upper)
                    flag("joint_limits_invalid", "joint '" + j.name + "' has lower > upper");
                if (j.limits->effort < 0 || j.limits->velocity < 0)
                    flag("joint_limits_invalid",
                         "joint '" + j.name + "' has negative effort or velocity");
            }
        } else if (j.type == JointType::Continuous && j.limits) {
            if (j.limits->lower != 0.0 || j.limits->upper != 0.0)
                flag("limits_forbidden", "joint '" + j.name + "' must carry no position limits");
            if (j.limits->effort < 0 || j.limits->velocity < 0)
                flag("joint_limits_invalid", "joint '" + j.name + "' has negative effort or velocity");
        } else if (j.limits) {
            flag("limits_forbidden", "joint '" + j.name + "' must carry no position limits");
        }
        if (j.mimic) {
            const Articulation* source = obj.find_joint(j.mimic->source);
            if (!source)
                flag("unknown_joint", "mimic source '" + j.mimic->source + "' does not exist");
            else if (source->type == JointType::Fixed)
                flag("invalid_mimic", "mimic source '" + j.mimic->source + "' is a fixed joint");
        }
        for (const std::string& part : {j.parent, j.child}) {
            int count = 0;
            for (const Articulation& other : obj.joints)
                if (other.child == part) ++count;
            if (count > 1) flag("multiple_parents", "part '" + part + "' has more than one parent joint");
        }
    }
    for (const Part& p : obj.parts) {
        for (std::size_t i = 0; i < p.visuals.size(); ++i)
            for (std::size_t k = i + 1; k < p.visuals.size(); ++k)
                if (p.visuals[i].name == p.visuals[k].name)
                    flag("duplicate_visual_name",
                         "part '" + p.name + "' has duplicate visual '" + p.visuals[i].name + "'");
        if (p.inertial && p.inertial->mass <= 0)
            flag("invalid_mass", "part '" + p.name + "' has non-positive mass");
    }
    return out;
}

// Canonical structural digest: identical construction sequences hash alike.
inline std::string object_digest(const ArticulatedObject& obj) {
    std::string s = "object " + obj.name + "\n";
    auto emit_transform = [&](const Transform& t) {
        s += format_vec3(t.xyz, ',');
        s += '|';
        s += format_vec3(t.rpy, ',');
    };
    for (const Part& p : obj.parts) {
        s += "part " + p.name + "\n";
        for (const VisualElement& v : p.visuals) {
            s += "visual " + v.name + " " + v.geometry.signature + " ";
            emit_transform(v.origin);
            if (v.material) s += " mat=" + *v.material;
            s += '\n';
        }
        if (p.inertial) {
            s += "inertial m=" + format_double(p.inertial->mass) + " c=" +
                 format_vec3(p.inertial->center, ',') + " t=";
            for (double x : p.inertial->tensor.m) {
                s += format_double(x);
                s += ',';
            }
            s += '\n';
        }
    }
    for (const Articulation& j : obj.joints) {
        s += "joint " + j.name + " " + to_string(j.type) + " " + j.parent + "->" + j.child + " ";
        emit_transform(j.origin);
        s += " axis=" + format_vec3(j.axis, ',');
        if (j.limits)
            s += " limits=" + format_double(j.limits->lower) + "," + format_double(j.limits->upper) +
                 "," + format_double(j.limits->effort) + "," + format_double(j.limits->velocity);
        if (j.mimic)
            s += " mimic=" + j.mimic->source + "," + format_double(j.mimic->multiplier) + "," +
                 format_double(j.mimic->offset);
        s += '\n';
    }
    for (const auto& [name, rgba] : obj.materials) {
        s += "material " + name + " " + format_double(rgba.r) + "," + format_double(rgba.g) + "," +
             format_double(rgba.b) + "," + format_double(rgba.a) + "\n";
    }
    return content_digest(s);
}

}  // namespace articraft
