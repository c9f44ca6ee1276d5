#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include <articraft/digest.hpp>
#include <articraft/error.hpp>
#include <articraft/kinematics.hpp>
#include <articraft/mesh.hpp>
#include <articraft/model.hpp>
#include <articraft/xml.hpp>

// URDF package export and structural import. Exports are deterministic byte
// for byte: stable element order, shortest round-trip numerals, mesh files
// regenerated from canonical geometry. Units are meters and radians, Z up,
// origins as xyz plus extrinsic-XYZ rpy. Collision elements are never
// emitted; downstream consumers derive their own.

namespace articraft {

struct ExportOptions {
    int tessellation = 64;
    bool force_meshes = false;  // tessellate Box/Cylinder/Sphere instead of native tags
};

struct MeshFileEntry {
    std::string filename;  // relative to the package directory
    std::string digest;    // content digest of the written bytes
};

struct ExportManifest {
    std::string urdf_path;
    std::vector<MeshFileEntry> mesh_files;
    int link_count = 0;
    int joint_count = 0;
    ExportOptions options;
};

namespace detail {

inline std::string obj_text(const TriMesh& mesh) {
    std::string out;
    out.reserve(mesh.vertices.size() * 24 + mesh.triangles.size() * 12);
    for (const Vec3& v : mesh.vertices) {
        out += "v ";
        out += format_vec3(v, ' ');
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

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io_error", "cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("io_error", "short write to '" + path.string() + "'");
}

inline std::string read_file(const std::filesystem::path& path, const char* error_code) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(error_code, "cannot open '" + path.string() + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

inline std::string mesh_filename(const std::string& part, const std::string& visual) {
    return part + "__" + visual + ".obj";
}

inline bool native_primitive(GeometryKind kind) {
    return kind == GeometryKind::Box || kind == GeometryKind::Cylinder ||
           kind == GeometryKind::Sphere;
}

inline void origin_into(xml::Node& parent, const Transform& t) {
    parent.child("origin").attr("xyz", format_vec3(t.xyz, ' ')).attr("rpy", format_vec3(t.rpy, ' '));
}

}  // namespace detail

inline ExportManifest export_urdf(const ArticulatedObject& obj,
                                  const std::filesystem::path& out_dir,
                                  const ExportOptions& options = {}) {
    {
        std::vector<Violation> faults = validate_object(obj);
        if (!faults.empty())
            throw Error("invalid_object", "[" + faults.front().code + "] " + faults.front().message);
    }
    try {
        build_kinematic_tree(obj);
    } catch (const Error& e) {
        throw Error("invalid_object", e.what());
    }
    if (obj.name.empty()) throw Error("invalid_object", "object has no name");

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error("io_error", "cannot create '" + out_dir.string() + "': " + ec.message());

    ExportManifest manifest;
    manifest.options = options;
    manifest.link_count = static_cast<int>(obj.parts.size());
    manifest.joint_count = static_cast<int>(obj.joints.size());

    xml::Node robot;
    robot.name = "robot";
    robot.attr("name", obj.name);

    for (const auto& [mat_name, rgba] : obj.materials) {
        xml::Node& mat = robot.child("material");
        mat.attr("name", mat_name);
        std::string channels = format_double(rgba.r) + " " + format_double(rgba.g) + " " +
                               format_double(rgba.b) + " " + format_double(rgba.a);
        mat.child("color").attr("rgba", channels);
    }

    for (const Part& part : obj.parts) {
        xml::Node& link = robot.child("link");
        link.attr("name", part.name);
        for (const VisualElement& vis : part.visuals) {
            xml::Node& vnode = link.child("visual");
            vnode.attr("name", vis.name);
            detail::origin_into(vnode, vis.origin);
            xml::Node& geom = vnode.child("geometry");
            const Geometry& g = vis.geometry;
            if (detail::native_primitive(g.kind) && !options.force_meshes) {
                switch (g.kind) {
                    case GeometryKind::Box:
                        geom.child("box").attr("size", format_vec3(g.size, ' '));
                        break;
                    case GeometryKind::Cylinder:
                        geom.child("cylinder")
                            .attr("radius", format_double(g.radius))
                            .attr("length", format_double(g.length));
                        break;
                    default:
                        geom.child("sphere").attr("radius", format_double(g.radius));
                        break;
                }
            } else {
                std::string filename = detail::mesh_filename(part.name, vis.name);
                TriMesh mesh = g.mesh ? *g.mesh : mesh_from_primitive(g, options.tessellation);
                std::string bytes = detail::obj_text(mesh);
                detail::write_file(out_dir / filename, bytes);
                manifest.mesh_files.push_back({filename, content_digest(bytes)});
                geom.child("mesh").attr("filename", filename);
            }
            if (vis.material) vnode.child("material").attr("name", *vis.material);
        }
        if (part.inertial) {
            const Inertial& in = *part.inertial;
            xml::Node& node = link.child("inertial");
            node.child("origin").attr("xyz", format_vec3(in.center, ' ')).attr("rpy", "0 0 0");
            node.child("mass").attr("value", format_double(in.mass));
            node.child("inertia")
                .attr("ixx", format_double(in.tensor(0, 0)))
                .attr("ixy", format_double(in.tensor(0, 1)))
                .attr("ixz", format_double(in.tensor(0, 2)))
                .attr("iyy", format_double(in.tensor(1, 1)))
                .attr("iyz", format_double(in.tensor(1, 2)))
                .attr("izz", format_double(in.tensor(2, 2)));
        }
    }

    for (const Articulation& j : obj.joints) {
        xml::Node& node = robot.child("joint");
        node.attr("name", j.name).attr("type", to_string(j.type));
        detail::origin_into(node, j.origin);
        node.child("parent").attr("link", j.parent);
        node.child("child").attr("link", j.child);
        node.child("axis").attr("xyz", format_vec3(j.axis, ' '));
        if (j.limits && j.type != JointType::Fixed) {
            xml::Node& limit = node.child("limit");
            if (j.type != JointType::Continuous) {
                limit.attr("lower", format_double(j.limits->lower));
                limit.attr("upper", format_double(j.limits->upper));
            }
            limit.attr("effort", format_double(j.limits->effort));
            limit.attr("velocity", format_double(j.limits->velocity));
        }
        if (j.mimic) {
            xml::Node& m = node.child("mimic");
            m.attr("joint", j.mimic->source);
            m.attr("multiplier", format_double(j.mimic->multiplier));
            m.attr("offset", format_double(j.mimic->offset));
        }
    }

    std::filesystem::path urdf_path = out_dir / (obj.name + ".urdf");
    detail::write_file(urdf_path, xml::serialize(robot));
    manifest.urdf_path = urdf_path.string();

    nlohmann::json doc{
        {"urdf", obj.name + ".urdf"},
        {"link_count", manifest.link_count},
        {"joint_count", manifest.joint_count},
        {"options",
         {{"tessellation", options.tessellation}, {"force_meshes", options.force_meshes}}},
        {"mesh_files", nlohmann::json::array()},
    };
    for (const MeshFileEntry& entry : manifest.mesh_files)
        doc["mesh_files"].push_back({{"filename", entry.filename}, {"digest", entry.digest}});
    detail::write_file(out_dir / (obj.name + ".manifest.json"), doc.dump(2) + "\n");

    return manifest;
}

// Structural description read back from a URDF file; enough to compare
// against the exporting object without rebuilding geometry.
struct UrdfJoint {
    std::string name;
    std::string type;
    std::string parent;
    std::string child;
    Vec3 origin_xyz;
    Vec3 origin_rpy;
    Vec3 axis{1, 0, 0};  // URDF default when the element is absent
    std::optional<MotionLimits> limits;
    std::optional<Mimic> mimic;
};

struct UrdfSummary {
    std::string robot_name;
    std::vector<std::string> links;
    std::vector<UrdfJoint> joints;
    std::vector<std::string> mesh_references;
    bool multiple_roots = false;

    const UrdfJoint* find_joint(const std::string& name) const {
        for (const UrdfJoint& j : joints)
            if (j.name == name) return &j;
        return nullptr;
    }
};

namespace detail {

inline double parse_number(std::string_view text, const std::string& context) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, err] = std::from_chars(first, last, value);
    if (err != std::errc{} || ptr != last)
        throw Error("parse_error", context + ": bad number '" + std::string(text) + "'");
    return value;
}

inline Vec3 parse_vec3(std::string_view text, const std::string& context) {
    double out[3];
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
        std::size_t start = pos;
        while (pos < text.size() && text[pos] != ' ' && text[pos] != '\t') ++pos;
        if (start == pos)
            throw Error("parse_error", context + ": expected three numbers in '" +
                                           std::string(text) + "'");
        out[i] = parse_number(text.substr(start, pos - start), context);
    }
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    if (pos != text.size())
        throw Error("parse_error", context + ": expected three numbers in '" + std::string(text) + "'");
    return {out[0], out[1], out[2]};
}

inline double attr_number(const xml::Node& node, std::string_view key, double fallback,
                          const std::string& context) {
    const std::string* raw = node.find_attr(key);
    return raw ? parse_number(*raw, context) : fallback;
}

}  // namespace detail

inline UrdfSummary import_urdf_summary(const std::filesystem::path& path) {
    std::string bytes = detail::read_file(path, "parse_error");
    xml::Node root = xml::parse(bytes);
    if (root.name != "robot") throw Error("parse_error", "root element must be <robot>");

    UrdfSummary summary;
    summary.robot_name = root.attr_or("name", "");

    std::set<std::string> link_names;
    for (const xml::Node* link : root.all("link")) {
        const std::string* name = link->find_attr("name");
        if (!name) throw Error("parse_error", "<link> without a name");
        summary.links.push_back(*name);
        link_names.insert(*name);
        for (const xml::Node* vis : link->all("visual")) {
            const xml::Node* geom = vis->find("geometry");
            const xml::Node* mesh = geom ? geom->find("mesh") : nullptr;
            if (!mesh) continue;
            const std::string* file = mesh->find_attr("filename");
            if (!file) throw Error("parse_error", "<mesh> without a filename");
            summary.mesh_references.push_back(*file);
            if (!std::filesystem::exists(path.parent_path() / *file))
                throw Error("missing_mesh_file", "mesh file '" + *file + "' not found next to '" +
                                                     path.string() + "'");
        }
    }

    std::set<std::string> child_links;
    for (const xml::Node* joint : root.all("joint")) {
        UrdfJoint j;
        j.name = joint->attr_or("name", "");
        j.type = joint->attr_or("type", "");
        if (j.name.empty() || j.type.empty())
            throw Error("parse_error", "<joint> needs both name and type");
        std::string context = "joint '" + j.name + "'";
        const xml::Node* parent = joint->find("parent");
        const xml::Node* child = joint->find("child");
        if (!parent || !child)
            throw Error("parse_error", context + " is missing parent or child");
        j.parent = parent->attr_or("link", "");
        j.child = child->attr_or("link", "");
        if (!link_names.count(j.parent))
            throw Error("dangling_link_reference",
                        context + " references unknown parent link '" + j.parent + "'");
        if (!link_names.count(j.child))
            throw Error("dangling_link_reference",
                        context + " references unknown child link '" + j.child + "'");
        child_links.insert(j.child);
        if (const xml::Node* origin = joint->find("origin")) {
            j.origin_xyz = detail::parse_vec3(origin->attr_or("xyz", "0 0 0"), context);
            j.origin_rpy = detail::parse_vec3(origin->attr_or("rpy", "0 0 0"), context);
        }
        if (const xml::Node* axis = joint->find("axis"))
            j.axis = detail::parse_vec3(axis->attr_or("xyz", "1 0 0"), context);
        if (const xml::Node* limit = joint->find("limit")) {
            MotionLimits lim;
            lim.lower = detail::attr_number(*limit, "lower", 0.0, context);
            lim.upper = detail::attr_number(*limit, "upper", 0.0, context);
            lim.effort = detail::attr_number(*limit, "effort", 0.0, context);
            lim.velocity = detail::attr_number(*limit, "velocity", 0.0, context);
            j.limits = lim;
        }
        if (const xml::Node* mimic = joint->find("mimic")) {
            Mimic m;
            m.source = mimic->attr_or("joint", "");
            if (m.source.empty()) throw Error("parse_error", context + ": <mimic> without a joint");
            m.multiplier = detail::attr_number(*mimic, "multiplier", 1.0, context);
            m.offset = detail::attr_number(*mimic, "offset", 0.0, context);
            j.mimic = m;
        }
        summary.joints.push_back(std::move(j));
    }

    int roots = 0;
    for (const std::string& link : summary.links) roots += child_links.count(link) ? 0 : 1;
    summary.multiple_roots = roots > 1;
    return summary;
}

// Loads the ASCII triangle meshes written by export_urdf ("v x y z" vertices,
// 1-based "f a b c" faces; normals, texcoords, and polygons are out of scope).
inline TriMesh read_obj(const std::filesystem::path& path) {
    std::string bytes = detail::read_file(path, "parse_error");
    TriMesh mesh;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < bytes.size()) {
        std::size_t end = bytes.find('\n', pos);
        if (end == std::string::npos) end = bytes.size();
        std::string_view line(bytes.data() + pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::string context = path.filename().string() + " line " + std::to_string(line_no);
        if (line.substr(0, 2) == "v ") {
            mesh.vertices.push_back(detail::parse_vec3(line.substr(2), context));
        } else if (line.substr(0, 2) == "f ") {
            Vec3 idx = detail::parse_vec3(line.substr(2), context);
            auto vertex_index = [&](double raw) {
                int i = static_cast<int>(raw) - 1;
                if (i < 0 || i >= static_cast<int>(mesh.vertices.size()))
                    throw Error("parse_error", context + ": face index out of range");
                return i;
            };
            mesh.triangles.push_back({vertex_index(idx.x), vertex_index(idx.y), vertex_index(idx.z)});
        } else {
            throw Error("parse_error", context + ": unsupported directive");
        }
    }
    return mesh;
}

}  // namespace articraft
