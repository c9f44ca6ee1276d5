#pragma once

#include <map>
#include <string>
#include <vector>

#include "articraft/model.hpp"

namespace articraft {

// Joint configuration: joint name -> scalar position (rad or m). Omitted
// joints default to 0, clamped into limits.
using PoseConfig = std::map<std::string, double>;

struct KinematicTree {
    std::string root;                       // empty only for an empty object
    std::vector<std::string> order;         // joint-connected parts, parents before children
    std::vector<std::string> free_parts;    // parts with no joints, declaration order
    std::vector<std::pair<std::string, std::vector<int>>> children;  // part -> joint indices

    const std::vector<int>* child_joints(const std::string& part) const {
        for (const auto& [name, joints] : children)
            if (name == part) return &joints;
        return nullptr;
    }
};

// Root = the unique joint-participating part that never appears as a child.
// Parts with no joints at all are free-floating nodes: they are not a
// structural error here, the QC isolated-part check owns that failure mode.
inline KinematicTree build_kinematic_tree(const ArticulatedObject& obj) {
    for (const Violation& v : validate_object(obj)) throw Error(v.code, v.message);

    KinematicTree tree;
    if (obj.parts.empty()) return tree;

    std::vector<std::string> joint_parts;
    auto participates = [&](const std::string& name) {
        for (const std::string& p : joint_parts)
            if (p == name) return true;
        return false;
    };
    for (const Articulation& j : obj.joints) {
        if (!participates(j.parent)) joint_parts.push_back(j.parent);
        if (!participates(j.child)) joint_parts.push_back(j.child);
    }

    if (obj.joints.empty()) {
        tree.root = obj.parts.front().name;
        tree.order.push_back(tree.root);
        for (std::size_t i = 1; i < obj.parts.size(); ++i) tree.free_parts.push_back(obj.parts[i].name);
        return tree;
    }

    std::vector<std::string> roots;
    for (const std::string& part : joint_parts) {
        bool is_child = false;
        for (const Articulation& j : obj.joints)
            if (j.child == part) is_child = true;
        if (!is_child) roots.push_back(part);
    }
    if (roots.empty()) throw Error("kinematic_cycle", "every joint-connected part has a parent");
    if (roots.size() > 1)
        throw Error("multiple_roots",
                    "parts '" + roots[0] + "' and '" + roots[1] + "' are both kinematic roots");
    tree.root = roots.front();

    for (const Part& p : obj.parts) {
        std::vector<int> kids;
        for (std::size_t i = 0; i < obj.joints.size(); ++i)
            if (obj.joints[i].parent == p.name) kids.push_back(static_cast<int>(i));
        if (!kids.empty() || participates(p.name)) tree.children.emplace_back(p.name, std::move(kids));
    }

    // BFS in joint-declaration order; anything joint-connected but not
    // reached hangs off a cycle.
    tree.order.push_back(tree.root);
    for (std::size_t cursor = 0; cursor < tree.order.size(); ++cursor) {
        const std::vector<int>* kids = tree.child_joints(tree.order[cursor]);
        if (!kids) continue;
        for (int ji : *kids) tree.order.push_back(obj.joints[ji].child);
    }
    if (tree.order.size() != joint_parts.size())
        throw Error("kinematic_cycle", "joint graph contains a cycle not reachable from the root");

    for (const Part& p : obj.parts)
        if (!participates(p.name)) tree.free_parts.push_back(p.name);
    return tree;
}

namespace detail {

inline double resolve_joint_position(const ArticulatedObject& obj, const Articulation& joint,
                                     const PoseConfig& pose, std::vector<std::string>* warnings,
                                     int depth = 0) {
    if (depth > static_cast<int>(obj.joints.size()))
        throw Error("invalid_mimic", "mimic chain through '" + joint.name + "' is too deep");
    double q = 0.0;
    if (joint.mimic) {
        const Articulation* source = obj.find_joint(joint.mimic->source);
        q = joint.mimic->multiplier * resolve_joint_position(obj, *source, pose, warnings, depth + 1) +
            joint.mimic->offset;
    } else {
        auto it = pose.find(joint.name);
        if (it != pose.end()) q = it->second;
    }
    if ((joint.type == JointType::Revolute || joint.type == JointType::Prismatic) && joint.limits) {
        double clamped = clamp(q, joint.limits->lower, joint.limits->upper);
        if (clamped != q && warnings)
            warnings->push_back("joint '" + joint.name + "' pose " + format_double(q) +
                                " clamped to [" + format_double(joint.limits->lower) + ", " +
                                format_double(joint.limits->upper) + "]");
        q = clamped;
    }
    return q;
}

inline Pose joint_motion(const Articulation& joint, double q) {
    switch (joint.type) {
        case JointType::Revolute:
        case JointType::Continuous:
            return {axis_angle(joint.axis, q), {}};
        case JointType::Prismatic:
            return {Mat3::identity(), joint.axis * q};
        case JointType::Fixed:
            return Pose::identity();
    }
    return Pose::identity();
}

}  // namespace detail

// World pose per part: root at identity, child = parent * origin * motion(q).
// Exact matrix composition; callers convert to rpy transforms only at the
// boundary. Free-floating parts sit at identity.
inline std::map<std::string, Pose> forward_kinematics_poses(const ArticulatedObject& obj,
                                                            const KinematicTree& tree,
                                                            const PoseConfig& pose,
                                                            std::vector<std::string>* warnings = nullptr) {
    for (const auto& [name, value] : pose) {
        (void)value;
        const Articulation* joint = obj.find_joint(name);
        if (!joint) throw Error("unknown_joint_in_pose", "pose references unknown joint '" + name + "'");
        if (joint->type == JointType::Fixed)
            throw Error("fixed_joint_in_pose", "pose sets fixed joint '" + name + "'");
        if (joint->mimic)
            throw Error("mimic_set_directly", "pose sets mimic joint '" + name + "' directly");
    }
    std::map<std::string, Pose> world;
    if (tree.root.empty()) return world;
    world[tree.root] = Pose::identity();
    for (const std::string& part : tree.order) {
        const std::vector<int>* kids = tree.child_joints(part);
        if (!kids) continue;
        const Pose& parent_pose = world[part];
        for (int ji : *kids) {
            const Articulation& joint = obj.joints[ji];
            double q = detail::resolve_joint_position(obj, joint, pose, warnings);
            world[joint.child] = parent_pose * Pose::from_transform(joint.origin) * detail::joint_motion(joint, q);
        }
    }
    for (const std::string& part : tree.free_parts) world[part] = Pose::identity();
    return world;
}

inline std::map<std::string, Transform> forward_kinematics(const ArticulatedObject& obj,
                                                           const KinematicTree& tree,
                                                           const PoseConfig& pose,
                                                           std::vector<std::string>* warnings = nullptr) {
    std::map<std::string, Transform> out;
    for (const auto& [part, p] : forward_kinematics_poses(obj, tree, pose, warnings))
        out[part] = p.to_transform();
    return out;
}

inline bool joints_adjacent(const ArticulatedObject& obj, const std::string& a, const std::string& b) {
    for (const Articulation& j : obj.joints)
        if ((j.parent == a && j.child == b) || (j.parent == b && j.child == a)) return true;
    return false;
}

}  // namespace articraft
