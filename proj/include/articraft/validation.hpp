#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <articraft/apl/eval.hpp>
#include <articraft/apl/testplan.hpp>
#include <articraft/kinematics.hpp>
#include <articraft/mesh.hpp>
#include <articraft/model.hpp>
#include <articraft/queries.hpp>

#include <json.hpp>

// Geometric QC, authored-test execution, probes, and the compile_signals wire
// format. Everything here is deterministic: fixed seeds, declaration-ordered
// scans, shortest round-trip number formatting.

namespace articraft {

inline constexpr int kWithinSamples = 512;      // expect_within surface samples
inline constexpr int kProbeStepBudget = 10000;  // probe expression node visits

enum class Severity { Failure, Warning, Note };

inline const char* severity_name(Severity s) {
    switch (s) {
        case Severity::Failure: return "failure";
        case Severity::Warning: return "warning";
        case Severity::Note: return "note";
    }
    return "?";
}

struct Finding {
    Severity severity = Severity::Failure;
    std::string code;
    std::string message;
    nlohmann::json payload;  // structured detail, raw magnitudes unrounded
};

struct TestResult {
    std::string label;
    bool passed = false;
    std::string detail;  // empty on pass
};

struct CompileReport {
    std::vector<Finding> findings;
    std::vector<TestResult> tests;
    double elapsed_seconds = 0.0;
    nlohmann::json manifest;  // export manifest when artifacts were written, else null

    int count(Severity s) const {
        int n = 0;
        for (const Finding& f : findings) n += f.severity == s ? 1 : 0;
        return n;
    }
    bool success() const { return count(Severity::Failure) == 0; }
};

// ---------------------------------------------------------------------------
// Mesh staging

// Per-part tessellated meshes in the part frame (visual origins baked in).
// BVHs are built after every mesh has reached its final address, and the cache
// is pinned in place so those internal pointers stay valid.
struct VisualMesh {
    std::string name;
    TriMesh mesh;
    Bvh bvh;
};

struct PartMeshes {
    std::string part;
    std::vector<VisualMesh> visuals;  // declaration order
    TriMesh merged;                   // concatenation of all visuals
    Bvh merged_bvh;

    bool has_geometry() const { return !merged.triangles.empty(); }
};

class MeshCache {
  public:
    MeshCache(const ArticulatedObject& obj, int tessellation) {
        parts_.reserve(obj.parts.size());
        for (const Part& p : obj.parts) {
            PartMeshes pm;
            pm.part = p.name;
            pm.visuals.reserve(p.visuals.size());
            for (const VisualElement& v : p.visuals) {
                VisualMesh vm;
                vm.name = v.name;
                vm.mesh = transform_mesh(mesh_from_primitive(v.geometry, tessellation), v.origin);
                pm.visuals.push_back(std::move(vm));
            }
            for (const VisualMesh& vm : pm.visuals) append_mesh(pm.merged, vm.mesh);
            parts_.push_back(std::move(pm));
        }
        for (std::size_t i = 0; i < parts_.size(); ++i) {
            PartMeshes& pm = parts_[i];
            for (VisualMesh& vm : pm.visuals) vm.bvh = Bvh(vm.mesh);
            if (pm.has_geometry()) pm.merged_bvh = Bvh(pm.merged);
            index_[pm.part] = i;
        }
    }

    MeshCache(const MeshCache&) = delete;
    MeshCache& operator=(const MeshCache&) = delete;

    const std::vector<PartMeshes>& parts() const { return parts_; }

    const PartMeshes& at(const std::string& part) const {
        auto it = index_.find(part);
        if (it == index_.end()) throw Error("unknown_part", "no meshes cached for part '" + part + "'");
        return parts_[it->second];
    }

    const PartMeshes* find(const std::string& part) const {
        auto it = index_.find(part);
        return it == index_.end() ? nullptr : &parts_[it->second];
    }

  private:
    std::vector<PartMeshes> parts_;
    std::map<std::string, std::size_t> index_;
};

namespace detail {

// World-posed geometry for one pose configuration. Posed parts are built on
// demand and heap-pinned so each Bvh keeps pointing at its own mesh.
class PoseContext {
  public:
    struct PosedPart {
        TriMesh mesh;
        Bvh bvh;
        bool empty = false;
    };

    PoseContext(const ArticulatedObject& obj, const KinematicTree& tree, const MeshCache& cache,
                PoseConfig config)
        : cache_(cache), config_(std::move(config)) {
        world_ = forward_kinematics_poses(obj, tree, config_);
    }

    const PoseConfig& config() const { return config_; }

    const Pose& world_pose(const std::string& part) const {
        auto it = world_.find(part);
        if (it == world_.end()) throw Error("unknown_part", "no world pose for part '" + part + "'");
        return it->second;
    }

    const PosedPart& posed(const std::string& part) {
        auto it = posed_.find(part);
        if (it != posed_.end()) return *it->second;
        const PartMeshes& pm = cache_.at(part);
        auto posed = std::make_unique<PosedPart>();
        if (pm.has_geometry()) {
            posed->mesh = transform_mesh(pm.merged, world_pose(part));
            posed->bvh = Bvh(posed->mesh);
        } else {
            posed->empty = true;
        }
        const PosedPart& ref = *posed;
        posed_.emplace(part, std::move(posed));
        return ref;
    }

    // Single posed visual, used for element-scoped overlap attribution.
    std::unique_ptr<PosedPart> posed_visual(const std::string& part, const VisualMesh& vm) const {
        auto out = std::make_unique<PosedPart>();
        out->mesh = transform_mesh(vm.mesh, world_pose(part));
        out->bvh = Bvh(out->mesh);
        return out;
    }

  private:
    const MeshCache& cache_;
    PoseConfig config_;
    std::map<std::string, Pose> world_;
    std::map<std::string, std::unique_ptr<PosedPart>> posed_;
};

// Message magnitudes are rounded to 0.1 mm; payloads keep the raw values.
inline std::string format_magnitude(double v) {
    if (!std::isfinite(v)) return "unknown";
    double r = std::round(v * 1e4) / 1e4;
    if (r == 0.0) r = 0.0;
    return format_double(r);
}

struct Dsu {
    std::vector<int> parent;
    explicit Dsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Geometric QC

struct QcOptions {
    PenetrationOptions penetration;
    int within_samples = kWithinSamples;
};

// Rest-pose quality control: floating parts, unintended overlaps, joint
// sanity, per-part connectivity, naming lint. Allowances demote exactly the
// finding they suppress to a note; an unused allowance emits nothing.
inline std::vector<Finding> run_qc(const ArticulatedObject& obj, const KinematicTree& tree,
                                   const MeshCache& cache,
                                   const std::vector<apl::Directive>& allowances,
                                   const QcOptions& opts = {}) {
    std::vector<Finding> out;
    const std::size_t n = obj.parts.size();
    if (n == 0) return out;

    detail::PoseContext rest(obj, tree, cache, PoseConfig{});

    auto part_index = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < n; ++i)
            if (obj.parts[i].name == name) return static_cast<int>(i);
        return -1;
    };

    // 1. Contact graph: joint adjacency or rest-pose proximity within the
    //    contact tolerance. Parts outside the root component are floating.
    detail::Dsu dsu(n);
    std::map<std::pair<int, int>, double> pair_distance;
    auto distance_between = [&](int i, int j) {
        auto key = std::minmax(i, j);
        auto it = pair_distance.find(key);
        if (it != pair_distance.end()) return it->second;
        const detail::PoseContext::PosedPart& a = rest.posed(obj.parts[key.first].name);
        const detail::PoseContext::PosedPart& b = rest.posed(obj.parts[key.second].name);
        double d = std::numeric_limits<double>::infinity();
        if (!a.empty && !b.empty) d = min_distance(a.bvh, b.bvh).distance;
        pair_distance[key] = d;
        return d;
    };

    for (const Articulation& j : obj.joints) {
        int pi = part_index(j.parent), ci = part_index(j.child);
        if (pi >= 0 && ci >= 0) dsu.unite(pi, ci);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (dsu.find(static_cast<int>(i)) == dsu.find(static_cast<int>(j))) continue;
            if (distance_between(static_cast<int>(i), static_cast<int>(j)) <= kContactTolerance)
                dsu.unite(static_cast<int>(i), static_cast<int>(j));
        }

    const int root_comp = dsu.find(part_index(tree.root));
    std::vector<int> grounded;
    for (std::size_t i = 0; i < n; ++i)
        if (dsu.find(static_cast<int>(i)) == root_comp) grounded.push_back(static_cast<int>(i));

    for (std::size_t i = 0; i < n; ++i) {
        if (dsu.find(static_cast<int>(i)) == root_comp) continue;
        const std::string& part = obj.parts[i].name;
        double best = std::numeric_limits<double>::infinity();
        std::string nearest = tree.root;
        for (int g : grounded) {
            double d = distance_between(static_cast<int>(i), g);
            if (d < best) {
                best = d;
                nearest = obj.parts[g].name;
            }
        }
        nlohmann::json payload = {{"part", part},
                                  {"root", tree.root},
                                  {"nearest_grounded_part", nearest},
                                  {"approx_gap", best}};
        const apl::Directive* allowance = nullptr;
        for (const apl::Directive& a : allowances)
            if (a.kind == apl::Directive::Kind::AllowIsolated && a.a == part) {
                allowance = &a;
                break;
            }
        if (allowance) {
            payload["reason"] = allowance->reason;
            out.push_back({Severity::Note, "allowed_isolated_part",
                           "allow_isolated_part('" + part + "'): " + allowance->reason,
                           std::move(payload)});
        } else {
            out.push_back({Severity::Failure, "isolated_part",
                           "Floating disconnected component(s) detected. part '" + part +
                               "' is disconnected from the grounded body rooted at '" + tree.root +
                               "'; nearest_grounded_part='" + nearest + "'; approx_gap=" +
                               detail::format_magnitude(best) + "m.",
                           std::move(payload)});
        }
    }

    // 2. Overlaps between non-joint-adjacent pairs, measured on the merged
    //    meshes; attribution and allowance scoping run per visual pair.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const std::string& a = obj.parts[i].name;
            const std::string& b = obj.parts[j].name;
            if (joints_adjacent(obj, a, b)) continue;
            const detail::PoseContext::PosedPart& pa = rest.posed(a);
            const detail::PoseContext::PosedPart& pb = rest.posed(b);
            if (pa.empty || pb.empty) continue;
            if (Aabb::distance2(mesh_aabb(pa.mesh), mesh_aabb(pb.mesh)) > 0.0) continue;
            PenetrationMeasure pen =
                penetration_measure(pa.mesh, pa.bvh, pb.mesh, pb.bvh, opts.penetration);
            if (pen.depth <= kPenetrationDepthThreshold && pen.volume <= kPenetrationVolumeThreshold)
                continue;

            // Overlapping visual pairs, deepest first element kept for the message.
            struct ElemHit {
                std::string va, vb;
                double depth, volume;
            };
            std::vector<ElemHit> hits;
            for (const VisualMesh& va : cache.at(a).visuals)
                for (const VisualMesh& vb : cache.at(b).visuals) {
                    auto wa = rest.posed_visual(a, va);
                    auto wb = rest.posed_visual(b, vb);
                    if (Aabb::distance2(mesh_aabb(wa->mesh), mesh_aabb(wb->mesh)) > 0.0) continue;
                    PenetrationMeasure pe =
                        penetration_measure(wa->mesh, wa->bvh, wb->mesh, wb->bvh, opts.penetration);
                    if (pe.depth > kPenetrationDepthThreshold ||
                        pe.volume > kPenetrationVolumeThreshold)
                        hits.push_back({va.name, vb.name, pe.depth, pe.volume});
                }
            const ElemHit* worst = nullptr;
            for (const ElemHit& h : hits)
                if (!worst || h.depth > worst->depth ||
                    (h.depth == worst->depth && h.volume > worst->volume))
                    worst = &h;

            // An unscoped allowance for the pair suppresses the finding; scoped
            // allowances must jointly cover every overlapping visual pair.
            std::vector<const apl::Directive*> used;
            bool unscoped = false;
            std::vector<bool> covered(hits.size(), false);
            for (const apl::Directive& al : allowances) {
                if (al.kind != apl::Directive::Kind::AllowOverlap) continue;
                bool fwd = al.a == a && al.b == b;
                bool rev = al.a == b && al.b == a;
                if (!fwd && !rev) continue;
                if (al.elem_a.empty() && al.elem_b.empty()) {
                    used.push_back(&al);
                    unscoped = true;
                    continue;
                }
                const std::string& ea = fwd ? al.elem_a : al.elem_b;
                const std::string& eb = fwd ? al.elem_b : al.elem_a;
                bool matched = false;
                for (std::size_t h = 0; h < hits.size(); ++h) {
                    if ((ea.empty() || hits[h].va == ea) && (eb.empty() || hits[h].vb == eb)) {
                        covered[h] = true;
                        matched = true;
                    }
                }
                if (matched) used.push_back(&al);
            }
            bool all_covered = !hits.empty();
            for (bool c : covered) all_covered = all_covered && c;
            bool suppressed = unscoped || all_covered;

            if (suppressed) {
                for (const apl::Directive* al : used) {
                    std::string msg = "allow_overlap('" + al->a + "','" + al->b + "')";
                    if (!al->elem_a.empty() || !al->elem_b.empty()) {
                        msg += ", elem_a='" + al->elem_a + "', elem_b='" + al->elem_b + "'";
                    }
                    msg += ": " + al->reason;
                    nlohmann::json payload = {{"part_a", al->a}, {"part_b", al->b},
                                              {"depth", pen.depth}, {"volume", pen.volume},
                                              {"reason", al->reason}};
                    if (!al->elem_a.empty()) payload["elem_a"] = al->elem_a;
                    if (!al->elem_b.empty()) payload["elem_b"] = al->elem_b;
                    out.push_back({Severity::Note, "allowed_overlap", std::move(msg), std::move(payload)});
                }
            } else {
                std::string msg = "parts '" + a + "' and '" + b + "' overlap";
                nlohmann::json payload = {{"part_a", a}, {"part_b", b},
                                          {"depth", pen.depth}, {"volume", pen.volume}};
                if (worst) {
                    msg += ": elem_a='" + worst->va + "', elem_b='" + worst->vb + "'";
                    payload["elem_a"] = worst->va;
                    payload["elem_b"] = worst->vb;
                }
                msg += "; depth=" + detail::format_magnitude(pen.depth) + "m; volume=" +
                       format_double(pen.volume) + "m3.";
                out.push_back({Severity::Failure, "overlap", std::move(msg), std::move(payload)});
            }
        }

    // 3. Joint sanity re-validation. Construction already enforces these, so
    //    anything caught here means the object was mutated behind the API.
    for (const auto& v : validate_object(obj)) {
        bool limit_issue = v.code == "joint_limits_invalid" || v.code == "limits_required" ||
                           v.code == "limits_forbidden";
        out.push_back({Severity::Failure, limit_issue ? "joint_limits_invalid" : "runtime_error",
                       v.message, {{"code", v.code}}});
    }

    // 4. Per-part visual connectivity. Distances are pose-invariant within a
    //    part, so the part-frame meshes are compared directly.
    for (const Part& p : obj.parts) {
        const PartMeshes& pm = cache.at(p.name);
        if (pm.visuals.size() < 2) continue;
        detail::Dsu vd(pm.visuals.size());
        for (std::size_t i = 0; i < pm.visuals.size(); ++i)
            for (std::size_t j = i + 1; j < pm.visuals.size(); ++j) {
                if (vd.find(static_cast<int>(i)) == vd.find(static_cast<int>(j))) continue;
                if (min_distance(pm.visuals[i].bvh, pm.visuals[j].bvh).distance <= kContactTolerance)
                    vd.unite(static_cast<int>(i), static_cast<int>(j));
            }
        std::vector<int> roots;
        std::map<int, std::vector<std::string>> clusters;
        for (std::size_t i = 0; i < pm.visuals.size(); ++i) {
            int r = vd.find(static_cast<int>(i));
            if (!clusters.count(r)) roots.push_back(r);
            clusters[r].push_back(pm.visuals[i].name);
        }
        if (roots.size() < 2) continue;
        nlohmann::json cluster_json = nlohmann::json::array();
        for (int r : roots) cluster_json.push_back(clusters[r]);
        out.push_back({Severity::Warning, "disconnected_geometry",
                       "part '" + p.name + "' splits into " + std::to_string(roots.size()) +
                           " disconnected visual clusters; e.g. '" + clusters[roots[0]].front() +
                           "' and '" + clusters[roots[1]].front() + "' do not touch.",
                       {{"part", p.name}, {"clusters", cluster_json}}});
    }

    // 5. Naming lint: word budget and articulation-state words.
    static const char* kStateWords[] = {"open", "closed", "extended", "ajar", "tilted", "rotated"};
    for (const Part& p : obj.parts) {
        std::vector<std::string> words;
        std::string cur;
        for (char c : p.name) {
            if (c == '_') {
                words.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        words.push_back(cur);
        if (words.size() > 5)
            out.push_back({Severity::Warning, "naming_lint",
                           "part name '" + p.name + "' uses " + std::to_string(words.size()) +
                               " underscore-separated words; keep link names to at most 5.",
                           {{"part", p.name}, {"words", words.size()}}});
        std::string state;
        for (const char* w : kStateWords)
            for (const std::string& word : words)
                if (state.empty() && word == w) state = w;
        if (state.empty() && p.name.find("pulled_out") != std::string::npos) state = "pulled_out";
        if (!state.empty())
            out.push_back({Severity::Warning, "naming_lint",
                           "part name '" + p.name + "' encodes articulation state ('" + state +
                               "'); name links for the part, not its pose.",
                           {{"part", p.name}, {"state_word", state}}});
    }

    return out;
}

// ---------------------------------------------------------------------------
// Authored-test execution

namespace detail {

// Tests-scope expression evaluation: shared math plus the measurement builtins
// world_position / aabb / distance, bound to one pose context.
class MeasureEvaluator : public apl::BuildEvaluator {
  public:
    MeasureEvaluator(PoseContext& ctx, const apl::Bindings& bindings)
        : BuildEvaluator(64), ctx_(ctx) {
        env_.define("pi", apl::Value::number(kPi));
        for (const auto& [name, value] : bindings) env_.define(name, value);
    }

    apl::Value evaluate(const apl::Expr& e) { return eval(e, env_); }

  protected:
    apl::Value eval_call(const apl::Expr& call, apl::Env& env) override {
        if (std::optional<apl::Value> shared = eval_shared_call(call, env)) return *shared;
        const std::string& name = call.text;
        if (name == "world_position") {
            apl::Args args(call, {"part"});
            args.require("part");
            const Pose& pose = ctx_.world_pose(resolve_part(args, "part", env));
            return vec_value({pose.pos.x, pose.pos.y, pose.pos.z});
        }
        if (name == "aabb") {
            apl::Args args(call, {"part"});
            args.require("part");
            std::string part = resolve_part(args, "part", env);
            const PoseContext::PosedPart& posed = ctx_.posed(part);
            if (posed.empty)
                throw apl::EvalError{"invalid_params", "part '" + part + "' has no geometry",
                                     args.loc("part")};
            Aabb box = mesh_aabb(posed.mesh);
            std::vector<apl::Value> corners;
            corners.push_back(vec_value({box.lo.x, box.lo.y, box.lo.z}));
            corners.push_back(vec_value({box.hi.x, box.hi.y, box.hi.z}));
            return apl::Value::make_list(std::move(corners));
        }
        if (name == "distance") {
            apl::Args args(call, {"a", "b"});
            args.require("a");
            args.require("b");
            const PoseContext::PosedPart& a = ctx_.posed(resolve_part(args, "a", env));
            const PoseContext::PosedPart& b = ctx_.posed(resolve_part(args, "b", env));
            double d = std::numeric_limits<double>::infinity();
            if (!a.empty && !b.empty) d = min_distance(a.bvh, b.bvh).distance;
            return apl::Value::number(d);
        }
        throw apl::EvalError{"undefined_identifier", "unknown builtin '" + name + "' in tests scope",
                             call.loc};
    }

  private:
    PoseContext& ctx_;

    std::string resolve_part(apl::Args& args, const std::string& param, apl::Env& env) {
        apl::Value v = eval(args.expr(param), env);
        std::string part = apl::detail::as_string(v, args.callee(), args.loc(param));
        try {
            ctx_.world_pose(part);
        } catch (const Error&) {
            throw apl::EvalError{"unknown_part_in_test", "unknown part '" + part + "'",
                                 args.loc(param)};
        }
        return part;
    }

    static apl::Value vec_value(std::initializer_list<double> xs) {
        std::vector<apl::Value> items;
        for (double x : xs) items.push_back(apl::Value::number(x));
        return apl::Value::make_list(std::move(items));
    }
};

}  // namespace detail

struct TestRunOutput {
    std::vector<TestResult> results;  // one row per executable directive, plan order
    std::vector<Finding> findings;    // test_failure per failing directive
};

// Walks the plan tree. Directives outside pose blocks run at the rest pose;
// a pose block overrides the enclosing configuration for its subtree, with
// binding expressions evaluated against the enclosing context. Never throws:
// a faulting directive or pose binding fails the affected directives instead.
inline TestRunOutput run_test_plan(const ArticulatedObject& obj, const KinematicTree& tree,
                                   const MeshCache& cache, const apl::TestPlan& plan,
                                   const QcOptions& opts = {}) {
    TestRunOutput out;
    std::map<std::string, std::unique_ptr<detail::PoseContext>> contexts;

    auto config_key = [](const PoseConfig& cfg) {
        std::string key;
        for (const auto& [joint, value] : cfg) key += joint + "=" + format_double(value) + ";";
        return key;
    };
    auto context_for = [&](const PoseConfig& cfg) -> detail::PoseContext& {
        std::string key = config_key(cfg);
        auto it = contexts.find(key);
        if (it == contexts.end())
            it = contexts.emplace(key, std::make_unique<detail::PoseContext>(obj, tree, cache, cfg))
                     .first;
        return *it->second;
    };

    auto fail_row = [&](const apl::Directive& d, const std::string& label, const std::string& detail,
                        nlohmann::json payload) {
        out.results.push_back({label, false, detail});
        payload["directive"] = d.describe();
        payload["line"] = d.loc.line;
        out.findings.push_back({Severity::Failure, "test_failure",
                                d.describe() + " failed: " + detail, std::move(payload)});
    };
    auto pass_row = [&](const std::string& label) { out.results.push_back({label, true, ""}); };

    auto run_directive = [&](const apl::Directive& d, detail::PoseContext& ctx) {
        std::string label = d.kind == apl::Directive::Kind::Check ? d.label : d.describe();
        nlohmann::json pose_json = nlohmann::json::object();
        for (const auto& [joint, value] : ctx.config()) pose_json[joint] = value;
        nlohmann::json payload = {{"pose", pose_json}};

        switch (d.kind) {
            case apl::Directive::Kind::ExpectContact: {
                const auto& a = ctx.posed(d.a);
                const auto& b = ctx.posed(d.b);
                double dist = std::numeric_limits<double>::infinity();
                if (!a.empty && !b.empty) dist = min_distance(a.bvh, b.bvh).distance;
                payload["min_distance"] = dist;
                payload["tol"] = d.tol;
                if (dist <= d.tol)
                    pass_row(label);
                else
                    fail_row(d, label,
                             "min_distance=" + format_double(dist) + " exceeds tol=" +
                                 format_double(d.tol),
                             payload);
                return;
            }
            case apl::Directive::Kind::ExpectGap: {
                const auto& a = ctx.posed(d.a);
                const auto& b = ctx.posed(d.b);
                double dist = std::numeric_limits<double>::infinity();
                double depth = 0.0;
                if (!a.empty && !b.empty) {
                    dist = min_distance(a.bvh, b.bvh).distance;
                    if (dist == 0.0)
                        depth = penetration_measure(a.mesh, a.bvh, b.mesh, b.bvh, opts.penetration)
                                    .depth;
                }
                payload["min_distance"] = dist;
                payload["penetration_depth"] = depth;
                if (dist >= d.min_gap && depth <= d.max_penetration) {
                    pass_row(label);
                } else {
                    std::string why = dist < d.min_gap
                                          ? "min_distance=" + format_double(dist) + " is below min_gap=" +
                                                format_double(d.min_gap)
                                          : "penetration depth=" + format_double(depth) +
                                                " exceeds max_penetration=" +
                                                format_double(d.max_penetration);
                    fail_row(d, label, why, payload);
                }
                return;
            }
            case apl::Directive::Kind::ExpectOverlap: {
                const auto& a = ctx.posed(d.a);
                const auto& b = ctx.posed(d.b);
                if (a.empty || b.empty) {
                    fail_row(d, label, "a part has no geometry", payload);
                    return;
                }
                PenetrationMeasure pen =
                    penetration_measure(a.mesh, a.bvh, b.mesh, b.bvh, opts.penetration);
                payload["depth"] = pen.depth;
                payload["volume"] = pen.volume;
                if (pen.overlapping)
                    pass_row(label);
                else
                    fail_row(d, label,
                             "no shared interior volume (min_distance=" +
                                 format_double(min_distance(a.bvh, b.bvh).distance) + ")",
                             payload);
                return;
            }
            case apl::Directive::Kind::ExpectWithin: {
                const auto& inner = ctx.posed(d.a);
                const auto& outer = ctx.posed(d.b);
                if (inner.empty || outer.empty) {
                    fail_row(d, label, "a part has no geometry", payload);
                    return;
                }
                std::vector<Vec3> samples =
                    sample_surface_points(inner.mesh, opts.within_samples, kDefaultMcSeed);
                int escapes = 0;
                for (const Vec3& p : samples) {
                    bool ok = point_in_mesh(p, outer.mesh) ||
                              distance_to_surface(p, outer.bvh) <= kContactTolerance;
                    escapes += ok ? 0 : 1;
                }
                payload["escaped_samples"] = escapes;
                payload["samples"] = static_cast<int>(samples.size());
                if (escapes == 0)
                    pass_row(label);
                else
                    fail_row(d, label,
                             std::to_string(escapes) + " of " + std::to_string(samples.size()) +
                                 " surface samples of '" + d.a + "' lie outside '" + d.b + "'",
                             payload);
                return;
            }
            case apl::Directive::Kind::Check: {
                detail::MeasureEvaluator ev(ctx, plan.bindings);
                try {
                    apl::Value v = ev.evaluate(*d.check);
                    if (v.kind != apl::Value::Kind::Number) {
                        payload["value_kind"] = v.kind_name();
                        fail_row(d, label,
                                 "check expression produced a " + std::string(v.kind_name()) +
                                     ", expected a boolean number",
                                 payload);
                    } else if (v.truthy()) {
                        pass_row(label);
                    } else {
                        fail_row(d, label, "expression evaluated false", payload);
                    }
                } catch (const apl::EvalError& e) {
                    payload["error_code"] = e.code;
                    fail_row(d, label, "[" + e.code + "] " + e.message, payload);
                }
                return;
            }
            default:
                return;  // allowances are inert here
        }
    };

    // Recursive plan walk; pose-binding faults fail every directive beneath.
    struct Walker {
        decltype(run_directive)& run;
        decltype(context_for)& ctx_for;
        decltype(fail_row)& fail;
        const apl::TestPlan& plan;

        void walk(const std::vector<apl::PlanNode>& nodes, detail::PoseContext& ctx) {
            for (const apl::PlanNode& node : nodes) {
                if (node.directive && node.pose.empty()) {
                    run(*node.directive, ctx);
                    continue;
                }
                if (node.pose.empty()) {
                    walk(node.children, ctx);
                    continue;
                }
                PoseConfig cfg = ctx.config();
                std::string error;
                detail::MeasureEvaluator ev(ctx, plan.bindings);
                for (const auto& [joint, expr] : node.pose) {
                    try {
                        apl::Value v = ev.evaluate(*expr);
                        cfg[joint] =
                            apl::detail::as_number(v, "pose value for '" + joint + "'", expr->loc);
                    } catch (const apl::EvalError& e) {
                        error = "pose binding '" + joint + "' failed: [" + e.code + "] " + e.message;
                        break;
                    }
                }
                if (!error.empty()) {
                    fail_all(node.children, error);
                    continue;
                }
                walk(node.children, ctx_for(cfg));
            }
        }

        void fail_all(const std::vector<apl::PlanNode>& nodes, const std::string& error) {
            for (const apl::PlanNode& node : nodes) {
                if (node.directive) {
                    const apl::Directive& d = *node.directive;
                    bool executable = d.kind != apl::Directive::Kind::AllowOverlap &&
                                      d.kind != apl::Directive::Kind::AllowIsolated;
                    if (executable) {
                        std::string label =
                            d.kind == apl::Directive::Kind::Check ? d.label : d.describe();
                        fail(d, label, error, nlohmann::json::object());
                    }
                }
                fail_all(node.children, error);
            }
        }
    };

    Walker walker{run_directive, context_for, fail_row, plan};
    walker.walk(plan.nodes, context_for(PoseConfig{}));
    return out;
}

// ---------------------------------------------------------------------------
// Probes

struct ProbeResult {
    bool ok = false;
    std::string error_code;     // probe_syntax_error | unknown_symbol | probe_budget_exceeded
    std::string error_message;
    nlohmann::json value;
    std::string text;           // rendered document (or error line)
};

namespace detail {

struct ProbeError {
    std::string code;
    std::string message;
};

// Read-only inspection evaluator over structured JSON values. Bounded by a
// step budget so a probe can never stall a session.
class ProbeEvaluator {
  public:
    ProbeEvaluator(const ArticulatedObject& obj, const KinematicTree& tree, const MeshCache& cache,
                   const apl::Bindings& bindings, int budget)
        : obj_(obj), tree_(tree), cache_(cache), bindings_(bindings), budget_(budget) {}

    nlohmann::json eval(const apl::Expr& e) {
        if (++steps_ > budget_)
            throw ProbeError{"probe_budget_exceeded",
                             "probe exceeded " + std::to_string(budget_) + " evaluation steps"};
        using K = apl::Expr::Kind;
        switch (e.kind) {
            case K::Number: return e.number;
            case K::String: return e.text;
            case K::Ident: {
                if (e.text == "pi") return kPi;
                auto it = bindings_.find(e.text);
                if (it != bindings_.end()) return to_json(it->second);
                throw ProbeError{"unknown_symbol", "unknown identifier '" + e.text + "'"};
            }
            case K::List: {
                nlohmann::json arr = nlohmann::json::array();
                for (const auto& item : e.items) arr.push_back(eval(*item));
                return arr;
            }
            case K::Unary: {
                nlohmann::json v = eval(*e.items[0]);
                if (e.text == "-") return -expect_number(v, "unary '-'");
                if (e.text == "!") return expect_number(v, "'!'") == 0.0 ? 1.0 : 0.0;
                throw ProbeError{"probe_syntax_error", "unsupported unary operator"};
            }
            case K::Binary: return eval_binary(e);
            case K::Index: {
                nlohmann::json base = eval(*e.items[0]);
                double idx = expect_number(eval(*e.items[1]), "index");
                if (!base.is_array())
                    throw ProbeError{"probe_syntax_error", "only arrays can be indexed"};
                auto i = static_cast<std::int64_t>(idx);
                if (i < 0 || i >= static_cast<std::int64_t>(base.size()))
                    throw ProbeError{"probe_syntax_error",
                                     "index " + std::to_string(i) + " out of range for " +
                                         std::to_string(base.size()) + " elements"};
                return base[static_cast<std::size_t>(i)];
            }
            case K::Call: return eval_call(e);
        }
        throw ProbeError{"probe_syntax_error", "unreachable expression kind"};
    }

  private:
    const ArticulatedObject& obj_;
    const KinematicTree& tree_;
    const MeshCache& cache_;
    const apl::Bindings& bindings_;
    int budget_;
    int steps_ = 0;
    std::map<std::string, std::unique_ptr<PoseContext>> contexts_;

    static nlohmann::json to_json(const apl::Value& v) {
        switch (v.kind) {
            case apl::Value::Kind::Number: return v.num;
            case apl::Value::Kind::Str: return v.str;
            case apl::Value::Kind::List: {
                nlohmann::json arr = nlohmann::json::array();
                for (const apl::Value& item : v.list) arr.push_back(to_json(item));
                return arr;
            }
            case apl::Value::Kind::Geom: return v.geom->signature;
        }
        return nullptr;
    }

    static double expect_number(const nlohmann::json& v, const std::string& what) {
        if (!v.is_number())
            throw ProbeError{"probe_syntax_error", what + " expects a number"};
        return v.get<double>();
    }

    std::string expect_string(const nlohmann::json& v, const std::string& what) {
        if (!v.is_string())
            throw ProbeError{"probe_syntax_error", what + " expects a part name string"};
        return v.get<std::string>();
    }

    nlohmann::json eval_binary(const apl::Expr& e) {
        const std::string& op = e.text;
        if (op == "&&") {
            double lhs = expect_number(eval(*e.items[0]), "'&&'");
            if (lhs == 0.0) return 0.0;
            return expect_number(eval(*e.items[1]), "'&&'") != 0.0 ? 1.0 : 0.0;
        }
        if (op == "||") {
            double lhs = expect_number(eval(*e.items[0]), "'||'");
            if (lhs != 0.0) return 1.0;
            return expect_number(eval(*e.items[1]), "'||'") != 0.0 ? 1.0 : 0.0;
        }
        nlohmann::json a = eval(*e.items[0]);
        nlohmann::json b = eval(*e.items[1]);
        if (op == "+" && a.is_string() && b.is_string())
            return a.get<std::string>() + b.get<std::string>();
        if ((op == "==" || op == "!=") && a.is_string() && b.is_string()) {
            bool eq = a.get<std::string>() == b.get<std::string>();
            return (op == "==") == eq ? 1.0 : 0.0;
        }
        double x = expect_number(a, "'" + op + "'");
        double y = expect_number(b, "'" + op + "'");
        if (op == "+") return x + y;
        if (op == "-") return x - y;
        if (op == "*") return x * y;
        if (op == "/") {
            if (y == 0.0) throw ProbeError{"probe_syntax_error", "division by zero"};
            return x / y;
        }
        if (op == "==") return x == y ? 1.0 : 0.0;
        if (op == "!=") return x != y ? 1.0 : 0.0;
        if (op == "<") return x < y ? 1.0 : 0.0;
        if (op == ">") return x > y ? 1.0 : 0.0;
        if (op == "<=") return x <= y ? 1.0 : 0.0;
        if (op == ">=") return x >= y ? 1.0 : 0.0;
        throw ProbeError{"probe_syntax_error", "unsupported operator '" + op + "'"};
    }

    PoseContext& context_for(const PoseConfig& cfg) {
        std::string key;
        for (const auto& [joint, value] : cfg) key += joint + "=" + format_double(value) + ";";
        auto it = contexts_.find(key);
        if (it == contexts_.end()) {
            try {
                it = contexts_.emplace(key, std::make_unique<PoseContext>(obj_, tree_, cache_, cfg))
                         .first;
            } catch (const Error& err) {
                throw ProbeError{"unknown_symbol", err.what()};
            }
        }
        return *it->second;
    }

    PoseConfig pose_argument(const apl::Expr* expr) {
        PoseConfig cfg;
        if (!expr) return cfg;
        nlohmann::json v = eval(*expr);
        if (!v.is_array())
            throw ProbeError{"probe_syntax_error",
                             "pose expects a list of [joint, value] pairs"};
        for (const auto& pair : v) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() ||
                !pair[1].is_number())
                throw ProbeError{"probe_syntax_error",
                                 "pose expects a list of [joint, value] pairs"};
            cfg[pair[0].get<std::string>()] = pair[1].get<double>();
        }
        return cfg;
    }

    const PartMeshes& named_part(const std::string& part) {
        const PartMeshes* pm = cache_.find(part);
        if (!pm) throw ProbeError{"unknown_symbol", "unknown part '" + part + "'"};
        return *pm;
    }

    nlohmann::json eval_call(const apl::Expr& call) {
        const std::string& name = call.text;
        auto arity = [&](std::size_t lo, std::size_t hi) {
            if (call.args.size() < lo || call.args.size() > hi)
                throw ProbeError{"probe_syntax_error",
                                 name + " takes " + std::to_string(lo) +
                                     (hi > lo ? ".." + std::to_string(hi) : "") + " argument(s)"};
        };
        auto positional = [&](std::size_t i) -> const apl::Expr& {
            return *call.args[i].value;
        };
        auto named_or_positional = [&](const char* pname,
                                       std::size_t index) -> const apl::Expr* {
            for (const apl::Arg& a : call.args)
                if (a.name == pname) return a.value.get();
            std::size_t pos = 0;
            for (const apl::Arg& a : call.args) {
                if (!a.name.empty()) continue;
                if (pos == index) return a.value.get();
                ++pos;
            }
            return nullptr;
        };
        auto required = [&](const char* pname, std::size_t index) -> const apl::Expr& {
            const apl::Expr* e = named_or_positional(pname, index);
            if (!e)
                throw ProbeError{"probe_syntax_error",
                                 name + " requires argument '" + pname + "'"};
            return *e;
        };

        if (name == "sin" || name == "cos" || name == "sqrt" || name == "abs") {
            arity(1, 1);
            double x = expect_number(eval(positional(0)), name);
            if (name == "sin") return std::sin(x);
            if (name == "cos") return std::cos(x);
            if (name == "abs") return std::abs(x);
            if (x < 0.0) throw ProbeError{"probe_syntax_error", "sqrt of a negative number"};
            return std::sqrt(x);
        }
        if (name == "min" || name == "max") {
            arity(2, 2);
            double x = expect_number(eval(positional(0)), name);
            double y = expect_number(eval(positional(1)), name);
            return name == "min" ? std::min(x, y) : std::max(x, y);
        }
        if (name == "str") {
            arity(1, 1);
            nlohmann::json v = eval(positional(0));
            if (v.is_string()) return v;
            if (v.is_number()) return format_double(v.get<double>());
            throw ProbeError{"probe_syntax_error", "str expects a number or string"};
        }
        if (name == "parts") {
            arity(0, 0);
            nlohmann::json arr = nlohmann::json::array();
            for (const Part& p : obj_.parts) {
                nlohmann::json visuals = nlohmann::json::array();
                for (const VisualElement& v : p.visuals) visuals.push_back(v.name);
                arr.push_back({{"name", p.name},
                               {"visuals", visuals},
                               {"mass", p.inertial ? nlohmann::json(p.inertial->mass)
                                                   : nlohmann::json(nullptr)}});
            }
            return arr;
        }
        if (name == "joints") {
            arity(0, 0);
            nlohmann::json arr = nlohmann::json::array();
            for (const Articulation& j : obj_.joints) {
                nlohmann::json row = {{"name", j.name},
                                      {"type", to_string(j.type)},
                                      {"parent", j.parent},
                                      {"child", j.child},
                                      {"axis", {j.axis.x, j.axis.y, j.axis.z}},
                                      {"origin",
                                       {{"xyz", {j.origin.xyz.x, j.origin.xyz.y, j.origin.xyz.z}},
                                        {"rpy", {j.origin.rpy.x, j.origin.rpy.y, j.origin.rpy.z}}}}};
                row["limits"] = j.limits ? nlohmann::json{{"lower", j.limits->lower},
                                                          {"upper", j.limits->upper},
                                                          {"effort", j.limits->effort},
                                                          {"velocity", j.limits->velocity}}
                                         : nlohmann::json(nullptr);
                row["mimic"] = j.mimic ? nlohmann::json{{"joint", j.mimic->source},
                                                        {"multiplier", j.mimic->multiplier},
                                                        {"offset", j.mimic->offset}}
                                       : nlohmann::json(nullptr);
                arr.push_back(std::move(row));
            }
            return arr;
        }
        if (name == "world_position" || name == "aabb") {
            arity(1, 2);
            std::string part = expect_string(eval(required("part", 0)), name);
            PoseContext& ctx = context_for(pose_argument(named_or_positional("pose", 1)));
            named_part(part);
            if (name == "world_position") {
                const Pose& pose = ctx.world_pose(part);
                return {pose.pos.x, pose.pos.y, pose.pos.z};
            }
            const PoseContext::PosedPart& posed = ctx.posed(part);
            if (posed.empty)
                throw ProbeError{"probe_syntax_error", "part '" + part + "' has no geometry"};
            Aabb box = mesh_aabb(posed.mesh);
            return {{"min", {box.lo.x, box.lo.y, box.lo.z}},
                    {"max", {box.hi.x, box.hi.y, box.hi.z}}};
        }
        if (name == "distance") {
            arity(2, 3);
            std::string a = expect_string(eval(required("a", 0)), name);
            std::string b = expect_string(eval(required("b", 1)), name);
            PoseContext& ctx = context_for(pose_argument(named_or_positional("pose", 2)));
            named_part(a);
            named_part(b);
            const PoseContext::PosedPart& pa = ctx.posed(a);
            const PoseContext::PosedPart& pb = ctx.posed(b);
            if (pa.empty || pb.empty)
                throw ProbeError{"probe_syntax_error", "a part has no geometry"};
            return min_distance(pa.bvh, pb.bvh).distance;
        }
        if (name == "volume") {
            arity(1, 1);
            std::string part = expect_string(eval(positional(0)), name);
            const PartMeshes& pm = named_part(part);
            return pm.has_geometry() ? mesh_volume(pm.merged) : 0.0;
        }
        if (name == "catalog") {
            arity(0, 0);
            return nlohmann::json::array(
                {"aabb(part, pose=[[joint, value], ...]) -> {max, min}",
                 "catalog() -> this listing",
                 "distance(a, b, pose=...) -> number",
                 "joints() -> [{axis, child, limits, mimic, name, origin, parent, type}]",
                 "parts() -> [{mass, name, visuals}]",
                 "volume(part) -> number",
                 "world_position(part, pose=...) -> [x, y, z]",
                 "math: sin cos sqrt abs min max str pi, lists, [] indexing"});
        }
        throw ProbeError{"unknown_symbol", "unknown probe builtin '" + name + "'"};
    }
};

}  // namespace detail

// Evaluates one read-only probe expression against a compiled asset. The
// result document is rendered with sorted keys and shortest-form numbers, so
// identical probes always produce identical bytes.
inline ProbeResult run_probe(const ArticulatedObject& obj, const KinematicTree& tree,
                             const MeshCache& cache, const apl::Bindings& bindings,
                             const std::string& query, int budget = kProbeStepBudget) {
    ProbeResult out;
    apl::ExprPtr expr;
    try {
        expr = apl::parse_expression(query);
    } catch (const apl::SyntaxError& e) {
        out.error_code = "probe_syntax_error";
        out.error_message = "line " + std::to_string(e.loc.line) + ", column " +
                            std::to_string(e.loc.column) + ": " + e.message;
        out.text = "[" + out.error_code + "] " + out.error_message;
        return out;
    }
    detail::ProbeEvaluator ev(obj, tree, cache, bindings, budget);
    try {
        out.value = ev.eval(*expr);
    } catch (const detail::ProbeError& e) {
        out.error_code = e.code;
        out.error_message = e.message;
        out.text = "[" + out.error_code + "] " + out.error_message;
        return out;
    }
    out.ok = true;
    out.text = out.value.dump(2) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// compile_signals wire format

struct LoopState {
    int consecutive_failures = 0;  // including the current compile when it failed
    bool codes_unchanged = false;  // failure code multiset equals the previous compile's
};

inline std::string render_compile_signals(const CompileReport& report, const LoopState& loop = {}) {
    const int failures = report.count(Severity::Failure);
    const int warnings = report.count(Severity::Warning);
    const int notes = report.count(Severity::Note);
    const bool ok = failures == 0;

    std::string s = "<compile_signals>\n<summary>\n";
    s += "status=" + std::string(ok ? "success" : "failure") + " failures=" +
         std::to_string(failures) + " warnings=" + std::to_string(warnings) + " notes=" +
         std::to_string(notes) + "\n";
    if (!ok && loop.consecutive_failures >= 2)
        s += "This is compile failure " + std::to_string(loop.consecutive_failures) + " in a row.\n";
    s += "</summary>\n";

    auto section = [&](const char* tag, Severity sev) {
        bool any = false;
        for (const Finding& f : report.findings) any = any || f.severity == sev;
        if (!any) return;
        s += "\n<";
        s += tag;
        s += ">\n";
        for (const Finding& f : report.findings)
            if (f.severity == sev) s += "- [" + f.code + "] " + f.message + "\n";
        s += "</";
        s += tag;
        s += ">\n";
    };
    section("failures", Severity::Failure);
    section("warnings", Severity::Warning);
    section("notes", Severity::Note);

    std::vector<std::string> rules;
    bool isolated = false;
    for (const Finding& f : report.findings)
        isolated = isolated || (f.severity == Severity::Failure && f.code == "isolated_part");
    if (isolated)
        rules.push_back(
            "Treat the compiler-owned floating/disconnected part finding as primary evidence "
            "before tuning authored exact checks.");
    if (!ok && loop.consecutive_failures >= 2 && loop.codes_unchanged)
        rules.push_back(
            "You are in a repair loop. A short probe_model snippet is likely to be more "
            "informative than another small placement or tolerance tweak.");
    if (ok)
        rules.push_back(
            "Compile is clean. If you cannot name one specific remaining defect, conclude the "
            "session rather than continuing to tune.");
    if (!rules.empty()) {
        s += "\n<response_rules>\n";
        for (const std::string& r : rules) s += "- " + r + "\n";
        s += "</response_rules>\n";
    }
    s += "</compile_signals>";
    return s;
}

struct SummaryCounts {
    std::string status;
    int failures = 0;
    int warnings = 0;
    int notes = 0;
};

// Recovers the counts from a rendered block; the round trip against the
// originating report is exact by construction.
inline std::optional<SummaryCounts> parse_compile_summary(const std::string& block) {
    auto pos = block.find("status=");
    if (pos == std::string::npos) return std::nullopt;
    auto end = block.find('\n', pos);
    std::string line = block.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    SummaryCounts out;
    auto field = [&](const std::string& key) -> std::optional<std::string> {
        auto k = line.find(key + "=");
        if (k == std::string::npos) return std::nullopt;
        auto v = k + key.size() + 1;
        auto stop = line.find(' ', v);
        return line.substr(v, stop == std::string::npos ? std::string::npos : stop - v);
    };
    auto status = field("status");
    auto f = field("failures");
    auto w = field("warnings");
    auto k = field("notes");
    if (!status || !f || !w || !k) return std::nullopt;
    out.status = *status;
    try {
        out.failures = std::stoi(*f);
        out.warnings = std::stoi(*w);
        out.notes = std::stoi(*k);
    } catch (const std::exception&) {
        return std::nullopt;
    }
    return out;
}

}  // namespace articraft
