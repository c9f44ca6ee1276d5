#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "articraft/apl/ast.hpp"
#include "articraft/apl/parser.hpp"
#include "articraft/model.hpp"
#include "articraft/procedural.hpp"

namespace articraft::apl {

// Runtime fault with a stable code and the originating source location.
struct EvalError {
    std::string code;
    std::string message;
    SourceLoc loc;
};

struct Value {
    enum class Kind { Number, Str, List, Geom };
    Kind kind = Kind::Number;
    double num = 0.0;
    std::string str;
    std::vector<Value> list;
    std::shared_ptr<const Geometry> geom;

    static Value number(double v) {
        Value x;
        x.num = v;
        return x;
    }
    static Value string(std::string s) {
        Value x;
        x.kind = Kind::Str;
        x.str = std::move(s);
        return x;
    }
    static Value make_list(std::vector<Value> items) {
        Value x;
        x.kind = Kind::List;
        x.list = std::move(items);
        return x;
    }
    static Value geometry(Geometry g) {
        Value x;
        x.kind = Kind::Geom;
        x.geom = std::make_shared<const Geometry>(std::move(g));
        return x;
    }
    const char* kind_name() const {
        switch (kind) {
            case Kind::Number: return "number";
            case Kind::Str: return "string";
            case Kind::List: return "vector";
            case Kind::Geom: return "geometry";
        }
        return "?";
    }
    bool truthy() const { return kind == Kind::Number && num != 0.0; }
};

using Bindings = std::map<std::string, Value>;

class Env {
  public:
    Env() { scopes_.emplace_back(); }
    explicit Env(const Bindings& base) { scopes_.push_back(base); }

    void push() { scopes_.emplace_back(); }
    void pop() { scopes_.pop_back(); }
    void define(const std::string& name, Value v) { scopes_.back()[name] = std::move(v); }

    const Value* find(const std::string& name) const {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            auto hit = it->find(name);
            if (hit != it->end()) return &hit->second;
        }
        return nullptr;
    }
    const Bindings& top() const { return scopes_.front(); }

  private:
    std::vector<Bindings> scopes_;
};

// Binds call-site arguments (positional first, then named) against a declared
// parameter list and type-checks access.
class Args {
  public:
    Args(const Expr& call, std::initializer_list<const char*> params) : call_(call) {
        for (const char* p : params) names_.emplace_back(p);
        std::size_t positional = 0;
        for (const Arg& arg : call.args) {
            if (arg.name.empty()) {
                if (positional >= names_.size())
                    fail("invalid_params", callee() + " takes at most " +
                                               std::to_string(names_.size()) + " arguments", arg.loc);
                bind(names_[positional++], arg);
            } else {
                bool known = false;
                for (const std::string& n : names_) known = known || n == arg.name;
                if (!known)
                    fail("invalid_params", callee() + " has no parameter '" + arg.name + "'", arg.loc);
                bind(arg.name, arg);
            }
        }
    }

    bool has(const std::string& name) const { return bound_.count(name) > 0; }
    const Expr& expr(const std::string& name) const { return *bound_.at(name)->value; }
    SourceLoc loc(const std::string& name) const { return bound_.at(name)->loc; }
    SourceLoc call_loc() const { return call_.loc; }
    std::string callee() const { return call_.text; }

    const Arg* find(const std::string& name) const {
        auto it = bound_.find(name);
        return it == bound_.end() ? nullptr : it->second;
    }

    void require(const std::string& name) const {
        if (!has(name))
            fail("invalid_params", callee() + " requires argument '" + name + "'", call_.loc);
    }

    [[noreturn]] static void fail(const std::string& code, const std::string& message, SourceLoc loc) {
        throw EvalError{code, message, loc};
    }

  private:
    const Expr& call_;
    std::vector<std::string> names_;
    std::map<std::string, const Arg*> bound_;

    void bind(const std::string& name, const Arg& arg) {
        if (bound_.count(name))
            fail("invalid_params", callee() + " got duplicate argument '" + name + "'", arg.loc);
        bound_[name] = &arg;
    }
};

namespace detail {

inline double as_number(const Value& v, const std::string& what, SourceLoc loc) {
    if (v.kind != Value::Kind::Number)
        throw EvalError{"type_mismatch", what + " expects a number, got " + v.kind_name(), loc};
    return v.num;
}

inline const std::string& as_string(const Value& v, const std::string& what, SourceLoc loc) {
    if (v.kind != Value::Kind::Str)
        throw EvalError{"type_mismatch", what + " expects a string, got " + v.kind_name(), loc};
    return v.str;
}

inline Vec3 as_vec3(const Value& v, const std::string& what, SourceLoc loc) {
    if (v.kind != Value::Kind::List || v.list.size() != 3)
        throw EvalError{"type_mismatch", what + " expects a 3-element vector", loc};
    return {as_number(v.list[0], what, loc), as_number(v.list[1], what, loc),
            as_number(v.list[2], what, loc)};
}

inline Rgba as_rgba(const Value& v, const std::string& what, SourceLoc loc) {
    if (v.kind != Value::Kind::List || v.list.size() != 4)
        throw EvalError{"type_mismatch", what + " expects a 4-element rgba vector", loc};
    return {as_number(v.list[0], what, loc), as_number(v.list[1], what, loc),
            as_number(v.list[2], what, loc), as_number(v.list[3], what, loc)};
}

inline Geometry as_geometry(const Value& v, const std::string& what, SourceLoc loc) {
    if (v.kind != Value::Kind::Geom)
        throw EvalError{"type_mismatch", what + " expects a geometry value", loc};
    return *v.geom;
}

}  // namespace detail

struct DefaultNote {
    std::string joint;
    std::string field;  // "effort" or "velocity"
    double value;
};

struct BuildOutput {
    ArticulatedObject object;
    std::vector<DefaultNote> defaults;
    Bindings bindings;  // final top-level lets, visible read-only to tests
    int tessellation = 64;
};

// Evaluates the build block. Pure: identical source and options give an
// identical object digest. Throws EvalError; never partially applies a failed
// statement beyond the faulting call.
class BuildEvaluator {
  public:
    explicit BuildEvaluator(int tessellation) { out_.tessellation = tessellation; }
    virtual ~BuildEvaluator() = default;

    BuildOutput run(const Program& prog) {
        env_.define("pi", Value::number(kPi));
        for (const Stmt& s : prog.build) exec(s);
        if (!object_declared_) {
            SourceLoc loc = prog.build.empty() ? SourceLoc{} : prog.build.front().loc;
            throw EvalError{"invalid_params", "program never declared an object(...)", loc};
        }
        out_.bindings = env_.top();
        out_.bindings.erase("pi");
        return std::move(out_);
    }

    // Expression evaluation shared with the tests extractor (constant folding
    // over build bindings).
    Value eval(const Expr& e, Env& env) {
        switch (e.kind) {
            case Expr::Kind::Number:
                return Value::number(e.number);
            case Expr::Kind::String:
                return Value::string(e.text);
            case Expr::Kind::Ident: {
                const Value* v = env.find(e.text);
                if (!v) throw EvalError{"undefined_identifier", "undefined identifier '" + e.text + "'", e.loc};
                return *v;
            }
            case Expr::Kind::List: {
                std::vector<Value> items;
                items.reserve(e.items.size());
                for (const ExprPtr& item : e.items) items.push_back(eval(*item, env));
                return Value::make_list(std::move(items));
            }
            case Expr::Kind::Unary: {
                Value v = eval(*e.items[0], env);
                if (e.text == "-")
                    return Value::number(-detail::as_number(v, "unary '-'", e.loc));
                return Value::number(v.truthy() ? 0.0 : 1.0);
            }
            case Expr::Kind::Binary:
                return eval_binary(e, env);
            case Expr::Kind::Index: {
                Value base = eval(*e.items[0], env);
                double raw = detail::as_number(eval(*e.items[1], env), "index", e.loc);
                if (base.kind != Value::Kind::List)
                    throw EvalError{"type_mismatch", "only vectors can be indexed", e.loc};
                long i = static_cast<long>(raw);
                if (i < 0 || i >= static_cast<long>(base.list.size()))
                    throw EvalError{"invalid_params",
                                    "index " + std::to_string(i) + " out of range for " +
                                        std::to_string(base.list.size()) + " elements",
                                    e.loc};
                return base.list[static_cast<std::size_t>(i)];
            }
            case Expr::Kind::Call:
                return eval_call(e, env);
        }
        throw EvalError{"invalid_params", "unreachable expression kind", e.loc};
    }

  protected:
    BuildOutput out_;
    Env env_;
    bool object_declared_ = false;

    // Tests-scope fold hooks override this to reject or defer builtins.
    virtual Value eval_call(const Expr& call, Env& env) { return eval_build_call(call, env); }

  public:
    Value eval_binary(const Expr& e, Env& env) {
        const std::string& op = e.text;
        if (op == "&&") {
            Value l = eval(*e.items[0], env);
            if (!l.truthy()) return Value::number(0.0);
            return Value::number(eval(*e.items[1], env).truthy() ? 1.0 : 0.0);
        }
        if (op == "||") {
            Value l = eval(*e.items[0], env);
            if (l.truthy()) return Value::number(1.0);
            return Value::number(eval(*e.items[1], env).truthy() ? 1.0 : 0.0);
        }
        Value l = eval(*e.items[0], env);
        Value r = eval(*e.items[1], env);
        if (op == "+") {
            if (l.kind == Value::Kind::Number && r.kind == Value::Kind::Number)
                return Value::number(l.num + r.num);
            if (l.kind == Value::Kind::Str && r.kind == Value::Kind::Str)
                return Value::string(l.str + r.str);
            throw EvalError{"type_mismatch",
                            std::string("'+' cannot combine ") + l.kind_name() + " and " + r.kind_name(),
                            e.loc};
        }
        if (op == "==" || op == "!=") {
            bool eq;
            if (l.kind == Value::Kind::Number && r.kind == Value::Kind::Number) eq = l.num == r.num;
            else if (l.kind == Value::Kind::Str && r.kind == Value::Kind::Str) eq = l.str == r.str;
            else
                throw EvalError{"type_mismatch",
                                std::string("cannot compare ") + l.kind_name() + " and " + r.kind_name(),
                                e.loc};
            return Value::number((op == "==") == eq ? 1.0 : 0.0);
        }
        double a = detail::as_number(l, "'" + op + "'", e.loc);
        double b = detail::as_number(r, "'" + op + "'", e.loc);
        if (op == "-") return Value::number(a - b);
        if (op == "*") return Value::number(a * b);
        if (op == "/") {
            if (b == 0.0) throw EvalError{"division_by_zero", "division by zero", e.loc};
            return Value::number(a / b);
        }
        if (op == "<") return Value::number(a < b ? 1.0 : 0.0);
        if (op == ">") return Value::number(a > b ? 1.0 : 0.0);
        if (op == "<=") return Value::number(a <= b ? 1.0 : 0.0);
        if (op == ">=") return Value::number(a >= b ? 1.0 : 0.0);
        throw EvalError{"invalid_params", "unknown operator '" + op + "'", e.loc};
    }

    // Pure builtins usable in every scope (math and string coercion).
    std::optional<Value> eval_shared_call(const Expr& call, Env& env) {
        const std::string& name = call.text;
        auto arg1 = [&](const char* pname) {
            Args args(call, {pname});
            args.require(pname);
            return detail::as_number(eval(args.expr(pname), env), name, args.loc(pname));
        };
        if (name == "sin") return Value::number(std::sin(arg1("x")));
        if (name == "cos") return Value::number(std::cos(arg1("x")));
        if (name == "abs") return Value::number(std::abs(arg1("x")));
        if (name == "sqrt") {
            double x = arg1("x");
            if (x < 0.0) throw EvalError{"invalid_params", "sqrt of negative value", call.loc};
            return Value::number(std::sqrt(x));
        }
        if (name == "min" || name == "max") {
            Args args(call, {"a", "b"});
            args.require("a");
            args.require("b");
            double a = detail::as_number(eval(args.expr("a"), env), name, args.loc("a"));
            double b = detail::as_number(eval(args.expr("b"), env), name, args.loc("b"));
            return Value::number(name == "min" ? std::min(a, b) : std::max(a, b));
        }
        if (name == "str") {
            Args args(call, {"x"});
            args.require("x");
            Value v = eval(args.expr("x"), env);
            if (v.kind == Value::Kind::Number) return Value::string(format_double(v.num));
            if (v.kind == Value::Kind::Str) return v;
            throw EvalError{"type_mismatch", "str() expects a number or string", call.loc};
        }
        return std::nullopt;
    }

  protected:
    void exec(const Stmt& s) {
        switch (s.kind) {
            case Stmt::Kind::Let:
                env_.define(s.name, eval(*s.expr, env_));
                return;
            case Stmt::Kind::Call:
                eval_call(*s.expr, env_);
                return;
            case Stmt::Kind::Repeat: {
                if (s.hi - s.lo > 256)
                    throw EvalError{"loop_bound_exceeded",
                                    "repeat spans " + std::to_string(s.hi - s.lo) +
                                        " iterations; the limit is 256",
                                    s.loc};
                for (long i = s.lo; i < s.hi; ++i) {
                    env_.push();
                    env_.define(s.name, Value::number(static_cast<double>(i)));
                    for (const Stmt& inner : s.body) exec(inner);
                    env_.pop();
                }
                return;
            }
        }
    }

    [[noreturn]] void rethrow(const Error& e, SourceLoc loc) {
        throw EvalError{e.code(), e.what(), loc};
    }

    void require_object(const Expr& call) {
        if (!object_declared_)
            throw EvalError{"invalid_params", call.text + "(...) before object(...) was declared",
                            call.loc};
    }

    Transform origin_from(const Args& args, Env& env) {
        Transform t;
        if (args.has("origin"))
            t.xyz = detail::as_vec3(eval(args.expr("origin"), env), "origin", args.loc("origin"));
        if (args.has("rpy"))
            t.rpy = detail::as_vec3(eval(args.expr("rpy"), env), "rpy", args.loc("rpy"));
        return t;
    }

    int segments_from(const Args& args, Env& env) {
        if (!args.has("segments")) return out_.tessellation;
        double raw = detail::as_number(eval(args.expr("segments"), env), "segments",
                                       args.loc("segments"));
        return static_cast<int>(raw);
    }

    Value eval_build_call(const Expr& call, Env& env) {
        const std::string& name = call.text;
        if (std::optional<Value> shared = eval_shared_call(call, env)) return *shared;

        try {
            if (name == "object") return builtin_object(call, env);
            if (name == "part") return builtin_part(call, env);
            if (name == "visual") return builtin_visual(call, env);
            if (name == "inertial") return builtin_inertial(call, env);
            if (name == "joint") return builtin_joint(call, env);
            if (name == "box") {
                Args args(call, {"size"});
                args.require("size");
                return Value::geometry(Geometry::box(
                    detail::as_vec3(eval(args.expr("size"), env), "box size", args.loc("size"))));
            }
            if (name == "cylinder") {
                Args args(call, {"radius", "length"});
                args.require("radius");
                args.require("length");
                return Value::geometry(Geometry::cylinder(
                    detail::as_number(eval(args.expr("radius"), env), name, args.loc("radius")),
                    detail::as_number(eval(args.expr("length"), env), name, args.loc("length"))));
            }
            if (name == "sphere") {
                Args args(call, {"radius"});
                args.require("radius");
                return Value::geometry(Geometry::sphere(
                    detail::as_number(eval(args.expr("radius"), env), name, args.loc("radius"))));
            }
            if (name == "cone") {
                Args args(call, {"r_bottom", "r_top", "length"});
                args.require("r_bottom");
                args.require("r_top");
                args.require("length");
                return Value::geometry(Geometry::cone(
                    detail::as_number(eval(args.expr("r_bottom"), env), name, args.loc("r_bottom")),
                    detail::as_number(eval(args.expr("r_top"), env), name, args.loc("r_top")),
                    detail::as_number(eval(args.expr("length"), env), name, args.loc("length"))));
            }
            if (name == "capsule") {
                Args args(call, {"radius", "length"});
                args.require("radius");
                args.require("length");
                return Value::geometry(Geometry::capsule(
                    detail::as_number(eval(args.expr("radius"), env), name, args.loc("radius")),
                    detail::as_number(eval(args.expr("length"), env), name, args.loc("length"))));
            }
            if (name == "wheel") return builtin_wheel(call, env);
            if (name == "barrel_hinge") return builtin_barrel_hinge(call, env);
            if (name == "perforated_panel") return builtin_perforated_panel(call, env);
            if (name == "tube") return builtin_tube(call, env);
        } catch (const Error& e) {
            rethrow(e, call.loc);
        }
        throw EvalError{"undefined_identifier", "unknown builtin '" + name + "' in build scope",
                        call.loc};
    }

  private:
    Value builtin_object(const Expr& call, Env& env) {
        Args args(call, {"name"});
        args.require("name");
        std::string name = detail::as_string(eval(args.expr("name"), env), "object name",
                                             args.loc("name"));
        if (object_declared_)
            throw EvalError{"invalid_params", "object(...) was already declared", call.loc};
        out_.object = new_object(name);
        object_declared_ = true;
        return Value::string(name);
    }

    Value builtin_part(const Expr& call, Env& env) {
        require_object(call);
        Args args(call, {"name"});
        args.require("name");
        std::string name =
            detail::as_string(eval(args.expr("name"), env), "part name", args.loc("name"));
        add_part(out_.object, name);
        return Value::string(name);
    }

    Value builtin_visual(const Expr& call, Env& env) {
        require_object(call);
        Args args(call, {"part", "geometry", "name", "origin", "rpy", "material", "rgba"});
        args.require("part");
        args.require("geometry");
        args.require("name");
        std::string part = detail::as_string(eval(args.expr("part"), env), "part", args.loc("part"));
        Geometry geom =
            detail::as_geometry(eval(args.expr("geometry"), env), "visual", args.loc("geometry"));
        std::string vname =
            detail::as_string(eval(args.expr("name"), env), "visual name", args.loc("name"));
        std::optional<std::string> material;
        std::optional<Rgba> rgba;
        if (args.has("material"))
            material = detail::as_string(eval(args.expr("material"), env), "material",
                                         args.loc("material"));
        if (args.has("rgba"))
            rgba = detail::as_rgba(eval(args.expr("rgba"), env), "rgba", args.loc("rgba"));
        if (rgba && !material) {
            // Anonymous color: register a per-visual material named after it.
            material = vname + "_color";
        }
        add_visual(out_.object, part, geom, origin_from(args, env), vname, material, rgba);
        return Value::string(vname);
    }

    Value builtin_inertial(const Expr& call, Env& env) {
        require_object(call);
        Args args(call, {"part", "geometry", "mass", "origin", "rpy"});
        args.require("part");
        args.require("geometry");
        args.require("mass");
        std::string part = detail::as_string(eval(args.expr("part"), env), "part", args.loc("part"));
        Geometry geom =
            detail::as_geometry(eval(args.expr("geometry"), env), "inertial", args.loc("geometry"));
        double mass = detail::as_number(eval(args.expr("mass"), env), "mass", args.loc("mass"));
        set_inertial(out_.object, part, geom, mass, origin_from(args, env));
        return Value::string(part);
    }

    Value builtin_joint(const Expr& call, Env& env) {
        require_object(call);
        Args args(call, {"name", "type", "parent", "child", "origin", "rpy", "axis", "lower",
                         "upper", "effort", "velocity", "mimic", "multiplier", "offset"});
        args.require("name");
        args.require("type");
        args.require("parent");
        args.require("child");
        std::string name = detail::as_string(eval(args.expr("name"), env), "joint name",
                                             args.loc("name"));
        std::string type_text =
            detail::as_string(eval(args.expr("type"), env), "joint type", args.loc("type"));
        std::optional<JointType> type_opt = joint_type_from_string(type_text);
        if (!type_opt)
            throw EvalError{"invalid_params", "unknown joint type '" + type_text + "'",
                            args.loc("type")};
        JointType type = *type_opt;
        std::string parent =
            detail::as_string(eval(args.expr("parent"), env), "parent", args.loc("parent"));
        std::string child =
            detail::as_string(eval(args.expr("child"), env), "child", args.loc("child"));
        Vec3 axis{0, 0, type == JointType::Fixed ? 0.0 : 1.0};
        if (args.has("axis"))
            axis = detail::as_vec3(eval(args.expr("axis"), env), "axis", args.loc("axis"));

        auto limit_arg = [&](const char* field) -> std::optional<double> {
            if (!args.has(field)) return std::nullopt;
            return detail::as_number(eval(args.expr(field), env), field, args.loc(field));
        };
        std::optional<double> lower = limit_arg("lower"), upper = limit_arg("upper");
        std::optional<double> effort = limit_arg("effort"), velocity = limit_arg("velocity");

        std::optional<MotionLimits> limits;
        std::vector<DefaultNote> pending;
        if (type == JointType::Revolute || type == JointType::Prismatic) {
            if (!lower || !upper)
                throw EvalError{"limits_required",
                                "joint '" + name + "' (" + type_text + ") requires lower and upper",
                                call.loc};
            if (!effort) {
                effort = 10.0;
                pending.push_back({name, "effort", 10.0});
            }
            if (!velocity) {
                velocity = 1.0;
                pending.push_back({name, "velocity", 1.0});
            }
            limits = MotionLimits{*lower, *upper, *effort, *velocity};
        } else if (type == JointType::Continuous) {
            if (lower || upper)
                throw EvalError{"limits_forbidden",
                                "joint '" + name + "' is continuous and must carry no position limits",
                                call.loc};
            if (effort || velocity) {
                if (!effort) {
                    effort = 10.0;
                    pending.push_back({name, "effort", 10.0});
                }
                if (!velocity) {
                    velocity = 1.0;
                    pending.push_back({name, "velocity", 1.0});
                }
                limits = MotionLimits{0.0, 0.0, *effort, *velocity};
            }
        } else if (lower || upper || effort || velocity) {
            throw EvalError{"limits_forbidden",
                            "joint '" + name + "' is fixed and must carry no limits", call.loc};
        }

        std::optional<Mimic> mimic;
        if (args.has("mimic")) {
            Mimic m;
            m.source = detail::as_string(eval(args.expr("mimic"), env), "mimic", args.loc("mimic"));
            if (args.has("multiplier"))
                m.multiplier = detail::as_number(eval(args.expr("multiplier"), env), "multiplier",
                                                 args.loc("multiplier"));
            if (args.has("offset"))
                m.offset =
                    detail::as_number(eval(args.expr("offset"), env), "offset", args.loc("offset"));
            mimic = m;
        } else if (args.has("multiplier") || args.has("offset")) {
            throw EvalError{"invalid_params", "multiplier/offset require mimic=", call.loc};
        }

        add_articulation(out_.object, name, type, parent, child, origin_from(args, env), axis,
                         limits, mimic);
        for (DefaultNote& note : pending) out_.defaults.push_back(std::move(note));
        return Value::string(name);
    }

    Value builtin_wheel(const Expr& call, Env& env) {
        Args args(call, {"radius", "width", "spokes", "bore", "segments"});
        args.require("radius");
        args.require("width");
        WheelParams p;
        p.radius = detail::as_number(eval(args.expr("radius"), env), "radius", args.loc("radius"));
        p.width = detail::as_number(eval(args.expr("width"), env), "width", args.loc("width"));
        if (args.has("spokes"))
            p.spokes = static_cast<int>(
                detail::as_number(eval(args.expr("spokes"), env), "spokes", args.loc("spokes")));
        if (args.has("bore"))
            p.bore = detail::as_number(eval(args.expr("bore"), env), "bore", args.loc("bore"));
        p.segments = segments_from(args, env);
        std::string sig = "wheel(radius=" + format_double(p.radius) + ",width=" + format_double(p.width) +
                          ",spokes=" + std::to_string(p.spokes) + ",bore=" + format_double(p.bore) +
                          ",segments=" + std::to_string(p.segments) + ")";
        return Value::geometry(Geometry::procedural("wheel", sig, make_wheel_mesh(p)));
    }

    Value builtin_barrel_hinge(const Expr& call, Env& env) {
        Args args(call, {"leaf_length", "leaf_width", "leaf_thickness", "barrel_radius",
                         "barrel_length", "piece", "segments"});
        BarrelHingeParams p;
        auto grab = [&](const char* field, double& slot) {
            if (args.has(field))
                slot = detail::as_number(eval(args.expr(field), env), field, args.loc(field));
        };
        grab("leaf_length", p.leaf_length);
        grab("leaf_width", p.leaf_width);
        grab("leaf_thickness", p.leaf_thickness);
        grab("barrel_radius", p.barrel_radius);
        grab("barrel_length", p.barrel_length);
        if (args.has("piece"))
            p.piece = detail::as_string(eval(args.expr("piece"), env), "piece", args.loc("piece"));
        p.segments = segments_from(args, env);
        std::string sig = "barrel_hinge(leaf_length=" + format_double(p.leaf_length) +
                          ",leaf_width=" + format_double(p.leaf_width) +
                          ",leaf_thickness=" + format_double(p.leaf_thickness) +
                          ",barrel_radius=" + format_double(p.barrel_radius) +
                          ",barrel_length=" + format_double(p.barrel_length) + ",piece=" + p.piece +
                          ",segments=" + std::to_string(p.segments) + ")";
        return Value::geometry(Geometry::procedural("barrel_hinge", sig, make_barrel_hinge_mesh(p)));
    }

    Value builtin_perforated_panel(const Expr& call, Env& env) {
        Args args(call, {"size", "cols", "rows", "hole_radius", "segments"});
        args.require("size");
        args.require("hole_radius");
        PerforatedPanelParams p;
        p.size = detail::as_vec3(eval(args.expr("size"), env), "size", args.loc("size"));
        if (args.has("cols"))
            p.cols = static_cast<int>(
                detail::as_number(eval(args.expr("cols"), env), "cols", args.loc("cols")));
        if (args.has("rows"))
            p.rows = static_cast<int>(
                detail::as_number(eval(args.expr("rows"), env), "rows", args.loc("rows")));
        p.hole_radius = detail::as_number(eval(args.expr("hole_radius"), env), "hole_radius",
                                          args.loc("hole_radius"));
        p.segments = segments_from(args, env);
        std::string sig = "perforated_panel(size=" + format_vec3(p.size, ',') +
                          ",cols=" + std::to_string(p.cols) + ",rows=" + std::to_string(p.rows) +
                          ",hole_radius=" + format_double(p.hole_radius) +
                          ",segments=" + std::to_string(p.segments) + ")";
        return Value::geometry(
            Geometry::procedural("perforated_panel", sig, make_perforated_panel_mesh(p)));
    }

    Value builtin_tube(const Expr& call, Env& env) {
        Args args(call, {"points", "radius", "segments"});
        args.require("points");
        args.require("radius");
        Value pts = eval(args.expr("points"), env);
        if (pts.kind != Value::Kind::List || pts.list.size() < 2)
            throw EvalError{"type_mismatch", "tube points expects a vector of 3-element vectors",
                            args.loc("points")};
        SweptTubeParams p;
        for (const Value& item : pts.list)
            p.points.push_back(detail::as_vec3(item, "tube point", args.loc("points")));
        p.radius = detail::as_number(eval(args.expr("radius"), env), "radius", args.loc("radius"));
        p.segments = segments_from(args, env);
        std::string sig = "tube(points=[";
        for (std::size_t i = 0; i < p.points.size(); ++i) {
            if (i) sig += ';';
            sig += format_vec3(p.points[i], ',');
        }
        sig += "],radius=" + format_double(p.radius) + ",segments=" + std::to_string(p.segments) + ")";
        return Value::geometry(Geometry::procedural("tube", sig, make_swept_tube_mesh(p)));
    }
};

inline BuildOutput evaluate_build(const Program& prog, int tessellation = 64) {
    BuildEvaluator ev(tessellation);
    return ev.run(prog);
}

}  // namespace articraft::apl
