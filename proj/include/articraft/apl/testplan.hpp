#pragma once

#include <optional>
#include <string>
#include <vector>

#include "articraft/apl/eval.hpp"
#include "articraft/queries.hpp"

namespace articraft::apl {

struct Directive {
    enum class Kind { ExpectContact, ExpectGap, ExpectOverlap, ExpectWithin, Check, AllowOverlap, AllowIsolated };
    Kind kind;
    SourceLoc loc;
    int seq = 0;  // source order across the whole plan

    std::string a, b;  // part names; inner/outer for ExpectWithin; part for AllowIsolated
    std::string elem_a, elem_b;
    std::string label;   // check label
    std::string reason;  // allowance rationale, verbatim
    double tol = kContactTolerance;
    double min_gap = 0.0;
    double max_penetration = 0.0;
    const Expr* check = nullptr;

    std::string describe() const {
        switch (kind) {
            case Kind::ExpectContact: return "expect_contact('" + a + "','" + b + "')";
            case Kind::ExpectGap: return "expect_gap('" + a + "','" + b + "')";
            case Kind::ExpectOverlap: return "expect_overlap('" + a + "','" + b + "')";
            case Kind::ExpectWithin: return "expect_within('" + a + "','" + b + "')";
            case Kind::Check: return "check '" + label + "'";
            case Kind::AllowOverlap: return "allow_overlap('" + a + "','" + b + "')";
            case Kind::AllowIsolated: return "allow_isolated_part('" + a + "')";
        }
        return "?";
    }
};

// Pose blocks keep their tree shape so binding expressions evaluate in the
// enclosing pose context at run time.
struct PlanNode {
    std::optional<Directive> directive;
    std::vector<std::pair<std::string, const Expr*>> pose;
    std::vector<PlanNode> children;
};

struct TestPlan {
    std::vector<PlanNode> nodes;
    std::vector<Directive> allowances;  // allow_* in source order (their nodes are inert)
    Bindings bindings;                  // build lets, read-only in tests expressions
    int directive_count = 0;            // executable directives (expect_*/check)
};

namespace detail {

// Constant folding for directive arguments: math builtins only, measurements
// and build builtins are rejected.
class ConstFoldEvaluator : public BuildEvaluator {
  public:
    ConstFoldEvaluator() : BuildEvaluator(64) {}

  protected:
    Value eval_call(const Expr& call, Env& env) override {
        if (std::optional<Value> shared = eval_shared_call(call, env)) return *shared;
        throw EvalError{"invalid_params",
                        call.text + "(...) cannot be used here; this argument must be constant",
                        call.loc};
    }
};

}  // namespace detail

class TestPlanExtractor {
  public:
    TestPlanExtractor(const ArticulatedObject& obj, const Bindings& bindings)
        : obj_(obj), env_(bindings) {
        env_.define("pi", Value::number(kPi));
    }

    TestPlan run(const Program& prog) {
        TestPlan plan;
        plan.bindings = env_.top();
        for (const TStmt& t : prog.tests) plan.nodes.push_back(walk(t, plan));
        return plan;
    }

  private:
    const ArticulatedObject& obj_;
    detail::ConstFoldEvaluator folder_;
    Env env_;
    int seq_ = 0;

    Value fold(const Expr& e) { return folder_.eval(e, env_); }

    std::string fold_string(const Args& args, const char* param) {
        return apl::detail::as_string(fold(args.expr(param)), param, args.loc(param));
    }

    double fold_number(const Args& args, const char* param) {
        return apl::detail::as_number(fold(args.expr(param)), param, args.loc(param));
    }

    void require_part(const std::string& name, const std::string& directive, SourceLoc loc) {
        if (!obj_.find_part(name))
            throw EvalError{"unknown_part_in_test",
                            directive + " references unknown part '" + name + "'", loc};
    }

    void require_element(const std::string& part, const std::string& elem, SourceLoc loc) {
        const Part* p = obj_.find_part(part);
        for (const VisualElement& v : p->visuals)
            if (v.name == elem) return;
        throw EvalError{"unknown_part_in_test",
                        "part '" + part + "' has no element '" + elem + "'", loc};
    }

    PlanNode walk(const TStmt& t, TestPlan& plan) {
        PlanNode node;
        if (t.kind == TStmt::Kind::Pose) {
            for (const auto& [joint_name, value_expr] : t.bindings) {
                const Articulation* joint = obj_.find_joint(joint_name);
                if (!joint)
                    throw EvalError{"unknown_joint_in_pose",
                                    "pose references unknown joint '" + joint_name + "'", t.loc};
                if (joint->type == JointType::Fixed)
                    throw EvalError{"fixed_joint_in_pose",
                                    "pose sets fixed joint '" + joint_name + "'", t.loc};
                if (joint->mimic)
                    throw EvalError{"mimic_set_directly",
                                    "pose sets mimic joint '" + joint_name + "' directly", t.loc};
                node.pose.emplace_back(joint_name, value_expr.get());
            }
            for (const TStmt& inner : t.body) node.children.push_back(walk(inner, plan));
            return node;
        }
        node.directive = extract_directive(*t.call, plan);
        return node;
    }

    Directive extract_directive(const Expr& call, TestPlan& plan) {
        const std::string& name = call.text;
        Directive d;
        d.loc = call.loc;
        d.seq = seq_++;

        if (name == "expect_contact") {
            Args args(call, {"a", "b", "tol"});
            args.require("a");
            args.require("b");
            d.kind = Directive::Kind::ExpectContact;
            d.a = fold_string(args, "a");
            d.b = fold_string(args, "b");
            if (args.has("tol")) d.tol = fold_number(args, "tol");
            require_part(d.a, name, args.loc("a"));
            require_part(d.b, name, args.loc("b"));
        } else if (name == "expect_gap") {
            Args args(call, {"a", "b", "min_gap", "max_penetration"});
            args.require("a");
            args.require("b");
            d.kind = Directive::Kind::ExpectGap;
            d.a = fold_string(args, "a");
            d.b = fold_string(args, "b");
            if (args.has("min_gap")) d.min_gap = fold_number(args, "min_gap");
            if (args.has("max_penetration")) d.max_penetration = fold_number(args, "max_penetration");
            require_part(d.a, name, args.loc("a"));
            require_part(d.b, name, args.loc("b"));
        } else if (name == "expect_overlap") {
            Args args(call, {"a", "b"});
            args.require("a");
            args.require("b");
            d.kind = Directive::Kind::ExpectOverlap;
            d.a = fold_string(args, "a");
            d.b = fold_string(args, "b");
            require_part(d.a, name, args.loc("a"));
            require_part(d.b, name, args.loc("b"));
        } else if (name == "expect_within") {
            Args args(call, {"inner", "outer"});
            args.require("inner");
            args.require("outer");
            d.kind = Directive::Kind::ExpectWithin;
            d.a = fold_string(args, "inner");
            d.b = fold_string(args, "outer");
            require_part(d.a, name, args.loc("inner"));
            require_part(d.b, name, args.loc("outer"));
        } else if (name == "check") {
            Args args(call, {"label", "expr"});
            args.require("label");
            args.require("expr");
            d.kind = Directive::Kind::Check;
            d.label = fold_string(args, "label");
            d.check = &args.expr("expr");
        } else if (name == "allow_overlap") {
            Args args(call, {"a", "b", "elem_a", "elem_b", "reason"});
            args.require("a");
            args.require("b");
            d.kind = Directive::Kind::AllowOverlap;
            d.a = fold_string(args, "a");
            d.b = fold_string(args, "b");
            if (args.has("reason")) d.reason = fold_string(args, "reason");
            if (d.reason.empty())
                throw EvalError{"allowance_missing_reason",
                                "allow_overlap requires a non-empty reason", call.loc};
            require_part(d.a, name, args.loc("a"));
            require_part(d.b, name, args.loc("b"));
            if (args.has("elem_a")) {
                d.elem_a = fold_string(args, "elem_a");
                require_element(d.a, d.elem_a, args.loc("elem_a"));
            }
            if (args.has("elem_b")) {
                d.elem_b = fold_string(args, "elem_b");
                require_element(d.b, d.elem_b, args.loc("elem_b"));
            }
            plan.allowances.push_back(d);
            return d;
        } else if (name == "allow_isolated_part") {
            Args args(call, {"p", "reason"});
            args.require("p");
            d.kind = Directive::Kind::AllowIsolated;
            d.a = fold_string(args, "p");
            if (args.has("reason")) d.reason = fold_string(args, "reason");
            if (d.reason.empty())
                throw EvalError{"allowance_missing_reason",
                                "allow_isolated_part requires a non-empty reason", call.loc};
            require_part(d.a, name, args.loc("p"));
            plan.allowances.push_back(d);
            return d;
        } else {
            throw EvalError{"invalid_params", "unknown builtin '" + name + "' in tests scope",
                            call.loc};
        }
        ++plan.directive_count;
        return d;
    }
};

// Resolves the tests block against the built object. Allowance reasons are
// mandatory; every referenced part, element, and joint must exist.
inline TestPlan extract_test_plan(const Program& prog, const ArticulatedObject& obj,
                                  const Bindings& bindings) {
    TestPlanExtractor ex(obj, bindings);
    return ex.run(prog);
}

}  // namespace articraft::apl
