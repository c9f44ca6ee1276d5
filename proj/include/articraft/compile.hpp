#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <articraft/apl/parser.hpp>
#include <articraft/apl/testplan.hpp>
#include <articraft/validation.hpp>

// Front-to-back pipeline: parse, evaluate, kinematic tree, mesh staging, test
// plan extraction, QC, authored tests. Produces the CompileReport consumed by
// the signals renderer and, when the build phase got far enough, a compiled
// asset that stays probe-able even if QC or tests failed.

namespace articraft {

struct CompileOptions {
    int tessellation = 64;
    QcOptions qc;
};

struct CompiledAsset {
    apl::Program program;  // owns every expression the plan points into
    ArticulatedObject object;
    std::vector<apl::DefaultNote> defaults;
    apl::Bindings bindings;
    KinematicTree tree;
    std::unique_ptr<MeshCache> meshes;
    apl::TestPlan plan;
};

struct CompileOutcome {
    std::shared_ptr<CompiledAsset> asset;  // null when no object could be built
    CompileReport report;
};

namespace detail {

inline Finding located_failure(const std::string& code, const apl::EvalError& e) {
    return {Severity::Failure, code,
            "line " + std::to_string(e.loc.line) + ", column " + std::to_string(e.loc.column) + ": " +
                e.message,
            {{"code", e.code}, {"line", e.loc.line}, {"column", e.loc.column}}};
}

}  // namespace detail

inline CompileOutcome compile_source(const std::string& source, const CompileOptions& opts = {}) {
    auto started = std::chrono::steady_clock::now();
    CompileOutcome out;
    auto finish = [&]() -> CompileOutcome& {
        out.report.elapsed_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        return out;
    };

    apl::ParseResult parsed = apl::parse_program(source);
    if (!parsed.ok()) {
        for (const apl::Diagnostic& d : parsed.diagnostics)
            out.report.findings.push_back(
                {Severity::Failure, "parse_error",
                 "line " + std::to_string(d.loc.line) + ", column " + std::to_string(d.loc.column) +
                     ": " + d.message,
                 {{"line", d.loc.line}, {"column", d.loc.column}}});
        return finish();
    }

    auto asset = std::make_shared<CompiledAsset>();
    asset->program = std::move(*parsed.program);

    try {
        apl::BuildOutput built = apl::evaluate_build(asset->program, opts.tessellation);
        asset->object = std::move(built.object);
        asset->defaults = std::move(built.defaults);
        asset->bindings = std::move(built.bindings);
    } catch (const apl::EvalError& e) {
        out.report.findings.push_back(detail::located_failure("runtime_error", e));
        return finish();
    }

    try {
        asset->tree = build_kinematic_tree(asset->object);
    } catch (const Error& e) {
        out.report.findings.push_back(
            {Severity::Failure, "runtime_error", e.what(), {{"code", e.code()}}});
        return finish();
    }

    asset->meshes = std::make_unique<MeshCache>(asset->object, opts.tessellation);
    out.asset = asset;  // geometry is probe-able from here on

    bool plan_ok = true;
    try {
        asset->plan = apl::extract_test_plan(asset->program, asset->object, asset->bindings);
    } catch (const apl::EvalError& e) {
        out.report.findings.push_back(detail::located_failure("runtime_error", e));
        plan_ok = false;
    }

    for (const apl::DefaultNote& d : asset->defaults)
        out.report.findings.push_back(
            {Severity::Note, "default_applied",
             "joint '" + d.joint + "' " + d.field + " defaulted to " + format_double(d.value) + ".",
             {{"joint", d.joint}, {"field", d.field}, {"value", d.value}}});

    std::vector<Finding> qc = run_qc(asset->object, asset->tree, *asset->meshes,
                                     asset->plan.allowances, opts.qc);
    for (Finding& f : qc) out.report.findings.push_back(std::move(f));

    if (plan_ok) {
        TestRunOutput tests =
            run_test_plan(asset->object, asset->tree, *asset->meshes, asset->plan, opts.qc);
        out.report.tests = std::move(tests.results);
        for (Finding& f : tests.findings) out.report.findings.push_back(std::move(f));
    }

    return finish();
}

// Probe against the most recent asset produced by compile_source.
inline ProbeResult probe_asset(const CompiledAsset& asset, const std::string& query,
                               int budget = kProbeStepBudget) {
    return run_probe(asset.object, asset.tree, *asset.meshes, asset.bindings, query, budget);
}

}  // namespace articraft
