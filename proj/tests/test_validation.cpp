#include <catch2/catch_amalgamated.hpp>

#include <articraft/compile.hpp>
#include <articraft/validation.hpp>

using namespace articraft;

namespace {

int count_code(const CompileReport& r, const std::string& code) {
    int n = 0;
    for (const Finding& f : r.findings) n += f.code == code ? 1 : 0;
    return n;
}

const Finding* first_code(const CompileReport& r, const std::string& code) {
    for (const Finding& f : r.findings)
        if (f.code == code) return &f;
    return nullptr;
}

const TestResult* row_labeled(const CompileReport& r, const std::string& label) {
    for (const TestResult& t : r.tests)
        if (t.label == label) return &t;
    return nullptr;
}

const char* kFloaterBuild =
    "build {\n"
    "  object(\"tray\");\n"
    "  part(\"base\");\n"
    "  visual(\"base\", box([0.3, 0.3, 0.1]), name=\"slab\");\n"
    "  part(\"arm\");\n"
    "  visual(\"arm\", box([0.05, 0.05, 0.1]), name=\"column\", origin=[0, 0, 0.05]);\n"
    "  joint(\"arm_mount\", \"fixed\", \"base\", \"arm\", origin=[0, 0, 0.05]);\n"
    "  part(\"floater\");\n"
    "  visual(\"floater\", box([0.05, 0.05, 0.05]), name=\"cube\", origin=[0.12, 0, 0.081]);\n"
    "}\n";

}  // namespace

TEST_CASE("floating part six millimeters above the deck is a failure") {
    CompileOutcome out = compile_source(kFloaterBuild);
    REQUIRE(out.asset != nullptr);
    REQUIRE_FALSE(out.report.success());
    REQUIRE(out.report.count(Severity::Failure) == 1);

    const Finding* f = first_code(out.report, "isolated_part");
    REQUIRE(f != nullptr);
    REQUIRE(f->message ==
            "Floating disconnected component(s) detected. part 'floater' is disconnected from "
            "the grounded body rooted at 'base'; nearest_grounded_part='base'; "
            "approx_gap=0.006m.");
    double gap = f->payload.at("approx_gap").get<double>();
    REQUIRE(gap == Catch::Approx(0.006).margin(5e-4));
}

TEST_CASE("allow_isolated_part demotes the floating finding to a note") {
    std::string src = std::string(kFloaterBuild) +
                      "tests { allow_isolated_part(\"floater\", reason=\"rigged in a later "
                      "assembly step\"); }\n";
    CompileOutcome out = compile_source(src);
    REQUIRE(out.report.success());
    REQUIRE(count_code(out.report, "isolated_part") == 0);
    const Finding* note = first_code(out.report, "allowed_isolated_part");
    REQUIRE(note != nullptr);
    REQUIRE(note->severity == Severity::Note);
    REQUIRE(note->message ==
            "allow_isolated_part('floater'): rigged in a later assembly step");
}

namespace {

const char* kOverlapBuildPrefix =
    "build {\n"
    "  object(\"blocks\");\n"
    "  part(\"slab_a\");\n"
    "  visual(\"slab_a\", box([0.1, 0.1, 0.1]), name=\"cube_a\");\n"
    "  visual(\"slab_a\", box([0.1, 0.1, 0.1]), name=\"tab\", origin=[-0.1, 0, 0]);\n"
    "  part(\"slab_b\");\n"
    "  visual(\"slab_b\", box([0.1, 0.1, 0.1]), name=\"cube_b\", origin=[0.08, 0, 0]);\n"
    "}\n";

}  // namespace

TEST_CASE("unallowed overlap between non-adjacent parts is a failure") {
    CompileOutcome out = compile_source(kOverlapBuildPrefix);
    REQUIRE_FALSE(out.report.success());
    const Finding* f = first_code(out.report, "overlap");
    REQUIRE(f != nullptr);
    REQUIRE(f->payload.at("part_a") == "slab_a");
    REQUIRE(f->payload.at("part_b") == "slab_b");
    REQUIRE(f->payload.at("elem_a") == "cube_a");
    REQUIRE(f->payload.at("elem_b") == "cube_b");
    REQUIRE(f->payload.at("depth").get<double>() > 1e-4);
    REQUIRE(f->message.find("parts 'slab_a' and 'slab_b' overlap") == 0);
}

TEST_CASE("pair allowance flips exactly the overlap finding to a note") {
    CompileOutcome bare = compile_source(kOverlapBuildPrefix);
    std::string allowed_src =
        std::string(kOverlapBuildPrefix) +
        "tests { allow_overlap(\"slab_a\", \"slab_b\", reason=\"press fit joint\"); }\n";
    CompileOutcome allowed = compile_source(allowed_src);

    REQUIRE_FALSE(bare.report.success());
    REQUIRE(allowed.report.success());
    REQUIRE(count_code(bare.report, "overlap") == 1);
    REQUIRE(count_code(allowed.report, "overlap") == 0);
    REQUIRE(count_code(allowed.report, "allowed_overlap") == 1);

    // Conservation: exactly one finding changed severity, nothing else moved.
    REQUIRE(bare.report.findings.size() == allowed.report.findings.size());
    REQUIRE(allowed.report.count(Severity::Warning) == bare.report.count(Severity::Warning));

    const Finding* note = first_code(allowed.report, "allowed_overlap");
    REQUIRE(note->message == "allow_overlap('slab_a','slab_b'): press fit joint");
}

TEST_CASE("element-scoped allowance must name the overlapping elements") {
    std::string matching =
        std::string(kOverlapBuildPrefix) +
        "tests { allow_overlap(\"slab_a\", \"slab_b\", elem_a=\"cube_a\", elem_b=\"cube_b\",\n"
        "        reason=\"captured boss\"); }\n";
    CompileOutcome ok = compile_source(matching);
    REQUIRE(ok.report.success());
    const Finding* note = first_code(ok.report, "allowed_overlap");
    REQUIRE(note != nullptr);
    REQUIRE(note->message ==
            "allow_overlap('slab_a','slab_b'), elem_a='cube_a', elem_b='cube_b': captured boss");

    std::string mismatched =
        std::string(kOverlapBuildPrefix) +
        "tests { allow_overlap(\"slab_a\", \"slab_b\", elem_a=\"tab\", elem_b=\"cube_b\",\n"
        "        reason=\"wrong element\"); }\n";
    CompileOutcome bad = compile_source(mismatched);
    REQUIRE_FALSE(bad.report.success());
    REQUIRE(count_code(bad.report, "overlap") == 1);
    REQUIRE(count_code(bad.report, "allowed_overlap") == 0);  // unused allowance emits nothing
}

TEST_CASE("joint-adjacent parts may interpenetrate without findings") {
    std::string src =
        "build {\n"
        "  object(\"hinged\");\n"
        "  part(\"body\");\n"
        "  visual(\"body\", box([0.1, 0.1, 0.1]), name=\"shell\");\n"
        "  part(\"plug\");\n"
        "  visual(\"plug\", box([0.06, 0.06, 0.06]), name=\"peg\");\n"
        "  joint(\"seat\", \"fixed\", \"body\", \"plug\");\n"
        "}\n";
    CompileOutcome out = compile_source(src);
    REQUIRE(out.report.success());
    REQUIRE(count_code(out.report, "overlap") == 0);
}

TEST_CASE("per-part visual clusters that do not touch raise a warning") {
    std::string src =
        "build {\n"
        "  object(\"lamp\");\n"
        "  part(\"base\");\n"
        "  visual(\"base\", box([0.2, 0.2, 0.02]), name=\"plate\");\n"
        "  visual(\"base\", box([0.02, 0.02, 0.1]), name=\"stalk\", origin=[0, 0, 0.2]);\n"
        "}\n";
    CompileOutcome out = compile_source(src);
    const Finding* w = first_code(out.report, "disconnected_geometry");
    REQUIRE(w != nullptr);
    REQUIRE(w->severity == Severity::Warning);
    REQUIRE(w->message.find("part 'base'") != std::string::npos);
    REQUIRE(out.report.success());  // warnings do not block
}

TEST_CASE("naming lint flags state words and word-count overruns") {
    std::string src =
        "build {\n"
        "  object(\"cab\");\n"
        "  part(\"left_front_lower_outer_steel_panel\");\n"
        "  visual(\"left_front_lower_outer_steel_panel\", box([0.1, 0.1, 0.1]), name=\"p\");\n"
        "  part(\"door_open\");\n"
        "  visual(\"door_open\", box([0.1, 0.1, 0.1]), name=\"d\", origin=[0.1001, 0, 0]);\n"
        "}\n";
    CompileOutcome out = compile_source(src);
    REQUIRE(count_code(out.report, "naming_lint") == 2);
    const Finding* f = first_code(out.report, "naming_lint");
    REQUIRE(f->message.find("6 underscore-separated words") != std::string::npos);
    bool state_flagged = false;
    for (const Finding& fi : out.report.findings)
        state_flagged = state_flagged ||
                        fi.message.find("encodes articulation state ('open')") != std::string::npos;
    REQUIRE(state_flagged);
}

namespace {

const char* kSwingRig =
    "build {\n"
    "  object(\"swing_rig\");\n"
    "  part(\"base\");\n"
    "  visual(\"base\", box([0.4, 0.4, 0.1]), name=\"deck\");\n"
    "  part(\"mast\");\n"
    "  visual(\"mast\", box([0.06, 0.06, 0.5]), name=\"post\", origin=[0, 0, 0.25]);\n"
    "  joint(\"mast_mount\", \"fixed\", \"base\", \"mast\", origin=[0, 0, 0.05]);\n"
    "  part(\"boom\");\n"
    "  visual(\"boom\", box([0.4, 0.04, 0.04]), name=\"beam\", origin=[0.2, 0, 0]);\n"
    "  joint(\"boom_pivot\", \"revolute\", \"mast\", \"boom\", origin=[0, 0, 0.5],\n"
    "        axis=[0, 1, 0], lower=-1.5, upper=1.5, effort=4, velocity=2);\n"
    "}\n";

}  // namespace

TEST_CASE("directives run at rest unless a pose block overrides the configuration") {
    std::string src = std::string(kSwingRig) +
                      "tests {\n"
                      "  expect_contact(\"base\", \"mast\");\n"
                      "  check(\"boom starts high\", aabb(\"boom\")[1][2] > 0.5);\n"
                      "  pose { boom_pivot: pi / 2 } {\n"
                      "    check(\"boom swings down\", aabb(\"boom\")[0][2] < 0.2);\n"
                      "    expect_gap(\"boom\", \"base\", min_gap=0.05);\n"
                      "  }\n"
                      "  check(\"rest restored\", aabb(\"boom\")[1][2] > 0.5);\n"
                      "}\n";
    CompileOutcome out = compile_source(src);
    CAPTURE(render_compile_signals(out.report));
    REQUIRE(out.report.success());
    REQUIRE(out.report.tests.size() == 5);
    for (const TestResult& t : out.report.tests) {
        CAPTURE(t.label, t.detail);
        REQUIRE(t.passed);
    }
    REQUIRE(row_labeled(out.report, "boom swings down") != nullptr);
}

TEST_CASE("failing directives produce test_failure findings with detail") {
    std::string src = std::string(kSwingRig) +
                      "tests {\n"
                      "  expect_contact(\"boom\", \"base\");\n"
                      "  check(\"boom starts low\", aabb(\"boom\")[1][2] < 0.1);\n"
                      "}\n";
    CompileOutcome out = compile_source(src);
    REQUIRE_FALSE(out.report.success());
    REQUIRE(count_code(out.report, "test_failure") == 2);
    REQUIRE(out.report.tests.size() == 2);
    REQUIRE_FALSE(out.report.tests[0].passed);
    REQUIRE(out.report.tests[0].detail.find("min_distance=") == 0);
    const Finding* f = first_code(out.report, "test_failure");
    REQUIRE(f->message.find("expect_contact('boom','base') failed:") == 0);
}

TEST_CASE("expect_within samples the inner surface against the outer solid") {
    std::string contained =
        "build {\n"
        "  object(\"shell\");\n"
        "  part(\"outer\");\n"
        "  visual(\"outer\", box([0.3, 0.3, 0.3]), name=\"hull\");\n"
        "  part(\"inner\");\n"
        "  visual(\"inner\", box([0.1, 0.1, 0.1]), name=\"core\");\n"
        "  joint(\"seat\", \"fixed\", \"outer\", \"inner\");\n"
        "}\n"
        "tests { expect_within(\"inner\", \"outer\"); }\n";
    CompileOutcome ok = compile_source(contained);
    REQUIRE(ok.report.success());
    REQUIRE(ok.report.tests.size() == 1);
    REQUIRE(ok.report.tests[0].passed);

    std::string escaping =
        "build {\n"
        "  object(\"shell\");\n"
        "  part(\"outer\");\n"
        "  visual(\"outer\", box([0.3, 0.3, 0.3]), name=\"hull\");\n"
        "  part(\"inner\");\n"
        "  visual(\"inner\", box([0.1, 0.1, 0.1]), name=\"core\", origin=[0.15, 0, 0]);\n"
        "  joint(\"seat\", \"fixed\", \"outer\", \"inner\");\n"
        "}\n"
        "tests { expect_within(\"inner\", \"outer\"); }\n";
    CompileOutcome bad = compile_source(escaping);
    REQUIRE_FALSE(bad.report.success());
    REQUIRE(bad.report.tests[0].detail.find("lie outside 'outer'") != std::string::npos);
}

TEST_CASE("expect_overlap asserts shared interior volume") {
    std::string src =
        std::string(kOverlapBuildPrefix) +
        "tests {\n"
        "  allow_overlap(\"slab_a\", \"slab_b\", reason=\"press fit\");\n"
        "  expect_overlap(\"slab_a\", \"slab_b\");\n"
        "}\n";
    CompileOutcome out = compile_source(src);
    REQUIRE(out.report.success());
    REQUIRE(out.report.tests.size() == 1);
    REQUIRE(out.report.tests[0].passed);
}

TEST_CASE("check faults fail their directive without aborting the plan") {
    std::string src = std::string(kSwingRig) +
                      "tests {\n"
                      "  check(\"bad part\", world_position(\"ghost\")[2] > 0);\n"
                      "  check(\"still runs\", 1 < 2);\n"
                      "}\n";
    CompileOutcome out = compile_source(src);
    REQUIRE(out.report.tests.size() == 2);
    REQUIRE_FALSE(out.report.tests[0].passed);
    REQUIRE(out.report.tests[0].detail.find("[unknown_part_in_test]") != std::string::npos);
    REQUIRE(out.report.tests[1].passed);
}

TEST_CASE("a faulting pose binding fails every directive beneath it") {
    std::string src = std::string(kSwingRig) +
                      "tests {\n"
                      "  pose { boom_pivot: world_position(\"ghost\")[0] } {\n"
                      "    check(\"unreachable a\", 1 == 1);\n"
                      "    expect_contact(\"base\", \"mast\");\n"
                      "  }\n"
                      "  check(\"after pose\", 2 == 2);\n"
                      "}\n";
    CompileOutcome out = compile_source(src);
    REQUIRE(out.report.tests.size() == 3);
    REQUIRE_FALSE(out.report.tests[0].passed);
    REQUIRE(out.report.tests[0].detail.find("pose binding 'boom_pivot' failed:") == 0);
    REQUIRE_FALSE(out.report.tests[1].passed);
    REQUIRE(out.report.tests[2].passed);
}

TEST_CASE("build bindings stay visible to check expressions") {
    std::string src =
        "build {\n"
        "  let deck_top = 0.05;\n"
        "  object(\"o\");\n"
        "  part(\"base\");\n"
        "  visual(\"base\", box([0.3, 0.3, 0.1]), name=\"slab\");\n"
        "}\n"
        "tests { check(\"top from binding\", abs(aabb(\"base\")[1][2] - deck_top) < 1e-9); }\n";
    CompileOutcome out = compile_source(src);
    REQUIRE(out.report.success());
    REQUIRE(out.report.tests[0].passed);
}

TEST_CASE("compile pipeline maps parse and runtime faults to findings") {
    CompileOutcome parse_fail = compile_source("build { object(\"x\" }");
    REQUIRE(parse_fail.asset == nullptr);
    REQUIRE(parse_fail.report.count(Severity::Failure) == 1);
    const Finding* pf = first_code(parse_fail.report, "parse_error");
    REQUIRE(pf != nullptr);
    REQUIRE(pf->message.find("line 1, column") == 0);

    CompileOutcome run_fail = compile_source("build {\n  object(\"x\");\n  let a = 1 / 0;\n}");
    REQUIRE(run_fail.asset == nullptr);
    const Finding* rf = first_code(run_fail.report, "runtime_error");
    REQUIRE(rf != nullptr);
    REQUIRE(rf->message.find("line 3") == 0);
    REQUIRE(rf->payload.at("code") == "division_by_zero");

    // Extract failures keep the built geometry probe-able.
    std::string bad_tests = std::string(kSwingRig) + "tests { expect_contact(\"base\", \"ghost\"); }\n";
    CompileOutcome ex_fail = compile_source(bad_tests);
    REQUIRE(ex_fail.asset != nullptr);
    REQUIRE_FALSE(ex_fail.report.success());
    REQUIRE(first_code(ex_fail.report, "runtime_error") != nullptr);
    REQUIRE(ex_fail.report.tests.empty());
}

TEST_CASE("defaulted joint ratings surface as notes") {
    std::string src =
        "build {\n"
        "  object(\"o\"); part(\"a\"); part(\"b\");\n"
        "  visual(\"a\", box([0.1, 0.1, 0.1]), name=\"va\");\n"
        "  visual(\"b\", box([0.1, 0.1, 0.1]), name=\"vb\", origin=[0.1, 0, 0]);\n"
        "  joint(\"j\", \"revolute\", \"a\", \"b\", lower=-1, upper=1);\n"
        "}\n";
    CompileOutcome out = compile_source(src);
    REQUIRE(out.report.success());
    REQUIRE(count_code(out.report, "default_applied") == 2);
    const Finding* n = first_code(out.report, "default_applied");
    REQUIRE(n->severity == Severity::Note);
    REQUIRE(n->message == "joint 'j' effort defaulted to 10.");
}

TEST_CASE("probe evaluates read-only queries against the compiled asset") {
    CompileOutcome out = compile_source(kSwingRig);
    REQUIRE(out.asset != nullptr);
    const CompiledAsset& asset = *out.asset;

    ProbeResult parts = probe_asset(asset, "parts()");
    REQUIRE(parts.ok);
    REQUIRE(parts.value.is_array());
    REQUIRE(parts.value.size() == 3);
    REQUIRE(parts.value[0].at("name") == "base");
    REQUIRE(parts.value[2].at("visuals")[0] == "beam");

    ProbeResult joints = probe_asset(asset, "joints()");
    REQUIRE(joints.ok);
    REQUIRE(joints.value[1].at("type") == "revolute");
    REQUIRE(joints.value[1].at("limits").at("upper") == 1.5);
    REQUIRE(joints.value[0].at("limits").is_null());

    ProbeResult vol = probe_asset(asset, "volume(\"base\")");
    REQUIRE(vol.ok);
    REQUIRE(vol.value.get<double>() == Catch::Approx(0.016).epsilon(1e-9));

    ProbeResult rest_box = probe_asset(asset, "aabb(\"boom\")");
    REQUIRE(rest_box.ok);
    REQUIRE(rest_box.value.at("max")[2].get<double>() == Catch::Approx(0.57).margin(1e-9));

    ProbeResult posed_box =
        probe_asset(asset, "aabb(\"boom\", pose=[[\"boom_pivot\", pi / 2]])");
    REQUIRE(posed_box.ok);
    REQUIRE(posed_box.value.at("min")[2].get<double>() < 0.2);

    ProbeResult dist = probe_asset(asset, "distance(\"base\", \"boom\")");
    REQUIRE(dist.ok);
    REQUIRE(dist.value.get<double>() > 0.1);

    ProbeResult cat = probe_asset(asset, "catalog()");
    REQUIRE(cat.ok);
    bool has_parts_row = false;
    for (const auto& row : cat.value)
        has_parts_row = has_parts_row ||
                        row.get<std::string>().find("parts()") != std::string::npos;
    REQUIRE(has_parts_row);

    // Deterministic rendering, byte for byte.
    ProbeResult again = probe_asset(asset, "parts()");
    REQUIRE(again.text == parts.text);
}

TEST_CASE("probe faults use the probe error codes") {
    CompileOutcome out = compile_source(kSwingRig);
    const CompiledAsset& asset = *out.asset;

    ProbeResult bad_syntax = probe_asset(asset, "aabb(");
    REQUIRE_FALSE(bad_syntax.ok);
    REQUIRE(bad_syntax.error_code == "probe_syntax_error");

    ProbeResult unknown = probe_asset(asset, "telemetry()");
    REQUIRE_FALSE(unknown.ok);
    REQUIRE(unknown.error_code == "unknown_symbol");

    ProbeResult unknown_part = probe_asset(asset, "aabb(\"ghost\")");
    REQUIRE_FALSE(unknown_part.ok);
    REQUIRE(unknown_part.error_code == "unknown_symbol");

    ProbeResult ident = probe_asset(asset, "mystery");
    REQUIRE_FALSE(ident.ok);
    REQUIRE(ident.error_code == "unknown_symbol");

    ProbeResult budget = probe_asset(asset, "1 + 2 + 3 + 4", 4);
    REQUIRE_FALSE(budget.ok);
    REQUIRE(budget.error_code == "probe_budget_exceeded");
}

TEST_CASE("signals renderer emits the exact wire layout") {
    CompileReport report;
    report.findings = {
        {Severity::Failure, "isolated_part", "msg A", {}},
        {Severity::Warning, "naming_lint", "msg B", {}},
        {Severity::Note, "allowed_overlap", "msg C", {}},
        {Severity::Note, "default_applied", "msg D", {}},
    };
    LoopState loop;
    loop.consecutive_failures = 4;
    loop.codes_unchanged = true;

    std::string expected =
        "<compile_signals>\n"
        "<summary>\n"
        "status=failure failures=1 warnings=1 notes=2\n"
        "This is compile failure 4 in a row.\n"
        "</summary>\n"
        "\n"
        "<failures>\n"
        "- [isolated_part] msg A\n"
        "</failures>\n"
        "\n"
        "<warnings>\n"
        "- [naming_lint] msg B\n"
        "</warnings>\n"
        "\n"
        "<notes>\n"
        "- [allowed_overlap] msg C\n"
        "- [default_applied] msg D\n"
        "</notes>\n"
        "\n"
        "<response_rules>\n"
        "- Treat the compiler-owned floating/disconnected part finding as primary evidence "
        "before tuning authored exact checks.\n"
        "- You are in a repair loop. A short probe_model snippet is likely to be more "
        "informative than another small placement or tolerance tweak.\n"
        "</response_rules>\n"
        "</compile_signals>";
    REQUIRE(render_compile_signals(report, loop) == expected);

    CompileReport clean;
    std::string clean_expected =
        "<compile_signals>\n"
        "<summary>\n"
        "status=success failures=0 warnings=0 notes=0\n"
        "</summary>\n"
        "\n"
        "<response_rules>\n"
        "- Compile is clean. If you cannot name one specific remaining defect, conclude the "
        "session rather than continuing to tune.\n"
        "</response_rules>\n"
        "</compile_signals>";
    REQUIRE(render_compile_signals(clean) == clean_expected);
}

TEST_CASE("summary line round-trips the report counts") {
    CompileReport report;
    report.findings = {
        {Severity::Failure, "overlap", "x", {}},
        {Severity::Failure, "test_failure", "y", {}},
        {Severity::Note, "default_applied", "z", {}},
    };
    std::string block = render_compile_signals(report);
    auto counts = parse_compile_summary(block);
    REQUIRE(counts.has_value());
    REQUIRE(counts->status == "failure");
    REQUIRE(counts->failures == report.count(Severity::Failure));
    REQUIRE(counts->warnings == report.count(Severity::Warning));
    REQUIRE(counts->notes == report.count(Severity::Note));
    REQUIRE_FALSE(parse_compile_summary("garbage").has_value());
}

TEST_CASE("streak sentence needs at least two consecutive failures") {
    CompileReport failing;
    failing.findings = {{Severity::Failure, "overlap", "x", {}}};
    LoopState one;
    one.consecutive_failures = 1;
    REQUIRE(render_compile_signals(failing, one).find("in a row") == std::string::npos);
    LoopState two;
    two.consecutive_failures = 2;
    REQUIRE(render_compile_signals(failing, two).find("This is compile failure 2 in a row.") !=
            std::string::npos);
    // Repair-loop rule also needs the codes to have stalled.
    REQUIRE(render_compile_signals(failing, two).find("repair loop") == std::string::npos);
    two.codes_unchanged = true;
    REQUIRE(render_compile_signals(failing, two).find("repair loop") != std::string::npos);
}

TEST_CASE("compiling the same source twice renders identical bytes") {
    std::string src = std::string(kSwingRig) +
                      "tests { check(\"boom high\", aabb(\"boom\")[1][2] > 0.5); }\n";
    CompileOutcome a = compile_source(src);
    CompileOutcome b = compile_source(src);
    REQUIRE(render_compile_signals(a.report) == render_compile_signals(b.report));
    REQUIRE(probe_asset(*a.asset, "aabb(\"boom\")").text ==
            probe_asset(*b.asset, "aabb(\"boom\")").text);
}
