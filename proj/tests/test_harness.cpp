#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include <articraft/harness.hpp>

using namespace articraft;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("articraft_harness_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

constexpr const char* kCleanBuild = R"(build {
  object("widget");
  part("base");
  visual("base", box([0.2, 0.2, 0.1]), name="slab");
}
)";

// The lid floats 0.14m above the base: exactly one isolated_part failure.
constexpr const char* kFloatingBuild = R"(build {
  object("widget");
  part("base");
  visual("base", box([0.2, 0.2, 0.1]), name="slab");
  part("lid");
  visual("lid", box([0.05, 0.05, 0.02]), name="cap", origin=[0, 0, 0.2]);
}
)";

// replace() fix: dropping the lid to z=0.06 puts its underside in contact
// with the base top face.
constexpr const char* kLidFixOld = "origin=[0, 0, 0.2]";
constexpr const char* kLidFixNew = "origin=[0, 0, 0.06]";

ToolCall call_of(const std::string& tool, nlohmann::json args = nlohmann::json::object()) {
    return ToolCall{tool, std::move(args)};
}

ExampleIndex demo_index() {
    return ExampleIndex::from_entries({
        {"barrel-hinge",
         "Barrel hinge leaf pair",
         {"hinge", "revolute", "barrel"},
         "joint(\"leaf_pivot\", type=\"revolute\", parent=\"frame_leaf\", child=\"door_leaf\")",
         "Two leaves mate around a shared barrel pin."},
        {"wheel-tire",
         "Spoked wheel with tire",
         {"wheel", "tire", "cylinder"},
         "visual(\"hub\", wheel(radius=0.1, width=0.04, spokes=6))",
         "Rim and tread built from one procedural wheel call."},
        {"desk-lamp",
         "Desk lamp arm chain",
         {"lamp", "revolute", "arm"},
         "joint(\"base_to_lower_arm\", type=\"revolute\", axis=[0, -1, 0])",
         "Chained revolute arms over a weighted base."},
    });
}

nlohmann::json two_fix_script() {
    return nlohmann::json::array({
        {{"text", "Drafting the model."},
         {"tool", "write_file"},
         {"args", {{"content", kFloatingBuild}}}},
        {{"text", "Compiling."}, {"tool", "compile_model"}},
        {{"text", "Lowering the lid into contact."},
         {"tool", "replace"},
         {"args", {{"old", kLidFixOld}, {"new", kLidFixNew}}}},
        {{"text", "Recompiling."}, {"tool", "compile_model"}},
        {{"text", "The compile is clean; concluding."}},
    });
}

}  // namespace

TEST_CASE("workspace documents and seed program") {
    HarnessConfig cfg;
    auto [ws, st] = open_workspace("make a widget", std::nullopt, cfg);

    CHECK(ws.model_text() == docs::kSeedProgram);
    CHECK(ws.mutation_count() == 0);

    // The seed program never declares an object, so a fresh session cannot
    // satisfy the clean-compile half of the termination condition.
    CompileOutcome seed = compile_source(docs::kSeedProgram);
    CHECK_FALSE(seed.report.success());

    for (const auto& [path, text] : docs::reference_tree()) {
        const std::string* doc = Workspace::find_document(path);
        REQUIRE(doc != nullptr);
        CHECK(*doc == text);
    }
    CHECK(Workspace::find_document("docs/references/missing.md") == nullptr);
    CHECK(docs::reference_tree().size() == 7);

    std::string sys = docs::system_prompt();
    for (const char* marker : {"<role>", "</role>", "<link_naming>", "<tools>", "<modeling>",
                               "REALISTIC GEOMETRY", "NO FLOATING PARTS"})
        CHECK(sys.find(marker) != std::string::npos);
    for (const char* tool : kToolNames) CHECK(sys.find(tool) != std::string::npos);

    std::string packet = docs::documentation_packet();
    CHECK(packet.find("# Workspace Documentation") != std::string::npos);
    CHECK(packet.find("model.apl") != std::string::npos);
    CHECK(packet.find("probe_model") != std::string::npos);

    CHECK(st.system_prompt == sys);
    CHECK(st.doc_message == packet);
    CHECK(st.task_message == std::string(docs::kRuntimeTaskGuidance) + "\nmake a widget");
}

TEST_CASE("open_workspace validates configuration") {
    HarnessConfig cfg;
    cfg.backend = "telepathy";
    CHECK_THROWS_MATCHES(open_workspace("p", std::nullopt, cfg), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == "invalid_config"; }));
    cfg.backend = "scripted";
    cfg.max_turns = 0;
    CHECK_THROWS_AS(open_workspace("p", std::nullopt, cfg), Error);
}

TEST_CASE("build_request renders prefix, turns, and refusals") {
    HarnessConfig cfg;
    auto [ws, st] = open_workspace("Build a toy crane", std::nullopt, cfg);

    BackendRequest req = build_request(st);
    CHECK(req.system == docs::system_prompt());
    REQUIRE(req.messages.size() == 2);
    CHECK(req.messages[0]["role"] == "user");
    CHECK(req.messages[0]["content"] == docs::documentation_packet());
    CHECK(req.messages[1]["content"] ==
          std::string(docs::kRuntimeTaskGuidance) + "\nBuild a toy crane");
    CHECK(req.tools.size() == 7);

    TurnRecord tool_turn;
    tool_turn.assistant_text = "reading";
    tool_turn.call = call_of("read_file", {{"path", "model.apl"}});
    tool_turn.result = {true, "build {\n}\n", {}};
    st.history.push_back(tool_turn);

    TurnRecord refusal;
    refusal.assistant_text = "done?";
    refusal.result = {false, kTerminationRefusal, "not_clean"};
    st.history.push_back(refusal);

    req = build_request(st);
    REQUIRE(req.messages.size() == 6);
    CHECK(req.messages[2]["role"] == "assistant");
    CHECK(req.messages[2]["tool"]["name"] == "read_file");
    CHECK(req.messages[3]["role"] == "tool");
    CHECK(req.messages[3]["ok"] == true);
    CHECK(req.messages[4]["role"] == "assistant");
    CHECK(req.messages[4]["content"] == "done?");
    CHECK(req.messages[5]["role"] == "user");
    CHECK(req.messages[5]["content"] == kTerminationRefusal);
}

TEST_CASE("scripted backend replays steps and reports usage") {
    nlohmann::json steps = nlohmann::json::array({
        {{"text", "hello"}, {"prompt_tokens", 123}, {"output_tokens", 7}},
        {{"text", ""}, {"tool", "compile_model"}},
    });
    ScriptedBackend backend(steps, "demo");
    CHECK(backend.provider() == "scripted");
    CHECK(backend.model() == "demo");
    CHECK(backend.remaining() == 2);

    BackendRequest req;
    req.system = "abcdefgh";  // 8 chars -> 2 tokens
    req.messages.push_back({{"role", "user"}, {"content", "abcd"}});

    BackendStep first = backend.next_step(req);
    CHECK(first.text == "hello");
    CHECK_FALSE(first.call.has_value());
    CHECK(first.prompt_tokens == 123);
    CHECK(first.output_tokens == 7);

    BackendStep second = backend.next_step(req);
    REQUIRE(second.call.has_value());
    CHECK(second.call->tool == "compile_model");
    CHECK(second.prompt_tokens == approx_request_tokens(req));
    CHECK(second.prompt_tokens == 3);

    CHECK(backend.remaining() == 0);
    CHECK_THROWS_MATCHES(backend.next_step(req), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == "backend_error" &&
                                    std::string(e.what()).find("exhausted after 2 steps") !=
                                        std::string::npos;
                         }));

    CHECK_THROWS_AS(ScriptedBackend(nlohmann::json::object(), "bad"), Error);
    CHECK_THROWS_AS(ScriptedBackend::from_file("/nonexistent/script.json"), Error);

    TempDir tmp;
    std::ofstream(tmp.path / "ok.json") << steps.dump();
    auto loaded = ScriptedBackend::from_file((tmp.path / "ok.json").string());
    CHECK(loaded->model() == "ok");
    CHECK(loaded->remaining() == 2);
}

TEST_CASE("approximate tokenizer rounds up") {
    CHECK(approx_tokens("") == 0);
    CHECK(approx_tokens("abc") == 1);
    CHECK(approx_tokens("abcd") == 1);
    CHECK(approx_tokens("abcde") == 2);
}

TEST_CASE("dispatch read_file covers model and documents") {
    HarnessConfig cfg;
    auto [ws, st] = open_workspace("p", std::string(kCleanBuild), cfg);

    ToolResult r = dispatch_tool(ws, st, call_of("read_file", {{"path", "model.apl"}}), cfg);
    CHECK(r.ok);
    CHECK(r.text == kCleanBuild);

    r = dispatch_tool(ws, st, call_of("read_file", {{"path", "docs/references/quickstart.md"}}),
                      cfg);
    CHECK(r.ok);
    CHECK(r.text.find("quickstart") != std::string::npos);

    r = dispatch_tool(ws, st, call_of("read_file", {{"path", "secrets.txt"}}), cfg);
    CHECK_FALSE(r.ok);
    CHECK(r.error_code == "unknown_path");

    r = dispatch_tool(ws, st, call_of("read_file"), cfg);
    CHECK_FALSE(r.ok);
    CHECK(r.error_code == "invalid_params");

    CHECK(ws.mutation_count() == 0);
}

TEST_CASE("dispatch apply_patch applies hunks atomically") {
    HarnessConfig cfg;
    auto [ws, st] = open_workspace("p", std::string("line one\nline two\nline three\n"), cfg);

    SECTION("single hunk with context") {
        std::string patch = "@@\n line one\n-line two\n+line 2\n";
        ToolResult r = dispatch_tool(ws, st, call_of("apply_patch", {{"patch", patch}}), cfg);
        CHECK(r.ok);
        CHECK(ws.model_text() == "line one\nline 2\nline three\n");
        CHECK(ws.mutation_count() == 1);
    }

    SECTION("insert-only hunk anchored on context") {
        std::string patch = "@@\n line one\n+inserted\n";
        ToolResult r = dispatch_tool(ws, st, call_of("apply_patch", {{"patch", patch}}), cfg);
        CHECK(r.ok);
        CHECK(ws.model_text() == "line one\ninserted\nline two\nline three\n");
    }

    SECTION("missing context fails without mutating") {
        std::string patch = "@@\n line nine\n+x\n";
        ToolResult r = dispatch_tool(ws, st, call_of("apply_patch", {{"patch", patch}}), cfg);
        CHECK_FALSE(r.ok);
        CHECK(r.error_code == "patch_context_not_found");
        CHECK(ws.model_text() == "line one\nline two\nline three\n");
        CHECK(ws.mutation_count() == 0);
    }

    SECTION("second failing hunk rolls back the first") {
        std::string patch = "@@\n-line one\n+line 1\n@@\n line nine\n+x\n";
        ToolResult r = dispatch_tool(ws, st, call_of("apply_patch", {{"patch", patch}}), cfg);
        CHECK_FALSE(r.ok);
        CHECK(r.error_code == "patch_context_not_found");
        CHECK(ws.model_text() == "line one\nline two\nline three\n");
        CHECK(ws.mutation_count() == 0);
    }

    SECTION("malformed patches are invalid_params") {
        ToolResult r =
            dispatch_tool(ws, st, call_of("apply_patch", {{"patch", "no hunks here"}}), cfg);
        CHECK_FALSE(r.ok);
        CHECK(r.error_code == "invalid_params");
        r = dispatch_tool(ws, st, call_of("apply_patch", {{"patch", "@@\nxbad prefix\n"}}), cfg);
        CHECK_FALSE(r.ok);
        CHECK(r.error_code == "invalid_params");
        r = dispatch_tool(ws, st, call_of("apply_patch", {{"patch", "@@\n"}}), cfg);
        CHECK_FALSE(r.ok);
        CHECK(r.error_code == "patch_context_not_found");
    }
}

TEST_CASE("dispatch apply_patch rejects ambiguous context") {
    HarnessConfig cfg;
    auto [ws, st] = open_workspace("p", std::string("dup\nmid\ndup\n"), cfg);
    ToolResult r =
        dispatch_tool(ws, st, call_of("apply_patch", {{"patch", "@@\n-dup\n+one\n"}}), cfg);
    CHECK_FALSE(r.ok);
    CHECK(r.error_code == "patch_ambiguous");
    CHECK(ws.model_text() == "dup\nmid\ndup\n");
}

TEST_CASE("dispatch replace enforces the expected count") {
    HarnessConfig cfg;
    auto [ws, st] = open_workspace("p", std::string("aaa bbb aaa\n"), cfg);

    ToolResult r = dispatch_tool(
        ws, st, call_of("replace", {{"old", "aaa"}, {"new", "ccc"}, {"expected_count", 2}}), cfg);
    CHECK(r.ok);
    CHECK(ws.model_text() == "ccc bbb ccc\n");
    CHECK(ws.mutation_count() == 1);

    r = dispatch_tool(ws, st, call_of("replace", {{"old", "bbb"}, {"new", "x"},
                                                  {"expected_count", 3}}),
                      cfg);
    CHECK_FALSE(r.ok);
    CHECK(r.error_code == "replace_count_mismatch");
    CHECK(r.text.find("found 1 occurrence(s), expected 3") != std::string::npos);
    CHECK(ws.model_text() == "ccc bbb ccc\n");

    r = dispatch_tool(ws, st, call_of("replace", {{"old", "zzz"}, {"new", "x"}}), cfg);
    CHECK_FALSE(r.ok);
    CHECK(r.error_code == "replace_count_mismatch");
    CHECK(ws.mutation_count() == 1);
}

TEST_CASE("dispatch write_file overwrites only the model file") {
    HarnessConfig cfg;
    auto [ws, st] = open_workspace("p", std::nullopt, cfg);

    ToolResult r = dispatch_tool(ws, st, call_of("write_file", {{"content", kCleanBuild}}), cfg);
    CHECK(r.ok);
    CHECK(ws.model_text() == kCleanBuild);
    CHECK(ws.mutation_count() == 1);

    r = dispatch_tool(ws, st,
                      call_of("write_file", {{"path", "other.apl"}, {"content", "x"}}), cfg);
    CHECK_FALSE(r.ok);
    CHECK(r.error_code == "unknown_path");
    CHECK(ws.model_text() == kCleanBuild);
}

TEST_CASE("dispatch find_examples ranks and renders") {
    HarnessConfig cfg;
    auto [ws, st] = open_workspace("p", std::nullopt, cfg, demo_index());

    ToolResult r =
        dispatch_tool(ws, st, call_of("find_examples", {{"query", "hinge"}, {"k", 2}}), cfg);
    REQUIRE(r.ok);
    CHECK(r.text.find("# Examples for \"hinge\"") == 0);
    CHECK(r.text.find("## 1. Barrel hinge leaf pair\n") != std::string::npos);
    CHECK(r.text.find("Barrel hinge leaf pair [weakly relevant]") == std::string::npos);

    r = dispatch_tool(ws, st, call_of("find_examples", {{"query", "qqqq zzzz"}, {"k", 3}}), cfg);
    REQUIRE(r.ok);
    CHECK(r.text.find("[weakly relevant]") != std::string::npos);

    // Empty corpus is a configuration fault surfaced through the tool result.
    auto [ws2, st2] = open_workspace("p", std::nullopt, cfg);
    r = dispatch_tool(ws2, st2, call_of("find_examples", {{"query", "hinge"}}), cfg);
    CHECK_FALSE(r.ok);
    CHECK(r.error_code == "empty_index");
}

TEST_CASE("dispatch compile_model updates session state and streaks") {
    HarnessConfig cfg;
    auto [ws, st] = open_workspace("p", std::string(kFloatingBuild), cfg);

    ToolResult first = dispatch_tool(ws, st, call_of("compile_model"), cfg);
    REQUIRE(first.ok);  // a failing compile is still a successful tool call
    auto counts = parse_compile_summary(first.text);
    REQUIRE(counts.has_value());
    CHECK(counts->status == "failure");
    CHECK(counts->failures == 1);
    CHECK(st.has_compiled);
    CHECK_FALSE(st.last_compile_success);
    CHECK(st.failure_streak == 1);
    REQUIRE(st.last_failure_codes.size() == 1);
    CHECK(st.last_failure_codes[0] == "isolated_part");
    CHECK(first.text.find("compile failure") == std::string::npos);

    // Same program again: cache hit, streak 2, unchanged codes, repair rule.
    ToolResult second = dispatch_tool(ws, st, call_of("compile_model"), cfg);
    CHECK(st.failure_streak == 2);
    CHECK(second.text.find("This is compile failure 2 in a row.") != std::string::npos);
    CHECK(second.text.find("repair loop") != std::string::npos);

    // Asset from the QC-failed compile is probe-able.
    ToolResult probe =
        dispatch_tool(ws, st, call_of("probe_model", {{"query", "volume(\"lid\")"}}), cfg);
    CHECK(probe.ok);

    // Fix and recompile: streak resets and signals flip to success.
    ToolResult fix = dispatch_tool(
        ws, st, call_of("replace", {{"old", kLidFixOld}, {"new", kLidFixNew}}), cfg);
    REQUIRE(fix.ok);
    ToolResult third = dispatch_tool(ws, st, call_of("compile_model"), cfg);
    counts = parse_compile_summary(third.text);
    REQUIRE(counts.has_value());
    CHECK(counts->status == "success");
    CHECK(counts->failures == 0);
    CHECK(st.last_compile_success);
    CHECK(st.failure_streak == 0);
}

TEST_CASE("compile_model retains the last good asset across parse failures") {
    HarnessConfig cfg;
    auto [ws, st] = open_workspace("p", std::string(kCleanBuild), cfg);

    REQUIRE(dispatch_tool(ws, st, call_of("compile_model"), cfg).ok);
    REQUIRE(ws.asset() != nullptr);
    auto before = ws.asset();

    REQUIRE(dispatch_tool(ws, st, call_of("write_file", {{"content", "build {"}}), cfg).ok);
    ToolResult broken = dispatch_tool(ws, st, call_of("compile_model"), cfg);
    auto counts = parse_compile_summary(broken.text);
    REQUIRE(counts.has_value());
    CHECK(counts->status == "failure");
    CHECK(ws.asset() == before);  // stale but probe-able geometry

    ToolResult probe =
        dispatch_tool(ws, st, call_of("probe_model", {{"query", "parts()"}}), cfg);
    CHECK(probe.ok);
}

TEST_CASE("dispatch probe_model requires a compiled asset") {
    HarnessConfig cfg;
    auto [ws, st] = open_workspace("p", std::nullopt, cfg);
    ToolResult r = dispatch_tool(ws, st, call_of("probe_model", {{"query", "parts()"}}), cfg);
    CHECK_FALSE(r.ok);
    CHECK(r.error_code == "no_compiled_asset");

    // Seed program fails to evaluate, so compiling it leaves no asset.
    dispatch_tool(ws, st, call_of("compile_model"), cfg);
    r = dispatch_tool(ws, st, call_of("probe_model", {{"query", "parts()"}}), cfg);
    CHECK_FALSE(r.ok);
    CHECK(r.error_code == "no_compiled_asset");
}

TEST_CASE("dispatch rejects unknown tools without side effects") {
    HarnessConfig cfg;
    auto [ws, st] = open_workspace("p", std::string(kCleanBuild), cfg);
    ToolResult r = dispatch_tool(ws, st, call_of("run_python", {{"code", "1"}}), cfg);
    CHECK_FALSE(r.ok);
    CHECK(r.error_code == "unknown_tool");
    CHECK(ws.mutation_count() == 0);
    CHECK_FALSE(st.has_compiled);
}

TEST_CASE("state changes only through successful edit dispatches") {
    HarnessConfig cfg;
    auto [ws, st] = open_workspace("p", std::nullopt, cfg, demo_index());

    dispatch_tool(ws, st, call_of("read_file", {{"path", "model.apl"}}), cfg);
    dispatch_tool(ws, st, call_of("find_examples", {{"query", "wheel"}}), cfg);
    dispatch_tool(ws, st, call_of("compile_model"), cfg);
    dispatch_tool(ws, st, call_of("probe_model", {{"query", "parts()"}}), cfg);
    dispatch_tool(ws, st, call_of("unknown"), cfg);
    dispatch_tool(ws, st, call_of("apply_patch", {{"patch", "@@\n zzz\n+q\n"}}), cfg);
    dispatch_tool(ws, st, call_of("replace", {{"old", "zzz"}, {"new", "q"}}), cfg);
    CHECK(ws.mutation_count() == 0);

    REQUIRE(dispatch_tool(ws, st, call_of("write_file", {{"content", "abc\ndef\n"}}), cfg).ok);
    REQUIRE(dispatch_tool(ws, st, call_of("apply_patch", {{"patch", "@@\n-abc\n+xyz\n"}}), cfg)
                .ok);
    REQUIRE(dispatch_tool(ws, st, call_of("replace", {{"old", "def"}, {"new", "uvw"}}), cfg).ok);
    CHECK(ws.mutation_count() == 3);
    CHECK(ws.model_text() == "xyz\nuvw\n");
}

TEST_CASE("scripted session fixes a defect and terminates cleanly") {
    TempDir tmp;
    HarnessConfig cfg;
    cfg.out_dir = tmp.path / "artifacts";
    ScriptedBackend backend(two_fix_script(), "two-fix");

    SessionOutcome outcome = run_session("s1", "Build a widget with a lid", std::nullopt, cfg,
                                         backend, demo_index());

    CHECK(outcome.status == "success");
    CHECK(outcome.turns == 5);
    REQUIRE(outcome.trace["records"].size() == 5);  // exactly one record per turn
    CHECK(outcome.final_program.find(kLidFixNew) != std::string::npos);
    REQUIRE(outcome.asset != nullptr);
    CHECK(outcome.asset->object.name == "widget");

    const auto& records = outcome.trace["records"];
    CHECK(records[0]["tool"] == "write_file");
    auto fail_counts = parse_compile_summary(records[1]["result"].get<std::string>());
    REQUIRE(fail_counts.has_value());
    CHECK(fail_counts->status == "failure");
    auto ok_counts = parse_compile_summary(records[3]["result"].get<std::string>());
    REQUIRE(ok_counts.has_value());
    CHECK(ok_counts->status == "success");
    CHECK(ok_counts->failures == 0);
    CHECK_FALSE(records[4].contains("tool"));

    CHECK(outcome.trace["status"] == "success");
    CHECK(outcome.trace["final_program_hash"] == content_digest(outcome.final_program));
    CHECK(outcome.trace["prompt_hash"] ==
          content_digest(outcome.trace["prompt"].get<std::string>()));
    CHECK(outcome.trace["initial_program"] == docs::kSeedProgram);
    CHECK_FALSE(outcome.trace.contains("timestamp"));
    CHECK(outcome.trace["usage"]["prompt_tokens"].get<long>() == outcome.prompt_tokens);
    CHECK(outcome.prompt_tokens > 0);

    // Clean compile exported URDF artifacts.
    CHECK(fs::exists(tmp.path / "artifacts" / "widget.urdf"));
    CHECK(fs::exists(tmp.path / "artifacts" / "widget.manifest.json"));
    CHECK(outcome.trace["artifacts"]["urdf"].get<std::string>().find("widget.urdf") !=
          std::string::npos);

    // Replay re-drives the recorded calls to the same final program.
    ReplayResult replay = replay_trace(outcome.trace, cfg);
    CHECK(replay.matches);
    CHECK(replay.final_hash == outcome.trace["final_program_hash"]);

    nlohmann::json tampered = outcome.trace;
    tampered["records"][2]["args"]["new"] = "origin=[0, 0, 0.5]";
    CHECK_FALSE(replay_trace(tampered, cfg).matches);
}

TEST_CASE("session refuses to conclude on a dirty compile") {
    nlohmann::json steps = nlohmann::json::array({
        {{"text", "Calling it done without compiling."}},
        {{"text", "Writing."}, {"tool", "write_file"}, {"args", {{"content", kFloatingBuild}}}},
        {{"text", "Compiling."}, {"tool", "compile_model"}},
        {{"text", "Concluding despite the failure."}},
        {{"text", "Fixing."},
         {"tool", "replace"},
         {"args", {{"old", kLidFixOld}, {"new", kLidFixNew}}}},
        {{"text", "Recompiling."}, {"tool", "compile_model"}},
        {{"text", "Concluding."}},
    });
    ScriptedBackend backend(steps, "stubborn");
    HarnessConfig cfg;
    SessionOutcome outcome = run_session("s2", "widget", std::nullopt, cfg, backend);

    CHECK(outcome.status == "success");
    CHECK(outcome.turns == 7);
    const auto& records = outcome.trace["records"];
    REQUIRE(records.size() == 7);
    CHECK(records[0]["ok"] == false);
    CHECK(records[0]["result"] == kTerminationRefusal);
    CHECK(records[3]["ok"] == false);
    CHECK(records[3]["result"] == kTerminationRefusal);
    CHECK(records[6]["ok"] == true);
}

TEST_CASE("session exhausts its turn budget") {
    nlohmann::json steps = nlohmann::json::array();
    for (int i = 0; i < 5; ++i)
        steps.push_back({{"text", "looking"},
                         {"tool", "read_file"},
                         {"args", {{"path", "model.apl"}}}});
    ScriptedBackend backend(steps, "reader");
    HarnessConfig cfg;
    cfg.max_turns = 3;
    SessionOutcome outcome = run_session("s3", "widget", std::nullopt, cfg, backend);
    CHECK(outcome.status == "exhausted");
    CHECK(outcome.turns == 3);
    CHECK(outcome.trace["records"].size() == 3);
    CHECK(backend.remaining() == 2);
}

TEST_CASE("backend faults become a backend_error outcome") {
    ScriptedBackend backend(nlohmann::json::array(), "empty");
    HarnessConfig cfg;
    SessionOutcome outcome = run_session("s4", "widget", std::nullopt, cfg, backend);
    CHECK(outcome.status == "backend_error");
    CHECK(outcome.turns == 0);
    CHECK(outcome.trace["records"].empty());
    CHECK(outcome.trace["status"] == "backend_error");
    CHECK(outcome.trace["backend_error"].get<std::string>().find("exhausted") !=
          std::string::npos);
    CHECK(outcome.backend_error.find("exhausted after 0 steps") != std::string::npos);
}

namespace {

SessionState synthetic_state(int records) {
    SessionState st;
    st.prompt = "Build a sliding toolbox drawer";
    st.system_prompt = "sys";
    st.doc_message = "docs";
    st.task_message = "task";
    for (int i = 0; i < records; ++i) {
        TurnRecord rec;
        rec.assistant_text = "turn " + std::to_string(i);
        rec.call = ToolCall{"read_file", {{"path", "model.apl"}}};
        rec.result = {true, "content " + std::to_string(i), {}};
        rec.prompt_tokens = 1000 + i;
        rec.output_tokens = 10 + i;
        st.history.push_back(std::move(rec));
    }
    return st;
}

}  // namespace

TEST_CASE("compaction triggers honor thresholds") {
    HarnessConfig cfg;  // threshold 280000, hard 0.9, soft streak 3 at 0.5

    SessionState st = synthetic_state(10);
    st.last_prompt_tokens = 252000;
    CHECK(compaction_due(st, cfg));  // exactly at 0.9 * 280000
    st.last_prompt_tokens = 251999;
    CHECK_FALSE(compaction_due(st, cfg));

    st.failure_streak = 3;
    st.last_prompt_tokens = 140000;  // exactly at 0.5 * 280000
    CHECK(compaction_due(st, cfg));
    st.last_prompt_tokens = 139999;
    CHECK_FALSE(compaction_due(st, cfg));
    st.last_prompt_tokens = 140000;
    st.failure_streak = 2;
    CHECK_FALSE(compaction_due(st, cfg));

    // Too little history: even maximum pressure cannot compact.
    SessionState small = synthetic_state(9);
    small.last_prompt_tokens = 280000;
    CHECK_FALSE(compaction_due(small, cfg));
}

TEST_CASE("compact_history summarizes the middle and preserves the tail") {
    HarnessConfig cfg;
    SessionState st = synthetic_state(11);
    std::vector<TurnRecord> original = st.history;

    compact_history(st, cfg, nullptr);

    REQUIRE(st.history.size() == 7);  // summary + preserved tail of 6
    CHECK(st.history[0].is_summary);
    CHECK(st.compactions == 1);
    const std::string& summary = st.history[0].result.text;
    CHECK(summary.find("[compacted history: 5 earlier records]") == 0);
    CHECK(summary.find("Task: Build a sliding toolbox drawer") != std::string::npos);
    CHECK(summary.find("read_file") != std::string::npos);
    CHECK(summary.find("Next:") != std::string::npos);

    // Tail records stay byte-identical.
    for (int i = 0; i < 6; ++i) {
        const TurnRecord& kept = st.history[static_cast<std::size_t>(i + 1)];
        const TurnRecord& was = original[static_cast<std::size_t>(i + 5)];
        CHECK(kept.assistant_text == was.assistant_text);
        CHECK(kept.result.text == was.result.text);
        CHECK(kept.prompt_tokens == was.prompt_tokens);
        CHECK(kept.output_tokens == was.output_tokens);
        REQUIRE(kept.call.has_value());
        CHECK(kept.call->tool == was.call->tool);
        CHECK(kept.call->args == was.call->args);
    }

    SessionState tiny = synthetic_state(9);
    CHECK_THROWS_MATCHES(compact_history(tiny, cfg, nullptr), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == "nothing_to_compact"; }));
}

TEST_CASE("compaction preserves the prefix messages byte for byte") {
    HarnessConfig cfg;
    auto [ws, st] = open_workspace("crane prompt", std::nullopt, cfg);
    for (int i = 0; i < 11; ++i) {
        TurnRecord rec;
        rec.assistant_text = "t" + std::to_string(i);
        rec.call = ToolCall{"read_file", {{"path", "model.apl"}}};
        rec.result = {true, "body", {}};
        st.history.push_back(std::move(rec));
    }
    BackendRequest before = build_request(st);
    compact_history(st, cfg, nullptr);
    BackendRequest after = build_request(st);

    CHECK(before.system == after.system);
    CHECK(before.messages[0] == after.messages[0]);
    CHECK(before.messages[1] == after.messages[1]);
    // Message 2 is now the summary; the remaining turns mirror the old tail.
    CHECK(after.messages[2]["role"] == "user");
    std::size_t b = before.messages.size();
    std::size_t a = after.messages.size();
    for (std::size_t k = 0; k < 12; ++k)  // 6 records x 2 messages each
        CHECK(before.messages[b - 1 - k] == after.messages[a - 1 - k]);
}

TEST_CASE("hard compaction fires inside a session at reported pressure") {
    nlohmann::json steps = nlohmann::json::array();
    for (int i = 0; i < 10; ++i)
        steps.push_back({{"text", "r" + std::to_string(i)},
                         {"tool", "read_file"},
                         {"args", {{"path", "model.apl"}}},
                         {"prompt_tokens", 1000}});
    steps.push_back({{"text", "r10"},
                     {"tool", "read_file"},
                     {"args", {{"path", "model.apl"}}},
                     {"prompt_tokens", 252000}});
    steps.push_back({{"text", "writing"},
                     {"tool", "write_file"},
                     {"args", {{"content", kCleanBuild}}},
                     {"prompt_tokens", 1000}});
    steps.push_back({{"text", "compiling"}, {"tool", "compile_model"}, {"prompt_tokens", 1000}});
    steps.push_back({{"text", "done"}, {"prompt_tokens", 1000}});

    ScriptedBackend backend(steps, "pressure");
    HarnessConfig cfg;
    SessionOutcome outcome = run_session("s5", "widget", std::nullopt, cfg, backend);

    CHECK(outcome.status == "success");
    CHECK(outcome.trace["compactions"] == 1);
    const auto& records = outcome.trace["records"];
    REQUIRE(records.size() == 10);  // summary + tail 6 + three later turns
    CHECK(records[0]["summary"] == true);
    CHECK(records[1]["assistant"] == "r5");  // records r0..r4 were compacted
    CHECK(records[6]["assistant"] == "r10");
    CHECK(records[7]["tool"] == "write_file");
}

TEST_CASE("soft compaction fires on a failure plateau") {
    nlohmann::json steps = nlohmann::json::array();
    steps.push_back({{"text", "w"},
                     {"tool", "write_file"},
                     {"args", {{"content", kFloatingBuild}}},
                     {"prompt_tokens", 1000}});
    steps.push_back({{"text", "c1"}, {"tool", "compile_model"}, {"prompt_tokens", 1000}});
    steps.push_back({{"text", "c2"}, {"tool", "compile_model"}, {"prompt_tokens", 1000}});
    for (int i = 0; i < 6; ++i)
        steps.push_back({{"text", "look" + std::to_string(i)},
                         {"tool", "read_file"},
                         {"args", {{"path", "model.apl"}}},
                         {"prompt_tokens", 1000}});
    steps.push_back({{"text", "c3"}, {"tool", "compile_model"}, {"prompt_tokens", 140000}});

    ScriptedBackend backend(steps, "plateau");
    HarnessConfig cfg;
    cfg.max_turns = 10;
    SessionOutcome outcome = run_session("s6", "widget", std::nullopt, cfg, backend);

    CHECK(outcome.status == "exhausted");
    CHECK(outcome.trace["compactions"] == 1);
    const auto& records = outcome.trace["records"];
    REQUIRE(records.size() == 7);
    CHECK(records[0]["summary"] == true);
    std::string summary = records[0]["result"].get<std::string>();
    CHECK(summary.find("status=failure") != std::string::npos);
    CHECK(records[6]["assistant"] == "c3");
}

TEST_CASE("trace sink, ratings, and stats") {
    TempDir tmp;
    fs::path traces = tmp.path / "traces.jsonl";
    TraceSink sink(traces);

    auto stub = [](const std::string& id, const std::string& model, const std::string& status,
                   int turns, double cost) {
        return nlohmann::json{
            {"schema", "articraft.trace.v1"},
            {"id", id},
            {"backend", {{"provider", "scripted"}, {"model", model}}},
            {"status", status},
            {"turns", turns},
            {"usage", {{"prompt_tokens", 100 * turns}, {"output_tokens", 10 * turns}, {"cost", cost}}},
            {"rating", nullptr},
        };
    };
    sink.append(stub("a", "m1", "success", 4, 0.10));
    sink.append(stub("b", "m1", "success", 6, 0.30));
    sink.append(stub("c", "m1", "exhausted", 10, 0.50));
    sink.append(stub("d", "m2", "success", 3, 0.20));

    CHECK(rate_record(traces, "b", 3));        // success -> rejected_by_rating
    CHECK(rate_record(traces, "d", 5));        // stays success
    CHECK_FALSE(rate_record(traces, "zz", 4)); // unknown id
    CHECK_THROWS_AS(rate_record(traces, "a", 9), Error);

    std::vector<BackendStats> rows = compute_stats(traces);
    REQUIRE(rows.size() == 2);
    const BackendStats& m1 = rows[0].backend == "scripted/m1" ? rows[0] : rows[1];
    const BackendStats& m2 = rows[0].backend == "scripted/m2" ? rows[0] : rows[1];
    CHECK(m1.records == 3);
    CHECK(m1.retained == 2);  // b rejected by its rating
    CHECK(m1.successes == 1);
    CHECK(m1.mean_turns == Catch::Approx(20.0 / 3.0));
    CHECK(m1.median_turns == Catch::Approx(6.0));
    CHECK(m1.mean_cost == Catch::Approx(0.3));
    CHECK(m1.median_cost == Catch::Approx(0.3));
    CHECK(m1.prompt_tokens == 2000);
    CHECK(m2.records == 1);
    CHECK(m2.retained == 1);

    // The rating landed in the file itself.
    std::string text = slurp(traces);
    CHECK(text.find("rejected_by_rating") != std::string::npos);
    CHECK(text.find("\"rating\":3") != std::string::npos);
}

TEST_CASE("batch fans out across workers and isolates faults") {
    TempDir tmp;
    fs::path out = tmp.path / "batch";

    nlohmann::json good = nlohmann::json::array({
        {{"text", "w"}, {"tool", "write_file"}, {"args", {{"content", kCleanBuild}}}},
        {{"text", "c"}, {"tool", "compile_model"}},
        {{"text", "done"}},
    });

    std::vector<BatchItem> items;
    items.push_back({"alpha", "build a widget", "", good, std::nullopt});
    items.push_back({"beta", "doomed", "", nlohmann::json::array(), std::nullopt});
    items.push_back({"gamma", "missing script", "/nonexistent/script.json", nlohmann::json(),
                     std::nullopt});

    HarnessConfig cfg;
    std::vector<BatchRecord> records = run_batch(items, cfg, 2, out);

    REQUIRE(records.size() == 3);
    CHECK(records[0].id == "alpha");
    CHECK(records[0].status == "success");
    CHECK(records[0].turns == 3);
    CHECK(records[1].id == "beta");
    CHECK(records[1].status == "backend_error");
    CHECK(records[2].id == "gamma");
    CHECK(records[2].status == "backend_error");

    CHECK(fs::exists(out / "alpha" / "widget.urdf"));
    CHECK_FALSE(fs::exists(out / "beta" / "widget.urdf"));

    std::string trace_lines = slurp(out / "traces.jsonl");
    CHECK(std::count(trace_lines.begin(), trace_lines.end(), '\n') == 3);
    std::string record_lines = slurp(out / "records.jsonl");
    CHECK(std::count(record_lines.begin(), record_lines.end(), '\n') == 3);

    // Each line parses and ids cover all items.
    std::ifstream in(out / "records.jsonl");
    std::string line;
    std::vector<std::string> ids;
    while (std::getline(in, line)) ids.push_back(nlohmann::json::parse(line)["id"]);
    CHECK(ids == std::vector<std::string>{"alpha", "beta", "gamma"});
}

TEST_CASE("examples index loads a directory corpus") {
    TempDir tmp;
    nlohmann::json doc{
        {"title", "Swing door on barrel hinges"},
        {"tags", {"door", "hinge"}},
        {"snippet", "joint(\"door_pivot\", type=\"revolute\")"},
        {"notes", "Door leaf swings on two barrel hinges."},
    };
    std::ofstream(tmp.path / "door.json") << doc.dump();
    nlohmann::json doc2{
        {"title", "Cart wheel"},
        {"tags", {"wheel"}},
        {"snippet", "wheel(radius=0.1, width=0.04)"},
        {"notes", "Plain spoked cart wheel."},
    };
    std::ofstream(tmp.path / "cart.json") << doc2.dump();

    ExampleIndex idx = ExampleIndex::load_directory(tmp.path);
    CHECK(idx.size() == 2);
    auto hits = idx.search("hinge door", 2);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].entry->id == "door");
    CHECK_FALSE(hits[0].weak);
    CHECK(hits[1].weak);

    CHECK_THROWS_AS(ExampleIndex::load_directory(tmp.path / "absent"), Error);
    std::ofstream(tmp.path / "broken.json") << "{not json";
    CHECK_THROWS_AS(ExampleIndex::load_directory(tmp.path), Error);
}
