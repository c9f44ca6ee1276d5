#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include <articraft/backend.hpp>
#include <articraft/compile.hpp>
#include <articraft/digest.hpp>
#include <articraft/docs.hpp>
#include <articraft/error.hpp>
#include <articraft/examples_index.hpp>
#include <articraft/urdf.hpp>
#include <articraft/validation.hpp>

// The agent-computer interface: a restricted workspace with one writable
// file, a closed seven-tool action space, the session update loop, history
// compaction, and trace logging. The LLM sits behind AgentBackend; every
// workspace effect flows through dispatch_tool.

namespace articraft {

struct HarnessConfig {
    std::string backend = "scripted";  // "scripted" | "http"
    std::string script_path;           // scripted backend source
    std::string backend_url;           // http endpoint (or env)

    int max_turns = 40;
    int tessellation = 64;

    // Compaction policy: hard trigger on context pressure, soft trigger on a
    // repair plateau. Pressure is the last reported prompt-token usage.
    long token_threshold = 280000;
    double hard_fraction = 0.9;
    int soft_failure_streak = 3;
    double soft_pressure_fraction = 0.5;
    int tail_keep = 6;        // raw records always preserved at the end
    int min_compactable = 4;  // smallest middle worth summarizing

    std::filesystem::path out_dir;  // artifact directory; empty disables export

    double prompt_token_price = 0.0;  // currency per token, for cost stats
    double output_token_price = 0.0;
};

struct ToolResult {
    bool ok = true;
    std::string text;
    std::string error_code;  // set when !ok
};

struct TurnRecord {
    std::string assistant_text;
    std::optional<ToolCall> call;
    ToolResult result;  // tool payload, or the refusal notice for early finishes
    long prompt_tokens = 0;
    long output_tokens = 0;
    bool is_summary = false;
};

// The restricted workspace: one writable program file plus the read-only
// document tree. mutation_count() audits the state-update law — the program
// text changes only through successful edit-tool dispatches.
class Workspace {
  public:
    explicit Workspace(std::string initial_program, ExampleIndex examples = {})
        : model_text_(std::move(initial_program)), examples_(std::move(examples)) {}

    const std::string& model_text() const { return model_text_; }
    int mutation_count() const { return mutation_count_; }
    const ExampleIndex& examples() const { return examples_; }

    std::shared_ptr<const CompiledAsset> asset() const { return asset_; }
    const std::string& last_signals() const { return last_signals_; }
    const std::optional<ExportManifest>& last_export() const { return last_export_; }

    static const std::string* find_document(const std::string& path) {
        for (const auto& [doc_path, text] : docs::reference_tree())
            if (doc_path == path) return &text;
        return nullptr;
    }

  private:
    friend ToolResult dispatch_tool(Workspace&, struct SessionState&, const ToolCall&,
                                    const HarnessConfig&);

    void set_model_text(std::string text) {
        model_text_ = std::move(text);
        ++mutation_count_;
    }

    struct CachedCompile {
        std::shared_ptr<CompiledAsset> asset;
        CompileReport report;
    };

    std::string model_text_;
    ExampleIndex examples_;
    std::shared_ptr<CompiledAsset> asset_;  // a_t: last successfully built geometry
    std::string last_signals_;              // s_t
    std::optional<ExportManifest> last_export_;
    std::map<std::string, CachedCompile> compile_cache_;  // program digest -> outcome
    int mutation_count_ = 0;
};

struct SessionState {
    std::string system_prompt;  // p
    std::string doc_message;    // user message 1: workspace documentation packet
    std::string task_message;   // user message 2: runtime guidance + object prompt
    std::string prompt;         // x, the raw object prompt

    std::vector<TurnRecord> history;  // h_t
    int turn = 0;
    int failure_streak = 0;  // consecutive failing compiles
    bool has_compiled = false;
    bool last_compile_success = false;
    std::vector<std::string> last_failure_codes;

    long last_prompt_tokens = 0;  // most recent usage report, drives compaction
    long total_prompt_tokens = 0;
    long total_output_tokens = 0;
    int compactions = 0;
};

inline constexpr const char* kToolNames[] = {
    "read_file", "apply_patch", "replace", "write_file",
    "find_examples", "compile_model", "probe_model",
};

inline nlohmann::json tool_schemas() {
    return nlohmann::json::array({
        {{"name", "read_file"},
         {"description", "Read exact text of model.apl or a docs/ reference path."},
         {"args", {{"path", "string"}}}},
        {{"name", "apply_patch"},
         {"description",
          "Apply context-hunk patch text to model.apl. Hunks start at '@@' lines; body lines "
          "are prefixed ' ' (context), '-' (delete), '+' (insert). The context+deletion text "
          "must occur exactly once."},
         {"args", {{"patch", "string"}}}},
        {{"name", "replace"},
         {"description",
          "Replace an exact literal string in model.apl, failing unless the occurrence count "
          "matches expected_count (default 1)."},
         {"args", {{"old", "string"}, {"new", "string"}, {"expected_count", "integer"}}}},
        {{"name", "write_file"},
         {"description", "Overwrite model.apl with new content."},
         {"args", {{"content", "string"}}}},
        {{"name", "find_examples"},
         {"description", "Search curated examples; returns ranked entries with snippets."},
         {"args", {{"query", "string"}, {"k", "integer"}}}},
        {{"name", "compile_model"},
         {"description",
          "Compile the current program, run QC and authored tests, export URDF on a clean "
          "result, and return the compile_signals block."},
         {"args", nlohmann::json::object()}},
        {{"name", "probe_model"},
         {"description", "Run a read-only query expression against the compiled asset."},
         {"args", {{"query", "string"}}}},
    });
}

namespace detail {

struct PatchHunk {
    std::vector<std::string> needle;       // context + deleted lines
    std::vector<std::string> replacement;  // context + inserted lines
};

inline std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) {
            out.push_back(text.substr(pos));
            break;
        }
        out.push_back(text.substr(pos, end - pos));
        pos = end + 1;
    }
    return out;
}

inline std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) out += '\n';
        out += lines[i];
    }
    return out;
}

inline std::vector<PatchHunk> parse_patch(const std::string& patch) {
    std::vector<PatchHunk> hunks;
    PatchHunk* current = nullptr;
    for (const std::string& line : split_lines(patch)) {
        if (line.rfind("@@", 0) == 0) {
            hunks.emplace_back();
            current = &hunks.back();
            continue;
        }
        if (!current) {
            if (line.empty()) continue;  // leading blank lines are tolerated
            throw Error("invalid_params", "patch text must start with an '@@' hunk line");
        }
        if (line.empty() || line[0] == ' ') {
            std::string body = line.empty() ? std::string{} : line.substr(1);
            current->needle.push_back(body);
            current->replacement.push_back(body);
        } else if (line[0] == '-') {
            current->needle.push_back(line.substr(1));
        } else if (line[0] == '+') {
            current->replacement.push_back(line.substr(1));
        } else {
            throw Error("invalid_params",
                        "patch body lines must start with ' ', '-', or '+': '" + line + "'");
        }
    }
    if (hunks.empty()) throw Error("invalid_params", "patch text contains no hunks");
    return hunks;
}

inline std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    if (needle.empty()) return 0;
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

// Applies every hunk to a copy; the caller commits only on full success.
inline std::string apply_patch_text(const std::string& original, const std::string& patch) {
    std::string working = original;
    for (const PatchHunk& hunk : parse_patch(patch)) {
        if (hunk.needle.empty())
            throw Error("patch_context_not_found",
                        "hunk has no context or deletion lines to anchor on");
        std::string needle = join_lines(hunk.needle);
        std::size_t n = count_occurrences(working, needle);
        if (n == 0)
            throw Error("patch_context_not_found",
                        "hunk context not found in model.apl:\n" + needle);
        if (n > 1)
            throw Error("patch_ambiguous", "hunk context appears " + std::to_string(n) +
                                               " times in model.apl; add surrounding lines");
        std::size_t at = working.find(needle);
        working = working.substr(0, at) + join_lines(hunk.replacement) +
                  working.substr(at + needle.size());
    }
    return working;
}

inline std::string require_string_arg(const ToolCall& call, const char* key) {
    if (!call.args.contains(key) || !call.args.at(key).is_string())
        throw Error("invalid_params",
                    call.tool + " requires a string argument '" + std::string(key) + "'");
    return call.args.at(key).get<std::string>();
}

inline std::string first_line(const std::string& text) {
    std::size_t end = text.find('\n');
    return end == std::string::npos ? text : text.substr(0, end);
}

inline std::string clip(const std::string& text, std::size_t limit) {
    if (text.size() <= limit) return text;
    return text.substr(0, limit) + "...";
}

}  // namespace detail

inline ToolResult dispatch_tool(Workspace& ws, SessionState& state, const ToolCall& call,
                                const HarnessConfig& config) {
    auto fail = [](const std::string& code, const std::string& message) {
        return ToolResult{false, "[" + code + "] " + message, code};
    };

    bool known = false;
    for (const char* name : kToolNames) known = known || call.tool == name;
    if (!known) return fail("unknown_tool", "'" + call.tool + "' is not an available tool");

    try {
        if (call.tool == "read_file") {
            std::string path = detail::require_string_arg(call, "path");
            if (path == docs::kModelFile) return {true, ws.model_text(), {}};
            if (const std::string* doc = Workspace::find_document(path)) return {true, *doc, {}};
            return fail("unknown_path", "'" + path + "' is not in the workspace");
        }

        if (call.tool == "apply_patch") {
            std::string patch = detail::require_string_arg(call, "patch");
            ws.set_model_text(detail::apply_patch_text(ws.model_text(), patch));
            return {true, "patch applied", {}};
        }

        if (call.tool == "replace") {
            std::string old_text = detail::require_string_arg(call, "old");
            std::string new_text = detail::require_string_arg(call, "new");
            long expected = 1;
            if (call.args.contains("expected_count"))
                expected = call.args.at("expected_count").get<long>();
            if (old_text.empty())
                return fail("invalid_params", "replace requires a non-empty 'old' string");
            std::size_t n = detail::count_occurrences(ws.model_text(), old_text);
            if (static_cast<long>(n) != expected)
                return fail("replace_count_mismatch",
                            "found " + std::to_string(n) + " occurrence(s), expected " +
                                std::to_string(expected) + "; file unchanged");
            std::string working = ws.model_text();
            std::size_t pos = 0;
            while ((pos = working.find(old_text, pos)) != std::string::npos) {
                working = working.substr(0, pos) + new_text + working.substr(pos + old_text.size());
                pos += new_text.size();
            }
            ws.set_model_text(std::move(working));
            return {true, "replaced " + std::to_string(n) + " occurrence(s)", {}};
        }

        if (call.tool == "write_file") {
            if (call.args.contains("path") &&
                call.args.at("path").get<std::string>() != docs::kModelFile)
                return fail("unknown_path", "only '" + std::string(docs::kModelFile) +
                                                "' is writable");
            std::string content = detail::require_string_arg(call, "content");
            ws.set_model_text(std::move(content));
            return {true, "model.apl written", {}};
        }

        if (call.tool == "find_examples") {
            std::string query = detail::require_string_arg(call, "query");
            int k = 5;
            if (call.args.contains("k")) k = call.args.at("k").get<int>();
            return {true, ws.examples().render(query, k), {}};
        }

        if (call.tool == "compile_model") {
            std::string digest = content_digest(ws.model_text());
            auto it = ws.compile_cache_.find(digest);
            if (it == ws.compile_cache_.end()) {
                CompileOptions opts;
                opts.tessellation = config.tessellation;
                CompileOutcome outcome = compile_source(ws.model_text(), opts);
                it = ws.compile_cache_
                         .emplace(digest,
                                  Workspace::CachedCompile{outcome.asset, outcome.report})
                         .first;
            }
            const CompileReport& report = it->second.report;
            bool ok = report.success();

            std::vector<std::string> codes;
            for (const Finding& f : report.findings)
                if (f.severity == Severity::Failure) codes.push_back(f.code);
            std::sort(codes.begin(), codes.end());

            LoopState loop;
            loop.consecutive_failures = ok ? 0 : state.failure_streak + 1;
            loop.codes_unchanged = !ok && state.has_compiled && !state.last_compile_success &&
                                   codes == state.last_failure_codes;

            state.has_compiled = true;
            state.last_compile_success = ok;
            state.failure_streak = loop.consecutive_failures;
            state.last_failure_codes = codes;
            if (it->second.asset) ws.asset_ = it->second.asset;

            std::string text = render_compile_signals(report, loop);
            if (ok && it->second.asset && !config.out_dir.empty()) {
                try {
                    ExportOptions eo;
                    eo.tessellation = config.tessellation;
                    ws.last_export_ = export_urdf(it->second.asset->object, config.out_dir, eo);
                } catch (const Error& e) {
                    text += "\n[" + e.code() + "] export failed: " + e.what();
                }
            }
            ws.last_signals_ = text;
            return {true, text, {}};
        }

        // probe_model
        std::string query = detail::require_string_arg(call, "query");
        if (!ws.asset_)
            return fail("no_compiled_asset",
                        "probe_model needs a compiled asset; run compile_model first");
        ProbeResult probe = probe_asset(*ws.asset_, query);
        if (!probe.ok) return {false, probe.text, probe.error_code};
        return {true, probe.text, {}};
    } catch (const Error& e) {
        return fail(e.code(), e.what());
    } catch (const apl::EvalError& e) {
        return fail(e.code, e.message);
    }
}

inline void validate_config(const HarnessConfig& config) {
    if (config.backend != "scripted" && config.backend != "http")
        throw Error("invalid_config", "unknown backend '" + config.backend + "'");
    if (config.max_turns < 1) throw Error("invalid_config", "max_turns must be at least 1");
    if (config.token_threshold <= 0)
        throw Error("invalid_config", "token_threshold must be positive");
    if (config.tail_keep < 0 || config.min_compactable < 1)
        throw Error("invalid_config", "compaction policy values out of range");
}

inline std::pair<Workspace, SessionState> open_workspace(
    const std::string& prompt, const std::optional<std::string>& initial_program,
    const HarnessConfig& config, ExampleIndex examples = {}) {
    validate_config(config);
    Workspace ws(initial_program.value_or(docs::kSeedProgram), std::move(examples));
    SessionState state;
    state.prompt = prompt;
    state.system_prompt = docs::system_prompt();
    state.doc_message = docs::documentation_packet();
    state.task_message = std::string(docs::kRuntimeTaskGuidance) + "\n" + prompt;
    return {std::move(ws), std::move(state)};
}

inline BackendRequest build_request(const SessionState& state) {
    BackendRequest req;
    req.system = state.system_prompt;
    req.tools = tool_schemas();
    req.messages.push_back({{"role", "user"}, {"content", state.doc_message}});
    req.messages.push_back({{"role", "user"}, {"content", state.task_message}});
    for (const TurnRecord& rec : state.history) {
        if (rec.is_summary) {
            req.messages.push_back({{"role", "user"}, {"content", rec.result.text}});
            continue;
        }
        nlohmann::json assistant{{"role", "assistant"}, {"content", rec.assistant_text}};
        if (rec.call) assistant["tool"] = {{"name", rec.call->tool}, {"args", rec.call->args}};
        req.messages.push_back(std::move(assistant));
        if (rec.call) {
            req.messages.push_back(
                {{"role", "tool"}, {"content", rec.result.text}, {"ok", rec.result.ok}});
        } else if (!rec.result.text.empty()) {
            req.messages.push_back({{"role", "user"}, {"content", rec.result.text}});
        }
    }
    return req;
}

// Deterministic extractive fallback when the backend cannot summarize:
// task requirements, compile state, per-record findings, and next steps.
inline std::string extractive_summary(const SessionState& state,
                                      const std::vector<TurnRecord>& middle) {
    std::string compile_state = "no compile observed in the compacted span";
    for (const TurnRecord& rec : middle) {
        if (rec.call && rec.call->tool == "compile_model") {
            auto counts = parse_compile_summary(rec.result.text);
            if (counts)
                compile_state = "status=" + counts->status +
                                " failures=" + std::to_string(counts->failures) +
                                " warnings=" + std::to_string(counts->warnings) +
                                " notes=" + std::to_string(counts->notes);
        }
    }
    std::string out = "[compacted history: " + std::to_string(middle.size()) +
                      " earlier records]\n";
    out += "Task: " + detail::clip(state.prompt, 240) + "\n";
    out += "Constraints: one writable file (model.apl); compile must reach status=success "
           "with zero failures before concluding.\n";
    out += "Last compile in span: " + compile_state + "\n";
    out += "Earlier actions:\n";
    for (const TurnRecord& rec : middle) {
        std::string line = rec.call ? rec.call->tool : std::string("(message)");
        std::string result_head = detail::first_line(rec.result.text);
        if (rec.call && rec.call->tool == "compile_model") {
            auto counts = parse_compile_summary(rec.result.text);
            if (counts)
                result_head = "status=" + counts->status +
                              " failures=" + std::to_string(counts->failures);
        }
        out += "- " + line;
        if (!result_head.empty()) out += ": " + detail::clip(result_head, 120);
        out += "\n";
    }
    out += "Next: keep editing model.apl toward a clean compile_model run, then conclude.";
    return out;
}

inline void compact_history(SessionState& state, const HarnessConfig& config,
                            AgentBackend* backend = nullptr) {
    std::size_t tail = static_cast<std::size_t>(config.tail_keep);
    if (state.history.size() < tail + static_cast<std::size_t>(config.min_compactable))
        throw Error("nothing_to_compact",
                    "history holds " + std::to_string(state.history.size()) +
                        " records; need at least " +
                        std::to_string(tail + static_cast<std::size_t>(config.min_compactable)));
    std::size_t middle_count = state.history.size() - tail;
    std::vector<TurnRecord> middle(state.history.begin(),
                                   state.history.begin() + static_cast<long>(middle_count));

    std::string summary;
    if (backend) {
        std::string rendered;
        for (const TurnRecord& rec : middle) {
            rendered += rec.assistant_text + "\n";
            if (rec.call) rendered += rec.call->tool + " -> " + rec.result.text + "\n";
        }
        if (auto provided = backend->summarize(rendered)) summary = *provided;
    }
    if (summary.empty()) summary = extractive_summary(state, middle);

    TurnRecord record;
    record.is_summary = true;
    record.result.ok = true;
    record.result.text = summary;

    std::vector<TurnRecord> compacted;
    compacted.reserve(tail + 1);
    compacted.push_back(std::move(record));
    for (std::size_t i = middle_count; i < state.history.size(); ++i)
        compacted.push_back(std::move(state.history[i]));
    state.history = std::move(compacted);
    ++state.compactions;
}

inline bool compaction_due(const SessionState& state, const HarnessConfig& config) {
    if (state.history.size() <
        static_cast<std::size_t>(config.tail_keep + config.min_compactable))
        return false;
    double pressure = static_cast<double>(state.last_prompt_tokens);
    bool hard = pressure >= config.hard_fraction * static_cast<double>(config.token_threshold);
    bool soft = state.failure_streak >= config.soft_failure_streak &&
                pressure >= config.soft_pressure_fraction *
                                static_cast<double>(config.token_threshold);
    return hard || soft;
}

inline constexpr const char* kTerminationRefusal =
    "The session cannot conclude yet: the last compile was not a clean success. Run "
    "compile_model and resolve any failures before finishing.";

struct SessionOutcome {
    std::string status;  // success | exhausted | backend_error
    std::string final_program;
    std::shared_ptr<const CompiledAsset> asset;
    nlohmann::json trace;
    int turns = 0;
    long prompt_tokens = 0;
    long output_tokens = 0;
    double cost = 0.0;
    std::string backend_error;  // transport detail when status == backend_error
};

namespace detail {

inline nlohmann::json trace_record(const std::string& id, const Workspace& ws,
                                   const SessionState& state, const HarnessConfig& config,
                                   const AgentBackend& backend, const std::string& status,
                                   const std::string& initial_program, double cost) {
    nlohmann::json records = nlohmann::json::array();
    for (const TurnRecord& rec : state.history) {
        nlohmann::json row{
            {"assistant", rec.assistant_text},
            {"ok", rec.result.ok},
            {"result", rec.result.text},
            {"prompt_tokens", rec.prompt_tokens},
            {"output_tokens", rec.output_tokens},
            {"summary", rec.is_summary},
        };
        if (rec.call) {
            row["tool"] = rec.call->tool;
            row["args"] = rec.call->args;
        }
        records.push_back(std::move(row));
    }

    nlohmann::json artifacts{{"dir", config.out_dir.string()}};
    if (ws.last_export()) {
        artifacts["urdf"] = ws.last_export()->urdf_path;
        nlohmann::json meshes = nlohmann::json::array();
        for (const MeshFileEntry& m : ws.last_export()->mesh_files)
            meshes.push_back({{"filename", m.filename}, {"digest", m.digest}});
        artifacts["mesh_files"] = std::move(meshes);
    }

    return nlohmann::json{
        {"schema", "articraft.trace.v1"},
        {"id", id},
        {"prompt", state.prompt},
        {"prompt_hash", content_digest(state.prompt)},
        {"system_prompt", state.system_prompt},
        {"system_hash", content_digest(state.system_prompt)},
        {"backend", {{"provider", backend.provider()}, {"model", backend.model()}}},
        {"initial_program", initial_program},
        {"final_program", ws.model_text()},
        {"final_program_hash", content_digest(ws.model_text())},
        {"status", status},
        {"turns", state.turn},
        {"compactions", state.compactions},
        {"usage",
         {{"prompt_tokens", state.total_prompt_tokens},
          {"output_tokens", state.total_output_tokens},
          {"cost", cost}}},
        {"records", std::move(records)},
        {"artifacts", std::move(artifacts)},
        {"rating", nullptr},
    };
}

}  // namespace detail

inline SessionOutcome run_session(const std::string& id, const std::string& prompt,
                                  const std::optional<std::string>& initial_program,
                                  const HarnessConfig& config, AgentBackend& backend,
                                  ExampleIndex examples = {}) {
    auto [ws, state] = open_workspace(prompt, initial_program, config, std::move(examples));
    std::string seeded = ws.model_text();

    std::string status;
    std::string backend_error;
    while (state.turn < config.max_turns) {
        BackendRequest request = build_request(state);
        BackendStep step;
        try {
            step = backend.next_step(request);
        } catch (const std::exception& e) {
            status = "backend_error";
            backend_error = e.what();
            break;
        }
        ++state.turn;
        state.last_prompt_tokens = step.prompt_tokens;
        state.total_prompt_tokens += step.prompt_tokens;
        state.total_output_tokens += step.output_tokens;

        TurnRecord record;
        record.assistant_text = step.text;
        record.prompt_tokens = step.prompt_tokens;
        record.output_tokens = step.output_tokens;

        if (step.call) {
            record.call = step.call;
            record.result = dispatch_tool(ws, state, *step.call, config);
            state.history.push_back(std::move(record));
        } else if (state.has_compiled && state.last_compile_success) {
            state.history.push_back(std::move(record));
            status = "success";
            break;
        } else {
            // Termination needs BOTH no-tool-call and a clean last compile.
            record.result = {false, kTerminationRefusal, "not_clean"};
            state.history.push_back(std::move(record));
        }

        if (compaction_due(state, config)) compact_history(state, config, &backend);
    }
    if (status.empty()) status = "exhausted";

    SessionOutcome outcome;
    outcome.status = status;
    outcome.final_program = ws.model_text();
    outcome.asset = ws.asset();
    outcome.turns = state.turn;
    outcome.prompt_tokens = state.total_prompt_tokens;
    outcome.output_tokens = state.total_output_tokens;
    outcome.cost = static_cast<double>(state.total_prompt_tokens) * config.prompt_token_price +
                   static_cast<double>(state.total_output_tokens) * config.output_token_price;
    outcome.backend_error = backend_error;
    outcome.trace =
        detail::trace_record(id, ws, state, config, backend, status, seeded, outcome.cost);
    if (!backend_error.empty()) outcome.trace["backend_error"] = backend_error;
    return outcome;
}

// Re-drives the recorded tool calls against a fresh workspace and checks the
// final program hash. Read-only tools replay too (they cannot change the
// outcome, but verify the calls are dispatchable).
struct ReplayResult {
    std::string final_hash;
    bool matches = false;
};

inline ReplayResult replay_trace(const nlohmann::json& trace, const HarnessConfig& config = {},
                                 ExampleIndex examples = {}) {
    Workspace ws(trace.at("initial_program").get<std::string>(), std::move(examples));
    SessionState state;
    state.prompt = trace.value("prompt", std::string{});
    for (const auto& row : trace.at("records")) {
        if (!row.contains("tool")) continue;
        ToolCall call;
        call.tool = row.at("tool").get<std::string>();
        call.args = row.value("args", nlohmann::json::object());
        if (call.tool == "find_examples" && ws.examples().size() == 0) continue;
        dispatch_tool(ws, state, call, config);
    }
    ReplayResult result;
    result.final_hash = content_digest(ws.model_text());
    result.matches = result.final_hash == trace.at("final_program_hash").get<std::string>();
    return result;
}

// Append-only sink shared by concurrent sessions.
class TraceSink {
  public:
    explicit TraceSink(std::filesystem::path path) : path_(std::move(path)) {}

    void append(const nlohmann::json& record) {
        std::lock_guard<std::mutex> lock(mutex_);
        std::ofstream out(path_, std::ios::app);
        if (!out) throw Error("io_error", "cannot append to '" + path_.string() + "'");
        out << record.dump() << '\n';
    }

    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
    std::mutex mutex_;
};

struct BatchItem {
    std::string id;
    std::string prompt;
    std::string script_path;           // per-item scripted backend
    nlohmann::json script;             // inline steps override script_path
    std::optional<std::string> seed;   // initial program
};

struct BatchRecord {
    std::string id;
    std::string prompt;
    std::string status;  // success | exhausted | backend_error | rejected_by_rating
    int turns = 0;
    long prompt_tokens = 0;
    long output_tokens = 0;
    double cost = 0.0;
    std::string artifact_dir;
    std::optional<int> rating;

    nlohmann::json to_json() const {
        nlohmann::json doc{
            {"id", id},
            {"prompt", prompt},
            {"status", status},
            {"turns", turns},
            {"usage",
             {{"prompt_tokens", prompt_tokens}, {"output_tokens", output_tokens}, {"cost", cost}}},
            {"artifact_dir", artifact_dir},
        };
        doc["rating"] = rating ? nlohmann::json(*rating) : nlohmann::json(nullptr);
        return doc;
    }
};

// Fans prompts across worker threads. Worker faults (bad script file,
// unexpected exceptions) land in that item's record as backend_error and
// never disturb the other records.
inline std::vector<BatchRecord> run_batch(const std::vector<BatchItem>& items,
                                          const HarnessConfig& base_config, int workers,
                                          const std::filesystem::path& out_dir,
                                          const ExampleIndex& examples = {}) {
    std::filesystem::create_directories(out_dir);
    TraceSink sink(out_dir / "traces.jsonl");
    std::vector<BatchRecord> records(items.size());
    std::atomic<std::size_t> next{0};

    auto work = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= items.size()) return;
            const BatchItem& item = items[i];
            BatchRecord& record = records[i];
            record.id = item.id;
            record.prompt = item.prompt;
            HarnessConfig config = base_config;
            config.out_dir = out_dir / item.id;
            record.artifact_dir = config.out_dir.string();
            try {
                std::unique_ptr<AgentBackend> backend;
                if (!item.script.is_null())
                    backend = std::make_unique<ScriptedBackend>(item.script, item.id);
                else if (!item.script_path.empty())
                    backend = ScriptedBackend::from_file(item.script_path);
                else if (!config.script_path.empty())
                    backend = ScriptedBackend::from_file(config.script_path);
                else
                    throw Error("invalid_config", "batch item '" + item.id + "' has no script");
                SessionOutcome outcome =
                    run_session(item.id, item.prompt, item.seed, config, *backend, examples);
                record.status = outcome.status;
                record.turns = outcome.turns;
                record.prompt_tokens = outcome.prompt_tokens;
                record.output_tokens = outcome.output_tokens;
                record.cost = outcome.cost;
                std::filesystem::create_directories(config.out_dir);
                std::ofstream program(config.out_dir / "model.apl", std::ios::binary);
                program << outcome.final_program;
                sink.append(outcome.trace);
            } catch (const std::exception& e) {
                record.status = "backend_error";
                nlohmann::json stub{
                    {"schema", "articraft.trace.v1"}, {"id", item.id},
                    {"prompt", item.prompt},          {"prompt_hash", content_digest(item.prompt)},
                    {"status", "backend_error"},      {"backend_error", e.what()},
                    {"turns", 0},
                    {"usage", {{"prompt_tokens", 0}, {"output_tokens", 0}, {"cost", 0.0}}},
                    {"rating", nullptr},
                };
                sink.append(stub);
            }
        }
    };

    int n = std::max(1, workers);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();

    std::ofstream recs(out_dir / "records.jsonl");
    for (const BatchRecord& r : records) recs << r.to_json().dump() << '\n';
    return records;
}

// Post-hoc curator rating: attaches the score to the matching record in a
// JSONL file (traces or batch records) and applies the retention rule --
// successful records scoring below 4 become rejected_by_rating.
inline bool rate_record(const std::filesystem::path& path, const std::string& id, int score) {
    if (score < 1 || score > 5) throw Error("invalid_params", "score must be between 1 and 5");
    std::ifstream in(path);
    if (!in) throw Error("io_error", "cannot open '" + path.string() + "'");
    std::vector<nlohmann::json> lines;
    std::string line;
    bool found = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json doc = nlohmann::json::parse(line);
        if (doc.value("id", std::string{}) == id) {
            found = true;
            doc["rating"] = score;
            if (score < 4 && doc.value("status", std::string{}) == "success")
                doc["status"] = "rejected_by_rating";
        }
        lines.push_back(std::move(doc));
    }
    in.close();
    if (!found) return false;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("io_error", "cannot rewrite '" + path.string() + "'");
    for (const nlohmann::json& doc : lines) out << doc.dump() << '\n';
    return true;
}

struct BackendStats {
    std::string backend;  // provider/model
    int records = 0;
    int retained = 0;  // not rejected by rating
    int successes = 0;
    double mean_turns = 0.0;
    double median_turns = 0.0;
    double mean_cost = 0.0;
    double median_cost = 0.0;
    long prompt_tokens = 0;
    long output_tokens = 0;
};

inline std::vector<BackendStats> compute_stats(const std::filesystem::path& traces_path) {
    std::ifstream in(traces_path);
    if (!in) throw Error("io_error", "cannot open '" + traces_path.string() + "'");
    struct Bucket {
        std::vector<double> turns;
        std::vector<double> costs;
        BackendStats row;
    };
    std::map<std::string, Bucket> buckets;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json doc = nlohmann::json::parse(line);
        std::string backend = "unknown";
        if (doc.contains("backend"))
            backend = doc["backend"].value("provider", "unknown") + "/" +
                      doc["backend"].value("model", "unknown");
        Bucket& b = buckets[backend];
        b.row.backend = backend;
        b.row.records += 1;
        std::string status = doc.value("status", std::string{});
        if (status == "success") b.row.successes += 1;
        if (status != "rejected_by_rating") b.row.retained += 1;
        double turns = doc.value("turns", 0);
        b.turns.push_back(turns);
        double cost = 0.0;
        long pt = 0, ot = 0;
        if (doc.contains("usage")) {
            cost = doc["usage"].value("cost", 0.0);
            pt = doc["usage"].value("prompt_tokens", 0L);
            ot = doc["usage"].value("output_tokens", 0L);
        }
        b.costs.push_back(cost);
        b.row.prompt_tokens += pt;
        b.row.output_tokens += ot;
    }

    auto median = [](std::vector<double> v) {
        if (v.empty()) return 0.0;
        std::sort(v.begin(), v.end());
        std::size_t mid = v.size() / 2;
        return v.size() % 2 ? v[mid] : (v[mid - 1] + v[mid]) / 2.0;
    };
    std::vector<BackendStats> rows;
    for (auto& [key, b] : buckets) {
        double turn_sum = 0.0, cost_sum = 0.0;
        for (double t : b.turns) turn_sum += t;
        for (double c : b.costs) cost_sum += c;
        b.row.mean_turns = b.turns.empty() ? 0.0 : turn_sum / static_cast<double>(b.turns.size());
        b.row.median_turns = median(b.turns);
        b.row.mean_cost = b.costs.empty() ? 0.0 : cost_sum / static_cast<double>(b.costs.size());
        b.row.median_cost = median(b.costs);
        rows.push_back(b.row);
    }
    return rows;
}

}  // namespace articraft
