// articraft: one binary covering compile/validate/export/probe for single
// programs plus run/batch/stats/rate for agent sessions.
//
// Exit codes: 0 success, 1 compile or session failure, 2 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <articraft/harness.hpp>
#include <articraft/http_backend.hpp>

namespace {

using namespace articraft;

constexpr int kExitSuccess = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::string slurp_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io_error", "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool is_usage_error(const std::string& code) {
    return code == "io_error" || code == "invalid_config" || code == "invalid_params";
}

struct CompileArgs {
    std::string file;
    std::string out_dir;
    int tessellation = 64;
};

int cmd_compile(const CompileArgs& args, bool allow_export) {
    std::string source = slurp_file(args.file);
    CompileOptions opts;
    opts.tessellation = args.tessellation;
    CompileOutcome outcome = compile_source(source, opts);
    std::cout << render_compile_signals(outcome.report) << "\n";
    if (!outcome.report.success()) return kExitFailure;
    if (allow_export && !args.out_dir.empty() && outcome.asset) {
        ExportOptions eo;
        eo.tessellation = args.tessellation;
        ExportManifest manifest = export_urdf(outcome.asset->object, args.out_dir, eo);
        std::cout << "exported: " << manifest.urdf_path << "\n";
    }
    return kExitSuccess;
}

struct ProbeArgs {
    std::string file;
    std::string query;
    int tessellation = 64;
};

int cmd_probe(const ProbeArgs& args) {
    std::string source = slurp_file(args.file);
    CompileOptions opts;
    opts.tessellation = args.tessellation;
    CompileOutcome outcome = compile_source(source, opts);
    if (!outcome.asset) {
        // Nothing compiled far enough to probe; surface the compile story.
        std::cout << render_compile_signals(outcome.report) << "\n";
        return kExitFailure;
    }
    ProbeResult probe = probe_asset(*outcome.asset, args.query);
    std::cout << probe.text;
    if (!probe.text.empty() && probe.text.back() != '\n') std::cout << "\n";
    return probe.ok ? kExitSuccess : kExitFailure;
}

struct RunArgs {
    std::string prompt;
    std::string backend = "scripted";
    std::string script;
    std::string endpoint;
    std::string out_dir;
    std::string examples_dir;
    std::string id = "session";
    int max_turns = 40;
    int tessellation = 64;
};

std::unique_ptr<AgentBackend> make_backend(const std::string& name, const std::string& script,
                                           const std::string& endpoint) {
    if (name == "scripted") {
        if (script.empty())
            throw Error("invalid_config", "the scripted backend requires --script FILE");
        return ScriptedBackend::from_file(script);
    }
    if (name == "http") return std::make_unique<HttpBackend>(endpoint);
    throw Error("invalid_config", "unknown backend '" + name + "'");
}

int cmd_run(const RunArgs& args) {
    HarnessConfig cfg;
    cfg.backend = args.backend;
    cfg.script_path = args.script;
    cfg.backend_url = args.endpoint;
    cfg.max_turns = args.max_turns;
    cfg.tessellation = args.tessellation;
    cfg.out_dir = args.out_dir;

    ExampleIndex examples;
    if (!args.examples_dir.empty()) examples = ExampleIndex::load_directory(args.examples_dir);

    std::unique_ptr<AgentBackend> backend =
        make_backend(args.backend, args.script, args.endpoint);
    SessionOutcome outcome =
        run_session(args.id, args.prompt, std::nullopt, cfg, *backend, std::move(examples));

    std::filesystem::create_directories(cfg.out_dir);
    std::filesystem::path trace_path = cfg.out_dir / "trace.json";
    {
        std::ofstream trace(trace_path, std::ios::binary);
        trace << outcome.trace.dump(2) << "\n";
    }
    {
        std::ofstream program(cfg.out_dir / "model.apl", std::ios::binary);
        program << outcome.final_program;
    }

    std::cout << "status: " << outcome.status << "\n";
    std::cout << "turns: " << outcome.turns << "\n";
    std::cout << "prompt_tokens: " << outcome.prompt_tokens << "\n";
    std::cout << "output_tokens: " << outcome.output_tokens << "\n";
    std::cout << "trace: " << trace_path.string() << "\n";
    if (!outcome.backend_error.empty())
        std::cout << "backend_error: " << outcome.backend_error << "\n";
    return outcome.status == "success" ? kExitSuccess : kExitFailure;
}

struct BatchArgs {
    std::string prompts_file;
    std::string script;
    std::string out_dir;
    std::string examples_dir;
    int workers = 4;
    int max_turns = 40;
    int tessellation = 64;
};

// Prompt files accept either plain prompts (one per line, sharing --script)
// or JSON records {"id", "prompt", "script"|"steps", "seed"} per line.
std::vector<BatchItem> load_prompts(const std::string& path, const std::string& shared_script) {
    std::ifstream in(path);
    if (!in) throw Error("io_error", "cannot open prompts file '" + path + "'");
    std::vector<BatchItem> items;
    std::string line;
    int index = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        char tag[16];
        std::snprintf(tag, sizeof tag, "p%03d", index);
        ++index;
        BatchItem item;
        item.id = tag;
        if (line.front() == '{') {
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw Error("invalid_params",
                            "prompts line " + std::to_string(index) + ": " + e.what());
            }
            if (!doc.contains("prompt"))
                throw Error("invalid_params",
                            "prompts line " + std::to_string(index) + " has no \"prompt\"");
            item.id = doc.value("id", item.id);
            item.prompt = doc.at("prompt").get<std::string>();
            item.script_path = doc.value("script", shared_script);
            if (doc.contains("steps")) item.script = doc.at("steps");
            if (doc.contains("seed")) item.seed = doc.at("seed").get<std::string>();
        } else {
            item.prompt = line;
            item.script_path = shared_script;
        }
        items.push_back(std::move(item));
    }
    if (items.empty()) throw Error("invalid_params", "prompts file '" + path + "' is empty");
    return items;
}

int cmd_batch(const BatchArgs& args) {
    HarnessConfig cfg;
    cfg.script_path = args.script;
    cfg.max_turns = args.max_turns;
    cfg.tessellation = args.tessellation;

    ExampleIndex examples;
    if (!args.examples_dir.empty()) examples = ExampleIndex::load_directory(args.examples_dir);

    std::vector<BatchItem> items = load_prompts(args.prompts_file, args.script);
    std::vector<BatchRecord> records =
        run_batch(items, cfg, args.workers, args.out_dir, examples);

    int failures = 0;
    for (const BatchRecord& r : records) {
        if (r.status != "success") ++failures;
        std::printf("%-16s %-18s turns=%-3d cost=%.4f\n", r.id.c_str(), r.status.c_str(),
                    r.turns, r.cost);
    }
    std::printf("batch: %zu records, %d failed, records at %s\n", records.size(), failures,
                (std::filesystem::path(args.out_dir) / "records.jsonl").string().c_str());
    return kExitSuccess;  // per-record faults are recorded, not fatal
}

int cmd_stats(const std::string& traces) {
    std::vector<BackendStats> rows = compute_stats(traces);
    std::printf("%-24s %8s %8s %9s %11s %13s %10s %12s\n", "backend", "records", "retained",
                "successes", "mean_turns", "median_turns", "mean_cost", "median_cost");
    for (const BackendStats& r : rows)
        std::printf("%-24s %8d %8d %9d %11.2f %13.2f %10.4f %12.4f\n", r.backend.c_str(),
                    r.records, r.retained, r.successes, r.mean_turns, r.median_turns,
                    r.mean_cost, r.median_cost);
    return kExitSuccess;
}

int cmd_rate(const std::string& traces, const std::string& id, int score) {
    if (!rate_record(traces, id, score)) {
        std::cerr << "no record with id '" << id << "' in " << traces << "\n";
        return kExitFailure;
    }
    std::cout << "rated '" << id << "' score " << score
              << (score < 4 ? " (rejected)" : " (retained)") << "\n";
    return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"articraft: articulated 3D asset compiler and agent harness"};
    app.require_subcommand(1);

    CompileArgs compile_args;
    CLI::App* compile = app.add_subcommand("compile", "Compile a program and print signals");
    compile->add_option("file", compile_args.file, "APL program")->required();
    compile->add_option("--out", compile_args.out_dir, "Export URDF here on success");
    compile->add_option("--tessellation", compile_args.tessellation, "Mesh resolution");

    CompileArgs validate_args;
    CLI::App* validate = app.add_subcommand("validate", "Run QC and tests without export");
    validate->add_option("file", validate_args.file, "APL program")->required();
    validate->add_option("--tessellation", validate_args.tessellation, "Mesh resolution");

    CompileArgs export_args;
    CLI::App* exporter = app.add_subcommand("export", "Compile and export a URDF package");
    exporter->add_option("file", export_args.file, "APL program")->required();
    exporter->add_option("--out", export_args.out_dir, "Output directory")->required();
    exporter->add_option("--tessellation", export_args.tessellation, "Mesh resolution");

    ProbeArgs probe_args;
    CLI::App* probe = app.add_subcommand("probe", "Query a compiled program");
    probe->add_option("file", probe_args.file, "APL program")->required();
    probe->add_option("--query", probe_args.query, "Probe expression")->required();
    probe->add_option("--tessellation", probe_args.tessellation, "Mesh resolution");

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "Run one agent session");
    run->add_option("--prompt", run_args.prompt, "Object prompt")->required();
    run->add_option("--backend", run_args.backend, "scripted | http")->required();
    run->add_option("--script", run_args.script, "Scripted backend steps file");
    run->add_option("--endpoint", run_args.endpoint, "HTTP backend URL");
    run->add_option("--out", run_args.out_dir, "Artifact directory")->required();
    run->add_option("--examples", run_args.examples_dir, "Curated examples directory");
    run->add_option("--id", run_args.id, "Trace id");
    run->add_option("--max-turns", run_args.max_turns, "Turn budget");
    run->add_option("--tessellation", run_args.tessellation, "Mesh resolution");

    BatchArgs batch_args;
    CLI::App* batch = app.add_subcommand("batch", "Run sessions for a prompts file");
    batch->add_option("--prompts", batch_args.prompts_file, "Prompts file")->required();
    batch->add_option("--workers", batch_args.workers, "Parallel sessions")->required();
    batch->add_option("--out", batch_args.out_dir, "Output directory")->required();
    batch->add_option("--script", batch_args.script, "Shared scripted backend file");
    batch->add_option("--examples", batch_args.examples_dir, "Curated examples directory");
    batch->add_option("--max-turns", batch_args.max_turns, "Turn budget per session");
    batch->add_option("--tessellation", batch_args.tessellation, "Mesh resolution");

    std::string stats_traces;
    CLI::App* stats = app.add_subcommand("stats", "Aggregate a trace log per backend");
    stats->add_option("--traces", stats_traces, "Trace JSONL file")->required();

    std::string rate_traces, rate_id;
    int rate_score = 0;
    CLI::App* rate = app.add_subcommand("rate", "Attach a curator rating to a record");
    rate->add_option("--traces", rate_traces, "Trace or record JSONL file")->required();
    rate->add_option("--id", rate_id, "Record id")->required();
    rate->add_option("--score", rate_score, "Score 1-5")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (compile->parsed()) return cmd_compile(compile_args, true);
        if (validate->parsed()) return cmd_compile(validate_args, false);
        if (exporter->parsed()) return cmd_compile(export_args, true);
        if (probe->parsed()) return cmd_probe(probe_args);
        if (run->parsed()) return cmd_run(run_args);
        if (batch->parsed()) return cmd_batch(batch_args);
        if (stats->parsed()) return cmd_stats(stats_traces);
        if (rate->parsed()) return cmd_rate(rate_traces, rate_id, rate_score);
    } catch (const Error& e) {
        std::cerr << "[" << e.code() << "] " << e.what() << "\n";
        return is_usage_error(e.code()) ? kExitUsage : kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
