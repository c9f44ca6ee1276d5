#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <articraft/error.hpp>

// The pluggable LLM boundary. Backends turn (system, messages, tools) into
// the next assistant step: at most one tool call plus usage accounting. They
// never touch the workspace; all effects flow through the harness dispatcher.

namespace articraft {

struct ToolCall {
    std::string tool;
    nlohmann::json args = nlohmann::json::object();
};

struct BackendStep {
    std::string text;  // assistant message (may be empty alongside a call)
    std::optional<ToolCall> call;
    long prompt_tokens = 0;
    long output_tokens = 0;
};

struct BackendRequest {
    std::string system;
    nlohmann::json messages = nlohmann::json::array();  // [{role, content, ...}]
    nlohmann::json tools = nlohmann::json::array();     // tool name+description list
};

// Documented approximate tokenizer for offline paths: one token per four
// characters, rounded up. Real backends report exact usage instead.
inline long approx_tokens(std::string_view text) {
    return static_cast<long>((text.size() + 3) / 4);
}

inline long approx_request_tokens(const BackendRequest& request) {
    long total = approx_tokens(request.system);
    for (const auto& m : request.messages)
        total += approx_tokens(m.value("content", std::string{}));
    return total;
}

class AgentBackend {
  public:
    virtual ~AgentBackend() = default;
    virtual std::string provider() const = 0;
    virtual std::string model() const = 0;

    // Produce the next step. Transport or script faults throw Error
    // ("backend_error"); the session loop converts that into an outcome.
    virtual BackendStep next_step(const BackendRequest& request) = 0;

    // Optional summarization capability used by history compaction. Returns
    // nullopt when the backend cannot summarize; the harness then falls back
    // to its deterministic extractive summary.
    virtual std::optional<std::string> summarize(const std::string&) { return std::nullopt; }
};

// Replays a fixed list of steps. Scripts are JSON arrays; each element:
//   {"text": str, "tool": str?, "args": obj?,
//    "prompt_tokens": int?, "output_tokens": int?}
// Omitted usage falls back to the approximate tokenizer. Exhausting the
// script (or loading an empty one) is a backend error, which exercises the
// harness failure path deterministically.
class ScriptedBackend : public AgentBackend {
  public:
    explicit ScriptedBackend(nlohmann::json steps, std::string label = "script")
        : steps_(std::move(steps)), label_(std::move(label)) {
        if (!steps_.is_array())
            throw Error("invalid_config", "backend script must be a JSON array of steps");
    }

    static std::unique_ptr<ScriptedBackend> from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("invalid_config", "cannot open backend script '" + path + "'");
        nlohmann::json steps;
        try {
            in >> steps;
        } catch (const nlohmann::json::exception& e) {
            throw Error("invalid_config", "backend script '" + path + "': " + e.what());
        }
        return std::make_unique<ScriptedBackend>(std::move(steps),
                                                 std::filesystem::path(path).stem().string());
    }

    std::string provider() const override { return "scripted"; }
    std::string model() const override { return label_; }

    BackendStep next_step(const BackendRequest& request) override {
        if (cursor_ >= steps_.size())
            throw Error("backend_error", "script '" + label_ + "' exhausted after " +
                                             std::to_string(cursor_) + " steps");
        const nlohmann::json& raw = steps_[cursor_++];
        BackendStep step;
        step.text = raw.value("text", std::string{});
        if (raw.contains("tool")) {
            ToolCall call;
            call.tool = raw.at("tool").get<std::string>();
            call.args = raw.value("args", nlohmann::json::object());
            step.call = std::move(call);
        }
        step.prompt_tokens = raw.value("prompt_tokens", approx_request_tokens(request));
        long output_guess = approx_tokens(step.text) +
                            (step.call ? approx_tokens(step.call->args.dump()) : 0);
        step.output_tokens = raw.value("output_tokens", output_guess);
        return step;
    }

    std::size_t remaining() const { return steps_.size() - cursor_; }

  private:
    nlohmann::json steps_;
    std::string label_;
    std::size_t cursor_ = 0;
};

}  // namespace articraft
