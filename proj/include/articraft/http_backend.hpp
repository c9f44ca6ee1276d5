#pragma once

#include <cstdlib>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include <articraft/backend.hpp>
#include <articraft/error.hpp>

// HTTP transport for real model endpoints. Kept out of backend.hpp so test
// binaries that only need the scripted path avoid the socket dependency.
//
// Wire contract (JSON over POST):
//   request  {"system": str, "messages": [...], "tools": [...]}
//   response {"text": str, "tool": str?, "args": obj?,
//             "usage": {"prompt_tokens": int, "output_tokens": int}}
// The endpoint URL comes from config or ARTICRAFT_BACKEND_URL; credentials
// ride in ARTICRAFT_BACKEND_KEY as a bearer token.

namespace articraft {

class HttpBackend : public AgentBackend {
  public:
    explicit HttpBackend(std::string url, std::string model_name = "remote")
        : model_(std::move(model_name)) {
        if (url.empty()) {
            const char* env = std::getenv("ARTICRAFT_BACKEND_URL");
            if (!env || !*env)
                throw Error("invalid_config",
                            "http backend needs a URL (flag or ARTICRAFT_BACKEND_URL)");
            url = env;
        }
        split_url(url);
        if (const char* key = std::getenv("ARTICRAFT_BACKEND_KEY")) api_key_ = key;
    }

    std::string provider() const override { return "http"; }
    std::string model() const override { return model_; }

    BackendStep next_step(const BackendRequest& request) override {
        nlohmann::json body{
            {"system", request.system},
            {"messages", request.messages},
            {"tools", request.tools},
        };
        httplib::Client client(base_.c_str());
        client.set_read_timeout(300, 0);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        auto res = client.Post(path_.c_str(), headers, body.dump(), "application/json");
        if (!res)
            throw Error("backend_error", "no response from " + base_ + path_);
        if (res->status != 200)
            throw Error("backend_error",
                        "endpoint returned HTTP " + std::to_string(res->status));
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw Error("backend_error", std::string("malformed endpoint reply: ") + e.what());
        }
        BackendStep step;
        step.text = doc.value("text", std::string{});
        if (doc.contains("tool") && !doc.at("tool").is_null()) {
            ToolCall call;
            call.tool = doc.at("tool").get<std::string>();
            call.args = doc.value("args", nlohmann::json::object());
            step.call = std::move(call);
        }
        if (doc.contains("usage")) {
            step.prompt_tokens = doc["usage"].value("prompt_tokens", 0L);
            step.output_tokens = doc["usage"].value("output_tokens", 0L);
        }
        if (step.prompt_tokens == 0) step.prompt_tokens = approx_request_tokens(request);
        if (step.output_tokens == 0) step.output_tokens = approx_tokens(step.text);
        return step;
    }

  private:
    std::string base_;  // scheme://host[:port]
    std::string path_ = "/";
    std::string api_key_;
    std::string model_;

    void split_url(const std::string& url) {
        std::size_t scheme = url.find("://");
        if (scheme == std::string::npos)
            throw Error("invalid_config", "backend URL needs a scheme: '" + url + "'");
        std::size_t slash = url.find('/', scheme + 3);
        if (slash == std::string::npos) {
            base_ = url;
        } else {
            base_ = url.substr(0, slash);
            path_ = url.substr(slash);
        }
    }
};

}  // namespace articraft
