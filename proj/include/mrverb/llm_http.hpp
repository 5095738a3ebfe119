#pragma once

#include <cstdlib>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mrverb/llm_client.hpp"

namespace mrverb {

struct HttpEndpoint {
    std::string scheme;
    std::string host;
    int port = 0;
    std::string base_path;  // without trailing slash
};

inline HttpEndpoint parse_endpoint(const std::string& url) {
    HttpEndpoint e;
    auto sep = url.find("://");
    if (sep == std::string::npos) throw Error("annotator URL '" + url + "' has no scheme");
    e.scheme = url.substr(0, sep);
    if (e.scheme != "http" && e.scheme != "https") throw Error("annotator URL must be http or https");
    auto rest = url.substr(sep + 3);
    auto slash = rest.find('/');
    auto authority = rest.substr(0, slash);
    e.base_path = slash == std::string::npos ? "" : rest.substr(slash);
    while (!e.base_path.empty() && e.base_path.back() == '/') e.base_path.pop_back();
    auto colon = authority.rfind(':');
    if (colon != std::string::npos) {
        e.host = authority.substr(0, colon);
        try {
            e.port = std::stoi(authority.substr(colon + 1));
        } catch (const std::exception&) {
            throw Error("annotator URL has a bad port");
        }
    } else {
        e.host = authority;
        e.port = e.scheme == "https" ? 443 : 80;
    }
    if (e.host.empty()) throw Error("annotator URL has no host");
    return e;
}

/// Client for OpenAI-compatible chat-completion endpoints: POSTs the prompt as a single user
/// message to <base>/chat/completions and returns the first choice's content.
class HttpChatClient : public LLMClient {
public:
    HttpChatClient(const std::string& base_url, std::string model, std::string api_key = {},
                   LLMClientConfig config = {})
        : endpoint_(parse_endpoint(base_url)), model_(std::move(model)), api_key_(std::move(api_key)),
          config_(config) {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
        if (endpoint_.scheme == "https")
            throw Error("https annotator endpoints need a build with MRVERB_WITH_OPENSSL=ON");
#endif
    }

    /// Reads MRVERB_LLM_URL, MRVERB_LLM_MODEL and MRVERB_LLM_API_KEY.
    static HttpChatClient from_environment() {
        const char* url = std::getenv("MRVERB_LLM_URL");
        const char* model = std::getenv("MRVERB_LLM_MODEL");
        const char* key = std::getenv("MRVERB_LLM_API_KEY");
        if (!url || !*url) throw AnnotatorUnavailable("MRVERB_LLM_URL is not set");
        return HttpChatClient(url, model && *model ? model : "gpt-4o", key ? key : "");
    }

    std::string model_id() const override { return model_; }
    const LLMClientConfig& config() const override { return config_; }

    std::string complete(const std::string& prompt) override {
        nlohmann::json body = {{"model", model_},
                               {"temperature", config_.temperature},
                               {"messages", {{{"role", "user"}, {"content", prompt}}}}};
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout).count();
        auto post = [&](auto& client) {
            client.set_connection_timeout(static_cast<time_t>(secs));
            client.set_read_timeout(static_cast<time_t>(secs));
            return client.Post(endpoint_.base_path + "/chat/completions", headers, body.dump(), "application/json");
        };
        httplib::Result res;
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
        if (endpoint_.scheme == "https") {
            httplib::SSLClient client(endpoint_.host, endpoint_.port);
            res = post(client);
        } else
#endif
        {
            httplib::Client client(endpoint_.host, endpoint_.port);
            res = post(client);
        }
        if (!res) throw TransportError("annotator request failed: " + httplib::to_string(res.error()));
        if (res->status < 200 || res->status >= 300)
            throw TransportError("annotator returned HTTP " + std::to_string(res->status));
        try {
            auto j = nlohmann::json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw TransportError(std::string("annotator reply is not a chat completion: ") + e.what());
        }
    }

private:
    HttpEndpoint endpoint_;
    std::string model_;
    std::string api_key_;
    LLMClientConfig config_;
};

}  // namespace mrverb
