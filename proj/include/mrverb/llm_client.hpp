#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <utility>

#include "mrverb/error.hpp"

namespace mrverb {

/// A failed call to the annotator (network error, timeout, non-2xx). Retried by the pipeline.
class TransportError : public Error {
public:
    using Error::Error;
};

struct LLMClientConfig {
    double temperature = 0.0;  // 0 = greedy decoding
    std::chrono::milliseconds timeout{120000};
    int retries = 3;
    std::chrono::milliseconds backoff{500};
};

/// External annotator. `complete` may be called from several threads at once.
class LLMClient {
public:
    virtual ~LLMClient() = default;
    virtual std::string model_id() const = 0;
    virtual std::string complete(const std::string& prompt) = 0;
    virtual const LLMClientConfig& config() const = 0;
};

/// Deterministic client for tests and offline replay: answers from a fixed prompt->response table
/// or a responder function, and counts calls.
class StubClient : public LLMClient {
public:
    using Responder = std::function<std::string(const std::string&)>;

    explicit StubClient(std::map<std::string, std::string> table, std::string model = "stub")
        : model_(std::move(model)), table_(std::move(table)) {
        config_.backoff = std::chrono::milliseconds(0);
    }

    explicit StubClient(Responder responder, std::string model = "stub")
        : model_(std::move(model)), responder_(std::move(responder)) {
        config_.backoff = std::chrono::milliseconds(0);
    }

    std::string model_id() const override { return model_; }
    const LLMClientConfig& config() const override { return config_; }
    LLMClientConfig& mutable_config() { return config_; }

    std::string complete(const std::string& prompt) override {
        calls_.fetch_add(1);
        if (responder_) return responder_(prompt);
        auto it = table_.find(prompt);
        if (it == table_.end()) throw TransportError("stub client has no response for this prompt");
        return it->second;
    }

    std::size_t calls() const { return calls_.load(); }

private:
    std::string model_;
    std::map<std::string, std::string> table_;
    Responder responder_;
    LLMClientConfig config_;
    std::atomic<std::size_t> calls_{0};
};

/// Never reaches a model; every call fails. Used to rebuild corpora from a warm cache.
class OfflineClient : public LLMClient {
public:
    explicit OfflineClient(std::string model) : model_(std::move(model)) {
        config_.retries = 0;
        config_.backoff = std::chrono::milliseconds(0);
    }
    std::string model_id() const override { return model_; }
    const LLMClientConfig& config() const override { return config_; }
    std::string complete(const std::string&) override {
        throw TransportError("offline mode: no cached annotation for this batch");
    }

private:
    std::string model_;
    LLMClientConfig config_;
};

}  // namespace mrverb
