#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrverb/blob.hpp"
#include "mrverb/bpe.hpp"
#include "mrverb/error.hpp"
#include "mrverb/matrix.hpp"

namespace mrverb {

/// Intermediate values kept by a training-mode forward pass for the matching backward pass.
struct BackboneTrace {
    std::vector<int> ids;
    std::vector<Matrix> saved;
};

/// Subword encoder: maps subword ids to one H-wide vector per position.
class EncoderBackbone {
public:
    virtual ~EncoderBackbone() = default;

    virtual std::string id() const = 0;
    virtual std::size_t width() const = 0;
    virtual const BpeVocab& vocab() const = 0;

    Segmentation segment(const std::vector<std::string>& tokens) const { return mrverb::segment(vocab(), tokens); }

    /// Evaluation-mode encoding; deterministic.
    virtual Matrix encode(std::span<const int> ids) const = 0;
    virtual Matrix forward(std::span<const int> ids, BackboneTrace& trace) const = 0;
    /// Accumulates parameter gradients into `grads`, which is aligned with parameters().
    virtual void backward(const BackboneTrace& trace, const Matrix& grad_output, std::span<Matrix> grads) const = 0;

    virtual std::vector<Matrix*> parameters() = 0;
    virtual std::vector<const Matrix*> parameters() const = 0;

    virtual nlohmann::json config_json() const = 0;
    virtual std::unique_ptr<EncoderBackbone> clone() const = 0;

    std::vector<Matrix> zero_grads() const {
        std::vector<Matrix> g;
        for (const auto* p : parameters()) g.emplace_back(p->rows(), p->cols());
        return g;
    }

    /// Writes backbone.bin and vocab.json into `dir`.
    void save(const std::filesystem::path& dir) const {
        save_blob(dir / "backbone.bin", parameters());
        std::ofstream v(dir / "vocab.json");
        if (!v) throw CheckpointError("cannot write " + (dir / "vocab.json").string());
        v << vocab().to_json().dump() << '\n';
    }
};

struct ConvEncoderConfig {
    std::size_t width = 32;
    std::size_t radius = 1;
    std::size_t layers = 1;
    std::uint64_t seed = 13;
    double init_scale = 0.5;
};

/// Small randomly initialised encoder for desk-scale runs: an embedding table followed by
/// residual tanh convolution layers over a window of 2*radius+1 subwords.
class ConvEncoder final : public EncoderBackbone {
public:
    static constexpr const char* kId = "conv-tiny";

    ConvEncoder(BpeVocab vocab, ConvEncoderConfig config) : vocab_(std::move(vocab)), config_(config) {
        if (config_.width == 0) throw InvalidConfig("backbone width must be positive");
        if (config_.layers == 0) throw InvalidConfig("backbone needs at least one layer");
        const std::size_t h = config_.width;
        const std::size_t taps = 2 * config_.radius + 1;
        std::mt19937_64 rng(config_.seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        embedding_ = Matrix(vocab_.size(), h);
        for (double& v : embedding_.values()) v = normal(rng) * config_.init_scale;
        const double w_scale = config_.init_scale / std::sqrt(static_cast<double>(h * taps));
        for (std::size_t l = 0; l < config_.layers; ++l) {
            for (std::size_t t = 0; t < taps; ++t) {
                Matrix w(h, h);
                for (double& v : w.values()) v = normal(rng) * w_scale;
                taps_.push_back(std::move(w));
            }
            biases_.emplace_back(1, h);
        }
    }

    std::string id() const override { return kId; }
    std::size_t width() const override { return config_.width; }
    const BpeVocab& vocab() const override { return vocab_; }
    const ConvEncoderConfig& config() const { return config_; }

    Matrix encode(std::span<const int> ids) const override {
        BackboneTrace scratch;
        return forward(ids, scratch);
    }

    Matrix forward(std::span<const int> ids, BackboneTrace& trace) const override {
        const std::size_t n = ids.size();
        const std::size_t h = config_.width;
        trace.ids.assign(ids.begin(), ids.end());
        trace.saved.clear();
        Matrix x(n, h);
        for (std::size_t i = 0; i < n; ++i) {
            auto src = embedding_.row(lookup(ids[i]));
            std::copy(src.begin(), src.end(), x.row(i).begin());
        }
        const auto r = static_cast<std::ptrdiff_t>(config_.radius);
        for (std::size_t l = 0; l < config_.layers; ++l) {
            Matrix a(n, h);
            for (std::size_t i = 0; i < n; ++i) {
                auto ai = a.row(i);
                auto b = biases_[l].row(0);
                std::copy(b.begin(), b.end(), ai.begin());
                for (std::ptrdiff_t d = -r; d <= r; ++d) {
                    auto j = static_cast<std::ptrdiff_t>(i) + d;
                    if (j < 0 || j >= static_cast<std::ptrdiff_t>(n)) continue;
                    gemv_acc(tap(l, d), x.row(static_cast<std::size_t>(j)), ai);
                }
            }
            for (double& v : a.values()) v = std::tanh(v);
            Matrix out = x;
            for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] += a.data()[k];
            trace.saved.push_back(std::move(x));
            trace.saved.push_back(std::move(a));
            x = std::move(out);
        }
        return x;
    }

    void backward(const BackboneTrace& trace, const Matrix& grad_output, std::span<Matrix> grads) const override {
        const std::size_t h = config_.width;
        const std::size_t n = trace.ids.size();
        const std::size_t taps = 2 * config_.radius + 1;
        const auto r = static_cast<std::ptrdiff_t>(config_.radius);
        Matrix g = grad_output;
        for (std::size_t l = config_.layers; l-- > 0;) {
            const Matrix& x = trace.saved[2 * l];
            const Matrix& act = trace.saved[2 * l + 1];
            Matrix delta(n, h);
            for (std::size_t k = 0; k < delta.size(); ++k) {
                double t = act.data()[k];
                delta.data()[k] = g.data()[k] * (1.0 - t * t);
            }
            Matrix gx = g;
            Matrix& bias_grad = grads[1 + config_.layers * taps + l];
            for (std::size_t i = 0; i < n; ++i) {
                auto di = delta.row(i);
                auto bg = bias_grad.row(0);
                for (std::size_t c = 0; c < h; ++c) bg[c] += di[c];
                for (std::ptrdiff_t d = -r; d <= r; ++d) {
                    auto j = static_cast<std::ptrdiff_t>(i) + d;
                    if (j < 0 || j >= static_cast<std::ptrdiff_t>(n)) continue;
                    auto ju = static_cast<std::size_t>(j);
                    gemv_backward(tap(l, d), x.row(ju), di, gx.row(ju), grads[1 + tap_index(l, d)]);
                }
            }
            g = std::move(gx);
        }
        Matrix& eg = grads[0];
        for (std::size_t i = 0; i < n; ++i) {
            auto dst = eg.row(lookup(trace.ids[i]));
            auto src = g.row(i);
            for (std::size_t c = 0; c < h; ++c) dst[c] += src[c];
        }
    }

    // Order: embedding, every tap of every layer, every layer bias.
    std::vector<Matrix*> parameters() override {
        std::vector<Matrix*> p{&embedding_};
        for (auto& w : taps_) p.push_back(&w);
        for (auto& b : biases_) p.push_back(&b);
        return p;
    }

    std::vector<const Matrix*> parameters() const override {
        std::vector<const Matrix*> p{&embedding_};
        for (const auto& w : taps_) p.push_back(&w);
        for (const auto& b : biases_) p.push_back(&b);
        return p;
    }

    nlohmann::json config_json() const override {
        return {{"id", kId},
                {"width", config_.width},
                {"radius", config_.radius},
                {"layers", config_.layers},
                {"seed", config_.seed},
                {"init_scale", config_.init_scale},
                {"vocab_size", vocab_.size()}};
    }

    std::unique_ptr<EncoderBackbone> clone() const override { return std::make_unique<ConvEncoder>(*this); }

private:
    std::size_t lookup(int id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= vocab_.size()) return BpeVocab::kUnk;
        return static_cast<std::size_t>(id);
    }

    std::size_t tap_index(std::size_t layer, std::ptrdiff_t d) const {
        return layer * (2 * config_.radius + 1) + static_cast<std::size_t>(d + static_cast<std::ptrdiff_t>(config_.radius));
    }

    const Matrix& tap(std::size_t layer, std::ptrdiff_t d) const { return taps_[tap_index(layer, d)]; }

    BpeVocab vocab_;
    ConvEncoderConfig config_;
    Matrix embedding_;
    std::vector<Matrix> taps_;
    std::vector<Matrix> biases_;
};

/// Rebuilds a backbone saved by EncoderBackbone::save from its config and directory.
inline std::unique_ptr<EncoderBackbone> load_backbone(const nlohmann::json& config, const std::filesystem::path& dir) {
    auto id = config.value("id", std::string());
    if (id != ConvEncoder::kId) throw CheckpointError("unknown backbone '" + id + "'");
    std::ifstream v(dir / "vocab.json");
    if (!v) throw CheckpointError("cannot read " + (dir / "vocab.json").string());
    BpeVocab vocab;
    try {
        vocab = BpeVocab::from_json(nlohmann::json::parse(v));
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("bad vocab.json: ") + e.what());
    }
    ConvEncoderConfig cfg;
    cfg.width = config.at("width").get<std::size_t>();
    cfg.radius = config.at("radius").get<std::size_t>();
    cfg.layers = config.at("layers").get<std::size_t>();
    cfg.seed = config.at("seed").get<std::uint64_t>();
    cfg.init_scale = config.at("init_scale").get<double>();
    auto backbone = std::make_unique<ConvEncoder>(std::move(vocab), cfg);
    load_blob(dir / "backbone.bin", backbone->parameters());
    return backbone;
}

}  // namespace mrverb
