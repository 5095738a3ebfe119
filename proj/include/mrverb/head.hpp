#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrverb/bpe.hpp"
#include "mrverb/error.hpp"
#include "mrverb/matrix.hpp"
#include "mrverb/tags.hpp"

namespace mrverb {

inline void check_alignment(const AlignmentMap& alignment, std::size_t n_positions) {
    for (std::size_t t = 0; t < alignment.size(); ++t) {
        const auto& s = alignment[t];
        if (s.start >= s.end || s.end > n_positions)
            throw SpanOutOfRange("token " + std::to_string(t) + " span [" + std::to_string(s.start) + ", " +
                                 std::to_string(s.end) + ") is empty or exceeds " + std::to_string(n_positions) +
                                 " positions");
    }
}

/// One vector per token: the mean of the subword vectors in its span.
inline Matrix pool_subwords(const Matrix& subword_vectors, const AlignmentMap& alignment) {
    check_alignment(alignment, subword_vectors.rows());
    const std::size_t h = subword_vectors.cols();
    Matrix out(alignment.size(), h);
    for (std::size_t t = 0; t < alignment.size(); ++t) {
        auto dst = out.row(t);
        const auto& s = alignment[t];
        for (std::size_t p = s.start; p < s.end; ++p) {
            auto src = subword_vectors.row(p);
            for (std::size_t c = 0; c < h; ++c) dst[c] += src[c];
        }
        const auto len = static_cast<double>(s.length());
        for (double& v : dst) v /= len;
    }
    return out;
}

/// Gradient of pool_subwords with respect to the subword vectors.
inline Matrix pool_subwords_backward(const Matrix& token_grads, const AlignmentMap& alignment, std::size_t n_positions) {
    check_alignment(alignment, n_positions);
    Matrix out(n_positions, token_grads.cols());
    for (std::size_t t = 0; t < alignment.size(); ++t) {
        const auto& s = alignment[t];
        const double inv = 1.0 / static_cast<double>(s.length());
        auto src = token_grads.row(t);
        for (std::size_t p = s.start; p < s.end; ++p) {
            auto dst = out.row(p);
            for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c] * inv;
        }
    }
    return out;
}

inline std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p(logits.begin(), logits.end());
    if (p.empty()) return p;
    const double m = *std::max_element(p.begin(), p.end());
    double z = 0.0;
    for (double& v : p) z += (v = std::exp(v - m));
    for (double& v : p) v /= z;
    return p;
}

/// Smoothed target: (1-eps) on the gold class plus eps/K on every class.
inline std::vector<double> smoothed_target(std::size_t k, std::size_t gold, double epsilon) {
    std::vector<double> q(k, epsilon / static_cast<double>(k));
    q[gold] += 1.0 - epsilon;
    return q;
}

namespace detail {

inline void check_loss_args(std::span<const double> logits, std::size_t gold, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw InvalidEpsilon("label smoothing must be in [0, 1)");
    if (logits.empty() || gold >= logits.size()) throw Error("gold index outside the logit vector");
}

}  // namespace detail

/// Cross-entropy of softmax(logits) against the smoothed target for `gold`.
inline double smoothed_cross_entropy(std::span<const double> logits, std::size_t gold, double epsilon) {
    detail::check_loss_args(logits, gold, epsilon);
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - m);
    const double log_z = m + std::log(z);
    const double k = static_cast<double>(logits.size());
    double mean_logit = 0.0;
    for (double v : logits) mean_logit += v;
    mean_logit /= k;
    // -sum_k q_k (l_k - logZ) with sum q = 1
    double loss = log_z - (1.0 - epsilon) * logits[gold] - epsilon * mean_logit;
    return std::max(loss, 0.0);
}

/// d loss / d logits = softmax(logits) - q.
inline std::vector<double> smoothed_cross_entropy_grad(std::span<const double> logits, std::size_t gold, double epsilon) {
    detail::check_loss_args(logits, gold, epsilon);
    auto p = softmax(logits);
    auto q = smoothed_target(logits.size(), gold, epsilon);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= q[i];
    return p;
}

/// Index of the largest logit; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

/// Affine projection H -> D followed by an affine classifier D -> number of tags.
class TaggerHead {
public:
    TaggerHead() = default;
    TaggerHead(std::size_t input_width, std::size_t projection_width, std::uint64_t seed,
               std::size_t num_labels = kNumTags)
        : proj_(projection_width, input_width), proj_bias_(1, projection_width),
          cls_(num_labels, projection_width), cls_bias_(1, num_labels) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        const double ps = 1.0 / std::sqrt(static_cast<double>(input_width));
        const double cs = 1.0 / std::sqrt(static_cast<double>(projection_width));
        for (double& v : proj_.values()) v = normal(rng) * ps;
        for (double& v : cls_.values()) v = normal(rng) * cs;
    }

    std::size_t input_width() const { return proj_.cols(); }
    std::size_t projection_width() const { return proj_.rows(); }
    std::size_t num_labels() const { return cls_.rows(); }

    /// Writes the projected vector into `z` and returns the logits.
    std::vector<double> forward(std::span<const double> token, std::span<double> z) const {
        auto pb = proj_bias_.row(0);
        std::copy(pb.begin(), pb.end(), z.begin());
        gemv_acc(proj_, token, z);
        std::vector<double> logits(cls_bias_.row(0).begin(), cls_bias_.row(0).end());
        gemv_acc(cls_, z, logits);
        return logits;
    }

    std::vector<double> logits(std::span<const double> token) const {
        std::vector<double> z(projection_width());
        return forward(token, z);
    }

    /// Accumulates parameter gradients (aligned with parameters()) and the token gradient.
    void backward(std::span<const double> token, std::span<const double> z, std::span<const double> dlogits,
                  std::span<double> dtoken, std::span<Matrix> grads) const {
        std::vector<double> dz(projection_width(), 0.0);
        gemv_backward(cls_, z, dlogits, dz, grads[2]);
        auto cb = grads[3].row(0);
        for (std::size_t i = 0; i < dlogits.size(); ++i) cb[i] += dlogits[i];
        gemv_backward(proj_, token, dz, dtoken, grads[0]);
        auto pb = grads[1].row(0);
        for (std::size_t i = 0; i < dz.size(); ++i) pb[i] += dz[i];
    }

    // Order: projection, projection bias, classifier, classifier bias.
    std::vector<Matrix*> parameters() { return {&proj_, &proj_bias_, &cls_, &cls_bias_}; }
    std::vector<const Matrix*> parameters() const { return {&proj_, &proj_bias_, &cls_, &cls_bias_}; }

    std::vector<Matrix> zero_grads() const {
        std::vector<Matrix> g;
        for (const auto* p : parameters()) g.emplace_back(p->rows(), p->cols());
        return g;
    }

private:
    Matrix proj_;
    Matrix proj_bias_;
    Matrix cls_;
    Matrix cls_bias_;
};

}  // namespace mrverb
