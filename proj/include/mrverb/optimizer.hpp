#pragma once

#include <cmath>
#include <vector>

#include "mrverb/matrix.hpp"

namespace mrverb {

struct AdamConfig {
    double learning_rate = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.01;  // decoupled, applied to the parameter directly
};

inline double global_norm(const std::vector<Matrix>& grads) {
    double sq = 0.0;
    for (const auto& g : grads)
        for (double v : g.values()) sq += v * v;
    return std::sqrt(sq);
}

/// Rescales all gradients together so their joint L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
inline double clip_global_norm(std::vector<Matrix>& grads, double max_norm) {
    const double norm = global_norm(grads);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for (auto& g : grads)
            for (double& v : g.values()) v *= scale;
    }
    return norm;
}

class Adam {
public:
    Adam() = default;
    Adam(const std::vector<Matrix*>& params, AdamConfig config) : config_(config) {
        for (const auto* p : params) {
            m_.emplace_back(p->rows(), p->cols());
            v_.emplace_back(p->rows(), p->cols());
        }
    }

    const AdamConfig& config() const { return config_; }
    long step_count() const { return t_; }

    void step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads) {
        ++t_;
        const double b1t = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
        const double b2t = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
        const double lr = config_.learning_rate;
        for (std::size_t k = 0; k < params.size(); ++k) {
            double* p = params[k]->data();
            const double* g = grads[k].data();
            double* m = m_[k].data();
            double* v = v_[k].data();
            for (std::size_t i = 0, n = params[k]->size(); i < n; ++i) {
                m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
                v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
                const double mhat = m[i] / b1t;
                const double vhat = v[i] / b2t;
                p[i] -= lr * (mhat / (std::sqrt(vhat) + config_.epsilon) + config_.weight_decay * p[i]);
            }
        }
    }

private:
    AdamConfig config_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    long t_ = 0;
};

}  // namespace mrverb
