#pragma once

#include <vector>

#include "mrverb/evaluation.hpp"
#include "mrverb/training.hpp"

namespace mrverb {

inline Predictor model_predictor(const EncoderBackbone& backbone, const TaggerHead& head) {
    return [&backbone, &head](const std::vector<std::string>& tokens, const std::string& id) {
        return tag(backbone, head, tokens, id);
    };
}

inline Predictor checkpoint_predictor(const Checkpoint& checkpoint) {
    return model_predictor(*checkpoint.backbone, checkpoint.head);
}

/// Dev metric for checkpoint selection on gold data: macro-average accuracy over `gold_sets`.
inline std::function<double(const EncoderBackbone&, const TaggerHead&)> gold_selection_metric(
    std::vector<GoldSet> gold_sets) {
    return [sets = std::move(gold_sets)](const EncoderBackbone& backbone, const TaggerHead& head) {
        std::vector<EvalReport> reports;
        auto predict = model_predictor(backbone, head);
        for (const auto& g : sets) reports.push_back(evaluate(predict, g));
        return macro_average_accuracy(reports);
    };
}

}  // namespace mrverb
