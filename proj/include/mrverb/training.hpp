#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrverb/backbone.hpp"
#include "mrverb/batcher.hpp"
#include "mrverb/corpus.hpp"
#include "mrverb/error.hpp"
#include "mrverb/head.hpp"
#include "mrverb/optimizer.hpp"

namespace mrverb {

struct BackboneSettings {
    std::size_t width = 32;
    std::size_t radius = 1;
    std::size_t layers = 1;
    double init_scale = 0.5;
    std::size_t bpe_merges = 2000;
};

struct TrainingConfig {
    double learning_rate = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double weight_decay = 0.01;
    double gradient_clip_norm = 1.0;
    std::size_t max_steps = 20000;
    std::size_t eval_every = 200;
    std::size_t patience = 1600;
    double batcher_start = 100;
    double batcher_stop = 1000;
    double batcher_compound = 1.001;
    std::size_t declared_batch_size = 128;  // recorded only; the word batcher decides batch size
    double dev_fraction = 0.1;
    std::uint64_t seed = 0;
    double label_smoothing = 0.05;
    std::size_t projection_width = 300;
    bool train_backbone = true;
    bool select_on_gold = false;
    BackboneSettings backbone;

    void validate() const {
        auto fail = [](const std::string& m) { throw InvalidConfig(m); };
        if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) fail("betas must be in [0, 1)");
        if (!(adam_epsilon > 0.0)) fail("adam_epsilon must be positive");
        if (!(weight_decay >= 0.0)) fail("weight_decay must be non-negative");
        if (!(gradient_clip_norm > 0.0)) fail("gradient_clip_norm must be positive");
        if (max_steps == 0) fail("max_steps must be positive");
        if (eval_every == 0) fail("eval_every must be positive");
        if (patience == 0 || patience % eval_every != 0) fail("patience must be a positive multiple of eval_every");
        if (!(batcher_start >= 1.0) || !(batcher_stop >= 1.0) || !(batcher_compound > 0.0))
            fail("word batcher start/stop must be >= 1 and compound > 0");
        if (!(dev_fraction >= 0.0 && dev_fraction < 1.0)) fail("dev_fraction must be in [0, 1)");
        if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) fail("label_smoothing must be in [0, 1)");
        if (projection_width == 0) fail("projection_width must be positive");
        if (backbone.width == 0 || backbone.layers == 0) fail("backbone width and layers must be positive");
    }

    nlohmann::json to_json() const {
        return {{"learning_rate", learning_rate},
                {"beta1", beta1},
                {"beta2", beta2},
                {"adam_epsilon", adam_epsilon},
                {"weight_decay", weight_decay},
                {"gradient_clip_norm", gradient_clip_norm},
                {"max_steps", max_steps},
                {"eval_every", eval_every},
                {"patience", patience},
                {"word_batcher", {{"start", batcher_start}, {"stop", batcher_stop}, {"compound", batcher_compound}}},
                {"declared_batch_size", declared_batch_size},
                {"dev_fraction", dev_fraction},
                {"seed", seed},
                {"label_smoothing", label_smoothing},
                {"projection_width", projection_width},
                {"train_backbone", train_backbone},
                {"select_on_gold", select_on_gold},
                {"backbone",
                 {{"width", backbone.width},
                  {"radius", backbone.radius},
                  {"layers", backbone.layers},
                  {"init_scale", backbone.init_scale},
                  {"bpe_merges", backbone.bpe_merges}}}};
    }

    /// Missing fields keep their defaults; unknown fields are rejected.
    static TrainingConfig from_json(const nlohmann::json& j) {
        if (!j.is_object()) throw InvalidConfig("training config must be a JSON object");
        TrainingConfig c;
        const std::set<std::string> known = {"learning_rate", "beta1", "beta2", "adam_epsilon", "weight_decay",
                                             "gradient_clip_norm", "max_steps", "eval_every", "patience",
                                             "word_batcher", "declared_batch_size", "dev_fraction", "seed",
                                             "label_smoothing", "projection_width", "train_backbone",
                                             "select_on_gold", "backbone"};
        for (const auto& [k, v] : j.items())
            if (!known.count(k)) throw InvalidConfig("unknown training config field '" + k + "'");
        try {
            auto get = [&](const char* key, auto& field) {
                if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
            };
            get("learning_rate", c.learning_rate);
            get("beta1", c.beta1);
            get("beta2", c.beta2);
            get("adam_epsilon", c.adam_epsilon);
            get("weight_decay", c.weight_decay);
            get("gradient_clip_norm", c.gradient_clip_norm);
            get("max_steps", c.max_steps);
            get("eval_every", c.eval_every);
            get("patience", c.patience);
            get("declared_batch_size", c.declared_batch_size);
            get("dev_fraction", c.dev_fraction);
            get("seed", c.seed);
            get("label_smoothing", c.label_smoothing);
            get("projection_width", c.projection_width);
            get("train_backbone", c.train_backbone);
            get("select_on_gold", c.select_on_gold);
            if (j.contains("word_batcher")) {
                const auto& b = j.at("word_batcher");
                c.batcher_start = b.value("start", c.batcher_start);
                c.batcher_stop = b.value("stop", c.batcher_stop);
                c.batcher_compound = b.value("compound", c.batcher_compound);
            }
            if (j.contains("backbone")) {
                const auto& b = j.at("backbone");
                c.backbone.width = b.value("width", c.backbone.width);
                c.backbone.radius = b.value("radius", c.backbone.radius);
                c.backbone.layers = b.value("layers", c.backbone.layers);
                c.backbone.init_scale = b.value("init_scale", c.backbone.init_scale);
                c.backbone.bpe_merges = b.value("bpe_merges", c.backbone.bpe_merges);
            }
        } catch (const nlohmann::json::exception& e) {
            throw InvalidConfig(std::string("bad training config: ") + e.what());
        }
        c.validate();
        return c;
    }

    static TrainingConfig load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw InvalidConfig("cannot read config " + path.string());
        try {
            return from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::parse_error& e) {
            throw InvalidConfig("config " + path.string() + " is not valid JSON: " + e.what());
        }
    }

    friend bool operator==(const TrainingConfig& a, const TrainingConfig& b) { return a.to_json() == b.to_json(); }
};

struct EvalRecord {
    std::size_t step = 0;
    double dev_accuracy = 0.0;
    double train_loss = 0.0;  // mean per-token loss of the batches since the previous evaluation
};

/// A trained model: backbone, head, and the bookkeeping needed to reproduce it.
struct Checkpoint {
    TrainingConfig config;
    std::shared_ptr<const EncoderBackbone> backbone;
    TaggerHead head;
    double best_dev_accuracy = 0.0;
    std::size_t step_of_best = 0;
    std::size_t steps_run = 0;
    std::vector<EvalRecord> eval_log;

    nlohmann::json manifest() const {
        nlohmann::json log = nlohmann::json::array();
        for (const auto& r : eval_log)
            log.push_back({{"step", r.step}, {"dev_accuracy", r.dev_accuracy}, {"train_loss", r.train_loss}});
        nlohmann::json tags = nlohmann::json::array();
        for (auto n : kTagNames) tags.push_back(std::string(n));
        return {{"format_version", 1},
                {"config", config.to_json()},
                {"tags", tags},
                {"backbone", backbone->config_json()},
                {"best_dev_accuracy", best_dev_accuracy},
                {"step_of_best", step_of_best},
                {"steps_run", steps_run},
                {"eval_log", log}};
    }

    void save(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        std::ofstream m(dir / "manifest.json");
        if (!m) throw CheckpointError("cannot write " + (dir / "manifest.json").string());
        m << manifest().dump(2) << '\n';
        save_blob(dir / "head.bin", head.parameters());
        backbone->save(dir);
    }

    static Checkpoint load(const std::filesystem::path& dir) {
        std::ifstream m(dir / "manifest.json");
        if (!m) throw CheckpointError("no manifest.json in " + dir.string());
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(m);
        } catch (const nlohmann::json::parse_error& e) {
            throw CheckpointError(std::string("manifest.json is not valid JSON: ") + e.what());
        }
        Checkpoint c;
        try {
            std::vector<std::string> tags = j.at("tags").get<std::vector<std::string>>();
            if (tags.size() != kNumTags) throw CheckpointError("checkpoint tag map has the wrong size");
            for (std::size_t i = 0; i < kNumTags; ++i)
                if (tags[i] != kTagNames[i]) throw CheckpointError("checkpoint tag map differs at index " + std::to_string(i));
            c.config = TrainingConfig::from_json(j.at("config"));
            c.backbone = load_backbone(j.at("backbone"), dir);
            c.best_dev_accuracy = j.at("best_dev_accuracy").get<double>();
            c.step_of_best = j.at("step_of_best").get<std::size_t>();
            c.steps_run = j.value("steps_run", c.step_of_best);
            for (const auto& r : j.value("eval_log", nlohmann::json::array()))
                c.eval_log.push_back({r.at("step").get<std::size_t>(), r.at("dev_accuracy").get<double>(),
                                      r.value("train_loss", 0.0)});
        } catch (const nlohmann::json::exception& e) {
            throw CheckpointError(std::string("bad manifest: ") + e.what());
        } catch (const InvalidConfig& e) {
            throw CheckpointError(std::string("bad manifest config: ") + e.what());
        }
        c.head = TaggerHead(c.backbone->width(), c.config.projection_width, 0);
        load_blob(dir / "head.bin", c.head.parameters());
        return c;
    }
};

struct TrainingHooks {
    /// Replaces the measured dev accuracy at an evaluation step.
    std::function<double(std::size_t step)> scripted_dev_accuracy;
    /// Replaces dev token accuracy with another score of the current model (e.g. gold-set accuracy).
    std::function<double(const EncoderBackbone&, const TaggerHead&)> dev_metric;
    std::function<void(const EvalRecord&)> on_eval;
};

namespace detail {

struct EncodedSentence {
    Segmentation seg;
    std::vector<std::size_t> gold;
};

inline std::vector<EncodedSentence> encode_corpus(const EncoderBackbone& backbone, const Corpus& corpus) {
    std::vector<EncodedSentence> out;
    out.reserve(corpus.sentences.size());
    for (const auto& s : corpus.sentences) {
        EncodedSentence e{backbone.segment(s.surfaces()), {}};
        for (const auto& t : s.tokens) e.gold.push_back(tag_index(t.tag));
        out.push_back(std::move(e));
    }
    return out;
}

inline std::vector<std::size_t> predict_indices(const EncoderBackbone& backbone, const TaggerHead& head,
                                                const Segmentation& seg) {
    auto pooled = pool_subwords(backbone.encode(seg.ids), seg.alignment);
    std::vector<std::size_t> out(pooled.rows());
    for (std::size_t t = 0; t < pooled.rows(); ++t) out[t] = argmax(head.logits(pooled.row(t)));
    return out;
}

inline double token_accuracy(const EncoderBackbone& backbone, const TaggerHead& head,
                             const std::vector<EncodedSentence>& data) {
    std::size_t correct = 0, total = 0;
    for (const auto& e : data) {
        auto pred = predict_indices(backbone, head, e.seg);
        for (std::size_t t = 0; t < pred.size(); ++t) correct += pred[t] == e.gold[t];
        total += pred.size();
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

/// Mean per-token loss of a batch; accumulates gradients into `grads` (head first, then backbone
/// when `with_backbone`).
inline double batch_loss_and_grads(const EncoderBackbone& backbone, const TaggerHead& head,
                                   const std::vector<EncodedSentence>& data, const std::vector<std::size_t>& batch,
                                   double epsilon, bool with_backbone, std::vector<Matrix>& grads) {
    std::size_t n_tokens = 0;
    for (auto i : batch) n_tokens += data[i].gold.size();
    const double inv = 1.0 / static_cast<double>(n_tokens);
    const std::size_t n_head = head.parameters().size();
    std::span<Matrix> head_grads(grads.data(), n_head);
    std::span<Matrix> backbone_grads(grads.data() + n_head, grads.size() - n_head);
    std::vector<double> z(head.projection_width());
    double loss = 0.0;
    for (auto i : batch) {
        const auto& e = data[i];
        BackboneTrace trace;
        Matrix enc = backbone.forward(e.seg.ids, trace);
        Matrix pooled = pool_subwords(enc, e.seg.alignment);
        Matrix dpooled(pooled.rows(), pooled.cols());
        for (std::size_t t = 0; t < pooled.rows(); ++t) {
            auto logits = head.forward(pooled.row(t), z);
            loss += smoothed_cross_entropy(logits, e.gold[t], epsilon);
            auto dl = smoothed_cross_entropy_grad(logits, e.gold[t], epsilon);
            for (double& v : dl) v *= inv;
            head.backward(pooled.row(t), z, dl, with_backbone ? dpooled.row(t) : std::span<double>{}, head_grads);
        }
        if (with_backbone)
            backbone.backward(trace, pool_subwords_backward(dpooled, e.seg.alignment, enc.rows()), backbone_grads);
    }
    return loss * inv;
}

}  // namespace detail

/// Builds the subword vocabulary from the training surfaces and a freshly initialised backbone.
inline std::unique_ptr<EncoderBackbone> make_backbone(const TrainingConfig& config, const Corpus& train) {
    auto counts = count_words(train.sentences, [](const TaggedSentence& s) { return s.surfaces(); });
    auto vocab = BpeVocab::train(counts, config.backbone.bpe_merges);
    ConvEncoderConfig c{config.backbone.width, config.backbone.radius, config.backbone.layers, config.seed + 1,
                        config.backbone.init_scale};
    return std::make_unique<ConvEncoder>(std::move(vocab), c);
}

/// Trains the head (and the backbone unless frozen), evaluating token accuracy on `dev` every
/// eval_every steps and stopping once patience steps pass without improvement. Returns the
/// parameters from the best evaluation.
inline Checkpoint train(const TrainingConfig& config, const Corpus& train_corpus, const Corpus& dev_corpus,
                        const EncoderBackbone& initial_backbone, const TrainingHooks& hooks = {}) {
    config.validate();
    if (train_corpus.sentences.empty()) throw EmptyTrain("training corpus has no sentences");
    if (dev_corpus.sentences.empty() && !hooks.scripted_dev_accuracy && !hooks.dev_metric)
        throw InvalidConfig("dev corpus has no sentences");
    std::set<std::string> train_ids;
    for (const auto& s : train_corpus.sentences) train_ids.insert(s.sentence_id);
    for (const auto& s : dev_corpus.sentences)
        if (train_ids.count(s.sentence_id))
            throw DisjointnessViolation("sentence '" + s.sentence_id + "' is in both train and dev");

    std::unique_ptr<EncoderBackbone> backbone = initial_backbone.clone();
    TaggerHead head(backbone->width(), config.projection_width, config.seed + 2);
    auto train_data = detail::encode_corpus(*backbone, train_corpus);
    auto dev_data = detail::encode_corpus(*backbone, dev_corpus);

    std::vector<Matrix*> params = head.parameters();
    std::vector<Matrix> grads = head.zero_grads();
    if (config.train_backbone) {
        for (auto* p : backbone->parameters()) params.push_back(p);
        for (auto& g : backbone->zero_grads()) grads.push_back(std::move(g));
    }
    Adam adam(params, {config.learning_rate, config.beta1, config.beta2, config.adam_epsilon, config.weight_decay});

    std::vector<std::size_t> lengths;
    for (const auto& e : train_data) lengths.push_back(e.gold.size());
    WordBatcher batcher(std::move(lengths),
                        CompoundingSchedule(config.batcher_start, config.batcher_stop, config.batcher_compound),
                        config.seed);

    Checkpoint best;
    best.config = config;
    best.best_dev_accuracy = -1.0;
    std::unique_ptr<EncoderBackbone> best_backbone;
    std::vector<EvalRecord> log;
    double loss_sum = 0.0;
    std::size_t loss_batches = 0;

    auto evaluate = [&](std::size_t step) {
        double acc = hooks.scripted_dev_accuracy ? hooks.scripted_dev_accuracy(step)
                     : hooks.dev_metric          ? hooks.dev_metric(*backbone, head)
                                                 : detail::token_accuracy(*backbone, head, dev_data);
        EvalRecord rec{step, acc, loss_batches ? loss_sum / static_cast<double>(loss_batches) : 0.0};
        loss_sum = 0.0;
        loss_batches = 0;
        log.push_back(rec);
        if (hooks.on_eval) hooks.on_eval(rec);
        if (acc > best.best_dev_accuracy) {
            best.best_dev_accuracy = acc;
            best.step_of_best = step;
            best.head = head;
            best_backbone = backbone->clone();
        }
    };

    std::size_t step = 0;
    while (step < config.max_steps) {
        auto batch = batcher.next_batch();
        for (auto& g : grads) g.fill(0.0);
        loss_sum += detail::batch_loss_and_grads(*backbone, head, train_data, batch, config.label_smoothing,
                                                 config.train_backbone, grads);
        ++loss_batches;
        clip_global_norm(grads, config.gradient_clip_norm);
        adam.step(params, grads);
        ++step;
        if (step % config.eval_every == 0) {
            evaluate(step);
            if (step - best.step_of_best >= config.patience) break;
        }
    }
    if (log.empty() || log.back().step != step) evaluate(step);

    best.backbone = std::shared_ptr<const EncoderBackbone>(std::move(best_backbone));
    best.steps_run = step;
    best.eval_log = std::move(log);
    return best;
}

/// One tag per token: argmax over the label inventory, ties to the lowest index.
inline TaggedSentence tag(const EncoderBackbone& backbone, const TaggerHead& head,
                          const std::vector<std::string>& tokens, std::string sentence_id = "s1",
                          std::string source = {}) {
    if (tokens.empty()) throw EmptySentence("cannot tag an empty token list");
    auto pred = detail::predict_indices(backbone, head, backbone.segment(tokens));
    std::vector<Tag> tags;
    for (auto i : pred) tags.push_back(*tag_from_index(i));
    return make_sentence(std::move(sentence_id), tokens, tags, std::move(source));
}

inline TaggedSentence tag(const Checkpoint& checkpoint, const std::vector<std::string>& tokens,
                          std::string sentence_id = "s1", std::string source = {}) {
    return tag(*checkpoint.backbone, checkpoint.head, tokens, std::move(sentence_id), std::move(source));
}

}  // namespace mrverb
