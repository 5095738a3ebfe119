#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrverb/corpus.hpp"
#include "mrverb/judgments.hpp"
#include "mrverb/llm_client.hpp"
#include "mrverb/pos_tagger.hpp"
#include "mrverb/prompt.hpp"

namespace mrverb {

struct CacheKey {
    std::string sentence_id;
    std::string variant_id;
    std::string model_id;

    friend auto operator<=>(const CacheKey&, const CacheKey&) = default;
};

struct CacheEntry {
    std::string raw_response;
    std::vector<VerbJudgment> judgments;  // this sentence's share of the reply
    std::size_t dropped = 0;              // records dropped while parsing, attributed to this sentence's batch
    std::string timestamp;
};

inline std::string utc_timestamp() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Annotator replies keyed by (sentence_id, variant, model). When backed by a file, every `put`
/// appends one self-describing JSON line; on load, later lines for a key replace earlier ones.
class AnnotationCache {
public:
    AnnotationCache() = default;

    explicit AnnotationCache(std::filesystem::path path) : path_(std::move(path)) {
        if (!std::filesystem::exists(*path_)) return;
        std::ifstream in(*path_);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (text::trim(line).empty()) continue;
            try {
                auto rec = nlohmann::json::parse(line);
                CacheKey key{rec.at("sentence_id").get<std::string>(), rec.at("variant").get<std::string>(),
                             rec.at("model").get<std::string>()};
                CacheEntry e;
                e.raw_response = rec.at("raw").get<std::string>();
                for (const auto& j : rec.at("judgments")) e.judgments.push_back(judgment_from_json(j));
                e.dropped = rec.value("dropped", std::size_t{0});
                e.timestamp = rec.value("timestamp", std::string{});
                entries_[std::move(key)] = std::move(e);
            } catch (const std::exception& ex) {
                throw Error("annotation cache " + path_->string() + " line " + std::to_string(line_no) + ": " +
                            ex.what());
            }
        }
    }

    std::optional<CacheEntry> get(const CacheKey& key) const {
        std::lock_guard lock(mutex_);
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    bool contains(const CacheKey& key) const {
        std::lock_guard lock(mutex_);
        return entries_.count(key) > 0;
    }

    void put(const CacheKey& key, CacheEntry entry) {
        std::lock_guard lock(mutex_);
        if (entry.timestamp.empty()) entry.timestamp = utc_timestamp();
        if (path_) {
            nlohmann::json rec = {{"sentence_id", key.sentence_id}, {"variant", key.variant_id},
                                  {"model", key.model_id},         {"raw", entry.raw_response},
                                  {"dropped", entry.dropped},      {"timestamp", entry.timestamp}};
            rec["judgments"] = nlohmann::json::array();
            for (const auto& j : entry.judgments) rec["judgments"].push_back(to_json(j));
            std::ofstream out(*path_, std::ios::app);
            out << rec.dump() << '\n';
            if (!out) throw Error("cannot append to annotation cache " + path_->string());
        }
        entries_[key] = std::move(entry);
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return entries_.size();
    }

private:
    std::optional<std::filesystem::path> path_;
    std::map<CacheKey, CacheEntry> entries_;
    mutable std::mutex mutex_;
};

struct RawSentence {
    std::string sentence_id;
    std::string text;
    std::string source;
};

struct AnnotationOptions {
    const PosTagger* pos_tagger = nullptr;  // required when annotating raw text
    std::size_t batch_size = kDefaultBatchSize;
    std::size_t max_concurrency = 4;
};

struct AnnotationStats {
    std::size_t result_count = 0;
    std::size_t manner_count = 0;
    std::size_t other_count = 0;
    std::size_t dropped_judgments = 0;
    std::vector<std::string> failed_sentences;
    std::size_t external_calls = 0;
    std::size_t cache_hits = 0;
};

struct AnnotationResult {
    Corpus corpus;
    AnnotationStats stats;
    std::vector<std::string> warnings;
};

inline nlohmann::json to_json(const AnnotationStats& s) {
    return {{"result_count", s.result_count},
            {"manner_count", s.manner_count},
            {"other_count", s.other_count},
            {"dropped_judgments", s.dropped_judgments},
            {"failed_sentences", s.failed_sentences},
            {"external_calls", s.external_calls},
            {"cache_hits", s.cache_hits}};
}

namespace detail {

inline std::string call_with_retries(LLMClient& client, const std::string& prompt) {
    const auto& cfg = client.config();
    std::string last_error;
    for (int attempt = 0; attempt <= cfg.retries; ++attempt) {
        try {
            return client.complete(prompt);
        } catch (const TransportError& e) {
            last_error = e.what();
        }
        if (attempt < cfg.retries && cfg.backoff.count() > 0)
            std::this_thread::sleep_for(cfg.backoff * (1 << std::min(attempt, 6)));
    }
    throw AnnotatorUnavailable("annotator '" + client.model_id() + "' unavailable after " +
                               std::to_string(cfg.retries + 1) + " attempt(s): " + last_error);
}

}  // namespace detail

/// Runs the annotator over pre-tagged sentences and merges its judgments. Sentences whose batch
/// reply cannot be parsed are excluded and listed in `stats.failed_sentences`. Calls run
/// concurrently (up to `max_concurrency`); the merged corpus always follows input order.
inline AnnotationResult annotate_pretagged(const std::vector<TaggedSentence>& sentences, LLMClient& client,
                                           const PromptVariant& variant, AnnotationCache& cache,
                                           const AnnotationOptions& options = {}) {
    if (options.batch_size == 0) throw BatchTooLarge("batch size must be at least 1");
    AnnotationResult result;
    result.corpus.split = Split::Unlabeled;
    const std::string variant_id(variant.name());
    const std::string model_id = client.model_id();
    auto key_for = [&](const TaggedSentence& s) { return CacheKey{s.sentence_id, variant_id, model_id}; };

    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (cache.contains(key_for(sentences[i]))) {
            ++result.stats.cache_hits;
            continue;
        }
        if (batches.empty() || batches.back().size() == options.batch_size) batches.emplace_back();
        batches.back().push_back(i);
    }

    struct BatchOutcome {
        bool failed = false;
        std::string error;
        std::exception_ptr fatal;
        std::size_t dropped = 0;
        std::vector<std::string> warnings;
    };
    std::vector<BatchOutcome> outcomes(batches.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> calls{0};

    auto worker = [&]() {
        while (true) {
            std::size_t b = next.fetch_add(1);
            if (b >= batches.size()) return;
            auto& outcome = outcomes[b];
            std::vector<TaggedSentence> batch;
            for (auto i : batches[b]) batch.push_back(sentences[i]);
            try {
                auto prompt = build_prompt(variant, batch, options.batch_size);
                calls.fetch_add(1);
                auto raw = detail::call_with_retries(client, prompt);
                auto parsed = parse_llm_response(raw, batch);
                outcome.dropped = parsed.warnings.size();
                outcome.warnings = std::move(parsed.warnings);
                for (const auto& s : batch) {
                    CacheEntry e;
                    e.raw_response = raw;
                    for (const auto& j : parsed.judgments)
                        if (j.sentence_id == s.sentence_id) e.judgments.push_back(j);
                    e.dropped = outcome.dropped;
                    cache.put(key_for(s), std::move(e));
                }
            } catch (const ResponseError& e) {
                outcome.failed = true;
                outcome.error = std::string(e.what()) + " | raw reply: " + e.raw();
            } catch (...) {
                outcome.fatal = std::current_exception();
            }
        }
    };

    std::size_t n_threads = std::clamp<std::size_t>(options.max_concurrency, 1, std::max<std::size_t>(1, batches.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    result.stats.external_calls = calls.load();
    for (const auto& o : outcomes)
        if (o.fatal) std::rethrow_exception(o.fatal);

    std::vector<bool> failed(sentences.size(), false);
    for (std::size_t b = 0; b < batches.size(); ++b) {
        const auto& o = outcomes[b];
        result.stats.dropped_judgments += o.dropped;
        result.warnings.insert(result.warnings.end(), o.warnings.begin(), o.warnings.end());
        if (o.failed) {
            result.warnings.push_back("batch of " + std::to_string(batches[b].size()) + " sentence(s) failed: " + o.error);
            for (auto i : batches[b]) failed[i] = true;
        }
    }

    for (std::size_t i = 0; i < sentences.size(); ++i) {
        const auto& s = sentences[i];
        if (failed[i]) {
            result.stats.failed_sentences.push_back(s.sentence_id);
            continue;
        }
        auto entry = cache.get(key_for(s));
        try {
            result.corpus.sentences.push_back(merge_labels(s, entry ? entry->judgments : std::vector<VerbJudgment>{}));
        } catch (const IndexMismatch& e) {
            // a cached reply that no longer fits the current pre-tagging
            result.stats.failed_sentences.push_back(s.sentence_id);
            result.warnings.push_back(e.what());
        }
    }

    auto hist = label_histogram(result.corpus);
    result.stats.result_count = hist.count(Tag::Result) ? hist[Tag::Result] : 0;
    result.stats.manner_count = hist.count(Tag::Manner) ? hist[Tag::Manner] : 0;
    result.stats.other_count = result.corpus.token_count() - result.stats.result_count - result.stats.manner_count;
    return result;
}

/// Pre-tags raw sentences and annotates them. Sentences that cannot be pre-tagged count as failed.
inline AnnotationResult annotate_corpus(const std::vector<RawSentence>& raw_sentences, LLMClient& client,
                                        const PromptVariant& variant, AnnotationCache& cache,
                                        const AnnotationOptions& options = {}) {
    if (!options.pos_tagger) throw TaggerFailure("annotate_corpus needs a POS tagger");
    std::vector<TaggedSentence> pretagged;
    std::vector<std::string> pretag_failures;
    std::vector<std::string> pretag_warnings;
    for (const auto& r : raw_sentences) {
        try {
            pretagged.push_back(pretag(r.text, *options.pos_tagger, r.sentence_id, r.source));
        } catch (const EmptySentence& e) {
            pretag_failures.push_back(r.sentence_id);
            pretag_warnings.push_back(e.what());
        } catch (const TaggerFailure& e) {
            pretag_failures.push_back(r.sentence_id);
            pretag_warnings.push_back(e.what());
        }
    }
    auto result = annotate_pretagged(pretagged, client, variant, cache, options);
    result.warnings.insert(result.warnings.end(), pretag_warnings.begin(), pretag_warnings.end());
    result.stats.failed_sentences.insert(result.stats.failed_sentences.end(), pretag_failures.begin(),
                                         pretag_failures.end());
    return result;
}

/// Reads one raw sentence per non-empty line; ids are `<source>-<n>` (1-based line count of non-empty lines).
inline std::vector<RawSentence> read_raw_sentences(std::string_view input, const std::string& source) {
    std::vector<RawSentence> out;
    for (auto line : text::lines(input)) {
        auto t = text::trim(line);
        if (t.empty()) continue;
        out.push_back({source + "-" + std::to_string(out.size() + 1), std::string(t), source});
    }
    return out;
}

struct Disagreement {
    std::string sentence_id;
    std::size_t token_index = 0;
    std::string surface;
    Tag first = Tag::X;
    Tag second = Tag::X;
};

/// Token-level differences in manner/result labelling between two annotations of the same sentences
/// (for example the semantic and syntactic prompt runs). Sentences present in only one corpus are skipped.
inline std::vector<Disagreement> audit_disagreements(const Corpus& first, const Corpus& second) {
    std::map<std::string_view, const TaggedSentence*> other;
    for (const auto& s : second.sentences) other.emplace(s.sentence_id, &s);
    std::vector<Disagreement> out;
    for (const auto& s : first.sentences) {
        auto it = other.find(s.sentence_id);
        if (it == other.end() || it->second->tokens.size() != s.tokens.size()) continue;
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
            Tag a = s.tokens[i].tag;
            Tag b = it->second->tokens[i].tag;
            if (a != b && (is_verb_root_label(a) || is_verb_root_label(b)))
                out.push_back({s.sentence_id, i, s.tokens[i].surface, a, b});
        }
    }
    return out;
}

/// Deterministic train/dev split by FNV-1a hash of the sentence id.
inline std::pair<Corpus, Corpus> split_by_hash(const Corpus& corpus, double dev_fraction) {
    if (dev_fraction < 0.0 || dev_fraction >= 1.0) throw InvalidConfig("dev_fraction must be in [0, 1)");
    Corpus train{{}, Split::Train};
    Corpus dev{{}, Split::Dev};
    const auto threshold = static_cast<std::uint64_t>(dev_fraction * 10000.0);
    for (const auto& s : corpus.sentences) {
        if (text::fnv1a(s.sentence_id) % 10000 < threshold) dev.sentences.push_back(s);
        else train.sentences.push_back(s);
    }
    return {std::move(train), std::move(dev)};
}

}  // namespace mrverb
