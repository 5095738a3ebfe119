#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrverb/corpus.hpp"
#include "mrverb/diagnostics.hpp"
#include "mrverb/error.hpp"
#include "mrverb/lemmatizer.hpp"
#include "mrverb/pos_tagger.hpp"
#include "mrverb/prompt.hpp"

namespace mrverb {

enum class GoldLabel { Result, Manner, Stative, Unsure };

inline std::string_view to_string(GoldLabel l) {
    switch (l) {
        case GoldLabel::Result: return "result";
        case GoldLabel::Manner: return "manner";
        case GoldLabel::Stative: return "stative";
        case GoldLabel::Unsure: return "unsure";
    }
    return "unsure";
}

inline std::optional<GoldLabel> parse_gold_label(std::string_view s) {
    if (s == "result") return GoldLabel::Result;
    if (s == "manner") return GoldLabel::Manner;
    if (s == "stative") return GoldLabel::Stative;
    if (s == "unsure") return GoldLabel::Unsure;
    return std::nullopt;
}

enum class DatasetId { Linguists, Psycholinguistic, Expert };

inline std::string_view to_string(DatasetId d) {
    switch (d) {
        case DatasetId::Linguists: return "linguists";
        case DatasetId::Psycholinguistic: return "psycholinguistic";
        case DatasetId::Expert: return "expert";
    }
    return "expert";
}

inline DatasetId parse_dataset_id(std::string_view s) {
    if (s == "linguists") return DatasetId::Linguists;
    if (s == "psycholinguistic") return DatasetId::Psycholinguistic;
    if (s == "expert") return DatasetId::Expert;
    throw Error("unknown dataset '" + std::string(s) + "' (expected linguists, psycholinguistic or expert)");
}

struct Composition {
    std::size_t total = 0;
    std::size_t result = 0;
    std::size_t manner = 0;
    std::size_t stative = 0;
    std::size_t unsure = 0;
    friend bool operator==(const Composition&, const Composition&) = default;
};

inline Composition expected_composition(DatasetId d) {
    switch (d) {
        case DatasetId::Linguists: return {83, 34, 49, 0, 0};
        case DatasetId::Psycholinguistic: return {77, 36, 41, 0, 0};
        case DatasetId::Expert: return {200, 48, 62, 23, 67};
    }
    return {};
}

struct GoldItem {
    std::string item_id;
    std::string verb_lemma;
    GoldLabel gold_label = GoldLabel::Unsure;
    std::string carrier_sentence;
    std::vector<std::string> tokens;  // tokenize(carrier_sentence)
    std::size_t target_token_index = 0;
    std::string verbnet_class;  // expert items only; may be empty
};

struct GoldSet {
    DatasetId dataset_id = DatasetId::Linguists;
    std::vector<GoldItem> items;

    Composition composition() const {
        Composition c;
        c.total = items.size();
        for (const auto& i : items) {
            switch (i.gold_label) {
                case GoldLabel::Result: ++c.result; break;
                case GoldLabel::Manner: ++c.manner; break;
                case GoldLabel::Stative: ++c.stative; break;
                case GoldLabel::Unsure: ++c.unsure; break;
            }
        }
        return c;
    }
};

/// True when `surface` is a plausible inflection (base, -s, -ed, -ing, or an irregular form) of `lemma`.
inline bool is_inflection_of(std::string_view surface, std::string_view lemma,
                             const Lemmatizer& lemmatizer = Lemmatizer::shared()) {
    const std::string w = text::to_lower(surface);
    const std::string l = text::to_lower(lemma);
    if (w == l || lemmatizer.lemmatize(w) == l) return true;
    std::set<std::string> forms = {l + "s", l + "es", l + "ed", l + "d", l + "ing"};
    if (!l.empty()) {
        char last = l.back();
        forms.insert(l + last + "ed");
        forms.insert(l + last + "ing");
        if (last == 'e') forms.insert(l.substr(0, l.size() - 1) + "ing");
        if (last == 'y') {
            forms.insert(l.substr(0, l.size() - 1) + "ied");
            forms.insert(l.substr(0, l.size() - 1) + "ies");
        }
    }
    return forms.count(w) > 0;
}

/// Parses a gold file: tab-separated item_id, lemma, label, carrier sentence, target index, and an
/// optional VerbNet class. `#` lines are comments. Composition is verified unless `verify` is false.
inline GoldSet parse_gold(DatasetId dataset, std::string_view input, bool verify = true) {
    GoldSet set{dataset, {}};
    std::set<std::string> ids;
    std::size_t line_no = 0;
    for (auto raw : text::lines(input)) {
        ++line_no;
        auto line = text::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto where = "line " + std::to_string(line_no);
        auto cols = text::split(raw, '\t');
        if (cols.size() < 5 || cols.size() > 6)
            throw MalformedItem(where + ": expected 5 or 6 tab-separated columns, found " + std::to_string(cols.size()));
        GoldItem item;
        item.item_id = std::string(text::trim(cols[0]));
        item.verb_lemma = std::string(text::trim(cols[1]));
        auto label = parse_gold_label(text::trim(cols[2]));
        if (!label) throw MalformedItem(where + ": unknown label '" + std::string(cols[2]) + "'");
        item.gold_label = *label;
        if (dataset != DatasetId::Expert && (*label == GoldLabel::Stative || *label == GoldLabel::Unsure))
            throw MalformedItem(where + ": only the expert set may use stative/unsure");
        item.carrier_sentence = std::string(text::trim(cols[3]));
        item.tokens = tokenize(item.carrier_sentence);
        try {
            std::size_t used = 0;
            auto idx = std::stoul(std::string(text::trim(cols[4])), &used);
            if (used != text::trim(cols[4]).size()) throw std::invalid_argument("trailing characters");
            item.target_token_index = idx;
        } catch (const std::exception&) {
            throw MalformedItem(where + ": target index '" + std::string(cols[4]) + "' is not a number");
        }
        if (cols.size() == 6) item.verbnet_class = std::string(text::trim(cols[5]));
        if (item.item_id.empty() || item.verb_lemma.empty()) throw MalformedItem(where + ": empty id or lemma");
        if (!ids.insert(item.item_id).second) throw MalformedItem(where + ": duplicate item id '" + item.item_id + "'");
        if (item.target_token_index >= item.tokens.size())
            throw MalformedItem(where + ": target index " + std::to_string(item.target_token_index) +
                                " outside a sentence of " + std::to_string(item.tokens.size()) + " tokens");
        const auto& surface = item.tokens[item.target_token_index];
        if (!is_inflection_of(surface, item.verb_lemma))
            throw MalformedItem(where + ": target token '" + surface + "' is not a form of '" + item.verb_lemma + "'");
        set.items.push_back(std::move(item));
    }
    if (verify) {
        auto want = expected_composition(dataset);
        auto got = set.composition();
        if (got != want) {
            auto fmt = [](const Composition& c) {
                return std::to_string(c.total) + " items (" + std::to_string(c.result) + " result, " +
                       std::to_string(c.manner) + " manner, " + std::to_string(c.stative) + " stative, " +
                       std::to_string(c.unsure) + " unsure)";
            };
            throw CompositionMismatch(std::string(to_string(dataset)) + " gold set: expected " + fmt(want) +
                                      ", found " + fmt(got));
        }
    }
    return set;
}

inline GoldSet load_gold(DatasetId dataset, const std::filesystem::path& path, bool verify = true) {
    return parse_gold(dataset, read_file(path), verify);
}

inline std::filesystem::path default_gold_path(DatasetId dataset) {
    return default_data_dir() / "gold" / (std::string(to_string(dataset)) + ".tsv");
}

// Scoring classes; also the row/column order of the confusion matrix.
enum class EvalClass : std::size_t { Result = 0, Manner = 1, Other = 2 };
inline constexpr std::array<std::string_view, 3> kEvalClassNames = {"result", "manner", "other"};

inline EvalClass eval_class_of(Tag t) {
    if (t == Tag::Result) return EvalClass::Result;
    if (t == Tag::Manner) return EvalClass::Manner;
    return EvalClass::Other;
}

inline EvalClass eval_class_of(GoldLabel l) {
    if (l == GoldLabel::Result) return EvalClass::Result;
    if (l == GoldLabel::Manner) return EvalClass::Manner;
    return EvalClass::Other;
}

using Confusion = std::array<std::array<std::size_t, 3>, 3>;  // [gold][predicted]

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct ItemOutcome {
    std::string item_id;
    std::string lemma;
    GoldLabel gold = GoldLabel::Unsure;
    EvalClass predicted = EvalClass::Other;
    std::string predicted_tag;
    bool predictor_failed = false;
};

struct EvalReport {
    std::string dataset_id;
    double accuracy = 0.0;
    double result_manner_accuracy = 0.0;  // result/manner diagonal only, over n_scored
    ClassMetrics result;
    ClassMetrics manner;
    Confusion confusion{};
    std::size_t n_scored = 0;
    std::size_t n_excluded = 0;
    std::size_t n_predictor_failures = 0;
    std::vector<ItemOutcome> outcomes;  // one per scored item, in input order
};

/// One-vs-rest metrics for class `c` from a confusion matrix; undefined ratios are 0.
inline ClassMetrics class_metrics(const Confusion& m, EvalClass c) {
    const auto k = static_cast<std::size_t>(c);
    std::size_t tp = m[k][k], gold = 0, pred = 0;
    for (std::size_t j = 0; j < 3; ++j) {
        gold += m[k][j];
        pred += m[j][k];
    }
    ClassMetrics out;
    out.support = gold;
    out.precision = pred ? static_cast<double>(tp) / static_cast<double>(pred) : 0.0;
    out.recall = gold ? static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
    out.f1 = out.precision + out.recall > 0.0 ? 2.0 * out.precision * out.recall / (out.precision + out.recall) : 0.0;
    return out;
}

/// Fills the metric fields of a report from its confusion matrix. Accuracy counts every diagonal
/// cell, so a stative item predicted as a non-verb-root tag is correct.
inline void finalize_metrics(EvalReport& r) {
    std::size_t n = 0, diag = 0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            n += r.confusion[i][j];
            if (i == j) diag += r.confusion[i][j];
        }
    r.n_scored = n;
    r.accuracy = n ? static_cast<double>(diag) / static_cast<double>(n) : 0.0;
    r.result_manner_accuracy = n ? static_cast<double>(r.confusion[0][0] + r.confusion[1][1]) / static_cast<double>(n) : 0.0;
    r.result = class_metrics(r.confusion, EvalClass::Result);
    r.manner = class_metrics(r.confusion, EvalClass::Manner);
}

/// Given the carrier tokens and an id, returns the tagged sentence.
using Predictor = std::function<TaggedSentence(const std::vector<std::string>& tokens, const std::string& id)>;

/// Scores `predict` on every item that is not unsure. A predictor that throws or returns the
/// wrong number of tokens scores the item as other and is counted in n_predictor_failures.
inline EvalReport evaluate(const Predictor& predict, const GoldSet& gold) {
    EvalReport r;
    r.dataset_id = std::string(to_string(gold.dataset_id));
    for (const auto& item : gold.items) {
        if (item.gold_label == GoldLabel::Unsure) {
            ++r.n_excluded;
            continue;
        }
        ItemOutcome o{item.item_id, item.verb_lemma, item.gold_label, EvalClass::Other, "", false};
        try {
            auto tagged = predict(item.tokens, item.item_id);
            if (tagged.tokens.size() != item.tokens.size()) throw Error("predictor changed the token count");
            Tag t = tagged.tokens[item.target_token_index].tag;
            o.predicted = eval_class_of(t);
            o.predicted_tag = std::string(tag_name(t));
        } catch (const std::exception&) {
            o.predictor_failed = true;
            ++r.n_predictor_failures;
        }
        ++r.confusion[static_cast<std::size_t>(eval_class_of(item.gold_label))][static_cast<std::size_t>(o.predicted)];
        r.outcomes.push_back(std::move(o));
    }
    finalize_metrics(r);
    return r;
}

inline double macro_average_accuracy(const std::vector<EvalReport>& reports) {
    if (reports.empty()) throw EmptyInput("macro average needs at least one report");
    double sum = 0.0;
    for (const auto& r : reports) sum += r.accuracy;
    return sum / static_cast<double>(reports.size());
}

inline nlohmann::json to_json(const ClassMetrics& m) {
    return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
}

inline nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json confusion = nlohmann::json::object();
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            confusion[std::string(kEvalClassNames[i])][std::string(kEvalClassNames[j])] = r.confusion[i][j];
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& o : r.outcomes)
        if (o.predictor_failed) failures.push_back(o.item_id);
    return {{"dataset", r.dataset_id},
            {"accuracy", r.accuracy},
            {"result_manner_accuracy", r.result_manner_accuracy},
            {"result", to_json(r.result)},
            {"manner", to_json(r.manner)},
            {"confusion", confusion},
            {"n_scored", r.n_scored},
            {"n_excluded", r.n_excluded},
            {"n_predictor_failures", r.n_predictor_failures},
            {"predictor_failures", failures}};
}

/// Plain-text table: one row per dataset with accuracy and result/manner precision, recall, F1.
inline std::string format_report_table(const std::vector<EvalReport>& reports, bool with_average = true) {
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-18s %8s | %6s %6s %6s | %6s %6s %6s | %6s %6s\n", "dataset", "accuracy",
                  "R-P", "R-R", "R-F1", "M-P", "M-R", "M-F1", "scored", "excl");
    out << buf;
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof buf, "%-18s %8.4f | %6.3f %6.3f %6.3f | %6.3f %6.3f %6.3f | %6zu %6zu\n",
                      r.dataset_id.c_str(), r.accuracy, r.result.precision, r.result.recall, r.result.f1,
                      r.manner.precision, r.manner.recall, r.manner.f1, r.n_scored, r.n_excluded);
        out << buf;
    }
    if (with_average && !reports.empty()) {
        std::snprintf(buf, sizeof buf, "%-18s %8.4f\n", "macro average", macro_average_accuracy(reports));
        out << buf;
    }
    return out.str();
}

/// Lemmas with known annotator disagreement, with a free-text note. File: lemma<TAB>note.
inline std::map<std::string, std::string> load_known_disagreements(const std::filesystem::path& path) {
    std::map<std::string, std::string> out;
    const auto content = read_file(path);
    for (auto raw : text::lines(content)) {
        auto line = text::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto cols = text::split(line, '\t');
        out[text::to_lower(text::trim(cols[0]))] = cols.size() > 1 ? std::string(text::trim(cols[1])) : "";
    }
    return out;
}

/// Scored outcomes whose lemma is on the known-disagreement list.
inline std::vector<ItemOutcome> known_disagreement_outcomes(const EvalReport& report,
                                                            const std::map<std::string, std::string>& lemmas) {
    std::vector<ItemOutcome> out;
    for (const auto& o : report.outcomes)
        if (lemmas.count(text::to_lower(o.lemma))) out.push_back(o);
    return out;
}

/// Rule baseline: POS-tags the sentence and labels each verb with the diagnostics; verbs the
/// diagnostics cannot decide keep the VERB tag.
inline Predictor diagnostics_predictor(const DiagnosticLexicon& lexicon, const PosTagger& pos_tagger,
                                       const Lemmatizer& lemmatizer = Lemmatizer::shared()) {
    return [&lexicon, &pos_tagger, &lemmatizer](const std::vector<std::string>& tokens, const std::string& id) {
        auto tags = pos_tagger.tag(tokens);
        auto s = make_sentence(id, tokens, tags);
        auto out = s;
        for (const auto& t : s.tokens) {
            if (t.tag != Tag::VERB) continue;
            auto trace = diagnose(t, s, lexicon, lemmatizer);
            if (trace.final_label == RootLabel::Result) out.tokens[t.index].tag = Tag::Result;
            else if (trace.final_label == RootLabel::Manner) out.tokens[t.index].tag = Tag::Manner;
        }
        return out;
    };
}

}  // namespace mrverb
