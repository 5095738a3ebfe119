#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrverb/corpus.hpp"
#include "mrverb/error.hpp"

namespace mrverb {

/// One manner/result decision about one verb occurrence.
struct VerbJudgment {
    std::string sentence_id;
    std::size_t token_index = 0;
    std::string surface;
    Tag label = Tag::Manner;  // Tag::Result or Tag::Manner
    std::optional<std::string> raw_justification;

    friend bool operator==(const VerbJudgment&, const VerbJudgment&) = default;
};

inline nlohmann::json to_json(const VerbJudgment& j) {
    nlohmann::json out = {{"sentence_id", j.sentence_id},
                          {"token_index", j.token_index},
                          {"surface", j.surface},
                          {"label", std::string(tag_name(j.label))}};
    if (j.raw_justification) out["justification"] = *j.raw_justification;
    return out;
}

inline VerbJudgment judgment_from_json(const nlohmann::json& in) {
    VerbJudgment j;
    j.sentence_id = in.at("sentence_id").get<std::string>();
    j.token_index = in.at("token_index").get<std::size_t>();
    j.surface = in.at("surface").get<std::string>();
    auto label = parse_tag(in.at("label").get<std::string>());
    if (!label || !is_verb_root_label(*label)) throw Error("judgment label must be result or manner");
    j.label = *label;
    if (in.contains("justification")) j.raw_justification = in.at("justification").get<std::string>();
    return j;
}

struct ParsedResponse {
    std::vector<VerbJudgment> judgments;
    std::vector<std::string> warnings;  // one per dropped record
};

namespace detail {

/// Finds the structured block: a ```json fence if present, else the first balanced {...} or [...].
inline std::optional<std::string_view> extract_json_block(std::string_view raw) {
    if (auto fence = raw.find("```json"); fence != std::string_view::npos) {
        auto start = raw.find('\n', fence);
        if (start != std::string_view::npos) {
            auto end = raw.find("```", start);
            if (end != std::string_view::npos) return raw.substr(start + 1, end - start - 1);
        }
    }
    auto start = raw.find_first_of("{[");
    if (start == std::string_view::npos) return std::nullopt;
    std::vector<char> stack;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
        char c = raw[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{' || c == '[') stack.push_back(c);
        else if (c == '}' || c == ']') {
            char open = c == '}' ? '{' : '[';
            if (stack.empty() || stack.back() != open) return std::nullopt;
            stack.pop_back();
            if (stack.empty()) return raw.substr(start, i - start + 1);
        }
    }
    return std::nullopt;
}

inline bool iequals(std::string_view a, std::string_view b) { return text::to_lower(a) == text::to_lower(b); }

}  // namespace detail

/// Parses the annotator's structured block and validates every record against `batch`.
/// Structural problems (no block, malformed JSON, missing or mistyped fields) throw; records that
/// reference the wrong sentence, an out-of-range or non-VERB token, a mismatched surface, or a
/// label outside {result, manner} are dropped with a warning. Output is sorted by
/// (sentence_id, token_index); the first judgment for a token wins.
inline ParsedResponse parse_llm_response(const std::string& raw, const std::vector<TaggedSentence>& batch) {
    auto block = detail::extract_json_block(raw);
    if (!block) throw UnparseableResponse("no structured JSON block in annotator reply", raw);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(*block);
    } catch (const nlohmann::json::parse_error& e) {
        throw UnparseableResponse(std::string("annotator reply is not valid JSON: ") + e.what(), raw);
    }

    const nlohmann::json* records = nullptr;
    if (doc.is_array()) {
        records = &doc;
    } else if (doc.is_object() && doc.contains("judgments") && doc["judgments"].is_array()) {
        records = &doc["judgments"];
    } else {
        throw SchemaViolation("reply must be a list of records or an object with a 'judgments' list", raw);
    }

    std::map<std::string_view, const TaggedSentence*> by_id;
    for (const auto& s : batch) by_id.emplace(s.sentence_id, &s);

    ParsedResponse out;
    std::set<std::pair<std::string, std::size_t>> seen;
    std::size_t n = 0;
    for (const auto& rec : *records) {
        auto where = "record " + std::to_string(n++);
        if (!rec.is_object()) throw SchemaViolation(where + " is not an object", raw);
        for (const char* field : {"sentence_id", "token_index", "surface", "label"})
            if (!rec.contains(field)) throw SchemaViolation(where + " is missing '" + field + "'", raw);
        if (!rec["sentence_id"].is_string()) throw SchemaViolation(where + ": sentence_id must be a string", raw);
        if (!rec["token_index"].is_number_integer())
            throw SchemaViolation(where + ": token_index must be an integer", raw);
        if (!rec["surface"].is_string()) throw SchemaViolation(where + ": surface must be a string", raw);
        if (!rec["label"].is_string()) throw SchemaViolation(where + ": label must be a string", raw);
        if (rec.contains("justification") && !rec["justification"].is_string() && !rec["justification"].is_null())
            throw SchemaViolation(where + ": justification must be a string", raw);

        auto sid = rec["sentence_id"].get<std::string>();
        auto index = rec["token_index"].get<long long>();
        auto surface = rec["surface"].get<std::string>();
        auto label_text = text::to_lower(rec["label"].get<std::string>());

        auto it = by_id.find(sid);
        if (it == by_id.end()) {
            out.warnings.push_back(where + ": sentence '" + sid + "' is not in the batch; dropped");
            continue;
        }
        const TaggedSentence& s = *it->second;
        if (index < 0 || static_cast<std::size_t>(index) >= s.tokens.size()) {
            out.warnings.push_back(where + ": token_index " + std::to_string(index) + " out of range for '" + sid +
                                   "'; dropped");
            continue;
        }
        const auto& token = s.tokens[static_cast<std::size_t>(index)];
        if (!detail::iequals(token.surface, surface)) {
            out.warnings.push_back(where + ": surface '" + surface + "' does not match token '" + token.surface +
                                   "' in '" + sid + "'; dropped");
            continue;
        }
        if (token.tag != Tag::VERB) {
            out.warnings.push_back(where + ": '" + token.surface + "' in '" + sid + "' is tagged " +
                                   std::string(tag_name(token.tag)) + ", not VERB; dropped");
            continue;
        }
        Tag label;
        if (label_text == "result") label = Tag::Result;
        else if (label_text == "manner") label = Tag::Manner;
        else {
            out.warnings.push_back(where + ": label '" + label_text + "' is not result/manner; dropped");
            continue;
        }
        if (!seen.emplace(sid, static_cast<std::size_t>(index)).second) {
            out.warnings.push_back(where + ": duplicate judgment for '" + sid + "' token " + std::to_string(index) +
                                   "; dropped");
            continue;
        }
        VerbJudgment j{sid, static_cast<std::size_t>(index), token.surface, label, std::nullopt};
        if (rec.contains("justification") && rec["justification"].is_string())
            j.raw_justification = rec["justification"].get<std::string>();
        out.judgments.push_back(std::move(j));
    }
    std::stable_sort(out.judgments.begin(), out.judgments.end(), [](const VerbJudgment& a, const VerbJudgment& b) {
        return std::tie(a.sentence_id, a.token_index) < std::tie(b.sentence_id, b.token_index);
    });
    return out;
}

/// Replaces the tags of the addressed verbs with their judgment labels; every other token is
/// returned unchanged. Re-applying the same judgments is a no-op.
inline TaggedSentence merge_labels(const TaggedSentence& sentence, const std::vector<VerbJudgment>& judgments) {
    for (const auto& j : judgments) {
        if (j.sentence_id != sentence.sentence_id)
            throw IndexMismatch("judgment for '" + j.sentence_id + "' applied to sentence '" + sentence.sentence_id +
                                "'");
        if (j.token_index >= sentence.tokens.size())
            throw IndexMismatch("token_index " + std::to_string(j.token_index) + " out of range in '" +
                                sentence.sentence_id + "'");
        const auto& t = sentence.tokens[j.token_index];
        if (!is_relabelable(t.tag))
            throw IndexMismatch("token " + std::to_string(j.token_index) + " ('" + t.surface + "') in '" +
                                sentence.sentence_id + "' is tagged " + std::string(tag_name(t.tag)) + ", not VERB");
        if (!detail::iequals(t.surface, j.surface))
            throw IndexMismatch("judgment surface '" + j.surface + "' does not match token '" + t.surface + "' in '" +
                                sentence.sentence_id + "'");
        if (!is_verb_root_label(j.label))
            throw IndexMismatch("judgment label must be result or manner");
    }
    TaggedSentence out = sentence;
    for (const auto& j : judgments) out.tokens[j.token_index].tag = j.label;
    return out;
}

}  // namespace mrverb
