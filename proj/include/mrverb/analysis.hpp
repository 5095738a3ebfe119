#pragma once

#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mrverb/corpus.hpp"
#include "mrverb/error.hpp"
#include "mrverb/lemmatizer.hpp"
#include "mrverb/text.hpp"

namespace mrverb {

struct Utterance {
    std::string speaker;
    std::string text;
    std::string transcript_id;
    std::size_t utterance_index = 0;
    friend bool operator==(const Utterance&, const Utterance&) = default;
};

namespace detail {

inline std::string strip_chat_word(std::string_view w) {
    if (w.empty()) return {};
    // events (&=laughs), fillers (&-uh), fragments (&+fr), omitted words (0is), terminators and
    // linkers (+..., +/.), unintelligible material
    if (w[0] == '&' || w[0] == '0' || w[0] == '+') return {};
    if (w == "xxx" || w == "yyy" || w == "www" || w == "xx" || w == "yy") return {};
    std::string out;
    for (char c : w) {
        if (c == '@') break;  // special-form marker: gonna@l
        if (c == '(' || c == ')' || c == '<' || c == '>') continue;
        out += c;
    }
    return out;
}

}  // namespace detail

/// Removes CHAT annotations from an utterance tier: [..] codes, <..> scope brackets, timing
/// bullets, events, fillers, omitted-word and special-form markers. Words and terminators remain.
inline std::string strip_chat_annotations(std::string_view raw) {
    std::string s;
    int depth = 0;
    bool in_bullet = false;
    for (char c : raw) {
        if (c == '\x15') {
            in_bullet = !in_bullet;
            continue;
        }
        if (in_bullet) continue;
        if (c == '[') {
            ++depth;
            continue;
        }
        if (c == ']') {
            if (depth > 0) --depth;
            continue;
        }
        if (depth == 0) s += c;
    }
    std::vector<std::string> kept;
    for (auto w : text::split_ws(s)) {
        auto clean = detail::strip_chat_word(w);
        if (!clean.empty()) kept.push_back(std::move(clean));
    }
    return text::join(kept, " ");
}

/// Reads a CHAT-lite transcript. `*CODE:` lines are utterances (tab-indented lines continue the
/// previous tier), `@` lines are headers, `%` tiers are skipped. When an @Participants header is
/// present, every speaker code must be declared there.
inline std::vector<Utterance> ingest_transcript(std::string_view input, const std::string& transcript_id = "t1") {
    std::vector<Utterance> out;
    std::optional<std::set<std::string>> participants;
    enum class Tier { None, Utterance, Other } last = Tier::None;
    std::size_t line_no = 0;
    for (auto line : text::lines(input)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const char c = line.front();
        if (c == '\t' || c == ' ') {
            if (last == Tier::Utterance) out.back().text += " " + std::string(text::trim(line));
            continue;
        }
        if (c == '@') {
            last = Tier::Other;
            if (text::starts_with(line, "@Participants:")) {
                participants.emplace();
                for (auto entry : text::split(line.substr(14), ',')) {
                    auto words = text::split_ws(entry);
                    if (!words.empty()) participants->insert(std::string(words.front()));
                }
            }
            continue;
        }
        if (c == '%') {
            last = Tier::Other;
            continue;
        }
        if (c != '*')
            throw UnknownSpeakerLine("line " + std::to_string(line_no) + " is not a *speaker, @header or %tier line");
        auto colon = line.find(':');
        if (colon == std::string_view::npos || colon < 2)
            throw UnknownSpeakerLine("line " + std::to_string(line_no) + ": speaker line without a CODE: prefix");
        std::string speaker(line.substr(1, colon - 1));
        if (participants && !participants->count(speaker))
            throw UnknownSpeakerLine("line " + std::to_string(line_no) + ": speaker '" + speaker +
                                     "' is not in @Participants");
        out.push_back({speaker, std::string(text::trim(line.substr(colon + 1))), transcript_id, out.size()});
        last = Tier::Utterance;
    }
    if (out.empty()) throw EmptyTranscript("transcript '" + transcript_id + "' has no utterance lines");
    for (auto& u : out) u.text = strip_chat_annotations(u.text);
    return out;
}

struct TaggedUtterance {
    Utterance utterance;
    TaggedSentence tagged;  // may have no tokens when the utterance was only annotation
};

/// Tags every utterance with `tagger` (tokens -> sentence).
inline std::vector<TaggedUtterance> tag_utterances(
    const std::vector<Utterance>& utterances,
    const std::function<TaggedSentence(const std::vector<std::string>&, const std::string&)>& tagger) {
    std::vector<TaggedUtterance> out;
    out.reserve(utterances.size());
    for (const auto& u : utterances) {
        auto id = u.transcript_id + "-" + std::to_string(u.utterance_index);
        auto tokens = tokenize(u.text);
        TaggedSentence s{id, u.transcript_id, {}};
        if (!tokens.empty()) s = tagger(tokens, id);
        out.push_back({u, std::move(s)});
    }
    return out;
}

enum class RatioBasis { Tokens, Types };

struct SpeakerMeasures {
    std::string speaker;
    std::size_t total_utterances = 0;
    std::size_t manner_tokens = 0;
    std::size_t manner_types = 0;
    std::size_t result_tokens = 0;
    std::size_t result_types = 0;
    std::optional<double> manner_result_ratio;  // empty when the denominator is 0
    std::size_t verb_tokens = 0;                // VERB, manner and result tokens
    std::size_t verb_types = 0;
    std::optional<double> verb_ttr;
    friend bool operator==(const SpeakerMeasures&, const SpeakerMeasures&) = default;
};

inline std::map<std::string, SpeakerMeasures> speaker_measures(const std::vector<TaggedUtterance>& utterances,
                                                               RatioBasis basis = RatioBasis::Tokens,
                                                               const Lemmatizer& lemmatizer = Lemmatizer::shared()) {
    struct Acc {
        std::size_t utterances = 0, manner = 0, result = 0, verbs = 0;
        std::set<std::string> manner_lemmas, result_lemmas, verb_lemmas;
    };
    std::map<std::string, Acc> acc;
    for (const auto& tu : utterances) {
        auto& a = acc[tu.utterance.speaker];
        ++a.utterances;
        for (const auto& t : tu.tagged.tokens) {
            if (!is_relabelable(t.tag)) continue;
            auto lemma = lemmatizer.lemmatize(t.surface);
            ++a.verbs;
            a.verb_lemmas.insert(lemma);
            if (t.tag == Tag::Manner) {
                ++a.manner;
                a.manner_lemmas.insert(lemma);
            } else if (t.tag == Tag::Result) {
                ++a.result;
                a.result_lemmas.insert(lemma);
            }
        }
    }
    std::map<std::string, SpeakerMeasures> out;
    for (const auto& [speaker, a] : acc) {
        SpeakerMeasures m;
        m.speaker = speaker;
        m.total_utterances = a.utterances;
        m.manner_tokens = a.manner;
        m.manner_types = a.manner_lemmas.size();
        m.result_tokens = a.result;
        m.result_types = a.result_lemmas.size();
        const double num = basis == RatioBasis::Tokens ? static_cast<double>(m.manner_tokens)
                                                       : static_cast<double>(m.manner_types);
        const double den = basis == RatioBasis::Tokens ? static_cast<double>(m.result_tokens)
                                                       : static_cast<double>(m.result_types);
        if (den > 0.0) m.manner_result_ratio = num / den;
        m.verb_tokens = a.verbs;
        m.verb_types = a.verb_lemmas.size();
        if (a.verbs > 0) m.verb_ttr = static_cast<double>(m.verb_types) / static_cast<double>(m.verb_tokens);
        out.emplace(speaker, std::move(m));
    }
    return out;
}

inline constexpr const char* kMeasuresHeader =
    "speaker\ttotal_utterances\tmanner_tokens\tmanner_types\tresult_tokens\tresult_types\t"
    "manner_result_ratio\tverb_tokens\tverb_types\tverb_ttr";

/// Tab-separated table, one row per speaker in code order; undefined ratios print as NA.
inline std::string format_measures(const std::map<std::string, SpeakerMeasures>& measures) {
    auto num = [](const std::optional<double>& v) {
        if (!v) return std::string("NA");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", *v);
        return std::string(buf);
    };
    std::ostringstream out;
    out << kMeasuresHeader << '\n';
    for (const auto& [speaker, m] : measures) {
        out << speaker << '\t' << m.total_utterances << '\t' << m.manner_tokens << '\t' << m.manner_types << '\t'
            << m.result_tokens << '\t' << m.result_types << '\t' << num(m.manner_result_ratio) << '\t'
            << m.verb_tokens << '\t' << m.verb_types << '\t' << num(m.verb_ttr) << '\n';
    }
    return out.str();
}

}  // namespace mrverb
