#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "mrverb/corpus.hpp"
#include "mrverb/error.hpp"
#include "mrverb/lemmatizer.hpp"

namespace mrverb {

enum class ScalarClass { TwoPoint, Gradable, NonScalar, Unknown };
enum class Alternation { Yes, No, Unknown };
enum class RootLabel { Manner, Result, Unknown };

inline std::string_view to_string(ScalarClass c) {
    switch (c) {
        case ScalarClass::TwoPoint: return "two_point";
        case ScalarClass::Gradable: return "gradable";
        case ScalarClass::NonScalar: return "nonscalar";
        case ScalarClass::Unknown: break;
    }
    return "unknown";
}

inline std::string_view to_string(Alternation a) {
    switch (a) {
        case Alternation::Yes: return "yes";
        case Alternation::No: return "no";
        case Alternation::Unknown: break;
    }
    return "unknown";
}

inline std::string_view to_string(RootLabel l) {
    switch (l) {
        case RootLabel::Manner: return "manner";
        case RootLabel::Result: return "result";
        case RootLabel::Unknown: break;
    }
    return "unknown";
}

struct LexiconEntry {
    int manner_votes = 0;
    int result_votes = 0;
    ScalarClass scalar_class = ScalarClass::Unknown;
    Alternation alternation = Alternation::Unknown;
    std::string provenance;

    /// The label the votes support with a margin of at least one, if any.
    RootLabel vote_label() const {
        if (result_votes - manner_votes >= 1) return RootLabel::Result;
        if (manner_votes - result_votes >= 1) return RootLabel::Manner;
        return RootLabel::Unknown;
    }
};

/// Lemma-keyed verb-root knowledge. Plain-text format, one entry per line:
///   lemma <TAB> manner_votes <TAB> result_votes <TAB> scalar_class <TAB> alternation <TAB> provenance
/// Lines starting with '#' are comments.
class DiagnosticLexicon {
public:
    void set(std::string lemma, LexiconEntry entry) { entries_[std::move(lemma)] = std::move(entry); }

    const LexiconEntry* find(std::string_view lemma) const {
        auto it = entries_.find(std::string(lemma));
        return it == entries_.end() ? nullptr : &it->second;
    }

    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const std::map<std::string, LexiconEntry>& entries() const { return entries_; }

    static DiagnosticLexicon parse(std::string_view input) {
        DiagnosticLexicon lex;
        std::size_t line_no = 0;
        for (auto line : text::lines(input)) {
            ++line_no;
            if (text::trim(line).empty() || line.front() == '#') continue;
            auto f = text::split(line, '\t');
            auto where = "lexicon line " + std::to_string(line_no);
            if (f.size() != 6) throw MalformedLine(where + ": expected 6 columns");
            LexiconEntry e;
            try {
                e.manner_votes = std::stoi(std::string(f[1]));
                e.result_votes = std::stoi(std::string(f[2]));
            } catch (const std::exception&) {
                throw MalformedLine(where + ": vote counts must be integers");
            }
            e.scalar_class = parse_scalar(f[3], where);
            e.alternation = parse_alternation(f[4], where);
            e.provenance = std::string(f[5]);
            lex.set(text::to_lower(f[0]), std::move(e));
        }
        return lex;
    }

    static DiagnosticLexicon load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open lexicon file: " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    std::string serialize() const {
        std::string out = "# lemma\tmanner_votes\tresult_votes\tscalar_class\talternation\tprovenance\n";
        for (const auto& [lemma, e] : entries_) {
            out += lemma + '\t' + std::to_string(e.manner_votes) + '\t' + std::to_string(e.result_votes) + '\t';
            out += std::string(to_string(e.scalar_class)) + '\t' + std::string(to_string(e.alternation)) + '\t';
            out += e.provenance + '\n';
        }
        return out;
    }

private:
    static ScalarClass parse_scalar(std::string_view s, const std::string& where) {
        if (s == "two_point") return ScalarClass::TwoPoint;
        if (s == "gradable") return ScalarClass::Gradable;
        if (s == "nonscalar") return ScalarClass::NonScalar;
        if (s == "unknown") return ScalarClass::Unknown;
        throw MalformedLine(where + ": bad scalar_class '" + std::string(s) + "'");
    }

    static Alternation parse_alternation(std::string_view s, const std::string& where) {
        if (s == "yes") return Alternation::Yes;
        if (s == "no") return Alternation::No;
        if (s == "unknown") return Alternation::Unknown;
        throw MalformedLine(where + ": bad alternation '" + std::string(s) + "'");
    }

    std::map<std::string, LexiconEntry> entries_;
};

enum class Confidence { Lexicon, Syntactic, Default };

inline std::string_view to_string(Confidence c) {
    switch (c) {
        case Confidence::Lexicon: return "lexicon";
        case Confidence::Syntactic: return "syntactic";
        case Confidence::Default: break;
    }
    return "default";
}

struct DiagnosticVerdict {
    RootLabel vote = RootLabel::Unknown;  // Unknown = did not fire
    std::string evidence;

    bool fired() const { return vote != RootLabel::Unknown; }
};

/// Index 0..3 correspond to the object-omission, alternation, telicity and scalar-change diagnostics.
struct DiagnosticTrace {
    std::string lemma;
    std::array<DiagnosticVerdict, 4> verdicts;
    RootLabel final_label = RootLabel::Unknown;
    Confidence confidence = Confidence::Default;

    const DiagnosticVerdict& object_omission() const { return verdicts[0]; }
    const DiagnosticVerdict& alternation() const { return verdicts[1]; }
    const DiagnosticVerdict& telicity() const { return verdicts[2]; }
    const DiagnosticVerdict& scalar_change() const { return verdicts[3]; }
};

namespace detail {

inline const std::unordered_set<std::string>& duration_nouns() {
    static const std::unordered_set<std::string> words = {
        "second", "seconds", "minute", "minutes", "hour", "hours", "day",  "days",  "week",  "weeks",
        "month",  "months",  "year",   "years",   "night", "nights", "while", "moment", "moments", "decade",
        "decades", "morning", "afternoon", "evening", "time", "ages"};
    return words;
}

inline const std::unordered_set<std::string>& agentive_pronouns() {
    static const std::unordered_set<std::string> words = {
        "i", "you", "he", "she", "we", "they", "who", "someone", "somebody", "everyone", "everybody", "nobody",
        "anyone", "anybody"};
    return words;
}

inline const std::unordered_set<std::string>& animate_nouns() {
    static const std::unordered_set<std::string> words = {
        "child",   "children", "man",    "men",    "woman",  "women",  "boy",     "boys",    "girl",  "girls",
        "mother",  "father",   "mom",    "mommy",  "dad",    "daddy",  "baby",    "babies",  "kid",   "kids",
        "people",  "person",   "teacher", "doctor", "farmer", "cook",   "chef",    "dog",     "cat",   "bird",
        "horse",   "student",  "friend", "brother", "sister", "king",  "queen",   "soldier", "driver", "player",
        "runner",  "worker",   "president", "team", "crowd",  "neighbor", "grandma", "grandpa", "doggie", "kitty"};
    return words;
}

inline bool is_clause_boundary(Tag t) {
    switch (t) {
        case Tag::ADP: case Tag::SCONJ: case Tag::CCONJ: case Tag::PUNCT: case Tag::VERB: case Tag::AUX:
        case Tag::INTJ: case Tag::Result: case Tag::Manner:
            return true;
        default:
            return false;
    }
}

inline bool is_nominal(Tag t) { return t == Tag::NOUN || t == Tag::PROPN || t == Tag::PRON; }

/// Nearest nominal after the verb and before a clause boundary, skipping temporal nouns.
inline std::optional<std::size_t> find_object(const TaggedSentence& s, std::size_t verb) {
    for (std::size_t i = verb + 1; i < s.tokens.size(); ++i) {
        const auto& t = s.tokens[i];
        if (is_clause_boundary(t.tag)) return std::nullopt;
        if (is_nominal(t.tag)) {
            if (duration_nouns().count(text::to_lower(t.surface))) continue;
            return i;
        }
    }
    return std::nullopt;
}

inline std::optional<std::size_t> find_subject(const TaggedSentence& s, std::size_t verb) {
    for (std::size_t i = verb; i-- > 0;) {
        const auto& t = s.tokens[i];
        if (is_nominal(t.tag)) return i;
        if (t.tag == Tag::PUNCT || t.tag == Tag::SCONJ || t.tag == Tag::CCONJ || t.tag == Tag::VERB ||
            is_verb_root_label(t.tag))
            return std::nullopt;
    }
    return std::nullopt;
}

inline bool is_agentive(const TaggedToken& t) {
    auto w = text::to_lower(t.surface);
    if (t.tag == Tag::PROPN) return true;
    if (t.tag == Tag::PRON) return agentive_pronouns().count(w) > 0;
    return animate_nouns().count(w) > 0;
}

/// "in/for" + optional determiner/numeral/adjective + duration noun, anywhere after the verb.
inline DiagnosticVerdict telicity_cue(const TaggedSentence& s, std::size_t verb) {
    for (std::size_t i = verb + 1; i < s.tokens.size(); ++i) {
        auto prep = text::to_lower(s.tokens[i].surface);
        if (prep != "in" && prep != "for") continue;
        std::size_t j = i + 1;
        std::string phrase = prep;
        while (j < s.tokens.size() && j <= i + 3) {
            const auto& t = s.tokens[j];
            auto w = text::to_lower(t.surface);
            phrase += " " + t.surface;
            if (duration_nouns().count(w)) {
                if (prep == "in") return {RootLabel::Result, "telic adjunct '" + phrase + "'"};
                return {RootLabel::Manner, "atelic adjunct '" + phrase + "'"};
            }
            if (t.tag != Tag::DET && t.tag != Tag::NUM && t.tag != Tag::ADJ && w != "a" && w != "few" &&
                w != "couple" && w != "of")
                break;
            ++j;
        }
    }
    return {};
}

}  // namespace detail

/// Rule-based manner/result decision for one verb occurrence. Root knowledge (lexicon scalar class,
/// then lexicon votes, then alternation) outranks clause cues; clause cues (object omission with an
/// agentive subject, in/for duration adjuncts) are combined by vote and ties give Unknown.
inline DiagnosticTrace diagnose(const TaggedToken& verb, const TaggedSentence& sentence,
                                const DiagnosticLexicon& lexicon,
                                const Lemmatizer& lemmatizer = Lemmatizer::shared()) {
    if (!is_relabelable(verb.tag))
        throw NotAVerb("'" + verb.surface + "' is tagged " + std::string(tag_name(verb.tag)) + ", not VERB");
    if (verb.index >= sentence.tokens.size() || sentence.tokens[verb.index].surface != verb.surface)
        throw NotAVerb("'" + verb.surface + "' does not occur at index " + std::to_string(verb.index) +
                       " of sentence '" + sentence.sentence_id + "'");

    DiagnosticTrace trace;
    trace.lemma = lemmatizer.lemmatize(verb.surface);
    const LexiconEntry* entry = lexicon.find(trace.lemma);

    // object omission
    auto object = detail::find_object(sentence, verb.index);
    auto subject = detail::find_subject(sentence, verb.index);
    bool agentive_subject = subject && detail::is_agentive(sentence.tokens[*subject]);
    if (!object && agentive_subject) {
        trace.verdicts[0] = {RootLabel::Manner, "no object after the verb; agentive subject '" +
                                                    sentence.tokens[*subject].surface + "'"};
    } else if (object) {
        trace.verdicts[0].evidence = "object '" + sentence.tokens[*object].surface + "'";
    } else {
        trace.verdicts[0].evidence = "no object; subject not agentive";
    }

    // causative/inchoative alternation
    bool inchoative_frame = !object && subject && !agentive_subject;
    if (entry && entry->alternation == Alternation::Yes) {
        trace.verdicts[1] = {RootLabel::Result, "lexicon: alternates"};
        if (inchoative_frame)
            trace.verdicts[1].evidence += "; inchoative frame with subject '" + sentence.tokens[*subject].surface + "'";
    } else if (inchoative_frame) {
        trace.verdicts[1].evidence = "inchoative frame, alternation unknown";
    }

    trace.verdicts[2] = detail::telicity_cue(sentence, verb.index);

    // scalar vs non-scalar change
    if (entry) {
        switch (entry->scalar_class) {
            case ScalarClass::TwoPoint:
                trace.verdicts[3] = {RootLabel::Result, "lexicon: two-point scalar change"};
                break;
            case ScalarClass::Gradable:
                trace.verdicts[3] = {RootLabel::Result, "lexicon: gradable scalar change"};
                break;
            case ScalarClass::NonScalar:
                trace.verdicts[3] = {RootLabel::Manner, "lexicon: non-scalar change"};
                break;
            case ScalarClass::Unknown:
                if (auto v = entry->vote_label(); v != RootLabel::Unknown)
                    trace.verdicts[3] = {v, "lexicon votes " + std::to_string(entry->manner_votes) + " manner / " +
                                                std::to_string(entry->result_votes) + " result"};
                break;
        }
    }

    if (trace.verdicts[3].fired()) {
        trace.final_label = trace.verdicts[3].vote;
        trace.confidence = Confidence::Lexicon;
    } else if (trace.verdicts[1].fired()) {
        trace.final_label = RootLabel::Result;
        trace.confidence = Confidence::Lexicon;
    } else {
        int manner = 0;
        int result = 0;
        for (std::size_t d : {0u, 2u}) {
            if (trace.verdicts[d].vote == RootLabel::Manner) ++manner;
            if (trace.verdicts[d].vote == RootLabel::Result) ++result;
        }
        if (manner > result) {
            trace.final_label = RootLabel::Manner;
            trace.confidence = Confidence::Syntactic;
        } else if (result > manner) {
            trace.final_label = RootLabel::Result;
            trace.confidence = Confidence::Syntactic;
        }
    }
    return trace;
}

/// "<sentence without its final period>, but <negated_outcome>." for human review.
inline std::string denial_test_sentence(std::string_view /*verb*/, std::string_view sentence,
                                        std::string_view negated_outcome) {
    auto s = text::trim(sentence);
    if (!s.empty() && s.back() == '.') s.remove_suffix(1);
    s = text::trim(s);
    std::string out(s);
    out += ", but ";
    out += text::trim(negated_outcome);
    out += '.';
    return out;
}

struct ConsistencyFlag {
    std::string sentence_id;
    std::size_t token_index = 0;
    std::string surface;
    std::string lemma;
    Tag corpus_label = Tag::X;
    RootLabel lexicon_label = RootLabel::Unknown;

    friend bool operator==(const ConsistencyFlag&, const ConsistencyFlag&) = default;
};

/// Flags result/manner tokens whose label contradicts a lexicon entry that has a vote margin >= 1.
inline std::vector<ConsistencyFlag> consistency_check(const Corpus& corpus, const DiagnosticLexicon& lexicon,
                                                      const Lemmatizer& lemmatizer = Lemmatizer::shared()) {
    std::vector<ConsistencyFlag> flags;
    for (const auto& s : corpus.sentences) {
        for (const auto& t : s.tokens) {
            if (!is_verb_root_label(t.tag)) continue;
            auto lemma = lemmatizer.lemmatize(t.surface);
            const auto* entry = lexicon.find(lemma);
            if (!entry) continue;
            auto expected = entry->vote_label();
            if (expected == RootLabel::Unknown) continue;
            RootLabel got = t.tag == Tag::Result ? RootLabel::Result : RootLabel::Manner;
            if (got != expected) flags.push_back({s.sentence_id, t.index, t.surface, lemma, t.tag, expected});
        }
    }
    std::stable_sort(flags.begin(), flags.end(), [](const ConsistencyFlag& a, const ConsistencyFlag& b) {
        return a.sentence_id < b.sentence_id;
    });
    return flags;
}

}  // namespace mrverb
