#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mrverb/corpus.hpp"
#include "mrverb/error.hpp"
#include "mrverb/lemmatizer.hpp"

namespace mrverb {

/// Assigns one of the 17 UPOS labels to every token of a sentence.
class PosTagger {
public:
    virtual ~PosTagger() = default;
    virtual std::string name() const = 0;
    virtual std::vector<Tag> tag(const std::vector<std::string>& tokens) const = 0;
};

/// Dictionary and context-rule UPOS tagger. Closed-class words come from fixed lists, open-class
/// words are resolved from the known-verb list plus left-context rules. Adequate for pre-tagging
/// before the LLM pass; swap in a statistical tagger through `PosTagger` for production data.
class RuleBasedPosTagger : public PosTagger {
public:
    RuleBasedPosTagger() : lemmatizer_(&Lemmatizer::shared()) {
        auto load = [this](std::string_view words, Tag t) {
            for (auto w : text::split_ws(words)) closed_.emplace(std::string(w), t);
        };
        load("the a an this that these those every each some any no all both either neither another such what "
             "which whose",
             Tag::DET);
        load("i me you he him she her it we us they them myself yourself himself herself itself ourselves "
             "themselves my your his its our their mine yours hers ours theirs who whom someone somebody "
             "something everyone everybody everything nobody nothing anyone anybody anything one",
             Tag::PRON);
        load("in on at by for with about against between into through during before after above below to from "
             "up down out off over under of towards toward onto upon across along around behind beside near "
             "inside outside past since until via without within among",
             Tag::ADP);
        load("and or but nor yet", Tag::CCONJ);
        load("because if although though while whereas unless whether that than", Tag::SCONJ);
        load("not n't 's", Tag::PART);
        load("yes yeah oh hi hello hey wow ok okay uh um uhhuh oops bye please ah", Tag::INTJ);
        load("very too also just here there now then again always never really still away often sometimes "
             "already soon quite almost even ever once twice today tomorrow yesterday well back so how when where "
             "why",
             Tag::ADV);
        load("one two three four five six seven eight nine ten eleven twelve twenty hundred thousand million "
             "first second third",
             Tag::NUM);
        load("big small good bad happy sad new old red blue green yellow black white clean dirty hot cold warm "
             "little long short tall nice pretty great large young wet dry full empty heavy light soft hard "
             "quick slow fast loud quiet beautiful broken open closed tired hungry sick scary funny silly",
             Tag::ADJ);
        for (auto w : text::split_ws("be am is are was were been being 's 're 'm can could will would shall "
                                     "should may might must 'll 'd"))
            aux_always_.emplace(w);
        for (auto w : text::split_ws("have has had having do does did done doing 've")) aux_maybe_.emplace(w);
        for (auto w : text::split_ws("water fox lake table snow market ice chicken bottle gift child house "
                                     "portrait clothes dryer vase notebook toy wood car lot plot life coup "
                                     "day time way thing man woman dog cat ball book cup door floor milk juice "
                                     "hand head room window box bed food game shoe sock hat apple cookie"))
            nouns_.emplace(w);
    }

    std::string name() const override { return "rule-based-upos"; }

    std::vector<Tag> tag(const std::vector<std::string>& tokens) const override {
        std::vector<Tag> tags(tokens.size(), Tag::X);
        for (std::size_t i = 0; i < tokens.size(); ++i) tags[i] = tag_one(tokens, tags, i);
        return tags;
    }

private:
    bool verb_candidate(std::string_view w) const {
        auto lower = text::to_lower(w);
        if (lemmatizer_->is_irregular_form(lower)) return true;
        return lemmatizer_->is_known_verb_form(lower);
    }

    static bool is_number(std::string_view w) {
        bool digit = false;
        for (char c : w) {
            if (text::is_digit(c)) digit = true;
            else if (c != '.' && c != ',') return false;
        }
        return digit;
    }

    Tag tag_one(const std::vector<std::string>& tokens, const std::vector<Tag>& tags, std::size_t i) const {
        const std::string& word = tokens[i];
        const std::string lower = text::to_lower(word);
        const Tag prev = i > 0 ? tags[i - 1] : Tag::X;
        const std::string next = i + 1 < tokens.size() ? text::to_lower(tokens[i + 1]) : std::string();

        if (text::all_punct(word)) return Tag::PUNCT;
        if (is_number(word)) return Tag::NUM;
        if (!word.empty() && (word[0] == '$' || word[0] == '%' || word[0] == '&' || word[0] == '+' || word[0] == '='))
            return Tag::SYM;

        if (aux_always_.count(lower)) return Tag::AUX;
        if (aux_maybe_.count(lower)) {
            // auxiliary when a verb follows (possibly after a negation or adverb)
            for (std::size_t j = i + 1; j < tokens.size() && j <= i + 3; ++j) {
                auto w = text::to_lower(tokens[j]);
                if (w == "not" || w == "n't" || w == "never" || w == "just" || w == "already") continue;
                if (text::ends_with(w, "ed") || text::ends_with(w, "en") || text::ends_with(w, "ing") ||
                    lemmatizer_->is_irregular_form(w) || (lower.rfind("d", 0) == 0 && verb_candidate(w) &&
                                                          !closed_.count(w)))
                    return Tag::AUX;
                break;
            }
            return Tag::VERB;
        }
        if (lower == "to") return verb_candidate(next) && !closed_.count(next) ? Tag::PART : Tag::ADP;
        if (lower == "that") {
            if (i + 1 >= tokens.size() || text::all_punct(tokens[i + 1]) || aux_always_.count(next)) return Tag::PRON;
            return closed_.count(next) || verb_candidate(next) ? Tag::SCONJ : Tag::DET;
        }
        if (auto it = closed_.find(lower); it != closed_.end()) {
            if (it->second == Tag::ADJ) {
                // "clean", "dry", "open", "empty": verbs after subjects/auxiliaries, adjectives elsewhere
                if (verb_candidate(lower) && verb_position(prev, i)) return Tag::VERB;
            }
            return it->second;
        }

        const bool capitalized = !word.empty() && text::is_upper_ascii(word[0]);
        if (capitalized && i > 0 && tokens[i - 1] != "\"" && prev != Tag::PUNCT) return Tag::PROPN;

        if (verb_candidate(lower)) {
            if (prev == Tag::DET || prev == Tag::ADJ || prev == Tag::ADP) return Tag::NOUN;
            if (is_verbal_position(prev, i)) return Tag::VERB;
            if (nouns_.count(lower)) return Tag::NOUN;
            if (prev == Tag::VERB || is_verb_root_label(prev)) return Tag::NOUN;
            return Tag::VERB;
        }

        if (capitalized && i == 0 && i + 1 < tokens.size() && verb_candidate(next)) return Tag::PROPN;
        if (text::ends_with(lower, "ly") && lower.size() > 4) return Tag::ADV;
        if (text::ends_with(lower, "ful") || text::ends_with(lower, "ous") || text::ends_with(lower, "ive") ||
            text::ends_with(lower, "able") || text::ends_with(lower, "ible") || text::ends_with(lower, "ish"))
            return Tag::ADJ;
        if (capitalized && i == 0 && i + 1 < tokens.size() && !closed_.count(next)) return Tag::PROPN;
        return Tag::NOUN;
    }

    static bool verb_position(Tag prev, std::size_t i) {
        return prev == Tag::PRON || prev == Tag::PROPN || prev == Tag::NOUN || prev == Tag::AUX ||
               prev == Tag::PART || (i == 0);
    }

    static bool is_verbal_position(Tag prev, std::size_t i) {
        return i == 0 || prev == Tag::PRON || prev == Tag::PROPN || prev == Tag::NOUN || prev == Tag::AUX ||
               prev == Tag::PART || prev == Tag::ADV || prev == Tag::CCONJ || prev == Tag::SCONJ ||
               prev == Tag::INTJ || prev == Tag::PUNCT;
    }

    const Lemmatizer* lemmatizer_;
    std::unordered_map<std::string, Tag> closed_;
    std::unordered_set<std::string> aux_always_;
    std::unordered_set<std::string> aux_maybe_;
    std::unordered_set<std::string> nouns_;
};

/// Tokenizes `raw_sentence` and pre-tags it with `pos_tagger`. The result carries POS labels only.
inline TaggedSentence pretag(std::string_view raw_sentence, const PosTagger& pos_tagger, std::string sentence_id = "s1",
                             std::string source = {}) {
    auto tokens = tokenize(raw_sentence);
    if (tokens.empty()) throw EmptySentence("sentence '" + sentence_id + "' is empty");
    std::vector<Tag> tags;
    try {
        tags = pos_tagger.tag(tokens);
    } catch (const std::exception& e) {
        throw TaggerFailure(pos_tagger.name() + " failed on '" + sentence_id + "': " + e.what());
    }
    if (tags.size() != tokens.size())
        throw TaggerFailure(pos_tagger.name() + " returned " + std::to_string(tags.size()) + " tags for " +
                            std::to_string(tokens.size()) + " tokens");
    for (Tag t : tags) {
        if (tag_index(t) >= kNumPosTags)
            throw TaggerFailure(pos_tagger.name() + " emitted non-POS label '" + std::string(tag_name(t)) + "'");
    }
    return make_sentence(std::move(sentence_id), tokens, tags, std::move(source));
}

}  // namespace mrverb
