#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mrverb/error.hpp"
#include "mrverb/tags.hpp"
#include "mrverb/text.hpp"

namespace mrverb {

struct TaggedToken {
    std::string surface;
    Tag tag = Tag::X;
    std::size_t index = 0;

    friend bool operator==(const TaggedToken&, const TaggedToken&) = default;
};

struct TaggedSentence {
    std::string sentence_id;
    std::string source;
    std::vector<TaggedToken> tokens;

    std::size_t size() const { return tokens.size(); }

    std::vector<std::string> surfaces() const {
        std::vector<std::string> out;
        out.reserve(tokens.size());
        for (const auto& t : tokens) out.push_back(t.surface);
        return out;
    }

    std::vector<Tag> tags() const {
        std::vector<Tag> out;
        out.reserve(tokens.size());
        for (const auto& t : tokens) out.push_back(t.tag);
        return out;
    }

    friend bool operator==(const TaggedSentence&, const TaggedSentence&) = default;
};

enum class Split { Train, Dev, Test, Unlabeled };

struct Corpus {
    std::vector<TaggedSentence> sentences;
    Split split = Split::Unlabeled;

    std::size_t token_count() const {
        std::size_t n = 0;
        for (const auto& s : sentences) n += s.tokens.size();
        return n;
    }

    friend bool operator==(const Corpus&, const Corpus&) = default;
};

using LabelHistogram = std::map<Tag, std::size_t>;

/// Builds a sentence from parallel surface/tag lists; indices are assigned 0..n-1.
inline TaggedSentence make_sentence(std::string id, const std::vector<std::string>& surfaces,
                                    const std::vector<Tag>& tags, std::string source = {}) {
    if (surfaces.size() != tags.size()) throw MalformedLine("surface and tag counts differ");
    TaggedSentence s{std::move(id), std::move(source), {}};
    s.tokens.reserve(surfaces.size());
    for (std::size_t i = 0; i < surfaces.size(); ++i) s.tokens.push_back({surfaces[i], tags[i], i});
    return s;
}

/// Checks the structural invariants of a corpus; throws MalformedLine on violation.
inline void validate(const Corpus& corpus) {
    std::set<std::string_view> ids;
    for (const auto& s : corpus.sentences) {
        if (s.tokens.empty()) throw MalformedLine("sentence '" + s.sentence_id + "' has no tokens");
        if (!ids.insert(s.sentence_id).second)
            throw MalformedLine("duplicate sentence id '" + s.sentence_id + "'");
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
            const auto& t = s.tokens[i];
            if (t.index != i) throw MalformedLine("non-contiguous token index in '" + s.sentence_id + "'");
            if (t.surface.empty()) throw MalformedLine("empty token surface in '" + s.sentence_id + "'");
            if (t.surface.find_first_of("\t\n\r") != std::string::npos)
                throw MalformedLine("token surface contains a tab or newline in '" + s.sentence_id + "'");
        }
    }
}

namespace detail {

inline bool header_value(std::string_view line, std::string_view key, std::string& out) {
    // "# <key> = <value>"
    std::string prefix = "# ";
    prefix += key;
    prefix += " =";
    if (!text::starts_with(line, prefix)) return false;
    out = std::string(text::trim(line.substr(prefix.size())));
    return true;
}

}  // namespace detail

/// Reads the tab-separated column format: one `surface<TAB>tag` per line, blank lines between
/// sentences, `# id = ...` / `# source = ...` header comments. Sentences without an id header get
/// `s<N>` (1-based position).
inline Corpus parse_column_format(std::string_view input, Split split = Split::Unlabeled) {
    Corpus corpus;
    corpus.split = split;
    TaggedSentence current;
    bool have_id = false;
    std::set<std::string> seen;

    auto flush = [&]() {
        if (current.tokens.empty()) {
            if (have_id) throw MalformedLine("sentence '" + current.sentence_id + "' has a header but no tokens");
            return;
        }
        if (!have_id) current.sentence_id = "s" + std::to_string(corpus.sentences.size() + 1);
        if (!seen.insert(current.sentence_id).second)
            throw MalformedLine("duplicate sentence id '" + current.sentence_id + "'");
        corpus.sentences.push_back(std::move(current));
        current = TaggedSentence{};
        have_id = false;
    };

    std::size_t line_no = 0;
    for (auto line : text::lines(input)) {
        ++line_no;
        if (text::trim(line).empty()) {
            flush();
            continue;
        }
        if (text::starts_with(line, "# ")) {
            if (!current.tokens.empty()) flush();
            std::string value;
            if (detail::header_value(line, "id", value)) {
                if (value.empty()) throw MalformedLine("line " + std::to_string(line_no) + ": empty sentence id");
                current.sentence_id = value;
                have_id = true;
            } else if (detail::header_value(line, "source", value)) {
                current.source = value;
            }
            continue;
        }
        auto fields = text::split(line, '\t');
        if (fields.size() != 2 || fields[0].empty())
            throw MalformedLine("line " + std::to_string(line_no) + ": expected 'token<TAB>tag', got " +
                                std::to_string(fields.size()) + " column(s)");
        auto tag = parse_tag(fields[1]);
        if (!tag)
            throw UnknownTag("line " + std::to_string(line_no) + ": unknown tag '" + std::string(fields[1]) + "'");
        current.tokens.push_back({std::string(fields[0]), *tag, current.tokens.size()});
    }
    flush();
    if (corpus.sentences.empty()) throw EmptyCorpus("input contains no sentences");
    return corpus;
}

/// Canonical text for a corpus; `parse_column_format` reads it back to an equal corpus.
inline std::string serialize_column_format(const Corpus& corpus) {
    validate(corpus);
    std::string out;
    bool first = true;
    for (const auto& s : corpus.sentences) {
        if (!first) out += '\n';
        first = false;
        out += "# id = " + s.sentence_id + "\n";
        if (!s.source.empty()) out += "# source = " + s.source + "\n";
        for (const auto& t : s.tokens) {
            out += t.surface;
            out += '\t';
            out += tag_name(t.tag);
            out += '\n';
        }
    }
    return out;
}

inline LabelHistogram label_histogram(const TaggedSentence& sentence) {
    LabelHistogram h;
    for (const auto& t : sentence.tokens) ++h[t.tag];
    return h;
}

inline LabelHistogram label_histogram(const Corpus& corpus) {
    LabelHistogram h;
    for (const auto& s : corpus.sentences)
        for (const auto& t : s.tokens) ++h[t.tag];
    return h;
}

/// Whitespace split, then leading/trailing ASCII punctuation peeled into separate tokens.
/// Word-internal punctuation (don't, well-known, 3.5) stays attached.
inline std::vector<std::string> tokenize(std::string_view raw) {
    std::vector<std::string> out;
    for (auto chunk : text::split_ws(raw)) {
        std::vector<std::string> trailing;
        while (!chunk.empty() && text::is_edge_punct(chunk.front())) {
            out.emplace_back(1, chunk.front());
            chunk.remove_prefix(1);
        }
        while (!chunk.empty() && text::is_edge_punct(chunk.back())) {
            trailing.emplace_back(1, chunk.back());
            chunk.remove_suffix(1);
        }
        if (!chunk.empty()) out.emplace_back(chunk);
        out.insert(out.end(), trailing.rbegin(), trailing.rend());
    }
    return out;
}

}  // namespace mrverb
