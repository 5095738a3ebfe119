#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace mrverb {

/// The 19-label inventory: the 17 Universal POS tags followed by the two verb-root labels.
/// The enumerator value is the stable tag index used by the tagger head and checkpoints.
enum class Tag : std::uint8_t {
    ADJ = 0,
    ADP,
    ADV,
    AUX,
    CCONJ,
    DET,
    INTJ,
    NOUN,
    NUM,
    PART,
    PRON,
    PROPN,
    PUNCT,
    SCONJ,
    SYM,
    VERB,
    X,
    Result,
    Manner,
};

inline constexpr std::size_t kNumTags = 19;
inline constexpr std::size_t kNumPosTags = 17;

inline constexpr std::array<std::string_view, kNumTags> kTagNames = {
    "ADJ",  "ADP",  "ADV",   "AUX",   "CCONJ", "DET", "INTJ", "NOUN",   "NUM",   "PART",
    "PRON", "PROPN", "PUNCT", "SCONJ", "SYM",   "VERB", "X",   "result", "manner",
};

constexpr std::size_t tag_index(Tag t) { return static_cast<std::size_t>(t); }

constexpr std::string_view tag_name(Tag t) { return kTagNames[tag_index(t)]; }

inline std::optional<Tag> tag_from_index(std::size_t i) {
    if (i >= kNumTags) return std::nullopt;
    return static_cast<Tag>(i);
}

inline std::optional<Tag> parse_tag(std::string_view name) {
    for (std::size_t i = 0; i < kNumTags; ++i) {
        if (kTagNames[i] == name) return static_cast<Tag>(i);
    }
    return std::nullopt;
}

constexpr bool is_verb_root_label(Tag t) { return t == Tag::Result || t == Tag::Manner; }

/// Tags that a manner/result judgment may address: a pre-tagged lexical verb, or a token already relabelled.
constexpr bool is_relabelable(Tag t) { return t == Tag::VERB || is_verb_root_label(t); }

}  // namespace mrverb
