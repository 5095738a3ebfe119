#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mrverb/corpus.hpp"
#include "mrverb/error.hpp"

#ifndef MRVERB_DATA_DIR
#define MRVERB_DATA_DIR "data"
#endif

namespace mrverb {

/// Directory holding prompts, lexicon, gold sets and guidelines. `MRVERB_DATA_DIR` in the
/// environment overrides the build-time location.
inline std::filesystem::path default_data_dir() {
    if (const char* env = std::getenv("MRVERB_DATA_DIR"); env && *env) return env;
    return MRVERB_DATA_DIR;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

enum class PromptId { Semantic, Syntactic };

inline std::string_view to_string(PromptId id) { return id == PromptId::Semantic ? "semantic" : "syntactic"; }

inline PromptId parse_prompt_id(std::string_view s) {
    if (s == "semantic") return PromptId::Semantic;
    if (s == "syntactic") return PromptId::Syntactic;
    throw Error("unknown prompt variant '" + std::string(s) + "' (expected semantic or syntactic)");
}

/// One annotation prompt. `template_text` is the variant's rule text and is embedded verbatim;
/// `preamble` and `output_format` are shared by both variants.
struct PromptVariant {
    PromptId id = PromptId::Semantic;
    std::string template_text;
    std::string preamble;
    std::string output_format;

    std::string_view name() const { return to_string(id); }

    /// Reads `<dir>/prompts/{semantic,syntactic}.txt`, `task.txt` and `output_format.txt`.
    static PromptVariant load(PromptId id, const std::filesystem::path& data_dir = default_data_dir()) {
        auto prompts = data_dir / "prompts";
        PromptVariant v;
        v.id = id;
        v.template_text = read_file(prompts / (std::string(to_string(id)) + ".txt"));
        v.preamble = read_file(prompts / "task.txt");
        v.output_format = read_file(prompts / "output_format.txt");
        return v;
    }
};

inline constexpr std::size_t kDefaultBatchSize = 10;

inline std::string render_sentence_for_prompt(const TaggedSentence& s) {
    std::string out = "[sentence_id: " + s.sentence_id + "]\ntext:";
    for (const auto& t : s.tokens) out += " " + t.surface;
    out += "\ntokens:";
    for (const auto& t : s.tokens) {
        out += " " + std::to_string(t.index) + "=" + t.surface + "/";
        out += tag_name(t.tag);
    }
    out += '\n';
    return out;
}

/// Preamble, the variant's rule text, every sentence with its id and indexed pre-tags, then the
/// structured-answer instruction.
inline std::string build_prompt(const PromptVariant& variant, const std::vector<TaggedSentence>& sentences,
                                std::size_t max_batch = kDefaultBatchSize) {
    if (sentences.empty()) throw BatchTooLarge("prompt batch is empty");
    if (sentences.size() > max_batch)
        throw BatchTooLarge("prompt batch has " + std::to_string(sentences.size()) + " sentences; limit is " +
                            std::to_string(max_batch));
    std::string out;
    out += text::trim(variant.preamble);
    out += "\n\n";
    out += variant.template_text;
    if (!variant.template_text.empty() && variant.template_text.back() != '\n') out += '\n';
    out += "\nSentences:\n";
    for (const auto& s : sentences) {
        out += '\n';
        out += render_sentence_for_prompt(s);
    }
    out += '\n';
    out += text::trim(variant.output_format);
    out += '\n';
    return out;
}

}  // namespace mrverb
