#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrverb/error.hpp"
#include "mrverb/text.hpp"

namespace mrverb {

/// Half-open span [start, end) of subword positions belonging to one token.
struct SubwordSpan {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - start; }
    friend bool operator==(const SubwordSpan&, const SubwordSpan&) = default;
};

using AlignmentMap = std::vector<SubwordSpan>;

struct Segmentation {
    std::vector<int> ids;    // includes the sentence delimiters at both ends
    AlignmentMap alignment;  // one span per token, never covering a delimiter
    std::size_t unknown_pieces = 0;
};

/// Byte-pair-style subword vocabulary over code points. Each word is segmented on its own; its
/// first symbol carries a word-start marker so word-initial and word-internal pieces differ.
/// Code points never seen in training map to the unknown piece.
class BpeVocab {
public:
    static constexpr int kUnk = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr std::string_view kWordStart = "\xC4\xA0";  // U+0120, as in byte-level BPE vocabularies

    BpeVocab() { reset_specials(); }

    /// Learns up to `num_merges` merges from word frequencies. Pairs seen fewer than `min_count`
    /// times are not merged; ties on count are broken lexicographically.
    static BpeVocab train(const std::map<std::string, std::size_t>& word_counts, std::size_t num_merges,
                          std::size_t min_count = 2) {
        BpeVocab vocab;
        std::vector<std::pair<std::vector<std::string>, std::size_t>> words;
        for (const auto& [w, count] : word_counts) {
            if (w.empty()) continue;
            auto symbols = initial_symbols(w);
            for (const auto& s : symbols) vocab.add_piece(s);
            words.emplace_back(std::move(symbols), count);
        }
        for (std::size_t m = 0; m < num_merges; ++m) {
            std::map<std::pair<std::string, std::string>, std::size_t> pair_counts;
            for (const auto& [symbols, count] : words)
                for (std::size_t i = 0; i + 1 < symbols.size(); ++i) pair_counts[{symbols[i], symbols[i + 1]}] += count;
            const std::pair<std::string, std::string>* best = nullptr;
            std::size_t best_count = 0;
            for (const auto& [pair, count] : pair_counts) {
                if (count > best_count) {
                    best = &pair;
                    best_count = count;
                }
            }
            if (!best || best_count < min_count) break;
            auto merged_pair = *best;
            vocab.add_merge(merged_pair.first, merged_pair.second);
            for (auto& [symbols, count] : words) apply_merge(symbols, merged_pair.first, merged_pair.second);
        }
        return vocab;
    }

    std::size_t size() const { return pieces_.size(); }
    std::size_t merge_count() const { return merges_.size(); }
    const std::string& piece(int id) const { return pieces_.at(static_cast<std::size_t>(id)); }

    int id_of(std::string_view piece) const {
        auto it = index_.find(std::string(piece));
        return it == index_.end() ? kUnk : it->second;
    }

    /// Subword ids for one word; unknown code points become kUnk. Never empty for a non-empty word.
    std::vector<int> encode_word(std::string_view word, std::size_t* unknown = nullptr) const {
        if (word.empty()) {
            if (unknown) ++*unknown;
            return {kUnk};
        }
        auto symbols = initial_symbols(word);
        while (symbols.size() > 1) {
            int best_rank = -1;
            for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
                auto it = merge_rank_.find(merge_key(symbols[i], symbols[i + 1]));
                if (it != merge_rank_.end() && (best_rank < 0 || it->second < best_rank)) best_rank = it->second;
            }
            if (best_rank < 0) break;
            const auto& [a, b] = merges_[static_cast<std::size_t>(best_rank)];
            apply_merge(symbols, a, b);
        }
        std::vector<int> ids;
        ids.reserve(symbols.size());
        for (const auto& s : symbols) {
            int id = id_of(s);
            if (id == kUnk && unknown) ++*unknown;
            ids.push_back(id);
        }
        return ids;
    }

    /// Surface text of a run of pieces with the word-start marker removed.
    std::string detokenize(std::span<const int> ids) const {
        std::string out;
        for (int id : ids) out += piece(id);
        if (text::starts_with(out, kWordStart)) out.erase(0, kWordStart.size());
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["pieces"] = pieces_;
        j["merges"] = nlohmann::json::array();
        for (const auto& [a, b] : merges_) j["merges"].push_back({a, b});
        return j;
    }

    static BpeVocab from_json(const nlohmann::json& j) {
        BpeVocab v;
        v.pieces_.clear();
        v.index_.clear();
        for (const auto& p : j.at("pieces")) v.add_piece(p.get<std::string>());
        if (v.pieces_.size() < 3 || v.pieces_[kUnk] != "<unk>" || v.pieces_[kBos] != "<s>" || v.pieces_[kEos] != "</s>")
            throw CheckpointError("vocabulary does not start with <unk> <s> </s>");
        for (const auto& m : j.at("merges")) {
            auto a = m.at(0).get<std::string>();
            auto b = m.at(1).get<std::string>();
            v.merge_rank_[merge_key(a, b)] = static_cast<int>(v.merges_.size());
            v.merges_.emplace_back(std::move(a), std::move(b));
        }
        return v;
    }

    friend bool operator==(const BpeVocab& a, const BpeVocab& b) {
        return a.pieces_ == b.pieces_ && a.merges_ == b.merges_;
    }

private:
    void reset_specials() {
        pieces_.clear();
        index_.clear();
        add_piece("<unk>");
        add_piece("<s>");
        add_piece("</s>");
    }

    int add_piece(const std::string& p) {
        auto [it, inserted] = index_.emplace(p, static_cast<int>(pieces_.size()));
        if (inserted) pieces_.push_back(p);
        return it->second;
    }

    void add_merge(const std::string& a, const std::string& b) {
        merge_rank_[merge_key(a, b)] = static_cast<int>(merges_.size());
        merges_.emplace_back(a, b);
        add_piece(a + b);
    }

    static std::string merge_key(const std::string& a, const std::string& b) {
        std::string k = a;
        k += '\x1f';
        k += b;
        return k;
    }

    static std::vector<std::string> initial_symbols(std::string_view word) {
        auto symbols = text::code_points(word);
        if (!symbols.empty()) symbols.front() = std::string(kWordStart) + symbols.front();
        return symbols;
    }

    static void apply_merge(std::vector<std::string>& symbols, const std::string& a, const std::string& b) {
        std::vector<std::string> out;
        out.reserve(symbols.size());
        for (std::size_t i = 0; i < symbols.size(); ++i) {
            if (i + 1 < symbols.size() && symbols[i] == a && symbols[i + 1] == b) {
                out.push_back(a + b);
                ++i;
            } else {
                out.push_back(std::move(symbols[i]));
            }
        }
        symbols = std::move(out);
    }

    std::vector<std::string> pieces_;
    std::unordered_map<std::string, int> index_;
    std::vector<std::pair<std::string, std::string>> merges_;
    std::unordered_map<std::string, int> merge_rank_;
};

/// Word counts over the surfaces of a set of token lists, for vocabulary training.
template <typename Sentences, typename Project>
std::map<std::string, std::size_t> count_words(const Sentences& sentences, Project surfaces_of) {
    std::map<std::string, std::size_t> counts;
    for (const auto& s : sentences)
        for (const auto& w : surfaces_of(s)) ++counts[w];
    return counts;
}

/// Subword ids for a token sequence, framed by <s> ... </s>, with one span per token.
inline Segmentation segment(const BpeVocab& vocab, const std::vector<std::string>& tokens) {
    Segmentation seg;
    seg.ids.push_back(BpeVocab::kBos);
    seg.alignment.reserve(tokens.size());
    for (const auto& t : tokens) {
        auto pieces = vocab.encode_word(t, &seg.unknown_pieces);
        SubwordSpan span{seg.ids.size(), seg.ids.size() + pieces.size()};
        seg.ids.insert(seg.ids.end(), pieces.begin(), pieces.end());
        seg.alignment.push_back(span);
    }
    seg.ids.push_back(BpeVocab::kEos);
    return seg;
}

/// True when spans are non-empty, contiguous, in order, and cover exactly positions 1..n-2 of
/// an n-position sequence (positions 0 and n-1 are the delimiters).
inline bool alignment_is_valid(const AlignmentMap& alignment, std::size_t n_positions) {
    if (n_positions < 2) return false;
    std::size_t expect = 1;
    for (const auto& s : alignment) {
        if (s.start != expect || s.end <= s.start) return false;
        expect = s.end;
    }
    return expect == n_positions - 1;
}

}  // namespace mrverb
