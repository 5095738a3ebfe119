#include <catch_amalgamated.hpp>

#include <random>

#include "mrverb/analysis.hpp"
#include "mrverb/evaluation.hpp"

using namespace mrverb;
using Catch::Matchers::ContainsSubstring;

namespace {

/// Tags words ending in "ed" as manner, "broke" as result, the rest as NOUN.
TaggedSentence toy_tagger(const std::vector<std::string>& tokens, const std::string& id) {
    std::vector<Tag> tags;
    for (const auto& t : tokens) {
        if (t == "broke" || t == "cleaned") tags.push_back(Tag::Result);
        else if (t.size() > 2 && t.substr(t.size() - 2) == "ed") tags.push_back(Tag::Manner);
        else if (t == "love") tags.push_back(Tag::VERB);
        else tags.push_back(Tag::NOUN);
    }
    return make_sentence(id, tokens, tags);
}

}  // namespace

TEST_CASE("chat annotations are stripped") {
    CHECK(strip_chat_annotations("<the cup> [/] the cup broke .") == "the cup the cup broke .");
    CHECK(strip_chat_annotations("no I jumped &-um off .") == "no I jumped off .");
    CHECK(strip_chat_annotations("oh no , xxx .") == "oh no , .");
    CHECK(strip_chat_annotations("I love my (gr)andma .") == "I love my grandma .");
}

TEST_CASE("transcript ingestion reads speakers, continuations and headers") {
    auto u = ingest_transcript("@Participants:\tCHI Target_Child, MOT Mother\n*MOT:\tlook at\n\tthe dog .\n"
                               "%com:\tpoints\n*CHI:\tdoggy !\n",
                               "tx");
    REQUIRE(u.size() == 2);
    CHECK(u[0].speaker == "MOT");
    CHECK(u[0].text == "look at the dog .");
    CHECK(u[1].utterance_index == 1);
    CHECK(u[1].transcript_id == "tx");
}

TEST_CASE("transcript ingestion errors") {
    CHECK_THROWS_AS(ingest_transcript("@Begin\n@End\n"), EmptyTranscript);
    CHECK_THROWS_AS(ingest_transcript("hello there\n"), UnknownSpeakerLine);
    CHECK_THROWS_AS(ingest_transcript("@Participants:\tCHI Target_Child\n*FAT:\thi .\n"), UnknownSpeakerLine);
    CHECK_THROWS_AS(ingest_transcript("*:\thi .\n"), UnknownSpeakerLine);
    CHECK_NOTHROW(ingest_transcript("*FAT:\thi .\n"));
}

TEST_CASE("transcript ingestion only throws its own errors on random input") {
    std::mt19937_64 rng(4);
    const std::string alphabet = "*@%\t :CHIMOT[]<>&()x.\n";
    for (int i = 0; i < 2000; ++i) {
        std::string s;
        const std::size_t n = rng() % 80;
        for (std::size_t k = 0; k < n; ++k) s += alphabet[rng() % alphabet.size()];
        try {
            auto u = ingest_transcript(s);
            CHECK_FALSE(u.empty());
        } catch (const UnknownSpeakerLine&) {
        } catch (const EmptyTranscript&) {
        }
    }
}

TEST_CASE("speaker measures count tokens and lemma types") {
    auto u = ingest_transcript(read_file(default_data_dir() / "samples" / "transcript.cha"), "sample");
    auto tagged = tag_utterances(u, toy_tagger);
    auto m = speaker_measures(tagged);
    REQUIRE(m.count("CHI"));
    REQUIRE(m.count("MOT"));
    const auto& chi = m["CHI"];
    CHECK(chi.total_utterances == 5);
    CHECK(chi.manner_tokens == 3);
    CHECK(chi.manner_types == 3);
    CHECK(chi.result_tokens == 2);
    CHECK(chi.result_types == 2);
    REQUIRE(chi.manner_result_ratio);
    CHECK(*chi.manner_result_ratio == Catch::Approx(1.5));
    CHECK(chi.verb_tokens == 6);
    CHECK(*chi.verb_ttr == Catch::Approx(1.0));
    const auto& mot = m["MOT"];
    CHECK(mot.total_utterances == 4);
    CHECK_FALSE(mot.manner_result_ratio.has_value());
    CHECK_FALSE(mot.verb_ttr.has_value());
}

TEST_CASE("type basis ratio uses distinct lemmas") {
    std::vector<Utterance> u = {{"A", "x", "t", 0}, {"A", "y", "t", 1}};
    std::vector<TaggedUtterance> tu = {
        {u[0], make_sentence("1", {"wiped", "wiped", "broke"}, {Tag::Manner, Tag::Manner, Tag::Result})},
        {u[1], make_sentence("2", {"wipes", "broken"}, {Tag::Manner, Tag::Result})}};
    auto tokens = speaker_measures(tu, RatioBasis::Tokens);
    auto types = speaker_measures(tu, RatioBasis::Types);
    CHECK(*tokens["A"].manner_result_ratio == Catch::Approx(1.5));
    CHECK(types["A"].manner_types == 1);
    CHECK(*types["A"].manner_result_ratio == Catch::Approx(1.0));
}

TEST_CASE("measures table uses a fixed header and NA for undefined ratios") {
    SpeakerMeasures a;
    a.speaker = "MOT";
    a.total_utterances = 2;
    auto table = format_measures({{"MOT", a}});
    auto lines = text::lines(table);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == kMeasuresHeader);
    CHECK(lines[1] == "MOT\t2\t0\t0\t0\t0\tNA\t0\t0\tNA");
    CHECK(text::split(lines[0], '\t').size() == 10);
}
