#include <catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "mrverb/annotation.hpp"
#include "mrverb/judgments.hpp"
#include "mrverb/llm_client.hpp"
#include "mrverb/pos_tagger.hpp"
#include "mrverb/prompt.hpp"
#include "support/properties.hpp"

using namespace mrverb;

namespace {

const RuleBasedPosTagger& tagger() {
    static RuleBasedPosTagger t;
    return t;
}

TaggedSentence sample(const std::string& id = "s1") { return pretag("The child broke the vase.", tagger(), id); }

std::string reply_for(const std::vector<TaggedSentence>& batch, const std::string& label) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& s : batch)
        for (const auto& t : s.tokens)
            if (t.tag == Tag::VERB)
                out.push_back({{"sentence_id", s.sentence_id}, {"token_index", t.index}, {"surface", t.surface},
                               {"label", label}, {"justification", "because"}});
    return "Here you go:\n```json\n" + out.dump(2) + "\n```\n";
}

/// Answers every prompt by labelling each VERB it lists. Reconstructs the batch from the ids in the prompt.
StubClient::Responder labelling_responder(const std::vector<TaggedSentence>& all, const std::string& label) {
    return [all, label](const std::string& prompt) {
        std::vector<TaggedSentence> batch;
        for (const auto& s : all)
            if (prompt.find("[sentence_id: " + s.sentence_id + "]") != std::string::npos) batch.push_back(s);
        return reply_for(batch, label);
    };
}

}  // namespace

TEST_CASE("rule based pos tagger finds the verb") {
    auto s = sample();
    REQUIRE(s.tokens.size() == 6);
    CHECK(s.tokens[0].tag == Tag::DET);
    CHECK(s.tokens[1].tag == Tag::NOUN);
    CHECK(s.tokens[2].tag == Tag::VERB);
    CHECK(s.tokens[5].tag == Tag::PUNCT);
    auto aux = pretag("She has eaten.", tagger());
    CHECK(aux.tokens[1].tag == Tag::AUX);
    CHECK(aux.tokens[2].tag == Tag::VERB);
    CHECK_THROWS_AS(pretag("   ", tagger()), EmptySentence);
}

TEST_CASE("pretag never emits verb root labels") {
    for (const char* text : {"Anna wept all day.", "They will mop the floor in an hour.", "Hi!"}) {
        for (Tag t : pretag(text, tagger()).tags()) CHECK(tag_index(t) < kNumPosTags);
    }
}

TEST_CASE("prompt lists every sentence with indexed pre-tags") {
    auto v = PromptVariant::load(PromptId::Semantic);
    CHECK_FALSE(v.template_text.empty());
    auto p = build_prompt(v, {sample("a"), sample("b")});
    CHECK(p.find("[sentence_id: a]") != std::string::npos);
    CHECK(p.find("[sentence_id: b]") != std::string::npos);
    CHECK(p.find("2=broke/VERB") != std::string::npos);
    CHECK(p.find(text::trim(v.output_format)) != std::string::npos);
    auto syn = PromptVariant::load(PromptId::Syntactic);
    CHECK(build_prompt(syn, {sample()}) != build_prompt(v, {sample()}));
    CHECK(parse_prompt_id("syntactic") == PromptId::Syntactic);
    CHECK_THROWS(parse_prompt_id("lexical"));
}

TEST_CASE("prompt batches are bounded") {
    auto v = PromptVariant::load(PromptId::Semantic);
    std::vector<TaggedSentence> batch;
    for (int i = 0; i < 11; ++i) batch.push_back(sample("s" + std::to_string(i)));
    CHECK_THROWS_AS(build_prompt(v, batch), BatchTooLarge);
    batch.pop_back();
    CHECK_NOTHROW(build_prompt(v, batch));
    CHECK_THROWS_AS(build_prompt(v, {}), BatchTooLarge);
}

TEST_CASE("parse_llm_response accepts wrapped replies and drops bad records") {
    auto s = sample();
    auto good = parse_llm_response(reply_for({s}, "result"), {s});
    REQUIRE(good.judgments.size() == 1);
    CHECK(good.judgments[0].label == Tag::Result);
    CHECK(good.judgments[0].raw_justification == "because");
    CHECK(good.warnings.empty());

    auto obj = parse_llm_response(R"({"judgments":[{"sentence_id":"s1","token_index":2,"surface":"BROKE","label":"Manner"}]})",
                                  {s});
    REQUIRE(obj.judgments.size() == 1);
    CHECK(obj.judgments[0].label == Tag::Manner);

    auto mixed = parse_llm_response(R"([
        {"sentence_id":"zz","token_index":2,"surface":"broke","label":"result"},
        {"sentence_id":"s1","token_index":9,"surface":"broke","label":"result"},
        {"sentence_id":"s1","token_index":1,"surface":"child","label":"result"},
        {"sentence_id":"s1","token_index":2,"surface":"fixed","label":"result"},
        {"sentence_id":"s1","token_index":2,"surface":"broke","label":"path"},
        {"sentence_id":"s1","token_index":2,"surface":"broke","label":"result"},
        {"sentence_id":"s1","token_index":2,"surface":"broke","label":"manner"}])",
                                    {s});
    REQUIRE(mixed.judgments.size() == 1);
    CHECK(mixed.judgments[0].label == Tag::Result);
    CHECK(mixed.warnings.size() == 6);
}

TEST_CASE("parse_llm_response structural failures carry the raw reply") {
    auto s = sample();
    CHECK_THROWS_AS(parse_llm_response("no json here", {s}), UnparseableResponse);
    CHECK_THROWS_AS(parse_llm_response("[{\"a\": }]", {s}), UnparseableResponse);
    CHECK_THROWS_AS(parse_llm_response("{\"x\": 1}", {s}), SchemaViolation);
    CHECK_THROWS_AS(parse_llm_response("[{\"sentence_id\":\"s1\"}]", {s}), SchemaViolation);
    CHECK_THROWS_AS(
        parse_llm_response(R"([{"sentence_id":"s1","token_index":"2","surface":"broke","label":"result"}])", {s}),
        SchemaViolation);
    try {
        parse_llm_response("garbage reply", {s});
        FAIL("expected a throw");
    } catch (const ResponseError& e) {
        CHECK(e.raw() == "garbage reply");
    }
}

TEST_CASE("parse_llm_response survives random byte noise") {
    auto s = sample();
    auto base = reply_for({s}, "manner");
    std::mt19937_64 rng(99);
    for (int i = 0; i < 500; ++i) {
        std::string noisy = base;
        const int edits = 1 + static_cast<int>(rng() % 5);
        for (int e = 0; e < edits; ++e) noisy[rng() % noisy.size()] = static_cast<char>(rng() % 128);
        try {
            auto r = parse_llm_response(noisy, {s});
            for (const auto& j : r.judgments) CHECK(is_verb_root_label(j.label));
        } catch (const ResponseError&) {
        }
    }
}

TEST_CASE("merge_labels touches only addressed verbs") {
    auto s = sample();
    VerbJudgment j{"s1", 2, "broke", Tag::Result, std::nullopt};
    auto m = merge_labels(s, {j});
    CHECK(m.tokens[2].tag == Tag::Result);
    for (std::size_t i = 0; i < s.tokens.size(); ++i)
        if (i != 2) CHECK(m.tokens[i] == s.tokens[i]);
    CHECK(merge_labels(m, {j}) == m);
    CHECK_THROWS_AS(merge_labels(s, {{"s2", 2, "broke", Tag::Result, std::nullopt}}), IndexMismatch);
    CHECK_THROWS_AS(merge_labels(s, {{"s1", 1, "child", Tag::Result, std::nullopt}}), IndexMismatch);
    CHECK_THROWS_AS(merge_labels(s, {{"s1", 2, "fixed", Tag::Result, std::nullopt}}), IndexMismatch);
    CHECK_THROWS_AS(merge_labels(s, {{"s1", 2, "broke", Tag::NOUN, std::nullopt}}), IndexMismatch);
}

TEST_CASE("merge_labels random instances keep non-verb tokens") {
    CHECK(props::merge_violations(2000, 8) == 0);
}

TEST_CASE("annotation pipeline labels, caches and keeps input order") {
    std::vector<TaggedSentence> all;
    for (int i = 0; i < 25; ++i) all.push_back(pretag("Anna shoveled the snow.", tagger(), "x" + std::to_string(i)));
    StubClient client(labelling_responder(all, "manner"));
    auto v = PromptVariant::load(PromptId::Semantic);
    AnnotationCache cache;
    AnnotationOptions opt;
    opt.batch_size = 4;
    opt.max_concurrency = 3;
    auto r = annotate_pretagged(all, client, v, cache, opt);
    CHECK(client.calls() == 7);
    CHECK(r.stats.external_calls == 7);
    REQUIRE(r.corpus.sentences.size() == 25);
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(r.corpus.sentences[i].sentence_id == all[i].sentence_id);
    CHECK(r.stats.manner_count == 25);
    CHECK(r.stats.result_count == 0);
    CHECK(r.corpus.sentences[0].tokens[1].tag == Tag::Manner);

    auto again = annotate_pretagged(all, client, v, cache, opt);
    CHECK(client.calls() == 7);
    CHECK(again.stats.cache_hits == 25);
    CHECK(serialize_column_format(again.corpus) == serialize_column_format(r.corpus));
}

TEST_CASE("annotation cache persists to disk and serves offline runs") {
    auto path = std::filesystem::temp_directory_path() / "mrverb_cache_test.jsonl";
    std::filesystem::remove(path);
    auto raws = read_raw_sentences("The child broke the vase.\n\nAnna wept all day.\n", "demo");
    REQUIRE(raws.size() == 2);
    CHECK(raws[1].sentence_id == "demo-2");
    std::vector<TaggedSentence> pre;
    for (const auto& r : raws) pre.push_back(pretag(r.text, tagger(), r.sentence_id, r.source));
    auto v = PromptVariant::load(PromptId::Syntactic);
    AnnotationOptions opt;
    opt.pos_tagger = &tagger();
    Corpus first;
    {
        StubClient client(labelling_responder(pre, "result"));
        AnnotationCache cache(path);
        first = annotate_corpus(raws, client, v, cache, opt).corpus;
    }
    AnnotationCache reloaded(path);
    CHECK(reloaded.size() == 2);
    OfflineClient offline("stub");
    auto second = annotate_corpus(raws, offline, v, reloaded, opt);
    CHECK(second.stats.external_calls == 0);
    CHECK(second.corpus == first);

    OfflineClient other_model("other");
    CHECK_THROWS_AS(annotate_corpus(raws, other_model, v, reloaded, opt), AnnotatorUnavailable);
    std::filesystem::remove(path);
}

TEST_CASE("unparseable replies fail the batch and are reported") {
    std::vector<TaggedSentence> all = {sample("a"), sample("b")};
    StubClient client([](const std::string&) { return std::string("I cannot help with that."); });
    AnnotationCache cache;
    auto r = annotate_pretagged(all, client, PromptVariant::load(PromptId::Semantic), cache);
    CHECK(r.corpus.sentences.empty());
    CHECK(r.stats.failed_sentences == std::vector<std::string>{"a", "b"});
    REQUIRE_FALSE(r.warnings.empty());
    CHECK(r.warnings.back().find("I cannot help with that.") != std::string::npos);
}

TEST_CASE("transport failures are retried then surface as unavailable") {
    std::size_t attempts = 0;
    StubClient client([&](const std::string&) -> std::string {
        ++attempts;
        throw TransportError("down");
    });
    client.mutable_config().retries = 2;
    AnnotationCache cache;
    CHECK_THROWS_AS(annotate_pretagged({sample()}, client, PromptVariant::load(PromptId::Semantic), cache),
                    AnnotatorUnavailable);
    CHECK(attempts == 3);
}

TEST_CASE("audit lists verb root disagreements between two runs") {
    auto s = sample();
    Corpus a{{merge_labels(s, {{"s1", 2, "broke", Tag::Result, std::nullopt}})}, Split::Unlabeled};
    Corpus b{{merge_labels(s, {{"s1", 2, "broke", Tag::Manner, std::nullopt}})}, Split::Unlabeled};
    auto d = audit_disagreements(a, b);
    REQUIRE(d.size() == 1);
    CHECK(d[0].token_index == 2);
    CHECK(d[0].first == Tag::Result);
    CHECK(d[0].second == Tag::Manner);
    CHECK(audit_disagreements(a, a).empty());
}

TEST_CASE("split_by_hash is deterministic and disjoint") {
    Corpus c;
    for (int i = 0; i < 1000; ++i) c.sentences.push_back(make_sentence("id" + std::to_string(i), {"x"}, {Tag::X}));
    auto [train, dev] = split_by_hash(c, 0.1);
    CHECK(train.sentences.size() + dev.sentences.size() == 1000);
    CHECK(dev.sentences.size() > 60);
    CHECK(dev.sentences.size() < 140);
    auto [train2, dev2] = split_by_hash(c, 0.1);
    CHECK(dev2 == dev);
    CHECK(split_by_hash(c, 0.0).second.sentences.empty());
    CHECK_THROWS_AS(split_by_hash(c, 1.0), InvalidConfig);
}
