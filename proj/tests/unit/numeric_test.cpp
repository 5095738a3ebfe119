#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>
#include <utility>

#include "mrverb/backbone.hpp"
#include "mrverb/batcher.hpp"
#include "mrverb/blob.hpp"
#include "mrverb/bpe.hpp"
#include "mrverb/head.hpp"
#include "mrverb/optimizer.hpp"
#include "support/oracles.hpp"
#include "support/properties.hpp"

using namespace mrverb;
using Catch::Matchers::WithinAbs;

namespace {

BpeVocab small_vocab() {
    return BpeVocab::train({{"running", 5}, {"run", 4}, {"runner", 3}, {"sun", 2}, {"ran", 2}}, 20);
}

}  // namespace

TEST_CASE("bpe merges are deterministic and frequency ordered") {
    auto v = small_vocab();
    auto w = small_vocab();
    CHECK(v == w);
    CHECK(v.piece(BpeVocab::kUnk) == "<unk>");
    CHECK(v.piece(BpeVocab::kBos) == "<s>");
    CHECK(v.piece(BpeVocab::kEos) == "</s>");
    CHECK(v.merge_count() > 0);
    auto ids = v.encode_word("run");
    REQUIRE(ids.size() == 1);
    CHECK(v.piece(ids[0]) == "\xC4\xA0run");
    CHECK(v.detokenize(v.encode_word("runner")) == "runner");
}

TEST_CASE("bpe min_count stops merging rare pairs") {
    auto v = BpeVocab::train({{"ab", 1}, {"cd", 1}}, 10);
    CHECK(v.merge_count() == 0);
    auto v2 = BpeVocab::train({{"ab", 1}, {"cd", 1}}, 10, 1);
    CHECK(v2.merge_count() > 0);
}

TEST_CASE("bpe unknown code points map to unk and are counted") {
    auto v = small_vocab();
    std::size_t unknown = 0;
    auto ids = v.encode_word("rØn", &unknown);
    CHECK(unknown == 1);
    CHECK(std::count(ids.begin(), ids.end(), BpeVocab::kUnk) == 1);
    CHECK(v.encode_word("") == std::vector<int>{BpeVocab::kUnk});
}

TEST_CASE("segmentation frames ids and aligns every token") {
    auto v = small_vocab();
    std::vector<std::string> tokens = {"running", "sun", "zz", "ran"};
    auto seg = segment(v, tokens);
    CHECK(seg.ids.front() == BpeVocab::kBos);
    CHECK(seg.ids.back() == BpeVocab::kEos);
    REQUIRE(seg.alignment.size() == tokens.size());
    CHECK(alignment_is_valid(seg.alignment, seg.ids.size()));
    CHECK(seg.unknown_pieces == 2);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        std::vector<int> piece(seg.ids.begin() + static_cast<std::ptrdiff_t>(seg.alignment[t].start),
                               seg.ids.begin() + static_cast<std::ptrdiff_t>(seg.alignment[t].end));
        if (tokens[t] != "zz") CHECK(v.detokenize(piece) == tokens[t]);
    }
    CHECK_FALSE(alignment_is_valid({{1, 2}, {3, 4}}, 5));
    CHECK_FALSE(alignment_is_valid({{1, 1}}, 3));
}

TEST_CASE("bpe vocabulary json round trip") {
    auto v = small_vocab();
    CHECK(BpeVocab::from_json(v.to_json()) == v);
    auto j = v.to_json();
    j["pieces"][0] = "<bad>";
    CHECK_THROWS_AS(BpeVocab::from_json(j), CheckpointError);
}

TEST_CASE("mean pooling matches the naive loop bit for bit") {
    CHECK(props::pooling_mismatches(200, 5) == 0);
}

TEST_CASE("pooling example and span errors") {
    Matrix x(4, 2);
    x(1, 0) = 1;
    x(1, 1) = 2;
    x(2, 0) = 3;
    x(2, 1) = 6;
    auto p = pool_subwords(x, {{1, 3}});
    CHECK(p(0, 0) == 2.0);
    CHECK(p(0, 1) == 4.0);
    CHECK_THROWS_AS(pool_subwords(x, {{1, 5}}), SpanOutOfRange);
    CHECK_THROWS_AS(pool_subwords(x, {{2, 2}}), SpanOutOfRange);
    auto g = pool_subwords_backward(Matrix(1, 2, 1.0), {{1, 3}}, 4);
    CHECK(g(1, 0) == 0.5);
    CHECK(g(0, 0) == 0.0);
}

TEST_CASE("smoothed cross-entropy against the high-precision oracle") {
    CHECK(props::loss_deviation(300, 3) <= 1e-9);
    CHECK(props::plain_ce_deviation(300, 4) <= 1e-9);
}

TEST_CASE("smoothed cross-entropy examples and errors") {
    std::vector<double> uniform(19, 0.0);
    CHECK_THAT(smoothed_cross_entropy(uniform, 3, 0.1), WithinAbs(std::log(19.0), 1e-12));
    std::vector<double> l = {2.0, 0.0};
    CHECK_THAT(smoothed_cross_entropy(l, 0, 0.0), WithinAbs(std::log(1 + std::exp(-2.0)), 1e-12));
    CHECK_THROWS_AS(smoothed_cross_entropy(l, 0, 1.0), InvalidEpsilon);
    CHECK_THROWS_AS(smoothed_cross_entropy(l, 0, -0.1), InvalidEpsilon);
    CHECK_THROWS_AS(smoothed_cross_entropy(l, 2, 0.0), Error);
    auto q = smoothed_target(4, 1, 0.2);
    CHECK_THAT(q[1], WithinAbs(0.85, 1e-15));
    CHECK_THAT(q[0], WithinAbs(0.05, 1e-15));
    auto g = smoothed_cross_entropy_grad(l, 0, 0.0);
    CHECK_THAT(g[0] + g[1], WithinAbs(0.0, 1e-15));
}

TEST_CASE("argmax ties go to the lowest index") {
    std::vector<double> v = {1.0, 3.0, 3.0, 2.0};
    CHECK(argmax(v) == 1);
}

TEST_CASE("head gradients agree with finite differences") {
    CHECK(props::head_gradient_error(10, 21) <= 1e-4);
}

TEST_CASE("backbone gradients agree with finite differences") {
    auto v = small_vocab();
    ConvEncoder enc(v, {5, 1, 2, 9, 0.8});
    auto seg = enc.segment({"running", "sun"});
    std::mt19937_64 rng(2);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix w(seg.ids.size(), enc.width());
    for (double& x : w.values()) x = normal(rng);
    auto loss = [&]() {
        auto out = enc.encode(seg.ids);
        double s = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) s += out.values()[i] * w.values()[i];
        return s;
    };
    BackboneTrace trace;
    enc.forward(seg.ids, trace);
    auto grads = enc.zero_grads();
    enc.backward(trace, w, grads);
    auto params = enc.parameters();
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto vals = params[p]->values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double keep = vals[i];
            vals[i] = keep + 1e-6;
            const double up = loss();
            vals[i] = keep - 1e-6;
            const double down = loss();
            vals[i] = keep;
            const double numeric = (up - down) / 2e-6;
            const double analytic = grads[p].values()[i];
            if (std::abs(numeric) < 1e-8 && std::abs(analytic) < 1e-8) continue;
            worst = std::max(worst, oracle::relative_error(analytic, numeric));
        }
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("backbone and head save and load") {
    auto dir = std::filesystem::temp_directory_path() / "mrverb_numeric_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    ConvEncoder enc(small_vocab(), {6, 1, 1, 4, 0.5});
    enc.save(dir);
    auto loaded = load_backbone(enc.config_json(), dir);
    auto seg = enc.segment({"run", "sun"});
    CHECK(loaded->encode(seg.ids) == enc.encode(seg.ids));

    TaggerHead head(6, 3, 1);
    save_blob(dir / "h.bin", std::as_const(head).parameters());
    TaggerHead other(6, 3, 2);
    load_blob(dir / "h.bin", other.parameters());
    CHECK(other.logits(std::vector<double>(6, 0.5)) == head.logits(std::vector<double>(6, 0.5)));
    TaggerHead wrong(6, 4, 2);
    CHECK_THROWS_AS(load_blob(dir / "h.bin", wrong.parameters()), CheckpointError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("global norm clipping") {
    std::vector<Matrix> g = {Matrix(1, 2), Matrix(1, 1)};
    g[0](0, 0) = 3;
    g[0](0, 1) = 0;
    g[1](0, 0) = 4;
    CHECK(clip_global_norm(g, 1.0) == 5.0);
    CHECK_THAT(global_norm(g), WithinAbs(1.0, 1e-15));
    CHECK_THAT(g[1](0, 0), WithinAbs(0.8, 1e-15));
    CHECK(clip_global_norm(g, 10.0) == global_norm(g));
}

TEST_CASE("adam first step moves each weight by about lr") {
    Matrix p(1, 2, 1.0);
    std::vector<Matrix*> params = {&p};
    Adam adam(params, {0.1, 0.9, 0.999, 1e-8, 0.0});
    Matrix g(1, 2);
    g(0, 0) = 2.0;
    g(0, 1) = -0.5;
    adam.step(params, {g});
    CHECK_THAT(p(0, 0), WithinAbs(0.9, 1e-6));
    CHECK_THAT(p(0, 1), WithinAbs(1.1, 1e-6));
    CHECK(adam.step_count() == 1);
}

TEST_CASE("adam weight decay is decoupled") {
    Matrix p(1, 1, 2.0);
    std::vector<Matrix*> params = {&p};
    Adam adam(params, {0.1, 0.9, 0.999, 1e-8, 0.5});
    adam.step(params, {Matrix(1, 1)});
    CHECK_THAT(p(0, 0), WithinAbs(2.0 - 0.1 * 0.5 * 2.0, 1e-12));
}

TEST_CASE("compounding schedule grows to the cap") {
    CompoundingSchedule s(100, 1000, 1.001);
    CHECK(s.next() == 100.0);
    CHECK_THAT(s.next(), WithinAbs(100.1, 1e-9));
    CompoundingSchedule fast(100, 1000, 2.0);
    for (int i = 0; i < 4; ++i) fast.next();
    CHECK(fast.next() == 1000.0);
    CHECK(fast.peek() == 1000.0);
}

TEST_CASE("word batcher respects the budget and covers every sentence each epoch") {
    std::vector<std::size_t> lengths = {5, 3, 7, 2, 9, 4, 6, 1};
    WordBatcher b(lengths, CompoundingSchedule(10, 10, 1.0), 3);
    std::vector<int> seen(lengths.size(), 0);
    std::size_t covered = 0;
    while (covered < lengths.size()) {
        auto batch = b.next_batch();
        REQUIRE_FALSE(batch.empty());
        std::size_t words = 0;
        for (auto i : batch) words += lengths[i];
        if (batch.size() > 1) CHECK(words <= 10);
        for (auto i : batch) {
            CHECK(seen[i] == 0);
            seen[i] = 1;
            ++covered;
        }
    }
    CHECK(b.epoch() == 1);
    WordBatcher one({50}, CompoundingSchedule(10, 10, 1.0), 1);
    CHECK(one.next_batch() == std::vector<std::size_t>{0});
}
