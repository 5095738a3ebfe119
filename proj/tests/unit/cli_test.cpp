#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mrverb/cli.hpp"
#include "support/synthetic.hpp"

using namespace mrverb;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = run_cli(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    auto d = fs::temp_directory_path() / ("mrverb_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write(const fs::path& p, const std::string& content) { std::ofstream(p) << content; }

std::string sample(const std::string& name) { return (default_data_dir() / "samples" / name).string(); }

}  // namespace

TEST_CASE("cli help and usage errors") {
    auto help = cli({"--help"});
    CHECK(help.code == 0);
    CHECK_THAT(help.out, ContainsSubstring("evaluate"));
    auto none = cli({});
    CHECK(none.code == 2);
    auto bad = cli({"train", "--no-such-flag"});
    CHECK(bad.code == 2);
    CHECK_THAT(bad.err, ContainsSubstring("--no-such-flag"));
}

TEST_CASE("cli train rejects a config that breaks the patience invariant") {
    auto d = scratch("badcfg");
    write(d / "cfg.json", R"({"eval_every": 200, "patience": 300})");
    auto r = cli({"train", "--config", (d / "cfg.json").string(), "--train", sample("annotated.tsv"), "--out",
                  (d / "model").string()});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("patience must be a positive multiple of eval_every"));
    CHECK_FALSE(fs::exists(d / "model"));
}

TEST_CASE("cli evaluate with the baseline writes reports") {
    auto d = scratch("eval");
    auto r = cli({"evaluate", "--baseline", "--out", (d / "report.txt").string(), "--json",
                  (d / "report.json").string(), "--disagreements",
                  (default_data_dir() / "gold" / "known_disagreements.tsv").string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
    auto table = read_file(d / "report.txt");
    CHECK_THAT(table, ContainsSubstring("linguists"));
    CHECK_THAT(table, ContainsSubstring("expert"));
    CHECK_THAT(table, ContainsSubstring("macro average"));
    auto j = nlohmann::json::parse(read_file(d / "report.json"));
    CHECK(j["reports"].size() == 3);
    CHECK(j["macro_average_accuracy"].get<double>() > 0.0);
    auto both = cli({"evaluate", "--baseline", "--model", d.string()});
    CHECK(both.code != 0);
}

TEST_CASE("cli evaluate reports a tampered gold file") {
    auto d = scratch("tampered");
    auto text = read_file(default_gold_path(DatasetId::Psycholinguistic));
    text = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
    write(d / "psycholinguistic.tsv", text);
    auto r = cli({"evaluate", "--baseline", "--gold", (d / "psycholinguistic.tsv").string()});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("expected 77 items"));
    auto skip = cli({"evaluate", "--baseline", "--no-verify", "--gold", (d / "psycholinguistic.tsv").string()});
    CHECK(skip.code == 0);
}

TEST_CASE("cli build-dataset splits deterministically") {
    auto d = scratch("build");
    auto g = synth::separable_corpus(200, 0.0, 5);
    write(d / "a.tsv", serialize_column_format(g.train));
    std::vector<std::string> args = {"build-dataset", "--in", (d / "a.tsv").string(), "--out-train",
                                     (d / "train.tsv").string(), "--out-dev", (d / "dev.tsv").string(),
                                     "--dev-fraction", "0.2"};
    REQUIRE(cli(args).code == 0);
    auto train = parse_column_format(read_file(d / "train.tsv"));
    auto dev = parse_column_format(read_file(d / "dev.tsv"));
    CHECK(train.sentences.size() + dev.sentences.size() == 200);
    auto first = read_file(d / "dev.tsv");
    REQUIRE(cli(args).code == 0);
    CHECK(read_file(d / "dev.tsv") == first);
    auto dup = cli({"build-dataset", "--in", (d / "a.tsv").string(), "--in", (d / "a.tsv").string(), "--out-train",
                    (d / "t.tsv").string(), "--out-dev", (d / "d.tsv").string()});
    CHECK(dup.code == 1);
}

TEST_CASE("cli train then tag round trips through the column format") {
    auto d = scratch("train");
    auto g = synth::separable_corpus(300, 0.2, 9);
    write(d / "train.tsv", serialize_column_format(g.train));
    write(d / "dev.tsv", serialize_column_format(g.heldout));
    write(d / "cfg.json", R"({"max_steps": 200, "eval_every": 100, "patience": 200, "learning_rate": 0.003,
                              "projection_width": 8, "backbone": {"width": 8, "bpe_merges": 200}})");
    auto t = cli({"train", "--config", (d / "cfg.json").string(), "--train", (d / "train.tsv").string(), "--dev",
                  (d / "dev.tsv").string(), "--out", (d / "model").string()});
    INFO(t.err);
    REQUIRE(t.code == 0);
    CHECK_THAT(t.err, ContainsSubstring("step 100"));
    CHECK(fs::exists(d / "model" / "manifest.json"));

    auto tag = cli({"tag", "--model", (d / "model").string(), "--in", sample("sentences.txt"), "--out",
                    (d / "tagged.tsv").string()});
    INFO(tag.err);
    REQUIRE(tag.code == 0);
    auto tagged = parse_column_format(read_file(d / "tagged.tsv"));
    std::size_t lines = 0;
    auto raw = read_file(sample("sentences.txt"));
    for (auto l : text::lines(raw))
        if (!text::trim(l).empty()) ++lines;
    CHECK(tagged.sentences.size() == lines);
    CHECK(tagged.sentences[0].source == "sentences");

    auto ev = cli({"evaluate", "--model", (d / "model").string()});
    CHECK(ev.code == 0);
}

TEST_CASE("cli analyze writes the measures table") {
    auto r = cli({"analyze", "--baseline", "--in", sample("transcript.cha")});
    INFO(r.err);
    REQUIRE(r.code == 0);
    auto lines = text::lines(r.out);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == kMeasuresHeader);
    CHECK(lines[1].substr(0, 4) == "CHI\t");
    CHECK(lines[2].substr(0, 4) == "MOT\t");
    auto types = cli({"analyze", "--baseline", "--ratio", "types", "--in", sample("transcript.cha")});
    CHECK(types.code == 0);
    CHECK(cli({"analyze", "--baseline", "--ratio", "lemmas", "--in", sample("transcript.cha")}).code == 2);
}

TEST_CASE("cli annotate offline with an empty cache fails every sentence") {
    auto d = scratch("annotate");
    auto r = cli({"annotate", "--offline", "--in", sample("sentences.txt"), "--out", (d / "out.tsv").string(),
                  "--cache", (d / "cache.jsonl").string()});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, ContainsSubstring("offline"));
}
