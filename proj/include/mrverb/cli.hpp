#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mrverb/analysis.hpp"
#include "mrverb/annotation.hpp"
#include "mrverb/annotation_store.hpp"
#include "mrverb/diagnostics.hpp"
#include "mrverb/evaluation.hpp"
#include "mrverb/llm_http.hpp"
#include "mrverb/pipeline.hpp"
#include "mrverb/pos_tagger.hpp"
#include "mrverb/service.hpp"
#include "mrverb/training.hpp"

namespace mrverb {

namespace cli_detail {

namespace fs = std::filesystem;

inline void write_text(const std::string& path, const std::string& content, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << content;
        return;
    }
    auto p = fs::path(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    f << content;
    if (!f) throw Error("cannot write " + path);
}

inline Corpus read_corpus(const std::string& path, Split split = Split::Unlabeled) {
    auto c = parse_column_format(read_file(path), split);
    validate(c);
    return c;
}

inline std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

/// Rule baseline or trained checkpoint, whichever the flags select.
struct TaggerChoice {
    std::optional<Checkpoint> checkpoint;
    DiagnosticLexicon lexicon;
    RuleBasedPosTagger pos_tagger;

    Predictor predictor() const {
        if (checkpoint) return checkpoint_predictor(*checkpoint);
        return diagnostics_predictor(lexicon, pos_tagger);
    }
};

inline std::unique_ptr<TaggerChoice> choose_tagger(const std::string& model, bool baseline, const std::string& lexicon) {
    if (model.empty() == !baseline) throw Error("give exactly one of --model or --baseline");
    auto t = std::make_unique<TaggerChoice>();
    if (baseline) t->lexicon = DiagnosticLexicon::load(lexicon);
    else t->checkpoint = Checkpoint::load(model);
    return t;
}

inline std::string default_lexicon() { return (default_data_dir() / "lexicon" / "seed_lexicon.tsv").string(); }

}  // namespace cli_detail

/// Runs one subcommand. `args` excludes the program name. Exit codes: 0 success, 1 domain
/// error, 2 usage error.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    using namespace cli_detail;
    CLI::App app{"mrverb: manner/result verb tagging toolkit", "mrverb"};
    app.require_subcommand(1);
    std::function<void()> action;

    // annotate
    auto* annotate = app.add_subcommand("annotate", "Label raw sentences with an external annotator");
    std::string a_in, a_source, a_prompt = "semantic", a_cache, a_out, a_stats, a_model;
    std::size_t a_batch = kDefaultBatchSize, a_conc = 4;
    bool a_offline = false;
    annotate->add_option("--in", a_in, "Raw sentences, one per line")->required();
    annotate->add_option("--source", a_source, "Source tag (default: input file stem)");
    annotate->add_option("--prompt", a_prompt, "semantic or syntactic")->check(CLI::IsMember({"semantic", "syntactic"}));
    annotate->add_option("--cache", a_cache, "Annotation cache (JSON lines)");
    annotate->add_option("--out", a_out, "Column-format output")->required();
    annotate->add_option("--stats", a_stats, "Write statistics as JSON");
    annotate->add_option("--batch-size", a_batch, "Sentences per request")->check(CLI::Range(1, 10));
    annotate->add_option("--concurrency", a_conc, "Parallel requests")->check(CLI::PositiveNumber);
    annotate->add_flag("--offline", a_offline, "Use cached replies only");
    annotate->add_option("--model", a_model, "Model id (default: MRVERB_LLM_MODEL or gpt-4o)");
    annotate->callback([&] {
        action = [&] {
            auto variant = PromptVariant::load(parse_prompt_id(a_prompt));
            auto raw = read_raw_sentences(read_file(a_in), a_source.empty() ? stem_of(a_in) : a_source);
            std::unique_ptr<LLMClient> client;
            if (a_offline) {
                const char* env = std::getenv("MRVERB_LLM_MODEL");
                client = std::make_unique<OfflineClient>(!a_model.empty() ? a_model : env && *env ? env : "gpt-4o");
            } else {
                auto c = HttpChatClient::from_environment();
                if (!a_model.empty()) c = HttpChatClient(std::getenv("MRVERB_LLM_URL"), a_model,
                                                         std::getenv("MRVERB_LLM_API_KEY") ? std::getenv("MRVERB_LLM_API_KEY") : "");
                client = std::make_unique<HttpChatClient>(std::move(c));
            }
            AnnotationCache cache = a_cache.empty() ? AnnotationCache() : AnnotationCache(a_cache);
            RuleBasedPosTagger pos;
            auto result = annotate_corpus(raw, *client, variant, cache, {&pos, a_batch, a_conc});
            for (const auto& w : result.warnings) err << "warning: " << w << '\n';
            write_text(a_out, serialize_column_format(result.corpus), out);
            if (!a_stats.empty()) write_text(a_stats, to_json(result.stats).dump(2) + "\n", out);
            err << result.corpus.sentences.size() << " sentences annotated, " << result.stats.failed_sentences.size()
                << " failed, " << result.stats.external_calls << " calls, " << result.stats.cache_hits
                << " cache hits\n";
        };
    });

    // build-dataset
    auto* build = app.add_subcommand("build-dataset", "Merge annotated corpora and split train/dev");
    std::vector<std::string> b_in;
    std::string b_train, b_dev;
    double b_frac = 0.1;
    build->add_option("--in", b_in, "Column-format corpus (repeatable)")->required();
    build->add_option("--out-train", b_train, "Training split")->required();
    build->add_option("--out-dev", b_dev, "Dev split")->required();
    build->add_option("--dev-fraction", b_frac, "Share of sentences held out");
    build->callback([&] {
        action = [&] {
            Corpus all;
            for (const auto& p : b_in) {
                auto c = read_corpus(p);
                all.sentences.insert(all.sentences.end(), c.sentences.begin(), c.sentences.end());
            }
            validate(all);
            auto [train_c, dev_c] = split_by_hash(all, b_frac);
            write_text(b_train, serialize_column_format(train_c), out);
            write_text(b_dev, serialize_column_format(dev_c), out);
            err << train_c.sentences.size() << " train, " << dev_c.sentences.size() << " dev sentences\n";
        };
    });

    // train
    auto* trn = app.add_subcommand("train", "Train a tagger");
    std::string t_config, t_train, t_dev, t_out;
    std::vector<std::string> t_gold;
    trn->add_option("--config", t_config, "Training configuration (JSON)");
    trn->add_option("--train", t_train, "Training corpus")->required();
    trn->add_option("--dev", t_dev, "Dev corpus (default: split off the training corpus)");
    trn->add_option("--gold", t_gold, "Gold sets for checkpoint selection when select_on_gold is set (repeatable)");
    trn->add_option("--out", t_out, "Checkpoint directory")->required();
    trn->callback([&] {
        action = [&] {
            TrainingConfig config = t_config.empty() ? TrainingConfig{} : TrainingConfig::load(t_config);
            config.validate();
            Corpus train_c = read_corpus(t_train, Split::Train);
            Corpus dev_c;
            if (!t_dev.empty()) dev_c = read_corpus(t_dev, Split::Dev);
            else std::tie(train_c, dev_c) = split_by_hash(train_c, config.dev_fraction);
            TrainingHooks hooks;
            if (config.select_on_gold) {
                std::vector<GoldSet> sets;
                if (t_gold.empty())
                    for (auto d : {DatasetId::Linguists, DatasetId::Psycholinguistic, DatasetId::Expert})
                        sets.push_back(load_gold(d, default_gold_path(d)));
                for (const auto& g : t_gold) sets.push_back(load_gold(parse_dataset_id(stem_of(g)), g));
                hooks.dev_metric = gold_selection_metric(std::move(sets));
            }
            hooks.on_eval = [&err](const EvalRecord& r) {
                char buf[128];
                std::snprintf(buf, sizeof buf, "step %zu  loss %.4f  dev %.4f\n", r.step, r.train_loss, r.dev_accuracy);
                err << buf;
            };
            auto backbone = make_backbone(config, train_c);
            auto ckpt = train(config, train_c, dev_c, *backbone, hooks);
            ckpt.save(t_out);
            char buf[160];
            std::snprintf(buf, sizeof buf, "best dev %.4f at step %zu of %zu; saved to %s\n", ckpt.best_dev_accuracy,
                          ckpt.step_of_best, ckpt.steps_run, t_out.c_str());
            out << buf;
        };
    });

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Score a tagger on gold verb sets");
    std::vector<std::string> e_gold, e_dataset;
    std::string e_model, e_lexicon = default_lexicon(), e_out, e_json, e_disagree;
    bool e_baseline = false, e_no_verify = false;
    ev->add_option("--gold", e_gold, "Gold file; dataset from the file stem (repeatable, default: all three)");
    ev->add_option("--dataset", e_dataset, "Dataset id for each --gold, in order");
    ev->add_option("--model", e_model, "Checkpoint directory");
    ev->add_flag("--baseline", e_baseline, "Use the rule-based diagnostics instead of a model");
    ev->add_option("--lexicon", e_lexicon, "Diagnostics lexicon for --baseline");
    ev->add_option("--out", e_out, "Report table (default: stdout)");
    ev->add_option("--json", e_json, "Full report as JSON");
    ev->add_option("--disagreements", e_disagree, "Known-disagreement lemma list to report on");
    ev->add_flag("--no-verify", e_no_verify, "Skip the composition check");
    ev->callback([&] {
        action = [&] {
            if (!e_dataset.empty() && e_dataset.size() != e_gold.size())
                throw Error("--dataset must be given once per --gold");
            std::vector<GoldSet> sets;
            if (e_gold.empty())
                for (auto d : {DatasetId::Linguists, DatasetId::Psycholinguistic, DatasetId::Expert})
                    sets.push_back(load_gold(d, default_gold_path(d), !e_no_verify));
            for (std::size_t i = 0; i < e_gold.size(); ++i) {
                auto d = parse_dataset_id(e_dataset.empty() ? stem_of(e_gold[i]) : e_dataset[i]);
                sets.push_back(load_gold(d, e_gold[i], !e_no_verify));
            }
            auto tagger = choose_tagger(e_model, e_baseline, e_lexicon);
            auto predict = tagger->predictor();
            std::vector<EvalReport> reports;
            for (const auto& g : sets) reports.push_back(evaluate(predict, g));
            std::string table = format_report_table(reports);
            if (!e_disagree.empty()) {
                auto lemmas = load_known_disagreements(e_disagree);
                table += "\nknown disagreements\n";
                for (const auto& r : reports)
                    for (const auto& o : known_disagreement_outcomes(r, lemmas))
                        table += r.dataset_id + "\t" + o.item_id + "\t" + o.lemma + "\tgold=" +
                                 std::string(to_string(o.gold)) + "\tpred=" +
                                 std::string(kEvalClassNames[static_cast<std::size_t>(o.predicted)]) + "\t" +
                                 lemmas.at(text::to_lower(o.lemma)) + "\n";
            }
            write_text(e_out, table, out);
            if (!e_json.empty()) {
                nlohmann::json j = nlohmann::json::array();
                for (const auto& r : reports) j.push_back(to_json(r));
                write_text(e_json, nlohmann::json{{"reports", j}, {"macro_average_accuracy", macro_average_accuracy(reports)}}.dump(2) + "\n", out);
            }
        };
    });

    // tag
    auto* tg = app.add_subcommand("tag", "Tag raw sentences with a trained model");
    std::string g_model, g_in, g_out, g_source;
    tg->add_option("--model", g_model, "Checkpoint directory")->required();
    tg->add_option("--in", g_in, "Raw sentences, one per line")->required();
    tg->add_option("--out", g_out, "Column-format output (default: stdout)");
    tg->add_option("--source", g_source, "Source tag (default: input file stem)");
    tg->callback([&] {
        action = [&] {
            auto ckpt = Checkpoint::load(g_model);
            Corpus c;
            for (const auto& r : read_raw_sentences(read_file(g_in), g_source.empty() ? stem_of(g_in) : g_source)) {
                auto tokens = tokenize(r.text);
                if (tokens.empty()) continue;
                c.sentences.push_back(tag(ckpt, tokens, r.sentence_id, r.source));
            }
            write_text(g_out, serialize_column_format(c), out);
        };
    });

    // analyze
    auto* an = app.add_subcommand("analyze", "Per-speaker manner/result measures for transcripts");
    std::vector<std::string> n_in;
    std::string n_model, n_lexicon = default_lexicon(), n_out, n_ratio = "tokens";
    bool n_baseline = false;
    an->add_option("--in", n_in, "CHAT-style transcript (repeatable)")->required();
    an->add_option("--model", n_model, "Checkpoint directory");
    an->add_flag("--baseline", n_baseline, "Use the rule-based diagnostics instead of a model");
    an->add_option("--lexicon", n_lexicon, "Diagnostics lexicon for --baseline");
    an->add_option("--out", n_out, "Measures table (default: stdout)");
    an->add_option("--ratio", n_ratio, "tokens or types")->check(CLI::IsMember({"tokens", "types"}));
    an->callback([&] {
        action = [&] {
            auto tagger = choose_tagger(n_model, n_baseline, n_lexicon);
            auto predict = tagger->predictor();
            std::vector<TaggedUtterance> tagged;
            for (const auto& p : n_in) {
                auto t = tag_utterances(ingest_transcript(read_file(p), stem_of(p)), predict);
                tagged.insert(tagged.end(), t.begin(), t.end());
            }
            auto m = speaker_measures(tagged, n_ratio == "types" ? RatioBasis::Types : RatioBasis::Tokens);
            write_text(n_out, format_measures(m), out);
        };
    });

    // serve
    auto* sv = app.add_subcommand("serve", "Run the expert annotation service");
    std::string s_tasks, s_log, s_host = "127.0.0.1", s_guidelines;
    int s_port = 0;
    sv->add_option("--tasks", s_tasks, "Task file")->required();
    sv->add_option("--log", s_log, "Event log (JSON lines)")->required();
    sv->add_option("--port", s_port, "Port (default: MRVERB_PORT or 8080)");
    sv->add_option("--host", s_host, "Bind address");
    sv->add_option("--guidelines", s_guidelines, "Guideline text (default: bundled)");
    sv->callback([&] {
        action = [&] {
            if (s_port == 0) {
                const char* env = std::getenv("MRVERB_PORT");
                s_port = env && *env ? std::atoi(env) : 8080;
            }
            AnnotationStore store(parse_tasks(read_file(s_tasks)), fs::path(s_log));
            AnnotationService service(store, read_file(s_guidelines.empty() ? default_data_dir() / "guidelines.txt"
                                                                           : fs::path(s_guidelines)));
            httplib::Server server;
            mount(server, service);
            auto p = store.progress();
            err << "serving " << p.total << " tasks (" << p.done << " done) on " << s_host << ":" << s_port << '\n';
            if (!server.listen(s_host, s_port)) throw Error("cannot listen on " + s_host + ":" + std::to_string(s_port));
        };
    });

    std::reverse(args.begin(), args.end());
    try {
        auto pending = args;
        app.parse(pending);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        // CLI11 checks required options before leftovers; name an unknown flag first
        CLI::App* sub = args.empty() ? nullptr : app.get_subcommand_no_throw(args.back());
        if (sub) {
            for (auto it = args.rbegin(); it != args.rend(); ++it) {
                if (it->size() < 2 || (*it)[0] != '-' || *it == "--") continue;
                auto name = it->substr(0, it->find('='));
                if (!sub->get_option_no_throw(name) && name != "-h" && name != "--help") {
                    err << "usage error: unknown option " << name << " for '" << sub->get_name() << "'\n";
                    return 2;
                }
            }
        }
        err << "usage error: " << e.what() << '\n';
        return 2;
    }
    try {
        if (action) action();
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace mrverb
