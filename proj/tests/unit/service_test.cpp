#include <catch_amalgamated.hpp>

#include <filesystem>
#include <thread>

#include <httplib.h>

#include "mrverb/annotation_store.hpp"
#include "mrverb/evaluation.hpp"
#include "mrverb/llm_http.hpp"
#include "mrverb/service.hpp"

using namespace mrverb;
using nlohmann::json;

namespace {

std::vector<AnnotationTask> shipped_tasks() {
    return parse_tasks(read_file(default_data_dir() / "gold" / "expert_tasks.tsv"));
}

std::filesystem::path fresh_log(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove(p);
    return p;
}

json post(const AnnotationService& s, const std::string& task, json labels, const std::string& sid, int want) {
    auto r = s.handle("POST", "/tasks/" + task + "/labels", json{{"submission_id", sid}, {"labels", labels}}.dump());
    CHECK(r.status == want);
    return json::parse(r.body);
}

/// Starts `server` on a free local port in a background thread.
struct RunningServer {
    httplib::Server& server;
    int port;
    std::thread thread;
    explicit RunningServer(httplib::Server& s) : server(s), port(s.bind_to_any_port("127.0.0.1")) {
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~RunningServer() {
        server.stop();
        thread.join();
    }
};

}  // namespace

TEST_CASE("task file parsing") {
    auto tasks = shipped_tasks();
    CHECK(tasks.size() == 200);
    CHECK(tasks[0].tokens[tasks[0].target_token_index] == "arrived");
    CHECK_THROWS_AS(parse_tasks("a\tb\t-\tx\t0\n"), MalformedItem);
    CHECK_THROWS_AS(parse_tasks("a\tb\t-\tx y\t5\tc\n"), MalformedItem);
    CHECK_THROWS_AS(parse_tasks("a\tb\t-\tx y\t1\tc\na\tb\t-\tx y\t1\tc\n"), MalformedItem);
}

TEST_CASE("label sets follow the not_sure rule") {
    CHECK(parse_label_set({"manner", "result_scalar_change"}).size() == 2);
    try {
        parse_label_set({"not_sure", "manner"});
        FAIL("expected a throw");
    } catch (const InvalidLabelSet& e) {
        CHECK(e.conflict());
    }
    try {
        parse_label_set({"sideways"});
        FAIL("expected a throw");
    } catch (const InvalidLabelSet& e) {
        CHECK_FALSE(e.conflict());
    }
    CHECK_THROWS_AS(parse_label_set({}), InvalidLabelSet);
}

TEST_CASE("export collapses label sets") {
    using L = ExpertLabel;
    CHECK(AnnotationStore::collapse({L::Manner}) == "manner");
    CHECK(AnnotationStore::collapse({L::ScalarResult}) == "result");
    CHECK(AnnotationStore::collapse({L::ScalarResult, L::ScalarChange}) == "result");
    CHECK(AnnotationStore::collapse({L::Stative}) == "stative");
    CHECK(AnnotationStore::collapse({L::NotSure}) == "unsure");
    CHECK(AnnotationStore::collapse({L::Manner, L::ScalarChange}) == "unsure");
    CHECK(AnnotationStore::collapse({L::Stative, L::Manner}) == "unsure");
}

TEST_CASE("store replays its log and submissions are idempotent") {
    auto log = fresh_log("mrverb_store_test.jsonl");
    {
        AnnotationStore store(shipped_tasks(), log);
        CHECK(store.progress().done == 0);
        CHECK_FALSE(store.submit("exp-001", {"result_scalar_change"}, "s1").duplicate);
        CHECK(store.submit("exp-001", {"result_scalar_change"}, "s1").duplicate);
        CHECK_THROWS_AS(store.submit("exp-001", {"manner"}, "s1"), InvalidLabelSet);
        CHECK_THROWS_AS(store.submit("nope", {"manner"}, "s2"), UnknownTask);
        store.submit("exp-002", {"manner"}, "s2");
        CHECK(store.events().size() == 2);
        CHECK(store.next_pending()->task_id == "exp-003");
    }
    AnnotationStore again(shipped_tasks(), log);
    CHECK(again.progress().done == 2);
    CHECK(again.events().size() == 2);
    CHECK(again.find("exp-002")->assigned_labels == std::set<ExpertLabel>{ExpertLabel::Manner});
    CHECK(again.submit("exp-002", {"manner"}, "s2").duplicate);
    std::filesystem::remove(log);
}

TEST_CASE("service routes and status codes") {
    AnnotationStore store(shipped_tasks());
    AnnotationService s(store, "be careful");
    auto progress = s.handle("GET", "/progress", "");
    CHECK(progress.status == 200);
    CHECK(json::parse(progress.body) == json{{"done", 0}, {"total", 200}});

    auto next = json::parse(s.handle("GET", "/tasks/next", "").body);
    CHECK(next["task_id"] == "exp-001");
    CHECK(s.handle("GET", "/tasks/exp-002", "").status == 200);
    CHECK(s.handle("GET", "/tasks/zzz", "").status == 404);
    CHECK(s.handle("GET", "/nothing", "").status == 404);
    CHECK(s.handle("POST", "/progress", "").status == 405);
    CHECK(s.handle("GET", "/tasks/exp-001/labels", "").status == 405);
    auto g = s.handle("GET", "/guidelines?x=1", "");
    CHECK(g.body == "be careful");
    CHECK(g.content_type.rfind("text/plain", 0) == 0);

    CHECK(s.handle("POST", "/tasks/exp-001/labels", "{not json").status == 400);
    CHECK(s.handle("POST", "/tasks/exp-001/labels", R"({"labels":["manner"]})").status == 400);
    CHECK(s.handle("POST", "/tasks/exp-001/labels", R"({"submission_id":"a","labels":[3]})").status == 400);
    post(s, "exp-001", {"sideways"}, "a", 400);
    post(s, "exp-001", {"not_sure", "manner"}, "a", 409);
    post(s, "zzz", {"manner"}, "a", 404);
    auto ok = post(s, "exp-001", {"manner"}, "a", 200);
    CHECK(ok["duplicate"] == false);
    CHECK(ok["progress"]["done"] == 1);
    CHECK(post(s, "exp-001", {"manner"}, "a", 200)["duplicate"] == true);
    post(s, "exp-002", {"manner"}, "a", 409);
    CHECK(json::parse(s.handle("GET", "/progress", "").body)["done"] == 1);
}

TEST_CASE("labelling every task through the service then replaying gives the same export") {
    auto log = fresh_log("mrverb_service_replay.jsonl");
    auto gold = load_gold(DatasetId::Expert, default_gold_path(DatasetId::Expert));
    std::map<std::string, std::string> want;
    for (const auto& item : gold.items) want[item.item_id] = std::string(to_string(item.gold_label));
    std::string exported;
    {
        AnnotationStore store(shipped_tasks(), log);
        AnnotationService s(store, "");
        std::size_t n = 0;
        while (true) {
            auto next = json::parse(s.handle("GET", "/tasks/next", "").body);
            if (next.contains("done")) break;
            std::string id = next["task_id"];
            const auto& label = want.at(id);
            json labels = label == "result"    ? json{"result_scalar_result"}
                          : label == "unsure"  ? json{"not_sure"}
                                               : json{label};
            post(s, id, labels, "sub-" + std::to_string(n++), 200);
        }
        CHECK(n == 200);
        exported = s.handle("GET", "/export", "").body;
    }
    AnnotationStore replayed(shipped_tasks(), log);
    CHECK(replayed.progress().done == 200);
    CHECK(replayed.export_gold() == exported);
    auto round = parse_gold(DatasetId::Expert, exported);
    CHECK(round.composition() == expected_composition(DatasetId::Expert));
    std::filesystem::remove(log);
}

TEST_CASE("service answers over a real socket") {
    AnnotationStore store(shipped_tasks());
    AnnotationService service(store, "guide");
    httplib::Server server;
    mount(server, service);
    RunningServer running(server);
    REQUIRE(running.port > 0);
    httplib::Client client("127.0.0.1", running.port);
    auto r = client.Get("/progress");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");
    auto p = client.Post("/tasks/exp-003/labels", R"({"submission_id":"x","labels":["stative"]})", "application/json");
    REQUIRE(p);
    CHECK(p->status == 200);
    CHECK(store.progress().done == 1);
    auto bad = client.Post("/tasks/exp-003/labels", R"({"submission_id":"y","labels":["not_sure","stative"]})",
                           "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 409);
}

TEST_CASE("endpoint parsing") {
    auto e = parse_endpoint("http://localhost:8000/v1/");
    CHECK(e.host == "localhost");
    CHECK(e.port == 8000);
    CHECK(e.base_path == "/v1");
    CHECK(parse_endpoint("https://api.example.com").port == 443);
    CHECK(parse_endpoint("http://h").port == 80);
    CHECK_THROWS(parse_endpoint("localhost:8000"));
    CHECK_THROWS(parse_endpoint("ftp://h"));
    CHECK_THROWS(parse_endpoint("http://h:port"));
    CHECK_THROWS(parse_endpoint("http://:80"));
}

TEST_CASE("chat client talks to a chat completion endpoint") {
    httplib::Server server;
    std::string seen_auth, seen_prompt;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        auto body = json::parse(req.body);
        seen_prompt = body["messages"][0]["content"];
        res.set_content(json{{"choices", {{{"message", {{"content", "reply:" + seen_prompt}}}}}}}.dump(),
                        "application/json");
    });
    server.Post("/broken/chat/completions",
                [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    RunningServer running(server);
    auto base = "http://127.0.0.1:" + std::to_string(running.port);
    HttpChatClient client(base + "/v1", "m", "secret");
    CHECK(client.complete("hello") == "reply:hello");
    CHECK(seen_auth == "Bearer secret");
    HttpChatClient broken(base + "/broken", "m");
    CHECK_THROWS_AS(broken.complete("x"), TransportError);
}
