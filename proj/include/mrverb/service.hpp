#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mrverb/annotation_store.hpp"

namespace mrverb {

struct HttpResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

inline nlohmann::json task_to_json(const AnnotationTask& t) {
    nlohmann::json labels = nlohmann::json::array();
    for (auto l : t.assigned_labels) labels.push_back(std::string(to_string(l)));
    return {{"task_id", t.task_id},
            {"lemma", t.lemma},
            {"sentence", t.sentence},
            {"tokens", t.tokens},
            {"target_token_index", t.target_token_index},
            {"verbnet_class", t.verbnet_class},
            {"status", t.status == TaskStatus::Done ? "done" : "pending"},
            {"assigned_labels", labels}};
}

inline nlohmann::json progress_to_json(const Progress& p) { return {{"done", p.done}, {"total", p.total}}; }

/// HTTP front end for an AnnotationStore. `handle` is transport-free; `serve` binds it to a socket.
///
///   GET  /tasks/next          next pending task, or {"done": true}
///   GET  /tasks/{id}          one task
///   POST /tasks/{id}/labels   {"submission_id": str, "labels": [str, ...]}
///   GET  /progress            {"done": n, "total": m}
///   GET  /guidelines          annotation guidelines, text/plain
///   GET  /export              finished tasks in gold-file format
class AnnotationService {
public:
    AnnotationService(AnnotationStore& store, std::string guidelines)
        : store_(store), guidelines_(std::move(guidelines)) {}

    HttpResponse handle(std::string_view method, std::string_view path, std::string_view body) const {
        if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
        auto parts = text::split(path, '/');
        std::vector<std::string_view> seg;
        for (auto p : parts)
            if (!p.empty()) seg.push_back(p);

        if (seg.size() == 2 && seg[0] == "tasks" && seg[1] == "next") {
            if (method != "GET") return not_allowed();
            auto t = store_.next_pending();
            if (!t) return json(200, {{"done", true}, {"progress", progress_to_json(store_.progress())}});
            auto j = task_to_json(*t);
            j["progress"] = progress_to_json(store_.progress());
            return json(200, j);
        }
        if (seg.size() == 3 && seg[0] == "tasks" && seg[2] == "labels") {
            if (method != "POST") return not_allowed();
            return post_labels(std::string(seg[1]), body);
        }
        if (seg.size() == 2 && seg[0] == "tasks") {
            if (method != "GET") return not_allowed();
            auto t = store_.find(std::string(seg[1]));
            if (!t) return error(404, "no task '" + std::string(seg[1]) + "'");
            return json(200, task_to_json(*t));
        }
        if (seg.size() == 1 && seg[0] == "progress") {
            if (method != "GET") return not_allowed();
            return json(200, progress_to_json(store_.progress()));
        }
        if (seg.size() == 1 && seg[0] == "guidelines") {
            if (method != "GET") return not_allowed();
            return {200, "text/plain; charset=utf-8", guidelines_};
        }
        if (seg.size() == 1 && seg[0] == "export") {
            if (method != "GET") return not_allowed();
            return {200, "text/tab-separated-values; charset=utf-8", store_.export_gold()};
        }
        return error(404, "no route for " + std::string(method) + " " + std::string(path));
    }

private:
    HttpResponse post_labels(const std::string& task_id, std::string_view body) const {
        nlohmann::json req;
        try {
            req = nlohmann::json::parse(body);
        } catch (const nlohmann::json::parse_error&) {
            return error(400, "body is not valid JSON");
        }
        if (!req.is_object() || !req.contains("labels") || !req["labels"].is_array())
            return error(400, "body must be an object with a 'labels' list");
        if (!req.contains("submission_id") || !req["submission_id"].is_string())
            return error(400, "body must carry a string 'submission_id'");
        std::vector<std::string> labels;
        for (const auto& l : req["labels"]) {
            if (!l.is_string()) return error(400, "labels must be strings");
            labels.push_back(l.get<std::string>());
        }
        if (!store_.find(task_id)) return error(404, "no task '" + task_id + "'");
        try {
            auto r = store_.submit(task_id, labels, req["submission_id"].get<std::string>());
            auto j = task_to_json(r.task);
            j["duplicate"] = r.duplicate;
            j["progress"] = progress_to_json(store_.progress());
            return json(200, j);
        } catch (const UnknownTask& e) {
            return error(404, e.what());
        } catch (const InvalidLabelSet& e) {
            return error(e.conflict() ? 409 : 400, e.what());
        }
    }

    static HttpResponse json(int status, const nlohmann::json& j) { return {status, "application/json", j.dump()}; }
    static HttpResponse error(int status, const std::string& message) { return json(status, {{"error", message}}); }
    static HttpResponse not_allowed() { return error(405, "method not allowed"); }

    AnnotationStore& store_;
    std::string guidelines_;
};

/// Routes every request on `server` through `service`.
inline void mount(httplib::Server& server, const AnnotationService& service) {
    auto adapter = [&service](const httplib::Request& req, httplib::Response& res) {
        auto r = service.handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_content(r.body, r.content_type);
    };
    server.Get(".*", adapter);
    server.Post(".*", adapter);
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
}

}  // namespace mrverb
