#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrverb/annotation.hpp"
#include "mrverb/corpus.hpp"
#include "mrverb/error.hpp"
#include "mrverb/text.hpp"

namespace mrverb {

enum class ExpertLabel { Manner, ScalarResult, ScalarChange, Stative, NotSure };

inline constexpr std::array<std::string_view, 5> kExpertLabelNames = {
    "manner", "result_scalar_result", "result_scalar_change", "stative", "not_sure"};

inline std::string_view to_string(ExpertLabel l) { return kExpertLabelNames[static_cast<std::size_t>(l)]; }

inline std::optional<ExpertLabel> parse_expert_label(std::string_view s) {
    for (std::size_t i = 0; i < kExpertLabelNames.size(); ++i)
        if (kExpertLabelNames[i] == s) return static_cast<ExpertLabel>(i);
    return std::nullopt;
}

/// Label set rejected by the store. `conflict` marks a well-formed set that breaks the
/// not_sure rule, as opposed to a malformed one.
class InvalidLabelSet : public Error {
public:
    InvalidLabelSet(const std::string& what, bool conflict) : Error(what), conflict_(conflict) {}
    bool conflict() const { return conflict_; }

private:
    bool conflict_;
};

class UnknownTask : public Error {
public:
    using Error::Error;
};

enum class TaskStatus { Pending, Done };

struct AnnotationTask {
    std::string task_id;
    std::string lemma;
    std::string sentence;
    std::vector<std::string> tokens;
    std::size_t target_token_index = 0;
    std::string verbnet_class;
    TaskStatus status = TaskStatus::Pending;
    std::set<ExpertLabel> assigned_labels;

    friend bool operator==(const AnnotationTask&, const AnnotationTask&) = default;
};

struct LabelEvent {
    std::string submission_id;
    std::string task_id;
    std::set<ExpertLabel> labels;
    std::string timestamp;

    friend bool operator==(const LabelEvent&, const LabelEvent&) = default;
};

inline nlohmann::json to_json(const LabelEvent& e) {
    nlohmann::json labels = nlohmann::json::array();
    for (auto l : e.labels) labels.push_back(std::string(to_string(l)));
    return {{"submission_id", e.submission_id}, {"task_id", e.task_id}, {"labels", labels}, {"timestamp", e.timestamp}};
}

/// Validates a label set given as strings. Unknown names or an empty set are malformed;
/// not_sure together with anything else is a conflict.
inline std::set<ExpertLabel> parse_label_set(const std::vector<std::string>& names) {
    if (names.empty()) throw InvalidLabelSet("label set is empty", false);
    std::set<ExpertLabel> out;
    for (const auto& n : names) {
        auto l = parse_expert_label(n);
        if (!l) throw InvalidLabelSet("unknown label '" + n + "'", false);
        out.insert(*l);
    }
    if (out.count(ExpertLabel::NotSure) && out.size() > 1)
        throw InvalidLabelSet("not_sure cannot be combined with other labels", true);
    return out;
}

inline LabelEvent event_from_json(const nlohmann::json& j) {
    LabelEvent e;
    e.submission_id = j.at("submission_id").get<std::string>();
    e.task_id = j.at("task_id").get<std::string>();
    e.labels = parse_label_set(j.at("labels").get<std::vector<std::string>>());
    e.timestamp = j.value("timestamp", std::string());
    return e;
}

/// Task file: tab-separated item_id, lemma, label (ignored; use "-"), sentence, target index,
/// VerbNet class. `#` lines are comments.
inline std::vector<AnnotationTask> parse_tasks(std::string_view input) {
    std::vector<AnnotationTask> tasks;
    std::set<std::string> ids;
    std::size_t line_no = 0;
    for (auto raw : text::lines(input)) {
        ++line_no;
        auto line = text::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto where = "task file line " + std::to_string(line_no);
        auto cols = text::split(raw, '\t');
        if (cols.size() != 6) throw MalformedItem(where + ": expected 6 tab-separated columns");
        AnnotationTask t;
        t.task_id = std::string(text::trim(cols[0]));
        t.lemma = std::string(text::trim(cols[1]));
        t.sentence = std::string(text::trim(cols[3]));
        t.tokens = tokenize(t.sentence);
        try {
            t.target_token_index = std::stoul(std::string(text::trim(cols[4])));
        } catch (const std::exception&) {
            throw MalformedItem(where + ": bad target index");
        }
        t.verbnet_class = std::string(text::trim(cols[5]));
        if (t.task_id.empty() || !ids.insert(t.task_id).second) throw MalformedItem(where + ": missing or duplicate id");
        if (t.target_token_index >= t.tokens.size()) throw MalformedItem(where + ": target index out of range");
        tasks.push_back(std::move(t));
    }
    return tasks;
}

struct Progress {
    std::size_t done = 0;
    std::size_t total = 0;
    friend bool operator==(const Progress&, const Progress&) = default;
};

struct SubmitResult {
    AnnotationTask task;
    bool duplicate = false;  // the submission id had already been applied
};

/// Task states derived from an append-only log of label submissions. Opening a store on an
/// existing log replays it; every accepted submission is appended before it takes effect.
class AnnotationStore {
public:
    explicit AnnotationStore(std::vector<AnnotationTask> tasks, std::optional<std::filesystem::path> log_path = {})
        : log_path_(std::move(log_path)) {
        for (auto& t : tasks) {
            order_.push_back(t.task_id);
            tasks_.emplace(t.task_id, std::move(t));
        }
        if (log_path_ && std::filesystem::exists(*log_path_)) {
            std::ifstream in(*log_path_);
            std::string line;
            std::size_t n = 0;
            while (std::getline(in, line)) {
                ++n;
                if (text::trim(line).empty()) continue;
                try {
                    apply(event_from_json(nlohmann::json::parse(line)));
                } catch (const std::exception& e) {
                    throw Error("event log line " + std::to_string(n) + " is invalid: " + e.what());
                }
            }
        }
    }

    SubmitResult submit(const std::string& task_id, const std::vector<std::string>& labels,
                        const std::string& submission_id, std::string timestamp = utc_timestamp()) {
        std::lock_guard lock(mutex_);
        auto it = tasks_.find(task_id);
        if (it == tasks_.end()) throw UnknownTask("no task '" + task_id + "'");
        auto set = parse_label_set(labels);
        if (submission_id.empty()) throw InvalidLabelSet("submission_id is required", false);
        if (auto prior = applied_.find(submission_id); prior != applied_.end()) {
            const auto& e = events_[prior->second];
            if (e.task_id != task_id || e.labels != set)
                throw InvalidLabelSet("submission_id '" + submission_id + "' was already used for a different submission",
                                      true);
            return {it->second, true};
        }
        LabelEvent e{submission_id, task_id, std::move(set), std::move(timestamp)};
        if (log_path_) {
            std::ofstream out(*log_path_, std::ios::app);
            out << to_json(e).dump() << '\n';
            out.flush();
            if (!out) throw Error("cannot append to event log " + log_path_->string());
        }
        apply(e);
        return {tasks_.at(task_id), false};
    }

    std::optional<AnnotationTask> next_pending() const {
        std::lock_guard lock(mutex_);
        for (const auto& id : order_) {
            const auto& t = tasks_.at(id);
            if (t.status == TaskStatus::Pending) return t;
        }
        return std::nullopt;
    }

    std::optional<AnnotationTask> find(const std::string& task_id) const {
        std::lock_guard lock(mutex_);
        auto it = tasks_.find(task_id);
        if (it == tasks_.end()) return std::nullopt;
        return it->second;
    }

    Progress progress() const {
        std::lock_guard lock(mutex_);
        Progress p{0, order_.size()};
        for (const auto& [id, t] : tasks_) p.done += t.status == TaskStatus::Done;
        return p;
    }

    std::vector<AnnotationTask> tasks() const {
        std::lock_guard lock(mutex_);
        std::vector<AnnotationTask> out;
        for (const auto& id : order_) out.push_back(tasks_.at(id));
        return out;
    }

    std::vector<LabelEvent> events() const {
        std::lock_guard lock(mutex_);
        return events_;
    }

    /// Finished tasks in gold-file format with a VerbNet column. The two result subtypes become
    /// `result`, not_sure becomes `unsure`, and mixed sets (manner with result, or stative with
    /// anything) are exported as `unsure`.
    std::string export_gold() const {
        std::lock_guard lock(mutex_);
        std::ostringstream out;
        out << "# item_id\tlemma\tlabel\tsentence\ttarget_index\tverbnet_class\n";
        for (const auto& id : order_) {
            const auto& t = tasks_.at(id);
            if (t.status != TaskStatus::Done) continue;
            out << t.task_id << '\t' << t.lemma << '\t' << collapse(t.assigned_labels) << '\t' << t.sentence << '\t'
                << t.target_token_index << '\t' << t.verbnet_class << '\n';
        }
        return out.str();
    }

    static std::string_view collapse(const std::set<ExpertLabel>& labels) {
        bool manner = labels.count(ExpertLabel::Manner) > 0;
        bool result = labels.count(ExpertLabel::ScalarResult) || labels.count(ExpertLabel::ScalarChange);
        bool stative = labels.count(ExpertLabel::Stative) > 0;
        if (labels.count(ExpertLabel::NotSure)) return "unsure";
        if (stative) return manner || result ? "unsure" : "stative";
        if (manner && result) return "unsure";
        if (manner) return "manner";
        if (result) return "result";
        return "unsure";
    }

private:
    void apply(const LabelEvent& e) {
        auto it = tasks_.find(e.task_id);
        if (it == tasks_.end()) throw UnknownTask("event refers to unknown task '" + e.task_id + "'");
        if (applied_.count(e.submission_id)) return;
        it->second.assigned_labels = e.labels;
        it->second.status = TaskStatus::Done;
        applied_.emplace(e.submission_id, events_.size());
        events_.push_back(e);
    }

    std::optional<std::filesystem::path> log_path_;
    std::vector<std::string> order_;
    std::map<std::string, AnnotationTask> tasks_;
    std::vector<LabelEvent> events_;
    std::map<std::string, std::size_t> applied_;
    mutable std::mutex mutex_;
};

}  // namespace mrverb
