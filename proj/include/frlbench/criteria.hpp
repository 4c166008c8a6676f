#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "frlbench/classifier.hpp"
#include "frlbench/errors.hpp"
#include "frlbench/metrics.hpp"
#include "frlbench/parallel.hpp"
#include "frlbench/protocol.hpp"
#include "frlbench/tabular.hpp"

namespace frlbench {

// Acceptance thresholds for transfer benchmarks. min_samples has no canonical
// value; 10,000 is a toolkit default.
struct CriteriaThresholds {
    std::size_t min_samples = 10000;
    std::size_t min_tasks = 2;
    double dp_low = 0.05;
    double dp_high = 0.5;
    double uncorrelated_band = 0.05;
    double acc_low = 0.70;
    double acc_high = 0.90;
    double mb_gap = 0.05;

    void validate() const {
        if (min_tasks < 2) throw InvalidArgument("min_tasks must be at least 2");
        if (!(0.0 <= dp_low && dp_low < dp_high && dp_high <= 1.0))
            throw InvalidArgument("thresholds require 0 <= dp_low < dp_high <= 1");
        if (!(0.5 < acc_low && acc_low < acc_high && acc_high <= 1.0))
            throw InvalidArgument("thresholds require 0.5 < acc_low < acc_high <= 1");
        if (!(mb_gap > 0.0)) throw InvalidArgument("mb_gap must be positive");
        if (uncorrelated_band < 0.0) throw InvalidArgument("uncorrelated_band must be non-negative");
    }
};

struct CriterionOutcome {
    bool pass = false;
    std::string reason;
};

struct TaskCriteria {
    std::string task;
    bool is_proxy = false;
    double smc_with_proxy = 0.0;
    double ub_accuracy = 0.0;
    double ub_dp = 0.0;
    double mb_accuracy = 0.0;
    CriterionOutcome c2;
    CriterionOutcome c4;
    // Set when the task cannot be evaluated at all (e.g. one class in train).
    std::string degenerate;

    bool accepted() const { return degenerate.empty() && c2.pass && c4.pass; }
};

struct CriteriaReport {
    std::string proxy;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    CriteriaThresholds thresholds;
    std::vector<TaskCriteria> tasks;  // sorted by task name
    bool c1 = false;
    bool c3 = false;

    bool accepted() const { return c1 && c3; }
};

inline CriterionOutcome check_c2(double dp, const CriteriaThresholds& t) {
    if (dp < t.dp_low) return {false, "dp below dp_low"};
    if (dp > t.dp_high) return {false, "dp above dp_high"};
    return {true, ""};
}

inline CriterionOutcome check_c4(double acc, double mb, const CriteriaThresholds& t) {
    if (acc < t.acc_low) return {false, "accuracy below acc_low"};
    if (acc > t.acc_high) return {false, "accuracy above acc_high"};
    if (!(acc - mb > t.mb_gap)) return {false, "accuracy within mb_gap of the majority baseline"};
    return {true, ""};
}

// Re-derives every pass/fail flag from the recorded statistics.
inline void apply_thresholds(CriteriaReport& r) {
    std::size_t accepted = 0;
    r.c3 = false;
    for (auto& t : r.tasks) {
        if (!t.degenerate.empty()) {
            t.c2 = {false, t.degenerate};
            t.c4 = {false, t.degenerate};
            continue;
        }
        t.c2 = check_c2(t.ub_dp, r.thresholds);
        t.c4 = check_c4(t.ub_accuracy, t.mb_accuracy, r.thresholds);
        if (!t.accepted()) continue;
        ++accepted;
        if (!t.is_proxy && std::abs(t.smc_with_proxy - 0.5) <= r.thresholds.uncorrelated_band) r.c3 = true;
    }
    r.c1 = r.n_train + r.n_test >= r.thresholds.min_samples && accepted >= r.thresholds.min_tasks;
}

// Per-task baseline statistics with the classifier used downstream, then
// threshold checks. Tasks with a single class in train are rejected, not errors.
inline CriteriaReport evaluate_criteria(const SplitDataset& d, const std::string& proxy,
                                        const CriteriaThresholds& thresholds, const ClassifierParams& p,
                                        std::size_t n_runs = 5, std::size_t workers = 1) {
    thresholds.validate();
    if (!d.test.has_task(proxy)) throw UnknownTaskError(proxy);
    CriteriaReport r;
    r.proxy = proxy;
    r.n_train = d.train.n();
    r.n_test = d.test.n();
    r.thresholds = thresholds;
    const auto names = d.test.task_names();
    r.tasks.resize(names.size());
    const auto& proxy_test = d.test.task(proxy);
    parallel_for(names.size(), workers, [&](std::size_t i) {
        TaskCriteria& t = r.tasks[i];
        t.task = names[i];
        t.is_proxy = names[i] == proxy;
        const auto& ytr = d.train.task(t.task);
        const auto& yte = d.test.task(t.task);
        t.smc_with_proxy = smc(yte, proxy_test);
        const auto pos = std::count(ytr.begin(), ytr.end(), 1);
        if (pos == 0 || pos == static_cast<std::ptrdiff_t>(ytr.size())) {
            t.degenerate = "degenerate task: single class in train";
            t.mb_accuracy = majority_accuracy(ytr, yte);
            return;
        }
        t.mb_accuracy = majority_accuracy(ytr, yte);
        const auto ub = unfair_baseline(d, t.task, p, n_runs);
        t.ub_accuracy = ub.mean_accuracy;
        t.ub_dp = ub.max_dp;
    });
    apply_thresholds(r);
    return r;
}

// Accepted tasks, most proxy-correlated first; ties by name.
inline std::vector<std::string> select_tasks(const CriteriaReport& r) {
    std::vector<const TaskCriteria*> acc;
    for (const auto& t : r.tasks)
        if (t.accepted()) acc.push_back(&t);
    std::stable_sort(acc.begin(), acc.end(),
                     [](const TaskCriteria* a, const TaskCriteria* b) { return a->smc_with_proxy > b->smc_with_proxy; });
    std::vector<std::string> out;
    for (const auto* t : acc) out.push_back(t->task);
    return out;
}

inline nlohmann::json to_json(const CriteriaThresholds& t) {
    return {{"min_samples", t.min_samples}, {"min_tasks", t.min_tasks}, {"dp_low", t.dp_low},
            {"dp_high", t.dp_high},         {"uncorrelated_band", t.uncorrelated_band},
            {"acc_low", t.acc_low},         {"acc_high", t.acc_high}, {"mb_gap", t.mb_gap}};
}

inline CriteriaThresholds thresholds_from_json(const nlohmann::json& j) {
    CriteriaThresholds t;
    t.min_samples = j.value("min_samples", t.min_samples);
    t.min_tasks = j.value("min_tasks", t.min_tasks);
    t.dp_low = j.value("dp_low", t.dp_low);
    t.dp_high = j.value("dp_high", t.dp_high);
    t.uncorrelated_band = j.value("uncorrelated_band", t.uncorrelated_band);
    t.acc_low = j.value("acc_low", t.acc_low);
    t.acc_high = j.value("acc_high", t.acc_high);
    t.mb_gap = j.value("mb_gap", t.mb_gap);
    t.validate();
    return t;
}

inline nlohmann::json to_json(const CriteriaReport& r) {
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& t : r.tasks)
        tasks.push_back({{"task", t.task},
                         {"is_proxy", t.is_proxy},
                         {"smc_with_proxy", t.smc_with_proxy},
                         {"ub_accuracy", t.ub_accuracy},
                         {"ub_dp", t.ub_dp},
                         {"mb_accuracy", t.mb_accuracy},
                         {"degenerate", t.degenerate},
                         {"c2", {{"pass", t.c2.pass}, {"reason", t.c2.reason}}},
                         {"c4", {{"pass", t.c4.pass}, {"reason", t.c4.reason}}},
                         {"accepted", t.accepted()}});
    return {{"proxy", r.proxy},
            {"n_train", r.n_train},
            {"n_test", r.n_test},
            {"thresholds", to_json(r.thresholds)},
            {"tasks", tasks},
            {"c1", r.c1},
            {"c3", r.c3},
            {"accepted", r.accepted()},
            {"selected_tasks", select_tasks(r)}};
}

inline CriteriaReport criteria_report_from_json(const nlohmann::json& j) {
    CriteriaReport r;
    r.proxy = j.at("proxy").get<std::string>();
    r.n_train = j.at("n_train").get<std::size_t>();
    r.n_test = j.at("n_test").get<std::size_t>();
    r.thresholds = thresholds_from_json(j.at("thresholds"));
    for (const auto& t : j.at("tasks")) {
        TaskCriteria tc;
        tc.task = t.at("task").get<std::string>();
        tc.is_proxy = t.at("is_proxy").get<bool>();
        tc.smc_with_proxy = t.at("smc_with_proxy").get<double>();
        tc.ub_accuracy = t.at("ub_accuracy").get<double>();
        tc.ub_dp = t.at("ub_dp").get<double>();
        tc.mb_accuracy = t.at("mb_accuracy").get<double>();
        tc.degenerate = t.value("degenerate", "");
        r.tasks.push_back(std::move(tc));
    }
    apply_thresholds(r);
    return r;
}

namespace detail {
inline std::string pct(double v) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(1);
    s << 100.0 * v << '%';
    return s.str();
}
inline std::string fixed3(double v) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(3);
    s << v;
    return s.str();
}

// Proxy first, then accepted tasks by decreasing SMC, then rejected tasks.
inline std::vector<const TaskCriteria*> table_order(const CriteriaReport& r) {
    std::vector<const TaskCriteria*> rows;
    for (const auto& t : r.tasks) rows.push_back(&t);
    std::stable_sort(rows.begin(), rows.end(), [](const TaskCriteria* a, const TaskCriteria* b) {
        if (a->is_proxy != b->is_proxy) return a->is_proxy;
        if (a->accepted() != b->accepted()) return a->accepted();
        return a->smc_with_proxy > b->smc_with_proxy;
    });
    return rows;
}
}  // namespace detail

inline void render_table_csv(const CriteriaReport& r, std::ostream& out) {
    out << "Task,UB Fairness,SMC with y_p,UB Accuracy,MB Accuracy,Accepted,Reason\n";
    for (const auto* t : detail::table_order(r)) {
        std::string reason = !t->degenerate.empty() ? t->degenerate : !t->c2.pass ? t->c2.reason : t->c4.reason;
        out << t->task << ',' << detail::fixed3(t->ub_dp) << ',' << detail::fixed3(t->smc_with_proxy) << ','
            << detail::fixed3(t->ub_accuracy) << ',' << detail::fixed3(t->mb_accuracy) << ','
            << (t->accepted() ? "yes" : "no") << ',' << reason << '\n';
    }
}

inline void render_table_text(const CriteriaReport& r, std::ostream& out) {
    std::size_t w = 4;
    for (const auto& t : r.tasks) w = std::max(w, t.task.size() + 5);
    auto pad = [](std::string s, std::size_t width) {
        if (s.size() < width) s.insert(0, width - s.size(), ' ');
        return s;
    };
    out << std::string("Task") + std::string(w - 4, ' ') << pad("UB Fairness", 13) << pad("SMC with y_p", 14)
        << pad("UB Accuracy", 13) << pad("MB Accuracy", 13) << "  Status\n";
    for (const auto* t : detail::table_order(r)) {
        std::string name = (t->is_proxy ? "y_p: " : "") + t->task;
        name += std::string(w > name.size() ? w - name.size() : 1, ' ');
        std::string status = t->accepted() ? "accepted"
                             : !t->degenerate.empty() ? "rejected (" + t->degenerate + ")"
                             : !t->c2.pass           ? "rejected (C2: " + t->c2.reason + ")"
                                                     : "rejected (C4: " + t->c4.reason + ")";
        out << name << pad(detail::fixed3(t->ub_dp), 13) << pad(detail::pct(t->smc_with_proxy), 14)
            << pad(detail::pct(t->ub_accuracy), 13) << pad(detail::pct(t->mb_accuracy), 13) << "  " << status
            << '\n';
    }
    out << "C1 (size/task count): " << (r.c1 ? "pass" : "fail") << "   C3 (uncorrelated transfer task): "
        << (r.c3 ? "pass" : "fail") << "   benchmark " << (r.accepted() ? "ACCEPTED" : "REJECTED") << '\n';
}

}  // namespace frlbench
