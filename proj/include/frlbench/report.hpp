#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "frlbench/csv.hpp"
#include "frlbench/errors.hpp"
#include "frlbench/pareto.hpp"
#include "frlbench/sweep.hpp"

namespace frlbench {

// Method label of a record: encoder kind, marked when trained per evaluation task.
inline std::string method_label(const TrialRecord& r) {
    const bool eval = r.encoder == "FARE" && r.tasks.size() == 1 && r.train_task == r.tasks.front();
    return eval ? r.encoder + " (Eval)" : r.encoder;
}

struct TaskReport {
    std::string task;
    std::optional<double> smc_with_proxy;
    std::map<std::string, std::vector<TradeoffPoint>> fronts;  // by method
    TradeoffPoint unfair;
    double majority_accuracy = 0.0;
    std::string csv_file;
};

// Tasks ordered by descending SMC with the proxy; tasks without an SMC last,
// ties by name.
inline std::vector<TaskReport> build_task_reports(const std::vector<TrialRecord>& records, const Baselines& baselines) {
    std::map<std::string, std::map<std::string, std::vector<TradeoffPoint>>> points;
    for (const auto& r : records) {
        if (!r.ok()) continue;
        for (const auto& p : r.results) points[p.task][method_label(r)].push_back(p);
    }
    std::vector<TaskReport> out;
    for (auto& [task, by_method] : points) {
        auto it = baselines.tasks.find(task);
        if (it == baselines.tasks.end()) throw InvalidArgument("no baseline recorded for task \"" + task + "\"");
        TaskReport t;
        t.task = task;
        t.smc_with_proxy = it->second.smc_with_proxy;
        t.unfair = it->second.unfair;
        t.majority_accuracy = it->second.majority_accuracy;
        for (auto& [method, pts] : by_method) t.fronts[method] = pareto_front(pts);
        out.push_back(std::move(t));
    }
    std::stable_sort(out.begin(), out.end(), [](const TaskReport& a, const TaskReport& b) {
        const double sa = a.smc_with_proxy.value_or(-1.0), sb = b.smc_with_proxy.value_or(-1.0);
        return sa > sb;
    });
    return out;
}

inline void write_task_csv(const std::filesystem::path& path, const TaskReport& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "row,method,max_dp,mean_accuracy\n";
    for (const auto& [method, front] : t.fronts)
        for (const auto& p : front)
            out << "pareto," << method << ',' << csv::format_number(p.max_dp) << ','
                << csv::format_number(p.mean_accuracy) << '\n';
    out << "unfair_baseline,Identity," << csv::format_number(t.unfair.max_dp) << ','
        << csv::format_number(t.unfair.mean_accuracy) << '\n';
    out << "majority_baseline,Majority,0," << csv::format_number(t.majority_accuracy) << '\n';
}

namespace detail {

inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

// One panel per task: accuracy (y) over DP distance (x), Pareto fronts as
// step lines, the unfair baseline as a cross, the majority baseline as a
// dashed line, and the region right of the unfair baseline shaded.
inline void write_svg(const std::filesystem::path& path, const std::vector<TaskReport>& tasks) {
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"};
    const double W = 260, H = 220, M = 36;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg_num(W * static_cast<double>(tasks.size()))
        << "\" height=\"" << svg_num(H + 40) << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto& t = tasks[i];
        double max_dp = t.unfair.max_dp, lo = t.majority_accuracy, hi = t.unfair.mean_accuracy;
        for (const auto& [m, f] : t.fronts)
            for (const auto& p : f) {
                max_dp = std::max(max_dp, p.max_dp);
                lo = std::min(lo, p.mean_accuracy);
                hi = std::max(hi, p.mean_accuracy);
            }
        max_dp = std::max(max_dp * 1.1, 1e-3);
        lo -= 0.01;
        hi += 0.01;
        const double x0 = static_cast<double>(i) * W + M, pw = W - M - 10, ph = H - M - 10;
        auto px = [&](double dp) { return x0 + pw * dp / max_dp; };
        auto py = [&](double acc) { return 10 + ph * (1.0 - (acc - lo) / (hi - lo)); };
        out << "<g>\n<text x=\"" << svg_num(x0) << "\" y=\"" << svg_num(H + 10) << "\">" << t.task;
        if (t.smc_with_proxy) out << " (SMC " << svg_num(*t.smc_with_proxy) << ")";
        out << "</text>\n";
        out << "<rect x=\"" << svg_num(px(t.unfair.max_dp)) << "\" y=\"10\" width=\""
            << svg_num(std::max(0.0, x0 + pw - px(t.unfair.max_dp))) << "\" height=\"" << svg_num(ph)
            << "\" fill=\"#f4cccc\"/>\n";
        out << "<rect x=\"" << svg_num(x0) << "\" y=\"10\" width=\"" << svg_num(pw) << "\" height=\"" << svg_num(ph)
            << "\" fill=\"none\" stroke=\"black\"/>\n";
        out << "<line x1=\"" << svg_num(x0) << "\" x2=\"" << svg_num(x0 + pw) << "\" y1=\""
            << svg_num(py(t.majority_accuracy)) << "\" y2=\"" << svg_num(py(t.majority_accuracy))
            << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
        out << "<text x=\"" << svg_num(px(t.unfair.max_dp) - 4) << "\" y=\"" << svg_num(py(t.unfair.mean_accuracy) + 4)
            << "\" fill=\"red\">x</text>\n";
        std::size_t c = 0;
        for (const auto& [method, front] : t.fronts) {
            const char* color = colors[c++ % std::size(colors)];
            if (front.empty()) continue;
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
            double prev_acc = front.front().mean_accuracy;
            for (std::size_t k = 0; k < front.size(); ++k) {
                if (k) out << svg_num(px(front[k].max_dp)) << ',' << svg_num(py(prev_acc)) << ' ';
                out << svg_num(px(front[k].max_dp)) << ',' << svg_num(py(front[k].mean_accuracy)) << ' ';
                prev_acc = front[k].mean_accuracy;
            }
            out << "\"/>\n<text x=\"" << svg_num(x0 + 4) << "\" y=\"" << svg_num(22 + 11 * static_cast<double>(c - 1))
                << "\" fill=\"" << color << "\">" << method << "</text>\n";
        }
        out << "</g>\n";
    }
    out << "</svg>\n";
}

inline std::string file_safe(const std::string& s) {
    std::string out;
    for (char ch : s) out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_') ? ch : '_';
    return out;
}

}  // namespace detail

// Writes <out>/NN_<task>.csv per task in descending-SMC order, plus
// report.json and, when requested, report.svg.
inline std::vector<TaskReport> emit_report(const std::vector<TrialRecord>& records, const Baselines& baselines,
                                           const std::filesystem::path& out, bool svg = true) {
    std::filesystem::create_directories(out);
    auto tasks = build_task_reports(records, baselines);
    nlohmann::json j = nlohmann::json::array();
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        auto& t = tasks[i];
        char prefix[16];
        std::snprintf(prefix, sizeof(prefix), "%02zu_", i + 1);
        t.csv_file = prefix + detail::file_safe(t.task) + ".csv";
        write_task_csv(out / t.csv_file, t);
        nlohmann::json fronts = nlohmann::json::object();
        for (const auto& [method, front] : t.fronts) {
            nlohmann::json f = nlohmann::json::array();
            for (const auto& p : front) f.push_back(to_json(p));
            fronts[method] = f;
        }
        j.push_back({{"task", t.task},
                     {"smc_with_proxy", t.smc_with_proxy ? nlohmann::json(*t.smc_with_proxy) : nlohmann::json()},
                     {"csv", t.csv_file},
                     {"fronts", fronts},
                     {"unfair_baseline", to_json(t.unfair)},
                     {"majority_accuracy", t.majority_accuracy}});
    }
    write_json_file(out / "report.json", {{"proxy", baselines.proxy}, {"tasks", j}});
    if (svg) detail::write_svg(out / "report.svg", tasks);
    return tasks;
}

// Loads every trial record and the baselines from a sweep output directory.
inline std::pair<std::vector<TrialRecord>, Baselines> load_record_store(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir / "trials")) throw DataError(dir.string() + " holds no trials directory");
    if (!fs::exists(dir / "baselines.json")) throw DataError(dir.string() + " holds no baselines.json");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir / "trials"))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<TrialRecord> records;
    for (const auto& f : files) {
        try {
            records.push_back(trial_from_json(read_json_file(f)));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("malformed trial record " + f.string() + ": " + e.what());
        }
    }
    try {
        return {std::move(records), baselines_from_json(read_json_file(dir / "baselines.json"))};
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed baselines.json: " + std::string(e.what()));
    }
}

}  // namespace frlbench
