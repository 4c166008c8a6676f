#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "frlbench/encoder.hpp"
#include "frlbench/errors.hpp"
#include "frlbench/metrics.hpp"
#include "frlbench/parallel.hpp"
#include "frlbench/protocol.hpp"
#include "frlbench/tabular.hpp"

namespace frlbench {

inline constexpr const char* kToolkitVersion = "1.0.0";

// Training-task value selecting the per-evaluation-task loop: each evaluation
// task gets its own encoder trained on that task's labels.
inline constexpr const char* kEvalTrainTask = "eval";

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return out;
}

// Grid parameter names in expansion order; the last varies fastest.
inline const std::vector<std::string>& grid_parameter_names() {
    static const std::vector<std::string> names = {"gamma",           "lambda_f",     "lambda_r", "max_leaves",
                                                   "min_leaf_samples", "val_fraction", "seed"};
    return names;
}

using Grid = std::map<std::string, std::vector<double>>;

inline std::vector<double> linear_lattice(double lo, double hi, std::size_t count) {
    std::vector<double> out;
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
    return out;
}

// Lattices over the published hyperparameter ranges.
inline Grid preset_grid(const std::string& name) {
    if (name == "fare")
        return {{"gamma", linear_lattice(0.0, 1.0, 11)},
                {"max_leaves", {2, 5, 10, 20, 50, 100, 200}},
                {"min_leaf_samples", {100}},
                {"val_fraction", {0.3}}};
    if (name == "fare_rec")
        return {{"max_leaves", {200, 400, 800, 1600, 3200, 6400, 12800}},
                {"lambda_f", {0.1, 0.3, 1.0}},
                {"lambda_r", {0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0}},
                {"min_leaf_samples", {100}},
                {"val_fraction", {0.3}}};
    throw InvalidArgument("unknown grid preset \"" + name + "\"");
}

inline std::vector<nlohmann::json> expand_grid(const Grid& g) {
    for (const auto& [k, v] : g) {
        if (std::find(grid_parameter_names().begin(), grid_parameter_names().end(), k) == grid_parameter_names().end())
            throw InvalidArgument("unknown grid parameter \"" + k + "\"");
        if (v.empty()) throw InvalidArgument("grid parameter \"" + k + "\" has no values");
    }
    std::vector<nlohmann::json> points{nlohmann::json::object()};
    for (const auto& name : grid_parameter_names()) {
        auto it = g.find(name);
        if (it == g.end()) continue;
        std::vector<nlohmann::json> next;
        for (const auto& p : points)
            for (double v : it->second) {
                auto q = p;
                q[name] = v;
                next.push_back(std::move(q));
            }
        points = std::move(next);
    }
    return points;
}

struct ExternalRepsEntry {
    std::string name;
    std::string reps_train;
    std::string reps_test;
};

struct SweepConfig {
    std::string data;
    EncoderKind encoder = EncoderKind::FARE;
    std::string train_task;
    std::string proxy;  // for baseline SMC; defaults to train_task
    Grid grid;
    std::vector<ExternalRepsEntry> external;
    ClassifierParams classifier;
    std::size_t n_runs = 5;
    std::vector<std::string> tasks;
    std::string out;
    std::size_t workers = 1;

    bool eval_mode() const { return train_task == kEvalTrainTask; }

    void validate() const {
        if (data.empty()) throw InvalidArgument("sweep config: data is required");
        if (out.empty()) throw InvalidArgument("sweep config: out is required");
        if (tasks.empty()) throw InvalidArgument("sweep config: at least one evaluation task is required");
        if (n_runs < 1) throw InvalidArgument("sweep config: n_runs must be at least 1");
        classifier.validate();
        if (is_tree_encoder(encoder)) {
            if (expand_grid(grid).empty()) throw InvalidArgument("sweep config: grid is empty");
            if (encoder == EncoderKind::FARE && train_task.empty())
                throw InvalidArgument("sweep config: FARE requires train_task");
        }
        if (encoder == EncoderKind::ExternalReps) {
            if (external.empty()) throw InvalidArgument("sweep config: ExternalReps requires an external list");
            if (eval_mode()) throw InvalidArgument("sweep config: ExternalReps cannot use the eval training mode");
        }
    }
};

inline SweepConfig sweep_config_from_json(const nlohmann::json& j) {
    try {
        SweepConfig c;
        c.data = j.at("data").get<std::string>();
        c.encoder = encoder_kind_from_string(j.value("encoder", std::string("FARE")));
        c.train_task = j.value("train_task", std::string());
        c.proxy = j.value("proxy", c.eval_mode() ? std::string() : c.train_task);
        if (j.contains("preset")) c.grid = preset_grid(j.at("preset").get<std::string>());
        if (j.contains("grid"))
            for (const auto& [k, v] : j.at("grid").items()) c.grid[k] = v.get<std::vector<double>>();
        if (j.contains("external"))
            for (const auto& e : j.at("external"))
                c.external.push_back({e.at("name").get<std::string>(), e.at("reps_train").get<std::string>(),
                                      e.at("reps_test").get<std::string>()});
        if (j.contains("protocol")) {
            const auto& p = j.at("protocol");
            c.n_runs = p.value("n_runs", c.n_runs);
            if (p.contains("classifier")) c.classifier = classifier_params_from_json(p.at("classifier"));
        }
        c.tasks = j.at("tasks").get<std::vector<std::string>>();
        c.out = j.at("out").get<std::string>();
        c.workers = j.value("workers", c.workers);
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed sweep config: ") + e.what());
    }
}

struct TrialRecord {
    std::string key;
    std::string dataset_id;
    std::string encoder;
    std::string train_task;
    nlohmann::json point = nlohmann::json::object();
    std::vector<std::string> tasks;
    nlohmann::json protocol = nlohmann::json::object();
    std::vector<TradeoffPoint> results;
    double seconds = 0.0;
    std::string toolkit_version = kToolkitVersion;
    std::string status = "pending";
    std::string error;

    bool ok() const { return status == "ok"; }
};

inline nlohmann::json to_json(const TrialRecord& r) {
    nlohmann::json results = nlohmann::json::array();
    for (const auto& p : r.results) results.push_back(to_json(p));
    return {{"key", r.key},
            {"dataset_id", r.dataset_id},
            {"encoder", r.encoder},
            {"train_task", r.train_task},
            {"point", r.point},
            {"tasks", r.tasks},
            {"protocol", r.protocol},
            {"results", results},
            {"seconds", r.seconds},
            {"toolkit_version", r.toolkit_version},
            {"status", r.status},
            {"error", r.error}};
}

inline TrialRecord trial_from_json(const nlohmann::json& j) {
    TrialRecord r;
    r.key = j.at("key").get<std::string>();
    r.dataset_id = j.at("dataset_id").get<std::string>();
    r.encoder = j.at("encoder").get<std::string>();
    r.train_task = j.at("train_task").get<std::string>();
    r.point = j.at("point");
    r.tasks = j.at("tasks").get<std::vector<std::string>>();
    r.protocol = j.at("protocol");
    for (const auto& p : j.at("results")) r.results.push_back(tradeoff_from_json(p));
    r.seconds = j.at("seconds").get<double>();
    r.toolkit_version = j.at("toolkit_version").get<std::string>();
    r.status = j.at("status").get<std::string>();
    r.error = j.value("error", std::string());
    return r;
}

inline nlohmann::json protocol_json(const SweepConfig& c) {
    return {{"classifier", to_json(c.classifier)}, {"n_runs", c.n_runs}};
}

// Identity of a persisted split: hash of its metadata and row assignment.
inline std::string dataset_id(const std::filesystem::path& dir) {
    auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw DataError("cannot open " + p.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    return hex64(fnv1a64(slurp(dir / "meta.json") + '\x1f' + slurp(dir / "split.json")));
}

// Hash of everything that determines a trial's outcome; wall-clock fields
// are not part of it.
inline std::string trial_key(const std::string& dataset, const std::string& encoder, const std::string& train_task,
                             const nlohmann::json& point, const std::vector<std::string>& tasks,
                             const nlohmann::json& protocol) {
    const nlohmann::json identity = {{"dataset", dataset}, {"encoder", encoder}, {"train_task", train_task},
                                     {"point", point},     {"tasks", tasks},     {"protocol", protocol}};
    return hex64(fnv1a64(identity.dump()));
}

// One planned trial per grid point (per evaluation task in eval mode).
inline std::vector<TrialRecord> plan_trials(const SweepConfig& c, const std::string& dataset) {
    std::vector<nlohmann::json> points;
    if (c.encoder == EncoderKind::Identity) {
        points.push_back(nlohmann::json::object());
    } else if (c.encoder == EncoderKind::ExternalReps) {
        for (const auto& e : c.external)
            points.push_back({{"name", e.name}, {"reps_train", e.reps_train}, {"reps_test", e.reps_test}});
    } else {
        points = expand_grid(c.grid);
    }
    const auto protocol = protocol_json(c);
    std::vector<TrialRecord> plan;
    auto add = [&](const nlohmann::json& point, const std::string& train_task, std::vector<std::string> tasks) {
        TrialRecord r;
        r.dataset_id = dataset;
        r.encoder = to_string(c.encoder);
        r.train_task = train_task;
        r.point = point;
        r.tasks = std::move(tasks);
        r.protocol = protocol;
        r.key = trial_key(dataset, r.encoder, r.train_task, r.point, r.tasks, r.protocol);
        plan.push_back(std::move(r));
    };
    for (const auto& point : points) {
        if (c.eval_mode())
            for (const auto& t : c.tasks) add(point, t, {t});
        else
            add(point, c.train_task, c.tasks);
    }
    return plan;
}

// Builds the trial's encoder and scores it on each of its evaluation tasks.
inline void execute_trial(TrialRecord& r, const SplitDataset& split, const SweepConfig& c) {
    Matrix reps_train, reps_test;
    nlohmann::json config = r.point;
    config["encoder"] = r.encoder;
    config["train_task"] = r.train_task;
    switch (c.encoder) {
        case EncoderKind::Identity:
            reps_train = split.train.features;
            reps_test = split.test.features;
            break;
        case EncoderKind::ExternalReps:
            reps_train = read_representations(r.point.at("reps_train").get<std::string>());
            reps_test = read_representations(r.point.at("reps_test").get<std::string>());
            if (reps_train.rows() != split.train.n() || reps_test.rows() != split.test.n())
                throw DimensionError("external representations do not match the split's row counts");
            break;
        default: {
            const auto hyper = hyper_from_json(r.point);
            std::optional<std::string> task;
            if (!r.train_task.empty()) task = r.train_task;
            const auto enc = train_encoder(split.train, c.encoder, task, hyper);
            reps_train = enc.encode(split.train.features);
            reps_test = enc.encode(split.test.features);
        }
    }
    r.results.clear();
    for (const auto& t : r.tasks) {
        auto p = evaluate_protocol(t, reps_train, reps_test, split.train.task(t), split.test.task(t),
                                   split.test.sensitive, split.train.n_groups, c.n_runs, c.classifier);
        p.encoder_config = config;
        r.results.push_back(std::move(p));
    }
}

// Reference statistics per evaluation task, computed once per sweep output.
struct TaskBaseline {
    TradeoffPoint unfair;
    double majority_accuracy = 0.0;
    std::optional<double> smc_with_proxy;
};

struct Baselines {
    std::string dataset_id;
    std::string proxy;
    nlohmann::json protocol = nlohmann::json::object();
    std::map<std::string, TaskBaseline> tasks;
};

inline nlohmann::json to_json(const Baselines& b) {
    nlohmann::json tasks = nlohmann::json::object();
    for (const auto& [name, t] : b.tasks)
        tasks[name] = {{"unfair", to_json(t.unfair)},
                       {"majority_accuracy", t.majority_accuracy},
                       {"smc_with_proxy", t.smc_with_proxy ? nlohmann::json(*t.smc_with_proxy) : nlohmann::json()}};
    return {{"dataset_id", b.dataset_id}, {"proxy", b.proxy}, {"protocol", b.protocol}, {"tasks", tasks}};
}

inline Baselines baselines_from_json(const nlohmann::json& j) {
    Baselines b;
    b.dataset_id = j.at("dataset_id").get<std::string>();
    b.proxy = j.at("proxy").get<std::string>();
    b.protocol = j.at("protocol");
    for (const auto& [name, t] : j.at("tasks").items()) {
        TaskBaseline tb;
        tb.unfair = tradeoff_from_json(t.at("unfair"));
        tb.majority_accuracy = t.at("majority_accuracy").get<double>();
        if (!t.at("smc_with_proxy").is_null()) tb.smc_with_proxy = t.at("smc_with_proxy").get<double>();
        b.tasks.emplace(name, std::move(tb));
    }
    return b;
}

inline Baselines compute_baselines(const SplitDataset& split, const SweepConfig& c, const std::string& dataset) {
    Baselines b;
    b.dataset_id = dataset;
    b.proxy = c.proxy;
    b.protocol = protocol_json(c);
    std::vector<TaskBaseline> rows(c.tasks.size());
    parallel_for(c.tasks.size(), c.workers, [&](std::size_t i) {
        const auto& t = c.tasks[i];
        rows[i].unfair = unfair_baseline(split, t, c.classifier, c.n_runs);
        rows[i].majority_accuracy = majority_accuracy(split.train.task(t), split.test.task(t));
        if (!c.proxy.empty()) rows[i].smc_with_proxy = smc(split.test.task(t), split.test.task(c.proxy));
    });
    for (std::size_t i = 0; i < c.tasks.size(); ++i) b.tasks.emplace(c.tasks[i], std::move(rows[i]));
    return b;
}

struct SweepResult {
    std::vector<TrialRecord> records;  // in plan order
    std::size_t executed = 0;
    std::size_t failed = 0;
};

// Resumable sweep. Completed records in <out>/trials are reused; everything
// else runs on the worker pool and is persisted as soon as it finishes.
// Per-trial failures are recorded with status "failed" and retried next run.
inline SweepResult run_sweep(const SweepConfig& c) {
    c.validate();
    namespace fs = std::filesystem;
    const SplitDataset split = load_split(c.data);
    for (const auto& t : c.tasks)
        if (!split.train.has_task(t)) throw UnknownTaskError(t);
    if (!c.train_task.empty() && !c.eval_mode() && !split.train.has_task(c.train_task))
        throw UnknownTaskError(c.train_task);
    if (!c.proxy.empty() && !split.train.has_task(c.proxy)) throw UnknownTaskError(c.proxy);

    const std::string dataset = dataset_id(c.data);
    const fs::path out(c.out);
    fs::create_directories(out / "trials");

    const fs::path baseline_path = out / "baselines.json";
    bool have_baselines = false;
    if (fs::exists(baseline_path)) {
        const auto b = baselines_from_json(read_json_file(baseline_path));
        have_baselines = b.dataset_id == dataset && b.protocol == protocol_json(c) && b.proxy == c.proxy &&
                         std::all_of(c.tasks.begin(), c.tasks.end(), [&](const auto& t) { return b.tasks.contains(t); });
    }
    if (!have_baselines) write_json_file(baseline_path, to_json(compute_baselines(split, c, dataset)));

    SweepResult result;
    result.records = plan_trials(c, dataset);
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < result.records.size(); ++i) {
        const fs::path file = out / "trials" / (result.records[i].key + ".json");
        if (fs::exists(file)) {
            auto existing = trial_from_json(read_json_file(file));
            if (existing.ok()) {
                result.records[i] = std::move(existing);
                continue;
            }
        }
        pending.push_back(i);
    }

    parallel_for(pending.size(), c.workers, [&](std::size_t k) {
        TrialRecord& r = result.records[pending[k]];
        const auto start = std::chrono::steady_clock::now();
        try {
            execute_trial(r, split, c);
            r.status = "ok";
            r.error.clear();
        } catch (const std::exception& e) {
            r.status = "failed";
            r.error = e.what();
            r.results.clear();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_json_file(out / "trials" / (r.key + ".json"), to_json(r));
    });
    result.executed = pending.size();

    nlohmann::json index = nlohmann::json::array();
    for (const auto& r : result.records) {
        index.push_back({{"key", r.key}, {"status", r.status}});
        if (!r.ok()) ++result.failed;
    }
    write_json_file(out / "index.json", {{"dataset_id", dataset}, {"toolkit_version", kToolkitVersion}, {"trials", index}});
    return result;
}

}  // namespace frlbench
