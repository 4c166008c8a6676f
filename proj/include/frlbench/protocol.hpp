#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "frlbench/classifier.hpp"
#include "frlbench/errors.hpp"
#include "frlbench/metrics.hpp"
#include "frlbench/tabular.hpp"

namespace frlbench {

struct RunResult {
    double accuracy = 0.0;
    double dp = 0.0;
    bool operator==(const RunResult&) const = default;
};

// One evaluated configuration on one task: mean test accuracy and the largest
// DP distance over repeated classifier runs.
struct TradeoffPoint {
    std::string task;
    nlohmann::json encoder_config = nlohmann::json::object();
    double mean_accuracy = 0.0;
    double max_dp = 0.0;
    std::vector<RunResult> per_run;

    bool operator==(const TradeoffPoint&) const = default;
};

inline TradeoffPoint aggregate_runs(std::string task, std::vector<RunResult> runs,
                                    nlohmann::json encoder_config = nlohmann::json::object()) {
    if (runs.empty()) throw InvalidArgument("aggregate_runs: at least one run is required");
    TradeoffPoint p;
    p.task = std::move(task);
    p.encoder_config = std::move(encoder_config);
    double sum = 0.0;
    for (const auto& r : runs) {
        sum += r.accuracy;
        p.max_dp = std::max(p.max_dp, r.dp);
    }
    p.mean_accuracy = sum / static_cast<double>(runs.size());
    p.per_run = std::move(runs);
    return p;
}

inline nlohmann::json to_json(const TradeoffPoint& p) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : p.per_run) runs.push_back({{"accuracy", r.accuracy}, {"dp", r.dp}});
    return {{"task", p.task},
            {"encoder_config", p.encoder_config},
            {"mean_accuracy", p.mean_accuracy},
            {"max_dp", p.max_dp},
            {"per_run", runs}};
}

inline TradeoffPoint tradeoff_from_json(const nlohmann::json& j) {
    TradeoffPoint p;
    p.task = j.at("task").get<std::string>();
    p.encoder_config = j.value("encoder_config", nlohmann::json::object());
    p.mean_accuracy = j.at("mean_accuracy").get<double>();
    p.max_dp = j.at("max_dp").get<double>();
    for (const auto& r : j.at("per_run")) p.per_run.push_back({r.at("accuracy").get<double>(), r.at("dp").get<double>()});
    return p;
}

inline nlohmann::json to_json(const ClassifierParams& p) {
    return {{"hidden_size", p.hidden_size},
            {"epochs", p.epochs},
            {"batch_size", p.batch_size},
            {"learning_rate", p.learning_rate},
            {"seed", p.seed}};
}

inline ClassifierParams classifier_params_from_json(const nlohmann::json& j, ClassifierParams p = {}) {
    p.hidden_size = j.value("hidden_size", p.hidden_size);
    p.epochs = j.value("epochs", p.epochs);
    p.batch_size = j.value("batch_size", p.batch_size);
    p.learning_rate = j.value("learning_rate", p.learning_rate);
    p.seed = j.value("seed", p.seed);
    p.validate();
    return p;
}

// Runs `predict_for_seed(seed)` for seeds base_seed, base_seed + 1, ... and
// scores each run's test predictions. The callable returns one 0/1 prediction
// per test row.
template <class PredictFn>
TradeoffPoint evaluate_runs(const std::string& task, std::span<const int> labels_test, std::span<const int> groups_test,
                            int n_groups, std::size_t n_runs, std::uint64_t base_seed, PredictFn&& predict_for_seed) {
    if (n_runs < 1) throw InvalidArgument("n_runs must be at least 1");
    std::vector<RunResult> runs;
    runs.reserve(n_runs);
    for (std::size_t k = 0; k < n_runs; ++k) {
        const std::vector<int> preds = predict_for_seed(base_seed + k);
        if (preds.size() != labels_test.size()) throw DimensionError("run produced the wrong number of predictions");
        runs.push_back({accuracy(preds, labels_test), dp_distance(preds, groups_test, n_groups)});
    }
    return aggregate_runs(task, std::move(runs));
}

// Downstream protocol: trains n_runs classifiers on representations (seeds
// p.seed, p.seed + 1, ...) and reports mean test accuracy and max DP. Both
// representation matrices are normalized here with stats fitted on reps_train.
// `train(x, labels, params)` returns a model with predict(const Matrix&).
template <class Trainer>
TradeoffPoint evaluate_protocol(const std::string& task, const Matrix& reps_train, const Matrix& reps_test,
                                std::span<const int> labels_train, std::span<const int> labels_test,
                                std::span<const int> groups_test, int n_groups, std::size_t n_runs,
                                const ClassifierParams& p, Trainer&& train) {
    p.validate();
    if (reps_train.cols() != reps_test.cols()) throw DimensionError("train and test representations differ in width");
    if (labels_test.size() != reps_test.rows() || groups_test.size() != reps_test.rows())
        throw DimensionError("test labels/groups do not match the test representations");
    const NormStats stats = fit_normalize(reps_train);
    const Matrix train_n = apply_normalize(reps_train, stats);
    const Matrix test_n = apply_normalize(reps_test, stats);
    return evaluate_runs(task, labels_test, groups_test, n_groups, n_runs, p.seed, [&](std::uint64_t seed) {
        ClassifierParams run = p;
        run.seed = seed;
        return train(train_n, labels_train, run).predict(test_n);
    });
}

inline TradeoffPoint evaluate_protocol(const std::string& task, const Matrix& reps_train, const Matrix& reps_test,
                                       std::span<const int> labels_train, std::span<const int> labels_test,
                                       std::span<const int> groups_test, int n_groups, std::size_t n_runs,
                                       const ClassifierParams& p) {
    return evaluate_protocol(task, reps_train, reps_test, labels_train, labels_test, groups_test, n_groups, n_runs, p,
                             [](const Matrix& x, std::span<const int> y, const ClassifierParams& run) {
                                 return train_classifier(x, y, run);
                             });
}

// Identity encoder: the classifier sees the raw features.
inline TradeoffPoint unfair_baseline(const SplitDataset& d, const std::string& task, const ClassifierParams& p,
                                     std::size_t n_runs = 5) {
    const auto& ytr = d.train.task(task);
    const auto& yte = d.test.task(task);
    auto point = evaluate_protocol(task, d.train.features, d.test.features, ytr, yte, d.test.sensitive,
                                   d.train.n_groups, n_runs, p);
    point.encoder_config = {{"encoder", "Identity"}};
    return point;
}

}  // namespace frlbench
