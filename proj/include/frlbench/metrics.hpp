#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "frlbench/errors.hpp"

namespace frlbench {

// Demographic-parity distance of hard 0/1 predictions: the largest gap in
// positive-prediction rate between any two sensitive groups. Every group in
// [0, n_groups) must have at least one row.
inline double dp_distance(std::span<const int> preds, std::span<const int> groups, int n_groups) {
    if (preds.size() != groups.size()) throw DimensionError("dp_distance: preds and groups differ in length");
    if (preds.empty()) throw InvalidArgument("dp_distance: no rows");
    if (n_groups < 1) throw InvalidArgument("dp_distance: no groups declared");
    std::vector<double> pos(static_cast<std::size_t>(n_groups), 0.0);
    std::vector<double> cnt(static_cast<std::size_t>(n_groups), 0.0);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const int g = groups[i];
        if (g < 0 || g >= n_groups) throw InvalidArgument("dp_distance: group id outside the declared range");
        pos[static_cast<std::size_t>(g)] += preds[i] != 0 ? 1.0 : 0.0;
        cnt[static_cast<std::size_t>(g)] += 1.0;
    }
    double lo = 1.0, hi = 0.0;
    for (std::size_t g = 0; g < cnt.size(); ++g) {
        if (cnt[g] == 0.0) throw UndefinedGroupError(static_cast<int>(g));
        const double rate = pos[g] / cnt[g];
        lo = std::min(lo, rate);
        hi = std::max(hi, rate);
    }
    return hi - lo;
}

// Overload whose declared groups are exactly the ids that occur in `groups`.
inline double dp_distance(std::span<const int> preds, std::span<const int> groups) {
    if (preds.size() != groups.size()) throw DimensionError("dp_distance: preds and groups differ in length");
    if (preds.empty()) throw InvalidArgument("dp_distance: no rows");
    std::map<int, std::pair<double, double>> acc;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        auto& [pos, cnt] = acc[groups[i]];
        pos += preds[i] != 0 ? 1.0 : 0.0;
        cnt += 1.0;
    }
    double lo = 1.0, hi = 0.0;
    for (const auto& [g, pc] : acc) {
        const double rate = pc.first / pc.second;
        lo = std::min(lo, rate);
        hi = std::max(hi, rate);
    }
    return hi - lo;
}

// Simple matching coefficient of two binary labelings.
inline double smc(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw DimensionError("smc: length mismatch");
    if (a.empty()) throw InvalidArgument("smc: empty input");
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) agree += (a[i] != 0) == (b[i] != 0);
    return static_cast<double>(agree) / static_cast<double>(a.size());
}

// Gini impurity 1 - sum_c p_c^2 from per-class counts.
inline double gini_from_counts(std::span<const double> counts, double total) {
    if (total <= 0.0) return 0.0;
    double sq = 0.0;
    for (double c : counts) sq += c * c;
    return 1.0 - sq / (total * total);
}

inline double gini(std::span<const int> labels) {
    if (labels.empty()) throw InvalidArgument("gini: empty input");
    std::map<int, double> counts;
    for (int l : labels) counts[l] += 1.0;
    std::vector<double> c;
    for (const auto& [k, v] : counts) c.push_back(v);
    return gini_from_counts(c, static_cast<double>(labels.size()));
}

inline double accuracy(std::span<const int> preds, std::span<const int> labels) {
    if (preds.size() != labels.size()) throw DimensionError("accuracy: length mismatch");
    if (preds.empty()) throw InvalidArgument("accuracy: empty input");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) hit += (preds[i] != 0) == (labels[i] != 0);
    return static_cast<double>(hit) / static_cast<double>(preds.size());
}

// Majority class of binary training labels; ties go to 1.
inline int majority_class(std::span<const int> train_labels) {
    if (train_labels.empty()) throw InvalidArgument("majority_class: empty training labels");
    std::size_t pos = 0;
    for (int l : train_labels) pos += l != 0;
    return 2 * pos >= train_labels.size() ? 1 : 0;
}

// Test accuracy of the constant predictor that outputs the training majority.
inline double majority_accuracy(std::span<const int> train_labels, std::span<const int> test_labels) {
    if (test_labels.empty()) throw InvalidArgument("majority_accuracy: empty test labels");
    const int m = majority_class(train_labels);
    std::size_t hit = 0;
    for (int l : test_labels) hit += (l != 0) == (m != 0);
    return static_cast<double>(hit) / static_cast<double>(test_labels.size());
}

}  // namespace frlbench
