#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "frlbench/errors.hpp"
#include "frlbench/protocol.hpp"

namespace frlbench {

// a dominates b: at least as accurate and at most as unfair, strictly better in one.
inline bool dominates(const TradeoffPoint& a, const TradeoffPoint& b) {
    return a.mean_accuracy >= b.mean_accuracy && a.max_dp <= b.max_dp &&
           (a.mean_accuracy > b.mean_accuracy || a.max_dp < b.max_dp);
}

// Non-dominated subset sorted by ascending max_dp (ties: descending accuracy,
// then input order). Exact duplicates are all kept since neither dominates.
inline std::vector<TradeoffPoint> pareto_front(const std::vector<TradeoffPoint>& points) {
    if (points.empty()) return {};
    for (const auto& p : points)
        if (p.task != points.front().task) throw InvalidArgument("pareto_front: points belong to different tasks");
    std::vector<std::size_t> order(points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].max_dp != points[b].max_dp) return points[a].max_dp < points[b].max_dp;
        return points[a].mean_accuracy > points[b].mean_accuracy;
    });
    // Sweep in dp order: a point survives iff its accuracy beats every point
    // with strictly smaller dp, and it is not beaten within its own dp tie.
    std::vector<TradeoffPoint> out;
    double best_before = -std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && points[order[j]].max_dp == points[order[i]].max_dp) ++j;
        const double top = points[order[i]].mean_accuracy;
        if (top > best_before)
            for (std::size_t k = i; k < j && points[order[k]].mean_accuracy == top; ++k) out.push_back(points[order[k]]);
        best_before = std::max(best_before, top);
        i = j;
    }
    return out;
}

}  // namespace frlbench
