#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "frlbench/metrics.hpp"
#include "frlbench/rng.hpp"

using namespace frlbench;

namespace {

// Pairwise group-mean gaps, computed without the library.
double dp_oracle(const std::vector<int>& preds, const std::vector<int>& groups) {
    std::map<int, std::pair<double, double>> stats;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        stats[groups[i]].first += preds[i];
        stats[groups[i]].second += 1;
    }
    double best = 0.0;
    for (const auto& [g1, a] : stats)
        for (const auto& [g2, b] : stats) best = std::max(best, std::abs(a.first / a.second - b.first / b.second));
    return best;
}

}  // namespace

TEST(DpDistance, Examples) {
    EXPECT_EQ(dp_distance(std::vector<int>{1, 1, 1, 1}, std::vector<int>{0, 1, 0, 1}, 2), 0.0);
    EXPECT_EQ(dp_distance(std::vector<int>{1, 1, 0, 0}, std::vector<int>{0, 0, 1, 1}, 2), 1.0);
    EXPECT_NEAR(dp_distance(std::vector<int>{1, 0, 1, 0, 1, 0}, std::vector<int>{0, 0, 0, 1, 1, 1}, 2), 1.0 / 3.0,
                1e-15);
}

TEST(DpDistance, EmptyDeclaredGroupIsError) {
    EXPECT_THROW(dp_distance(std::vector<int>{1, 0}, std::vector<int>{0, 0}, 2), UndefinedGroupError);
    EXPECT_THROW(dp_distance(std::vector<int>{1, 0}, std::vector<int>{0, 1}, 3), UndefinedGroupError);
}

TEST(DpDistance, LengthMismatch) {
    EXPECT_THROW(dp_distance(std::vector<int>{1, 0, 1}, std::vector<int>{0, 1}, 2), DimensionError);
}

TEST(DpDistance, MatchesOracleAndRelabelingInvariant) {
    Rng rng(17);
    for (int it = 0; it < 1000; ++it) {
        const std::size_t n = 1 + rng.below(50);
        const int k = 2 + static_cast<int>(rng.below(3));
        std::vector<int> preds(n), groups(n);
        for (std::size_t i = 0; i < n; ++i) {
            preds[i] = static_cast<int>(rng.below(2));
            groups[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
        }
        const double expected = dp_oracle(preds, groups);
        EXPECT_NEAR(dp_distance(preds, groups), expected, 1e-12);
        // Permuting group ids leaves the value unchanged.
        std::vector<int> perm(static_cast<std::size_t>(k));
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm.begin(), perm.end());
        std::vector<int> relabeled(n);
        for (std::size_t i = 0; i < n; ++i) relabeled[i] = perm[static_cast<std::size_t>(groups[i])] + 7;
        EXPECT_NEAR(dp_distance(preds, relabeled), expected, 1e-12);
    }
}

TEST(Smc, ExamplesAndSymmetry) {
    const std::vector<int> a{0, 1, 0, 1}, b{1, 0, 1, 0}, c{0, 0, 1, 1}, d{0, 1, 0, 1};
    EXPECT_EQ(smc(a, a), 1.0);
    EXPECT_EQ(smc(a, b), 0.0);
    EXPECT_EQ(smc(c, d), 0.5);
    EXPECT_EQ(smc(c, d), smc(d, c));
    EXPECT_THROW(smc(a, std::vector<int>{1}), DimensionError);
    EXPECT_THROW(smc(std::vector<int>{}, std::vector<int>{}), InvalidArgument);
}

TEST(Gini, Examples) {
    EXPECT_EQ(gini(std::vector<int>{1, 1, 1}), 0.0);
    EXPECT_EQ(gini(std::vector<int>{0, 0, 1, 1}), 0.5);
    EXPECT_DOUBLE_EQ(gini(std::vector<int>{1, 1, 1, 0}), 0.375);
    EXPECT_THROW(gini(std::vector<int>{}), InvalidArgument);
}

TEST(Gini, MaximizedAtUniform) {
    for (int c = 2; c <= 4; ++c) {
        std::vector<int> uniform;
        for (int k = 0; k < c; ++k) uniform.insert(uniform.end(), 5, k);
        const double max = 1.0 - 1.0 / c;
        EXPECT_NEAR(gini(uniform), max, 1e-15);
        Rng rng(static_cast<std::uint64_t>(c));
        for (int it = 0; it < 200; ++it) {
            std::vector<int> v(1 + rng.below(30));
            for (auto& x : v) x = static_cast<int>(rng.below(static_cast<std::uint64_t>(c)));
            EXPECT_LE(gini(v), max + 1e-15);
        }
    }
}

TEST(Accuracy, ExamplesAndMajority) {
    const std::vector<int> y{1, 0, 1, 1};
    EXPECT_EQ(accuracy(y, y), 1.0);
    EXPECT_EQ(majority_class(std::vector<int>{1, 1, 0}), 1);
    EXPECT_EQ(majority_class(std::vector<int>{1, 0}), 1);
    EXPECT_EQ(majority_class(std::vector<int>{0, 0, 1}), 0);
    EXPECT_EQ(majority_accuracy(std::vector<int>{1, 1, 0}, std::vector<int>{1, 0, 1, 0}), 0.5);
    EXPECT_THROW(accuracy(y, std::vector<int>{1}), DimensionError);
    EXPECT_THROW(majority_accuracy(std::vector<int>{}, y), InvalidArgument);
}
