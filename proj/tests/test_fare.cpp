#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "frlbench/encoder.hpp"
#include "frlbench/fare.hpp"
#include "frlbench/rng.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace frlbench;
using fare::CriterionWeights;
using fare::FareParams;
using fare::RecMode;
using fare::TrainingView;
using namespace oracles;

namespace {

Matrix column(std::vector<double> v) {
    Matrix m(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
    return m;
}

FareParams exact_params(CriterionWeights w, std::size_t max_leaves, std::size_t min_leaf) {
    FareParams p;
    p.weights = w;
    p.max_leaves = max_leaves;
    p.min_leaf_samples = min_leaf;
    p.val_fraction = 0.0;
    return p;
}

}  // namespace

// ---- Criterion -------------------------------------------------------------

TEST(Weights, Validation) {
    EXPECT_NO_THROW((CriterionWeights{1, 0, 0, RecMode::None}.validate()));
    EXPECT_THROW((CriterionWeights{0, 0, 0, RecMode::None}.validate()), InvalidArgument);
    EXPECT_THROW((CriterionWeights{-1, 1, 0, RecMode::None}.validate()), InvalidArgument);
    EXPECT_THROW((CriterionWeights{1, 0, 1, RecMode::None}.validate()), InvalidArgument);
    EXPECT_THROW((CriterionWeights{1, 0, 0, RecMode::MeanSquared}.validate()), InvalidArgument);
    FareParams p;
    p.max_leaves = 0;
    EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(LeafCriterion, Examples) {
    const auto x = column({0, 1, 2, 3});
    const std::vector<int> y{1, 1, 1, 0}, s{0, 1, 0, 1};
    TrainingView v{x, y, s, 2};
    const std::vector<std::size_t> all{0, 1, 2, 3};
    EXPECT_DOUBLE_EQ(fare::leaf_criterion(v, all, {1, 0, 0, RecMode::None}), 0.375);
    EXPECT_DOUBLE_EQ(fare::leaf_criterion(v, all, {0, 1, 0, RecMode::None}), 0.0);
    const auto x2 = column({0, 2});
    const std::vector<int> s2{0, 1};
    TrainingView v2{x2, {}, s2, 2};
    const std::vector<std::size_t> both{0, 1};
    EXPECT_DOUBLE_EQ(fare::leaf_criterion(v2, both, {0, 0, 1, RecMode::MeanSquared}), 1.0);
    EXPECT_THROW(fare::leaf_criterion(v, std::vector<std::size_t>{}, {1, 0, 0, RecMode::None}), InvalidArgument);
}

TEST(LeafCriterion, MatchesOracleOnRandomLeaves) {
    Rng rng(2024);
    for (int it = 0; it < 300; ++it) {
        const int k = 2 + static_cast<int>(rng.below(3));
        auto in = random_instance(rng, 2 + rng.below(30), 1 + rng.below(3), k, it % 2);
        const auto w = random_weights(rng);
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < in.x.rows(); ++i)
            if (rng.bernoulli(0.7)) rows.push_back(i);
        if (rows.empty()) rows.push_back(0);
        TrainingView v{in.x, in.y, in.s, k};
        EXPECT_NEAR(fare::leaf_criterion(v, rows, w), oracle_criterion(in.x, in.y, in.s, k, rows, w), 1e-12);
    }
}

TEST(LeafCriterion, FairGiniReduction) {
    Rng rng(7);
    for (double gamma : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        for (int it = 0; it < 100; ++it) {
            auto in = random_instance(rng, 1 + rng.below(40), 1, 2, false);
            std::vector<std::size_t> rows(in.x.rows());
            std::iota(rows.begin(), rows.end(), 0);
            TrainingView v{in.x, in.y, in.s, 2};
            const double fair_gini = (1 - gamma) * oracle_gini(in.y) + gamma * (0.5 - oracle_gini(in.s));
            EXPECT_NEAR(fare::leaf_criterion(v, rows, CriterionWeights::fair_gini(gamma)), fair_gini, 1e-12);
        }
    }
}

TEST(Median, EvenSizeAveragesMiddlePair) {
    EXPECT_EQ(fare::median_of({3, 1, 2}), 2.0);
    EXPECT_EQ(fare::median_of({0, 1}), 0.5);
    EXPECT_EQ(fare::median_of({4, 1, 3, 2}), 2.5);
    EXPECT_THROW(fare::median_of({}), InvalidArgument);
}

// ---- Split search ----------------------------------------------------------

TEST(BestSplit, FourPointExample) {
    const auto x = column({0, 1, 2, 3});
    const std::vector<int> y{0, 0, 1, 1}, s{0, 1, 0, 1};
    TrainingView v{x, y, s, 2};
    const std::vector<std::size_t> rows{0, 1, 2, 3};
    const auto sp = fare::best_split(v, rows, {1, 0, 0, RecMode::None}, 1);
    ASSERT_TRUE(sp);
    EXPECT_EQ(sp->feature, 0u);
    EXPECT_EQ(sp->threshold, 1.5);
    EXPECT_DOUBLE_EQ(sp->gain, 0.5);
    EXPECT_DOUBLE_EQ(sp->child_criterion, 0.0);
}

TEST(BestSplit, ConstantLabelHasNoSplit) {
    const auto x = column({0, 1, 2, 3});
    const std::vector<int> y{1, 1, 1, 1}, s{0, 1, 0, 1};
    TrainingView v{x, y, s, 2};
    EXPECT_FALSE(fare::best_split(v, std::vector<std::size_t>{0, 1, 2, 3}, {1, 0, 0, RecMode::None}, 1));
}

TEST(BestSplit, FairnessOnlyNeverSplitsWhenSFollowsX) {
    const auto x = column({0, 1, 2, 3, 4, 5});
    const std::vector<int> s{0, 0, 0, 1, 1, 1};
    TrainingView v{x, {}, s, 2};
    const std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5};
    EXPECT_FALSE(fare::best_split(v, rows, {0, 1, 0, RecMode::None}, 1));
    // Every candidate is no better than the parent.
    const double parent = oracle_criterion(x, {}, s, 2, rows, {0, 1, 0, RecMode::None});
    for (double t : {0.5, 1.5, 2.5, 3.5, 4.5}) {
        std::vector<std::size_t> l, r;
        for (auto i : rows) (x(i, 0) <= t ? l : r).push_back(i);
        const double child = (l.size() * oracle_criterion(x, {}, s, 2, l, {0, 1, 0, RecMode::None}) +
                              r.size() * oracle_criterion(x, {}, s, 2, r, {0, 1, 0, RecMode::None})) /
                             6.0;
        EXPECT_GE(child, parent - 1e-12) << "threshold " << t;
    }
}

TEST(BestSplit, RespectsMinLeafSamples) {
    const auto x = column({0, 1, 2, 3});
    const std::vector<int> y{0, 1, 1, 1}, s{0, 1, 0, 1};
    TrainingView v{x, y, s, 2};
    const std::vector<std::size_t> rows{0, 1, 2, 3};
    const auto sp = fare::best_split(v, rows, {1, 0, 0, RecMode::None}, 2);
    ASSERT_TRUE(sp);
    EXPECT_EQ(sp->threshold, 1.5);
    EXPECT_FALSE(fare::best_split(v, rows, {1, 0, 0, RecMode::None}, 3));
}

TEST(BestSplit, MatchesEnumerationOracle) {
    Rng rng(99);
    int compared = 0;
    for (int it = 0; it < 400; ++it) {
        const int k = 2 + static_cast<int>(rng.below(2));
        auto in = random_instance(rng, 4 + rng.below(25), 1 + rng.below(3), k, it % 3 == 0);
        const auto w = random_weights(rng);
        const std::size_t min_leaf = 1 + rng.below(3);
        std::vector<std::size_t> rows(in.x.rows());
        std::iota(rows.begin(), rows.end(), 0);
        TrainingView v{in.x, in.y, in.s, k};
        double gap = 0;
        const auto expect = oracle_best_split(in.x, in.y, in.s, k, rows, w, min_leaf, &gap);
        const auto got = fare::best_split(v, rows, w, min_leaf);
        ASSERT_EQ(expect.has_value(), got.has_value()) << "iteration " << it;
        if (!expect) continue;
        EXPECT_NEAR(got->gain, expect->gain, 1e-12);
        if (gap > 1e-9) {  // unique optimum: location must agree too
            EXPECT_EQ(got->feature, expect->feature) << "iteration " << it;
            EXPECT_NEAR(got->threshold, expect->threshold, 1e-12) << "iteration " << it;
            ++compared;
        }
    }
    EXPECT_GT(compared, 100);
}

TEST(BestSplit, TiesGoToLowestFeatureThenThreshold) {
    // Two identical features: the split must use feature 0.
    Matrix x(4, 2);
    for (std::size_t i = 0; i < 4; ++i) x(i, 0) = x(i, 1) = static_cast<double>(i);
    const std::vector<int> y{0, 0, 1, 1}, s{0, 1, 0, 1};
    TrainingView v{x, y, s, 2};
    const auto sp = fare::best_split(v, std::vector<std::size_t>{0, 1, 2, 3}, {1, 0, 0, RecMode::None}, 1);
    ASSERT_TRUE(sp);
    EXPECT_EQ(sp->feature, 0u);
    // Symmetric labels with two equally good thresholds: the lower one wins.
    const auto x1 = column({0, 1, 2, 3, 4, 5});
    const std::vector<int> y1{1, 0, 0, 0, 0, 1}, s1{0, 1, 0, 1, 0, 1};
    TrainingView v1{x1, y1, s1, 2};
    const auto sp1 = fare::best_split(v1, std::vector<std::size_t>{0, 1, 2, 3, 4, 5}, {1, 0, 0, RecMode::None}, 1);
    ASSERT_TRUE(sp1);
    EXPECT_EQ(sp1->threshold, 0.5);
}

// ---- Tree growth -----------------------------------------------------------

TEST(BuildTree, SingleLeafEncodesGlobalMedian) {
    const auto x = Matrix::from_rows({{0, 10}, {1, 30}, {5, 20}, {2, 40}});
    const std::vector<int> y{0, 0, 1, 1}, s{0, 1, 0, 1};
    const auto t = fare::build_tree(TrainingView{x, y, s, 2}, exact_params({1, 0, 0, RecMode::None}, 1, 1));
    ASSERT_EQ(t.leaf_count(), 1u);
    for (auto row : {std::vector<double>{-100, 0}, std::vector<double>{7, 7}})
        EXPECT_EQ(t.encode(row), (std::vector<double>{1.5, 25}));
}

TEST(BuildTree, FourPointTwoLeafTree) {
    const auto x = column({0, 1, 2, 3});
    const std::vector<int> y{0, 0, 1, 1}, s{0, 1, 0, 1};
    const auto t = fare::build_tree(TrainingView{x, y, s, 2}, exact_params({1, 0, 0, RecMode::None}, 2, 1));
    ASSERT_EQ(t.leaf_count(), 2u);
    ASSERT_EQ(t.nodes().size(), 1u);
    EXPECT_EQ(t.nodes()[0].threshold, 1.5);
    EXPECT_EQ(t.encode(std::vector<double>{0.2}), std::vector<double>{0.5});
    EXPECT_EQ(t.encode(std::vector<double>{0.2}), t.encode(std::vector<double>{0.2}));
    EXPECT_EQ(t.encode(std::vector<double>{2.7}), std::vector<double>{2.5});
    EXPECT_THROW(t.encode(std::vector<double>{1, 2}), DimensionError);
}

TEST(BuildTree, TaskRequiredWhenLabelWeighted) {
    const auto d = testing_support::random_dataset(50, 2, 1);
    FareParams p = exact_params({1, 0, 0, RecMode::None}, 4, 5);
    EXPECT_THROW(fare::build_tree(d, std::nullopt, p), InvalidArgument);
    EXPECT_THROW(fare::build_tree(d, std::string("missing"), p), UnknownTaskError);
    EXPECT_NO_THROW(fare::build_tree(d, std::string("a"), p));
    p.weights = {0, 0, 1, RecMode::MeanSquared};
    EXPECT_NO_THROW(fare::build_tree(d, std::nullopt, p));
}

TEST(BuildTree, InvariantsOnRandomSuite) {
    Rng rng(31337);
    for (int ds = 0; ds < 8; ++ds) {
        const auto d = testing_support::random_dataset(200 + rng.below(300), 1 + rng.below(4), rng.below(1000));
        for (int draw = 0; draw < 5; ++draw) {
            FareParams p;
            p.weights = random_weights(rng);
            p.max_leaves = 1 + rng.below(30);
            p.min_leaf_samples = 1 + rng.below(20);
            p.val_fraction = rng.uniform(0.0, 0.5);
            p.seed = rng.below(100);
            const auto t = fare::build_tree(d, std::string("a"), p);
            TrainingView v{d.features, d.task("a"), d.sensitive, 2};

            EXPECT_LE(t.leaf_count(), p.max_leaves);
            std::vector<int> owner(d.n(), -1);
            for (std::size_t l = 0; l < t.leaf_count(); ++l) {
                const auto& leaf = t.leaves()[l];
                EXPECT_GE(leaf.count, std::min(p.min_leaf_samples, d.n() - t.holdout_rows().size()));
                EXPECT_EQ(leaf.count, leaf.rows.size());
                for (auto r : leaf.rows) {
                    EXPECT_EQ(owner[r], -1);
                    owner[r] = static_cast<int>(l);
                    EXPECT_EQ(t.leaf_index(d.features.row(r)), l);
                }
                for (std::size_t j = 0; j < d.dim(); ++j) {
                    std::vector<double> col;
                    for (auto r : leaf.rows) col.push_back(d.features(r, j));
                    EXPECT_DOUBLE_EQ(leaf.representation[j], oracle_median(col));
                }
            }
            for (auto r : t.holdout_rows()) {
                EXPECT_EQ(owner[r], -1);
                owner[r] = -2;
            }
            EXPECT_EQ(std::count(owner.begin(), owner.end(), -1), 0);
            EXPECT_EQ(t.holdout_rows().size(),
                      static_cast<std::size_t>(std::llround(p.val_fraction * static_cast<double>(d.n()))));

            const auto& trace = t.growth_trace();
            ASSERT_EQ(trace.size(), t.leaf_count());
            for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LT(trace[i], trace[i - 1]);
            double total = 0;
            const double fit_n = static_cast<double>(d.n() - t.holdout_rows().size());
            for (const auto& leaf : t.leaves())
                total += leaf.rows.size() * fare::leaf_criterion(v, leaf.rows, p.weights) / fit_n;
            EXPECT_NEAR(trace.back(), total, 1e-9);

            std::set<std::vector<double>> distinct;
            for (std::size_t r = 0; r < d.n(); ++r) distinct.insert(t.encode(d.features.row(r)));
            EXPECT_LE(distinct.size(), t.leaf_count());
        }
    }
}

TEST(BuildTree, GreedyMatchesExhaustiveOracleOnSmallInstances) {
    Rng rng(4242);
    int compared = 0;
    for (int it = 0; it < 600; ++it) {
        auto in = random_instance(rng, 4 + rng.below(9), 1 + rng.below(2), 2, false);
        const auto w = random_weights(rng);
        const std::size_t max_leaves = 1 + rng.below(3), min_leaf = 1 + rng.below(2);
        std::set<std::vector<std::size_t>> expected;
        if (!oracle_greedy(in, w, max_leaves, min_leaf, expected)) continue;
        const auto t = fare::build_tree(TrainingView{in.x, in.y, in.s, 2}, exact_params(w, max_leaves, min_leaf));
        std::set<std::vector<std::size_t>> got;
        for (const auto& leaf : t.leaves()) got.insert(leaf.rows);
        EXPECT_EQ(got, expected) << "iteration " << it;
        ++compared;
    }
    EXPECT_GT(compared, 300);
}

TEST(BuildTree, FairnessOnlyGrowsFewerLeavesThanLabelOnly) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        const std::size_t n = 2000;
        Matrix x(n, 3);
        std::vector<int> y(n), s(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = rng.bernoulli(0.5) ? 1 : 0;
            x(i, 0) = rng.normal() + 2.0 * s[i];
            x(i, 1) = rng.normal();
            x(i, 2) = rng.normal();
            y[i] = x(i, 1) + 0.5 * x(i, 0) > 0.5 ? 1 : 0;
        }
        FareParams p = exact_params({0, 1, 0, RecMode::None}, 50, 20);
        const auto fair = fare::build_tree(TrainingView{x, y, s, 2}, p);
        p.weights = {1, 0, 0, RecMode::None};
        const auto acc = fare::build_tree(TrainingView{x, y, s, 2}, p);
        EXPECT_LT(fair.leaf_count(), acc.leaf_count()) << "seed " << seed;
    }
}

TEST(BuildTree, HoldoutIsSeededAndExcluded) {
    const auto d = testing_support::random_dataset(300, 2, 8);
    FareParams p = exact_params({1, 0, 0, RecMode::None}, 10, 5);
    p.val_fraction = 0.3;
    p.seed = 5;
    const auto a = fare::build_tree(d, std::string("a"), p), b = fare::build_tree(d, std::string("a"), p);
    EXPECT_EQ(a.holdout_rows(), b.holdout_rows());
    EXPECT_EQ(a.holdout_rows().size(), 90u);
    p.seed = 6;
    EXPECT_NE(fare::build_tree(d, std::string("a"), p).holdout_rows(), a.holdout_rows());
}

TEST(Serialization, RoundTripPreservesEncodeBitExactly) {
    const auto d = testing_support::random_dataset(400, 3, 21);
    for (auto mode : {RecMode::None, RecMode::MeanSquared, RecMode::AbsMedian}) {
        FareParams p;
        p.weights = {0.5, 0.3, mode == RecMode::None ? 0.0 : 0.2, mode};
        p.max_leaves = 12;
        p.min_leaf_samples = 10;
        const auto t = fare::build_tree(d, std::string("a"), p);
        const auto back = fare::FareTree::from_json(nlohmann::json::parse(t.to_json().dump()));
        EXPECT_EQ(back.params(), t.params());
        EXPECT_EQ(back.nodes(), t.nodes());
        Rng rng(3);
        for (int i = 0; i < 200; ++i) {
            std::vector<double> q{rng.normal(), rng.normal(), rng.normal()};
            EXPECT_EQ(back.encode(q), t.encode(q));
        }
    }
}

TEST(Serialization, RejectsMalformedTrees) {
    const auto d = testing_support::random_dataset(100, 2, 21);
    auto j = fare::build_tree(d, std::string("a"), exact_params({1, 0, 0, RecMode::None}, 4, 5)).to_json();
    auto bad = j;
    bad["format_version"] = 99;
    EXPECT_THROW(fare::FareTree::from_json(bad), InvalidArgument);
    bad = j;
    bad["root"] = 50;
    EXPECT_THROW(fare::FareTree::from_json(bad), InvalidArgument);
    bad = j;
    bad.erase("leaves");
    EXPECT_THROW(fare::FareTree::from_json(bad), InvalidArgument);
}

TEST(Encoder, NormalizesBeforeRoutingAndRoundTrips) {
    auto d = testing_support::random_dataset(500, 3, 77);
    for (std::size_t r = 0; r < d.n(); ++r) d.features(r, 2) = 1000.0 + 50.0 * d.features(r, 2);
    EncoderHyper h;
    h.max_leaves = 8;
    h.min_leaf_samples = 20;
    for (auto kind : {EncoderKind::FARE, EncoderKind::FARE_Rec, EncoderKind::FARE_RecAbs}) {
        const auto enc = train_encoder(d, kind, std::string("a"), h);
        EXPECT_EQ(enc.task().has_value(), kind == EncoderKind::FARE);
        const auto z = enc.encode(d.features);
        EXPECT_EQ(z.rows(), d.n());
        EXPECT_EQ(z.cols(), d.dim());
        const auto back = FareEncoder::from_json(nlohmann::json::parse(enc.to_json().dump()));
        EXPECT_EQ(back.encode(d.features), z);
        EXPECT_EQ(back.kind(), kind);
    }
}

TEST(Encoder, ParamMappingFollowsKind) {
    EncoderHyper h;
    h.gamma = 0.25;
    h.lambda_f = 0.3;
    h.lambda_r = 0.01;
    auto p = to_fare_params(EncoderKind::FARE, h);
    EXPECT_EQ(p.weights, (CriterionWeights{0.75, 0.25, 0, RecMode::None}));
    p = to_fare_params(EncoderKind::FARE_Rec, h);
    EXPECT_EQ(p.weights, (CriterionWeights{0, 0.3, 0.01, RecMode::MeanSquared}));
    p = to_fare_params(EncoderKind::FARE_RecAbs, h);
    EXPECT_EQ(p.weights, (CriterionWeights{0, 0.3, 0.01, RecMode::AbsMedian}));
    EXPECT_THROW(to_fare_params(EncoderKind::Identity, h), InvalidArgument);
}

TEST(Representations, CsvRoundTripAndHeaderCheck) {
    testing_support::TempDir dir("reps");
    const auto z = Matrix::from_rows({{0.1, -2}, {1.0 / 3.0, 4e10}});
    write_representations(dir / "z.csv", z);
    EXPECT_EQ(read_representations(dir / "z.csv"), z);
    testing_support::write_text(dir / "bad.csv", "a,b\n1,2\n");
    EXPECT_THROW(read_representations(dir / "bad.csv"), InvalidArgument);
}
