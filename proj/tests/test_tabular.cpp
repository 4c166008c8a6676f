#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "frlbench/csv.hpp"
#include "frlbench/tabular.hpp"
#include "test_support.hpp"

using namespace frlbench;
using testing_support::TempDir;
using testing_support::write_text;

namespace {

Schema simple_schema() { return {{"AGEP", "WKHP", "COW"}, {"COW"}, "SEX", {"y"}}; }

}  // namespace

TEST(Csv, SplitRecordHandlesQuotes) {
    const auto f = csv::split_record(R"(a,"b,c","d""e",)");
    ASSERT_EQ(f.size(), 4u);
    EXPECT_EQ(f[1], "b,c");
    EXPECT_EQ(f[2], "d\"e");
    EXPECT_EQ(f[3], "");
}

TEST(Csv, FormatNumberRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123, 0.0}) {
        const auto s = csv::format_number(v);
        EXPECT_EQ(*csv::parse_number(s), v) << s;
    }
}

TEST(LoadCsv, FourRowsMatchingSchema) {
    TempDir dir("csv");
    write_text(dir / "d.csv", "AGEP,WKHP,COW,SEX,y\n30,40,1,0,1\n40,20,2,1,0\n50,10,1,0,0\n60,45,3,1,1\n");
    const auto d = load_csv((dir / "d.csv").string(), simple_schema());
    EXPECT_EQ(d.n(), 4u);
    EXPECT_EQ(d.feature_names, (std::vector<std::string>{"AGEP", "WKHP", "COW"}));
    EXPECT_EQ(d.features(3, 1), 45.0);
    EXPECT_EQ(d.sensitive, (std::vector<int>{0, 1, 0, 1}));
    EXPECT_EQ(d.task("y"), (Labels{1, 0, 0, 1}));
}

TEST(LoadCsv, ColumnsFollowSchemaOrderNotFileOrder) {
    TempDir dir("csv");
    write_text(dir / "d.csv", "y,COW,SEX,WKHP,AGEP\n1,1,0,40,30\n0,2,1,20,40\n");
    const auto d = load_csv((dir / "d.csv").string(), simple_schema());
    EXPECT_EQ(d.features(0, 0), 30.0);
    EXPECT_EQ(d.features(0, 1), 40.0);
    EXPECT_EQ(d.features(0, 2), 1.0);
}

TEST(LoadCsv, MissingColumnNamesIt) {
    TempDir dir("csv");
    write_text(dir / "d.csv", "WKHP,COW,SEX,y\n40,1,0,1\n");
    try {
        load_csv((dir / "d.csv").string(), simple_schema());
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("\"AGEP\""), std::string::npos) << e.what();
    }
}

TEST(LoadCsv, NonNumericCellCitesRow) {
    TempDir dir("csv");
    write_text(dir / "d.csv", "AGEP,WKHP,COW,SEX,y\n30,40,1,0,1\n40,20,2,1,0\n50,abc,1,0,0\n");
    try {
        load_csv((dir / "d.csv").string(), simple_schema());
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("WKHP"), std::string::npos) << e.what();
    }
}

TEST(LoadCsv, EmptyFileAndMissingValueAreDistinctErrors) {
    TempDir dir("csv");
    write_text(dir / "empty.csv", "");
    EXPECT_THROW(load_csv((dir / "empty.csv").string(), simple_schema()), EmptyFileError);
    write_text(dir / "header_only.csv", "AGEP,WKHP,COW,SEX,y\n");
    EXPECT_THROW(load_csv((dir / "header_only.csv").string(), simple_schema()), EmptyFileError);
    write_text(dir / "blank.csv", "AGEP,WKHP,COW,SEX,y\n30,,1,0,1\n40,20,2,1,0\n");
    EXPECT_THROW(load_csv((dir / "blank.csv").string(), simple_schema()), MissingValueError);
}

TEST(LoadCsv, NonBinaryTaskAndBadCategoricalRejected) {
    TempDir dir("csv");
    write_text(dir / "t.csv", "AGEP,WKHP,COW,SEX,y\n30,40,1,0,2\n40,20,2,1,0\n");
    EXPECT_THROW(load_csv((dir / "t.csv").string(), simple_schema()), NonBinaryColumnError);
    write_text(dir / "c.csv", "AGEP,WKHP,COW,SEX,y\n30,40,1.5,0,1\n40,20,2,1,0\n");
    EXPECT_THROW(load_csv((dir / "c.csv").string(), simple_schema()), ParseError);
}

TEST(DatasetInvariants, ValidateCatchesViolations) {
    auto d = testing_support::random_dataset(20, 3, 1);
    EXPECT_NO_THROW(d.validate());
    auto bad = d;
    bad.feature_names[1] = bad.feature_names[0];
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = d;
    bad.tasks["a"].pop_back();
    EXPECT_THROW(bad.validate(), DimensionError);
    bad = d;
    bad.n_groups = 3;
    EXPECT_THROW(bad.validate(), UndefinedGroupError);
    bad = d;
    bad.tasks["a"][0] = 2;
    EXPECT_THROW(bad.validate(), NonBinaryColumnError);
}

TEST(Split, CountsFollowRoundedFraction) {
    const auto d = testing_support::random_dataset(10, 2, 3);
    for (std::uint64_t seed : {0u, 1u, 99u}) {
        const auto s = split(d, 0.3, seed);
        EXPECT_EQ(s.test.n(), 3u);
        EXPECT_EQ(s.train.n(), 7u);
    }
}

TEST(Split, DeterministicAndPartition) {
    const auto d = testing_support::random_dataset(1000, 2, 5);
    const auto a = split(d, 0.25, 42), b = split(d, 0.25, 42);
    EXPECT_EQ(a.train_rows, b.train_rows);
    EXPECT_EQ(a.test_rows, b.test_rows);
    EXPECT_EQ(a.train, b.train);
    std::set<std::size_t> all(a.train_rows.begin(), a.train_rows.end());
    for (auto r : a.test_rows) EXPECT_TRUE(all.insert(r).second) << "row in both splits: " << r;
    EXPECT_EQ(all.size(), 1000u);
    EXPECT_EQ(*all.rbegin(), 999u);
    // Subsets carry the right rows.
    for (std::size_t i = 0; i < a.test_rows.size(); ++i)
        EXPECT_EQ(a.test.features(i, 1), d.features(a.test_rows[i], 1));
}

TEST(Split, DifferentSeedsGiveDifferentTestSets) {
    const auto d = testing_support::random_dataset(1000, 1, 5);
    EXPECT_NE(split(d, 0.3, 1).test_rows, split(d, 0.3, 2).test_rows);
}

TEST(Split, RejectsBadFraction) {
    const auto d = testing_support::random_dataset(10, 1, 5);
    EXPECT_THROW(split(d, 0.0, 1), InvalidArgument);
    EXPECT_THROW(split(d, 1.0, 1), InvalidArgument);
    EXPECT_THROW(split(d, -0.2, 1), InvalidArgument);
}

TEST(Normalize, HandZScore) {
    const auto m = Matrix::from_rows({{2, 5}, {4, 5}, {6, 5}});
    const auto s = fit_normalize(m);
    EXPECT_DOUBLE_EQ(s.means[0], 4.0);
    EXPECT_NEAR(s.stds[0], std::sqrt(8.0 / 3.0), 1e-15);
    const auto z = apply_normalize(m, s);
    const double e = 2.0 / std::sqrt(8.0 / 3.0);  // 1.2247...
    EXPECT_NEAR(z(0, 0), -e, 1e-12);
    EXPECT_NEAR(z(1, 0), 0.0, 1e-12);
    EXPECT_NEAR(z(2, 0), e, 1e-12);
    EXPECT_NEAR(e, 1.2247, 1e-4);
    for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(z(r, 1), 0.0);
}

TEST(Normalize, TrainFittedStatsGiveZeroMeanUnitStd) {
    const auto d = testing_support::random_dataset(500, 4, 9);
    const auto z = apply_normalize(d.features, fit_normalize(d));
    for (std::size_t c = 0; c < z.cols(); ++c) {
        double mean = 0.0, sq = 0.0;
        for (std::size_t r = 0; r < z.rows(); ++r) mean += z(r, c);
        mean /= static_cast<double>(z.rows());
        for (std::size_t r = 0; r < z.rows(); ++r) sq += (z(r, c) - mean) * (z(r, c) - mean);
        EXPECT_NEAR(mean, 0.0, 1e-9);
        EXPECT_NEAR(std::sqrt(sq / static_cast<double>(z.rows())), 1.0, 1e-9);
    }
}

TEST(Normalize, ColumnCountMismatch) {
    const auto s = fit_normalize(Matrix::from_rows({{1, 2}, {3, 4}}));
    EXPECT_THROW(apply_normalize(Matrix::from_rows({{1, 2, 3}}), s), DimensionError);
}

TEST(OneHot, ThreeCodesSumToOne) {
    Dataset d;
    d.features = Matrix::from_rows({{1, 10}, {2, 20}, {3, 30}, {2, 40}});
    d.feature_names = {"c", "num"};
    d.sensitive = {0, 1, 0, 1};
    const std::vector<std::string> cols = {"c"};
    const auto out = one_hot(d, cols);
    EXPECT_EQ(out.feature_names, (std::vector<std::string>{"c=1", "c=2", "c=3", "num"}));
    for (std::size_t r = 0; r < out.n(); ++r) EXPECT_EQ(out.features(r, 0) + out.features(r, 1) + out.features(r, 2), 1.0);
    EXPECT_EQ(out.features(3, 3), 40.0);
}

TEST(OneHot, BinaryColumnGetsTwoColumns) {
    Dataset d;
    d.features = Matrix::from_rows({{0}, {1}, {1}});
    d.feature_names = {"b"};
    d.sensitive = {0, 1, 0};
    const std::vector<std::string> cols = {"b"};
    EXPECT_EQ(one_hot(d, cols).dim(), 2u);
}

TEST(OneHot, ArgmaxRecoversCodes) {
    Rng rng(4);
    Dataset d;
    d.features = Matrix(100, 2);
    d.feature_names = {"x", "cat"};
    d.sensitive.assign(100, 0);
    for (std::size_t r = 0; r < 100; ++r) {
        d.features(r, 0) = rng.normal();
        d.features(r, 1) = static_cast<double>(rng.below(5) * 2);
    }
    const std::vector<std::string> cols = {"cat"};
    const auto out = one_hot(d, cols);
    for (std::size_t r = 0; r < 100; ++r) {
        std::size_t best = 1;
        for (std::size_t c = 1; c < out.dim(); ++c)
            if (out.features(r, c) > out.features(r, best)) best = c;
        const auto& name = out.feature_names[best];
        EXPECT_EQ(std::stod(name.substr(name.find('=') + 1)), d.features(r, 1));
    }
}

TEST(OneHot, AbsentColumnIsSchemaError) {
    auto d = testing_support::random_dataset(5, 1, 1);
    const std::vector<std::string> cols = {"nope"};
    EXPECT_THROW(one_hot(d, cols), SchemaError);
}

TEST(Persistence, DatasetAndSplitRoundTrip) {
    TempDir dir("persist");
    const auto d = testing_support::random_dataset(60, 3, 11);
    save_dataset_dir(dir.path(), d);
    const auto back = load_dataset_dir(dir.path());
    EXPECT_EQ(back, d);
    const auto s = split(back, 0.3, 5);
    save_split(dir.path(), s);
    const auto s2 = load_split(dir.path());
    EXPECT_EQ(s2.train_rows, s.train_rows);
    EXPECT_EQ(s2.test_rows, s.test_rows);
    EXPECT_EQ(s2.train, s.train);
    EXPECT_EQ(s2.test, s.test);
    EXPECT_TRUE(std::filesystem::exists(dir / "train.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "test.csv"));
}

TEST(Persistence, CorruptSplitSidecarRejected) {
    TempDir dir("persist");
    const auto d = testing_support::random_dataset(20, 1, 11);
    save_dataset_dir(dir.path(), d);
    save_split(dir.path(), split(d, 0.5, 1));
    auto j = read_json_file(dir / "split.json");
    j["test_rows"][0] = j["train_rows"][0];
    write_json_file(dir / "split.json", j);
    EXPECT_THROW(load_split(dir.path()), InvalidArgument);
}
