#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "frlbench/csv.hpp"
#include "frlbench/errors.hpp"
#include "frlbench/rng.hpp"

namespace frlbench {

using Labels = std::vector<int>;

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double> column(std::size_t c) const {
        std::vector<double> out(rows_);
        for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
        return out;
    }

    const std::vector<double>& data() const noexcept { return data_; }
    std::vector<double>& data() noexcept { return data_; }

    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != m.cols_) throw DimensionError("ragged rows in Matrix::from_rows");
            std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
        }
        return m;
    }

    Matrix select_rows(std::span<const std::size_t> idx) const {
        Matrix m(idx.size(), cols_);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            auto src = row(idx[i]);
            std::copy(src.begin(), src.end(), m.row(i).begin());
        }
        return m;
    }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Feature matrix + sensitive group ids + named binary task labels.
struct Dataset {
    Matrix features;
    std::vector<std::string> feature_names;
    std::string sensitive_name = "s";
    std::vector<int> sensitive;
    int n_groups = 2;
    std::map<std::string, Labels> tasks;

    std::size_t n() const noexcept { return features.rows(); }
    std::size_t dim() const noexcept { return features.cols(); }

    bool has_task(const std::string& name) const { return tasks.contains(name); }

    const Labels& task(const std::string& name) const {
        auto it = tasks.find(name);
        if (it == tasks.end()) throw UnknownTaskError(name);
        return it->second;
    }

    std::vector<std::string> task_names() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : tasks) out.push_back(k);
        return out;
    }

    // Checks every structural invariant. Group non-emptiness is only required
    // for full datasets; row subsets may legitimately miss a group.
    void validate(bool require_all_groups = true) const {
        const std::size_t rows = n();
        if (feature_names.size() != features.cols())
            throw InvalidArgument("feature_names length does not match the column count");
        std::set<std::string> seen;
        for (const auto& f : feature_names)
            if (!seen.insert(f).second) throw InvalidArgument("duplicate feature name \"" + f + "\"");
        if (sensitive.size() != rows) throw DimensionError("sensitive vector length differs from n");
        if (n_groups < 2) throw InvalidArgument("at least two sensitive groups are required");
        std::vector<std::size_t> counts(static_cast<std::size_t>(n_groups), 0);
        for (int g : sensitive) {
            if (g < 0 || g >= n_groups)
                throw InvalidArgument("sensitive value " + std::to_string(g) + " outside [0, " +
                                      std::to_string(n_groups) + ")");
            ++counts[static_cast<std::size_t>(g)];
        }
        if (require_all_groups)
            for (std::size_t g = 0; g < counts.size(); ++g)
                if (counts[g] == 0) throw UndefinedGroupError(static_cast<int>(g));
        for (const auto& [name, labels] : tasks) {
            if (labels.size() != rows) throw DimensionError("task \"" + name + "\" length differs from n");
            for (std::size_t i = 0; i < labels.size(); ++i)
                if (labels[i] != 0 && labels[i] != 1) throw NonBinaryColumnError(name, i + 1);
        }
    }

    Dataset subset(std::span<const std::size_t> rows) const {
        Dataset out;
        out.features = features.select_rows(rows);
        out.feature_names = feature_names;
        out.sensitive_name = sensitive_name;
        out.n_groups = n_groups;
        out.sensitive.reserve(rows.size());
        for (auto r : rows) out.sensitive.push_back(sensitive[r]);
        for (const auto& [name, labels] : tasks) {
            Labels sub;
            sub.reserve(rows.size());
            for (auto r : rows) sub.push_back(labels[r]);
            out.tasks.emplace(name, std::move(sub));
        }
        return out;
    }

    bool operator==(const Dataset&) const = default;
};

struct SplitDataset {
    Dataset train;
    Dataset test;
    std::uint64_t seed = 0;
    double test_fraction = 0.0;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
};

// Deterministic uniform split: rows are permuted by `seed`, the first
// round(test_fraction * n) go to test. Both index lists are kept ascending.
inline SplitDataset split(const Dataset& d, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw InvalidArgument("test_fraction must lie in (0, 1)");
    if (d.n() < 2) throw InvalidArgument("cannot split a dataset with fewer than 2 rows");
    std::vector<std::size_t> perm(d.n());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    Rng rng(seed);
    rng.shuffle(perm.begin(), perm.end());
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(d.n())));

    SplitDataset s;
    s.seed = seed;
    s.test_fraction = test_fraction;
    s.test_rows.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train_rows.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
    std::sort(s.test_rows.begin(), s.test_rows.end());
    std::sort(s.train_rows.begin(), s.train_rows.end());
    s.train = d.subset(s.train_rows);
    s.test = d.subset(s.test_rows);
    return s;
}

// Per-column z-score statistics (population std).
struct NormStats {
    std::vector<double> means;
    std::vector<double> stds;

    static constexpr double kConstantStd = 1e-12;

    bool operator==(const NormStats&) const = default;
};

inline NormStats fit_normalize(const Matrix& m) {
    NormStats s;
    const std::size_t n = m.rows(), d = m.cols();
    s.means.assign(d, 0.0);
    s.stds.assign(d, 0.0);
    if (n == 0) return s;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) s.means[c] += m(r, c);
    for (auto& mu : s.means) mu /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) {
            const double dev = m(r, c) - s.means[c];
            s.stds[c] += dev * dev;
        }
    for (auto& sd : s.stds) sd = std::sqrt(sd / static_cast<double>(n));
    return s;
}

inline NormStats fit_normalize(const Dataset& train) { return fit_normalize(train.features); }

inline Matrix apply_normalize(const Matrix& m, const NormStats& s) {
    if (s.means.size() != m.cols() || s.stds.size() != m.cols())
        throw DimensionError("normalization stats have " + std::to_string(s.means.size()) +
                             " columns, data has " + std::to_string(m.cols()));
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            out(r, c) = s.stds[c] < NormStats::kConstantStd ? 0.0 : (m(r, c) - s.means[c]) / s.stds[c];
    return out;
}

inline Dataset apply_normalize(const Dataset& d, const NormStats& s) {
    Dataset out = d;
    out.features = apply_normalize(d.features, s);
    return out;
}

inline void apply_normalize_row(std::span<const double> x, const NormStats& s, std::span<double> out) {
    if (x.size() != s.means.size()) throw DimensionError("feature vector has wrong dimensionality");
    for (std::size_t c = 0; c < x.size(); ++c)
        out[c] = s.stds[c] < NormStats::kConstantStd ? 0.0 : (x[c] - s.means[c]) / s.stds[c];
}

// Expands each named integer-coded column into one binary column per observed
// code, named "col=code", in place of the original column. Codes are ordered
// ascending.
inline Dataset one_hot(const Dataset& d, std::span<const std::string> columns) {
    std::set<std::string> wanted(columns.begin(), columns.end());
    for (const auto& c : wanted)
        if (std::find(d.feature_names.begin(), d.feature_names.end(), c) == d.feature_names.end())
            throw SchemaError(c);

    struct OutCol {
        std::size_t src;
        std::optional<long long> code;
        std::string name;
    };
    std::vector<OutCol> plan;
    for (std::size_t c = 0; c < d.dim(); ++c) {
        const auto& name = d.feature_names[c];
        if (!wanted.contains(name)) {
            plan.push_back({c, std::nullopt, name});
            continue;
        }
        std::set<long long> codes;
        for (std::size_t r = 0; r < d.n(); ++r) {
            const double v = d.features(r, c);
            if (v < 0.0 || v != std::floor(v))
                throw InvalidArgument("column \"" + name + "\" holds a non-integer or negative code at row " +
                                      std::to_string(r + 1));
            codes.insert(static_cast<long long>(v));
        }
        for (long long code : codes) plan.push_back({c, code, name + "=" + std::to_string(code)});
    }

    Dataset out;
    out.feature_names.reserve(plan.size());
    for (const auto& p : plan) out.feature_names.push_back(p.name);
    out.features = Matrix(d.n(), plan.size());
    for (std::size_t r = 0; r < d.n(); ++r)
        for (std::size_t k = 0; k < plan.size(); ++k) {
            const double v = d.features(r, plan[k].src);
            out.features(r, k) = plan[k].code ? (static_cast<long long>(v) == *plan[k].code ? 1.0 : 0.0) : v;
        }
    out.sensitive_name = d.sensitive_name;
    out.sensitive = d.sensitive;
    out.n_groups = d.n_groups;
    out.tasks = d.tasks;
    return out;
}

// Column layout of a dataset CSV: feature columns, the sensitive column, and
// binary task columns. Categorical features must hold non-negative integer codes.
struct Schema {
    std::vector<std::string> features;
    std::vector<std::string> categorical;
    std::string sensitive;
    std::vector<std::string> tasks;
};

inline Dataset load_csv(const std::string& path, const Schema& schema) {
    std::vector<std::string> wanted = schema.features;
    wanted.push_back(schema.sensitive);
    wanted.insert(wanted.end(), schema.tasks.begin(), schema.tasks.end());
    const auto cols = csv::read_columns(path, wanted);

    Dataset d;
    d.feature_names = schema.features;
    d.sensitive_name = schema.sensitive;
    d.features = Matrix(cols.rows, schema.features.size());
    for (std::size_t c = 0; c < schema.features.size(); ++c) {
        const auto& col = cols.columns[c];
        const bool categorical = std::find(schema.categorical.begin(), schema.categorical.end(),
                                           schema.features[c]) != schema.categorical.end();
        for (std::size_t r = 0; r < cols.rows; ++r) {
            if (categorical && (col[r] < 0.0 || col[r] != std::floor(col[r])))
                throw ParseError(r + 1, schema.features[c], csv::format_number(col[r]));
            d.features(r, c) = col[r];
        }
    }
    const auto& s = cols.columns[schema.features.size()];
    int max_group = -1;
    d.sensitive.resize(cols.rows);
    for (std::size_t r = 0; r < cols.rows; ++r) {
        if (s[r] < 0.0 || s[r] != std::floor(s[r]))
            throw ParseError(r + 1, schema.sensitive, csv::format_number(s[r]));
        d.sensitive[r] = static_cast<int>(s[r]);
        max_group = std::max(max_group, d.sensitive[r]);
    }
    d.n_groups = std::max(2, max_group + 1);
    for (std::size_t t = 0; t < schema.tasks.size(); ++t) {
        const auto& col = cols.columns[schema.features.size() + 1 + t];
        Labels y(cols.rows);
        for (std::size_t r = 0; r < cols.rows; ++r) {
            if (col[r] != 0.0 && col[r] != 1.0) throw NonBinaryColumnError(schema.tasks[t], r + 1);
            y[r] = static_cast<int>(col[r]);
        }
        d.tasks.emplace(schema.tasks[t], std::move(y));
    }
    d.validate();
    return d;
}

// ---------------------------------------------------------------------------
// On-disk layout of a dataset directory:
//   meta.json   feature/sensitive/task column roles
//   data.csv    every row of the dataset
//   split.json  (after `split`) seed, fraction and both row-index lists
//   train.csv, test.csv  the materialized split, same layout as data.csv

inline constexpr int kDatasetFormatVersion = 1;

inline void write_dataset_csv(const std::string& path, const Dataset& d) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    };
    bool first = true;
    auto sep = [&] {
        if (!first) out << ',';
        first = false;
    };
    for (const auto& f : d.feature_names) sep(), out << quote(f);
    sep(), out << quote(d.sensitive_name);
    for (const auto& [name, y] : d.tasks) sep(), out << quote(name);
    out << '\n';
    for (std::size_t r = 0; r < d.n(); ++r) {
        first = true;
        for (std::size_t c = 0; c < d.dim(); ++c) sep(), out << csv::format_number(d.features(r, c));
        sep(), out << d.sensitive[r];
        for (const auto& [name, y] : d.tasks) sep(), out << y[r];
        out << '\n';
    }
}

inline nlohmann::json dataset_meta(const Dataset& d) {
    return {{"format_version", kDatasetFormatVersion},
            {"features", d.feature_names},
            {"sensitive", d.sensitive_name},
            {"n_groups", d.n_groups},
            {"tasks", d.task_names()},
            {"n", d.n()}};
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    // Write-then-rename so readers never observe a partial file.
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + tmp.string());
        out << j.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

inline void save_dataset_dir(const std::filesystem::path& dir, const Dataset& d) {
    std::filesystem::create_directories(dir);
    write_dataset_csv((dir / "data.csv").string(), d);
    write_json_file(dir / "meta.json", dataset_meta(d));
}

inline Schema schema_from_meta(const nlohmann::json& meta) {
    Schema s;
    s.features = meta.at("features").get<std::vector<std::string>>();
    s.sensitive = meta.at("sensitive").get<std::string>();
    s.tasks = meta.at("tasks").get<std::vector<std::string>>();
    return s;
}

inline Dataset load_dataset_dir(const std::filesystem::path& dir) {
    const auto meta = read_json_file(dir / "meta.json");
    Dataset d = load_csv((dir / "data.csv").string(), schema_from_meta(meta));
    d.n_groups = std::max(d.n_groups, meta.value("n_groups", 2));
    d.validate();
    return d;
}

inline nlohmann::json split_sidecar(const SplitDataset& s) {
    return {{"format_version", kDatasetFormatVersion},
            {"seed", s.seed},
            {"test_fraction", s.test_fraction},
            {"train_rows", s.train_rows},
            {"test_rows", s.test_rows}};
}

inline void save_split(const std::filesystem::path& dir, const SplitDataset& s) {
    std::filesystem::create_directories(dir);
    write_dataset_csv((dir / "train.csv").string(), s.train);
    write_dataset_csv((dir / "test.csv").string(), s.test);
    write_json_file(dir / "split.json", split_sidecar(s));
}

// Rebuilds the persisted split from data.csv and the recorded row lists, so a
// published split is reproduced exactly.
inline SplitDataset load_split(const std::filesystem::path& dir) {
    const Dataset d = load_dataset_dir(dir);
    if (!std::filesystem::exists(dir / "split.json"))
        throw DataError("no split found in " + dir.string() + " (run `split` first)");
    const auto j = read_json_file(dir / "split.json");
    SplitDataset s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.test_fraction = j.at("test_fraction").get<double>();
    s.train_rows = j.at("train_rows").get<std::vector<std::size_t>>();
    s.test_rows = j.at("test_rows").get<std::vector<std::size_t>>();
    std::vector<bool> used(d.n(), false);
    for (const auto* rows : {&s.train_rows, &s.test_rows})
        for (auto r : *rows) {
            if (r >= d.n() || used[r]) throw InvalidArgument("split.json row lists are not a partition of the data");
            used[r] = true;
        }
    if (s.train_rows.size() + s.test_rows.size() != d.n())
        throw InvalidArgument("split.json row lists do not cover every row");
    s.train = d.subset(s.train_rows);
    s.test = d.subset(s.test_rows);
    return s;
}

}  // namespace frlbench
