#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "frlbench/csv.hpp"
#include "frlbench/errors.hpp"
#include "frlbench/fare.hpp"
#include "frlbench/tabular.hpp"

namespace frlbench {

enum class EncoderKind { FARE, FARE_Rec, FARE_RecAbs, Identity, ExternalReps };

inline std::string to_string(EncoderKind k) {
    switch (k) {
        case EncoderKind::FARE: return "FARE";
        case EncoderKind::FARE_Rec: return "FARE_Rec";
        case EncoderKind::FARE_RecAbs: return "FARE_RecAbs";
        case EncoderKind::Identity: return "Identity";
        case EncoderKind::ExternalReps: return "ExternalReps";
    }
    return "?";
}

inline EncoderKind encoder_kind_from_string(const std::string& s) {
    for (auto k : {EncoderKind::FARE, EncoderKind::FARE_Rec, EncoderKind::FARE_RecAbs, EncoderKind::Identity,
                   EncoderKind::ExternalReps})
        if (to_string(k) == s) return k;
    throw InvalidArgument("unknown encoder kind \"" + s + "\"");
}

inline bool is_tree_encoder(EncoderKind k) {
    return k == EncoderKind::FARE || k == EncoderKind::FARE_Rec || k == EncoderKind::FARE_RecAbs;
}

// Hyperparameters of one tree-encoder configuration, as they appear in
// parameter files and sweep grids. FARE reads gamma; the reconstruction
// variants read lambda_f and lambda_r with lambda_y fixed at 0.
struct EncoderHyper {
    double gamma = 0.5;
    double lambda_f = 1.0;
    double lambda_r = 1.0;
    std::size_t max_leaves = 200;
    std::size_t min_leaf_samples = 100;
    double val_fraction = 0.3;
    std::uint64_t seed = 0;
};

inline fare::FareParams to_fare_params(EncoderKind kind, const EncoderHyper& h) {
    fare::FareParams p;
    switch (kind) {
        case EncoderKind::FARE: p.weights = fare::CriterionWeights::fair_gini(h.gamma); break;
        case EncoderKind::FARE_Rec: p.weights = {0.0, h.lambda_f, h.lambda_r, fare::RecMode::MeanSquared}; break;
        case EncoderKind::FARE_RecAbs: p.weights = {0.0, h.lambda_f, h.lambda_r, fare::RecMode::AbsMedian}; break;
        default: throw InvalidArgument("encoder kind " + to_string(kind) + " has no tree parameters");
    }
    if (p.weights.lambda_r == 0.0) p.weights.rec_mode = fare::RecMode::None;
    p.max_leaves = h.max_leaves;
    p.min_leaf_samples = h.min_leaf_samples;
    p.val_fraction = h.val_fraction;
    p.seed = h.seed;
    p.validate();
    return p;
}

inline EncoderHyper hyper_from_json(const nlohmann::json& j, EncoderHyper h = {}) {
    h.gamma = j.value("gamma", h.gamma);
    h.lambda_f = j.value("lambda_f", h.lambda_f);
    h.lambda_r = j.value("lambda_r", h.lambda_r);
    h.max_leaves = j.value("max_leaves", h.max_leaves);
    h.min_leaf_samples = j.value("min_leaf_samples", h.min_leaf_samples);
    h.val_fraction = j.value("val_fraction", h.val_fraction);
    h.seed = j.value("seed", h.seed);
    return h;
}

// A tree encoder over z-scored inputs: the reconstruction term is computed
// on normalized features so lambda_r is scale-free.
class FareEncoder {
public:
    static constexpr int kFormatVersion = 1;

    FareEncoder() = default;
    FareEncoder(EncoderKind kind, std::optional<std::string> task, NormStats norm, fare::FareTree tree)
        : kind_(kind), task_(std::move(task)), norm_(std::move(norm)), tree_(std::move(tree)) {}

    EncoderKind kind() const { return kind_; }
    const std::optional<std::string>& task() const { return task_; }
    const NormStats& norm() const { return norm_; }
    const fare::FareTree& tree() const { return tree_; }

    Matrix encode(const Matrix& raw) const { return tree_.encode(apply_normalize(raw, norm_)); }

    std::vector<double> encode(std::span<const double> raw) const {
        std::vector<double> z(raw.size());
        apply_normalize_row(raw, norm_, z);
        return tree_.encode(z);
    }

    nlohmann::json to_json() const {
        return {{"format_version", kFormatVersion},
                {"kind", to_string(kind_)},
                {"task", task_ ? nlohmann::json(*task_) : nlohmann::json(nullptr)},
                {"norm", {{"means", norm_.means}, {"stds", norm_.stds}}},
                {"tree", tree_.to_json()}};
    }

    static FareEncoder from_json(const nlohmann::json& j) {
        try {
            if (j.at("format_version").get<int>() != kFormatVersion)
                throw InvalidArgument("unsupported model format_version");
            FareEncoder e;
            e.kind_ = encoder_kind_from_string(j.at("kind").get<std::string>());
            if (!j.at("task").is_null()) e.task_ = j.at("task").get<std::string>();
            e.norm_.means = j.at("norm").at("means").get<std::vector<double>>();
            e.norm_.stds = j.at("norm").at("stds").get<std::vector<double>>();
            e.tree_ = fare::FareTree::from_json(j.at("tree"));
            if (e.norm_.means.size() != e.tree_.dim()) throw InvalidArgument("model norm/tree width mismatch");
            return e;
        } catch (const nlohmann::json::exception& ex) {
            throw InvalidArgument(std::string("malformed model JSON: ") + ex.what());
        }
    }

private:
    EncoderKind kind_ = EncoderKind::FARE;
    std::optional<std::string> task_;
    NormStats norm_;
    fare::FareTree tree_;
};

inline FareEncoder train_encoder(const Dataset& train, EncoderKind kind, const std::optional<std::string>& task,
                                 const EncoderHyper& hyper) {
    const auto params = to_fare_params(kind, hyper);
    NormStats norm = fit_normalize(train.features);
    Dataset normalized = apply_normalize(train, norm);
    const std::optional<std::string> used_task = params.weights.lambda_y > 0.0 ? task : std::nullopt;
    auto tree = fare::build_tree(normalized, used_task, params);
    return FareEncoder(kind, used_task, std::move(norm), std::move(tree));
}

// Representation exchange format: header z0..z{d'-1}, one row per split row,
// in the order of the persisted split's row-index list.
inline void write_representations(const std::filesystem::path& path, const Matrix& z) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    for (std::size_t j = 0; j < z.cols(); ++j) out << (j ? "," : "") << 'z' << j;
    out << '\n';
    for (std::size_t r = 0; r < z.rows(); ++r) {
        for (std::size_t j = 0; j < z.cols(); ++j) out << (j ? "," : "") << csv::format_number(z(r, j));
        out << '\n';
    }
}

inline Matrix read_representations(const std::filesystem::path& path) {
    const auto header = csv::read_header(path.string());
    std::vector<std::string> expected;
    for (std::size_t j = 0; j < header.size(); ++j) expected.push_back("z" + std::to_string(j));
    if (header != expected) throw InvalidArgument("representation file " + path.string() + " must have header z0..zN");
    const auto cols = csv::read_columns(path.string(), expected);
    Matrix z(cols.rows, expected.size());
    for (std::size_t j = 0; j < expected.size(); ++j)
        for (std::size_t r = 0; r < cols.rows; ++r) z(r, j) = cols.columns[j][r];
    return z;
}

}  // namespace frlbench
