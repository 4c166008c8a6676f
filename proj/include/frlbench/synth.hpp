#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"

#include "frlbench/errors.hpp"
#include "frlbench/parallel.hpp"
#include "frlbench/rng.hpp"
#include "frlbench/tabular.hpp"

namespace frlbench::synth {

// Gaussian benchmark generator.
//
//   s ~ Bernoulli(group_prob)
//   v | s ~ N((s - group_prob) * delta * u, I) in d + hidden_dims dimensions
//   x = first d coordinates of v (the observed features)
//   y_t = 1[w_t . v + b_t > 0], flipped with probability label_noise
//
// hidden_dims > 0 gives labels an irreducible error shared across tasks,
// which lowers task accuracy without lowering task agreement the way
// independent label flips do.
struct SynthSpec {
    std::size_t n = 20000;
    std::size_t d = 10;
    std::size_t hidden_dims = 0;
    double group_prob = 0.5;
    double delta = 1.0;
    // Unit direction of the group mean shift; defaults to the first axis.
    std::vector<double> direction;
    std::vector<std::string> task_names;
    std::vector<std::vector<double>> task_weights;
    std::vector<double> task_biases;
    double label_noise = 0.0;
    std::uint64_t seed = 0;

    std::size_t latent_dim() const { return d + hidden_dims; }

    std::vector<double> shift_direction() const {
        if (!direction.empty()) return direction;
        std::vector<double> u(latent_dim(), 0.0);
        if (!u.empty()) u[0] = 1.0;
        return u;
    }

    void validate() const {
        if (n < 100) throw InvalidArgument("synthetic spec: n must be at least 100");
        if (d < 1) throw InvalidArgument("synthetic spec: d must be at least 1");
        if (!(group_prob > 0.0 && group_prob < 1.0)) throw InvalidArgument("synthetic spec: group_prob must lie in (0, 1)");
        if (!(label_noise >= 0.0 && label_noise < 0.5)) throw InvalidArgument("synthetic spec: label_noise must lie in [0, 0.5)");
        if (!std::isfinite(delta)) throw InvalidArgument("synthetic spec: delta must be finite");
        if (task_weights.size() != task_names.size() || task_biases.size() != task_names.size())
            throw InvalidArgument("synthetic spec: task names, weights and biases must have equal counts");
        auto unit = [&](const std::vector<double>& w, const std::string& what) {
            if (w.size() != latent_dim())
                throw InvalidArgument("synthetic spec: " + what + " must have " + std::to_string(latent_dim()) + " entries");
            double norm = 0.0;
            for (double v : w) norm += v * v;
            if (std::abs(std::sqrt(norm) - 1.0) > 1e-9) throw InvalidArgument("synthetic spec: " + what + " must be unit-norm");
        };
        for (std::size_t t = 0; t < task_weights.size(); ++t) unit(task_weights[t], "weights of task " + task_names[t]);
        if (!direction.empty()) unit(direction, "direction");
        for (std::size_t i = 0; i < task_names.size(); ++i)
            for (std::size_t j = i + 1; j < task_names.size(); ++j)
                if (task_names[i] == task_names[j]) throw InvalidArgument("synthetic spec: duplicate task name");
    }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline std::vector<double> normalized(std::vector<double> v) {
    const double norm = std::sqrt(dot(v, v));
    if (norm == 0.0) throw InvalidArgument("cannot normalize a zero vector");
    for (auto& x : v) x /= norm;
    return v;
}

// Unit vector at `angle` radians from unit vector `from`, rotated within the
// plane spanned by `from` and `toward`.
inline std::vector<double> rotate_toward(std::span<const double> from, std::span<const double> toward, double angle) {
    if (from.size() != toward.size()) throw DimensionError("rotate_toward: size mismatch");
    std::vector<double> perp(toward.begin(), toward.end());
    const double proj = dot(from, toward);
    for (std::size_t i = 0; i < perp.size(); ++i) perp[i] -= proj * from[i];
    perp = normalized(std::move(perp));
    std::vector<double> out(from.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::cos(angle) * from[i] + std::sin(angle) * perp[i];
    return normalized(std::move(out));
}

namespace detail {

constexpr std::size_t kBlockRows = 4096;

// Draws latent row `row` of the stream; `rng` must be the row's block stream
// positioned at that row.
inline int draw_latent(Rng& rng, const SynthSpec& spec, std::span<const double> u, std::span<double> v) {
    const int s = rng.bernoulli(spec.group_prob) ? 1 : 0;
    const double shift = (static_cast<double>(s) - spec.group_prob) * spec.delta;
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = rng.normal() + shift * u[j];
    return s;
}

}  // namespace detail

// Deterministic by seed for any worker count: rows are generated in fixed
// blocks, each block from its own counter-derived stream.
inline Dataset synth_generate(const SynthSpec& spec, std::size_t workers = 1) {
    spec.validate();
    const std::size_t D = spec.latent_dim();
    const auto u = spec.shift_direction();
    Dataset out;
    out.features = Matrix(spec.n, spec.d);
    for (std::size_t j = 0; j < spec.d; ++j) out.feature_names.push_back("x" + std::to_string(j));
    out.sensitive_name = "s";
    out.sensitive.assign(spec.n, 0);
    out.n_groups = 2;
    std::vector<Labels> labels(spec.task_names.size(), Labels(spec.n, 0));

    const std::size_t blocks = (spec.n + detail::kBlockRows - 1) / detail::kBlockRows;
    parallel_for(blocks, workers, [&](std::size_t b) {
        Rng rng(derive_seed(spec.seed, b));
        std::vector<double> v(D);
        const std::size_t end = std::min(spec.n, (b + 1) * detail::kBlockRows);
        for (std::size_t r = b * detail::kBlockRows; r < end; ++r) {
            out.sensitive[r] = detail::draw_latent(rng, spec, u, v);
            std::copy(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(spec.d), out.features.row(r).begin());
            for (std::size_t t = 0; t < labels.size(); ++t) {
                int y = dot(spec.task_weights[t], v) + spec.task_biases[t] > 0.0 ? 1 : 0;
                if (rng.uniform() < spec.label_noise) y = 1 - y;
                labels[t][r] = y;
            }
        }
    });
    for (std::size_t t = 0; t < labels.size(); ++t) out.tasks.emplace(spec.task_names[t], std::move(labels[t]));
    for (int g = 0; g < 2; ++g)
        if (std::find(out.sensitive.begin(), out.sensitive.end(), g) == out.sensitive.end())
            throw InvalidArgument("synthetic spec produced an empty sensitive group; increase n");
    return out;
}

// Bias b such that the positive rate of 1[w . v + b > 0] over a seeded
// calibration sample drawn from the spec's distribution is within 0.005 of
// target_rate. Bisection; larger b gives a higher positive rate.
inline double calibrate_bias(std::span<const double> w, double target_rate, const SynthSpec& spec,
                             std::size_t sample_size = 50000) {
    if (!(target_rate > 0.0 && target_rate < 1.0)) throw InvalidArgument("calibrate_bias: target_rate must lie in (0, 1)");
    if (w.size() != spec.latent_dim()) throw DimensionError("calibrate_bias: weight vector has the wrong size");
    sample_size = std::max<std::size_t>(sample_size, 50000);
    const auto u = spec.shift_direction();
    Rng rng(derive_seed(spec.seed, 0xca11b7a7eULL));
    std::vector<double> proj(sample_size), v(spec.latent_dim());
    for (auto& p : proj) {
        detail::draw_latent(rng, spec, u, v);
        p = dot(w, v);
    }
    auto rate = [&](double b) {
        std::size_t pos = 0;
        for (double p : proj) pos += p + b > 0.0;
        return static_cast<double>(pos) / static_cast<double>(proj.size());
    };
    const auto [mn, mx] = std::minmax_element(proj.begin(), proj.end());
    double lo = -*mx - 1.0, hi = -*mn + 1.0;
    double best = 0.0, best_err = 1.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = lo + (hi - lo) / 2.0;
        const double r = rate(mid);
        const double err = std::abs(r - target_rate);
        if (err < best_err) {
            best_err = err;
            best = mid;
        }
        if (err <= 1e-4) break;
        (r < target_rate ? lo : hi) = mid;
    }
    if (best_err > 0.005) throw ConvergenceError("calibrate_bias: no bias reaches the target rate within 0.005");
    return best;
}

// Config file form. Each task gives either explicit "weights" or a rotation
// {"rotate_from": <task>, "toward": [...], "angle_deg": a}; and either a
// "bias" or a target positive "rate" (calibrated). Weights are normalized.
inline SynthSpec spec_from_json(const nlohmann::json& j) {
    try {
        SynthSpec s;
        s.n = j.value("n", s.n);
        s.d = j.value("d", s.d);
        s.hidden_dims = j.value("hidden_dims", s.hidden_dims);
        s.group_prob = j.value("group_prob", s.group_prob);
        s.delta = j.value("delta", s.delta);
        s.label_noise = j.value("label_noise", s.label_noise);
        s.seed = j.value("seed", s.seed);
        if (j.contains("direction")) s.direction = normalized(j.at("direction").get<std::vector<double>>());
        std::vector<std::pair<std::size_t, double>> rates;
        for (const auto& t : j.at("tasks")) {
            const auto name = t.at("name").get<std::string>();
            std::vector<double> w;
            if (t.contains("weights")) {
                w = normalized(t.at("weights").get<std::vector<double>>());
            } else {
                const auto from = t.at("rotate_from").get<std::string>();
                auto it = std::find(s.task_names.begin(), s.task_names.end(), from);
                if (it == s.task_names.end()) throw InvalidArgument("rotate_from names an undefined task \"" + from + "\"");
                const auto toward = t.at("toward").get<std::vector<double>>();
                const double angle = t.at("angle_deg").get<double>() * std::numbers::pi / 180.0;
                w = rotate_toward(s.task_weights[static_cast<std::size_t>(it - s.task_names.begin())], toward, angle);
            }
            s.task_names.push_back(name);
            s.task_weights.push_back(std::move(w));
            s.task_biases.push_back(t.value("bias", 0.0));
            if (t.contains("rate")) rates.emplace_back(s.task_names.size() - 1, t.at("rate").get<double>());
        }
        s.validate();
        for (const auto& [idx, rate] : rates) s.task_biases[idx] = calibrate_bias(s.task_weights[idx], rate, s);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed synthetic spec: ") + e.what());
    }
}

}  // namespace frlbench::synth
