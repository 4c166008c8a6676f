#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <span>
#include <vector>

#include "frlbench/errors.hpp"
#include "frlbench/rng.hpp"
#include "frlbench/tabular.hpp"

namespace frlbench {

namespace detail {

// Two-lane double vector (GCC/Clang extension); the hot loops below work on
// 8 hidden units at a time held in four of these.
typedef double v2d __attribute__((vector_size(16)));

inline v2d load2(const double* p) {
    v2d r;
    std::memcpy(&r, p, sizeof(r));
    return r;
}

inline void store2(double* p, v2d v) { std::memcpy(p, &v, sizeof(v)); }

}  // namespace detail

struct ClassifierParams {
    std::size_t hidden_size = 50;
    std::size_t epochs = 50;
    std::size_t batch_size = 256;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;

    void validate() const {
        if (hidden_size < 1) throw InvalidArgument("hidden_size must be at least 1");
        if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
        if (batch_size < 1) throw InvalidArgument("batch_size must be at least 1");
        if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
    }

    bool operator==(const ClassifierParams&) const = default;
};

// One hidden ReLU layer, sigmoid output, trained with binary cross-entropy and
// Adam on shuffled mini-batches. Predictions threshold the probability at 0.5.
class MlpClassifier {
public:
    MlpClassifier() = default;

    std::size_t input_dim() const { return d_; }
    std::size_t hidden_size() const { return h_; }

    double predict_proba(std::span<const double> x) const {
        if (x.size() != d_) throw DimensionError("classifier expects " + std::to_string(d_) + " inputs");
        std::vector<double> act(h_);
        return sigmoid(forward(x.data(), act.data()));
    }

    int predict(std::span<const double> x) const {
        if (x.size() != d_) throw DimensionError("classifier expects " + std::to_string(d_) + " inputs");
        std::vector<double> act(h_);
        return forward(x.data(), act.data()) >= 0.0 ? 1 : 0;
    }

    std::vector<int> predict(const Matrix& x) const {
        if (x.cols() != d_) throw DimensionError("classifier expects " + std::to_string(d_) + " inputs");
        std::vector<int> out(x.rows());
        std::vector<double> act(h_);
        for (std::size_t r = 0; r < x.rows(); ++r) out[r] = forward(x.row(r).data(), act.data()) >= 0.0 ? 1 : 0;
        return out;
    }

    friend MlpClassifier train_classifier(const Matrix& x, std::span<const int> labels, const ClassifierParams& p);

private:
    static double sigmoid(double z) {
        if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
        const double e = std::exp(z);
        return e / (1.0 + e);
    }

    // Parameters live in one buffer: W1 stored input-major (d x h), b1 (h),
    // w2 (h), b2 (1).
    const double* w1t() const { return params_.data(); }
    const double* b1() const { return params_.data() + d_ * h_; }
    const double* w2() const { return params_.data() + d_ * h_ + h_; }
    double b2() const { return params_.back(); }

    // Output logit; leaves the hidden ReLU activations in `act`. Hidden units
    // are processed in register-sized chunks.
    double forward(const double* x, double* act) const {
        constexpr std::size_t C = 8;
        const double* w = w1t();
        const double* bias = b1();
        std::size_t k0 = 0;
        for (; k0 + C <= h_; k0 += C) {
            using detail::load2;
            detail::v2d a0 = load2(bias + k0), a1 = load2(bias + k0 + 2), a2 = load2(bias + k0 + 4),
                        a3 = load2(bias + k0 + 6);
            for (std::size_t j = 0; j < d_; ++j) {
                const detail::v2d xj = {x[j], x[j]};
                const double* row = w + j * h_ + k0;
                a0 += xj * load2(row);
                a1 += xj * load2(row + 2);
                a2 += xj * load2(row + 4);
                a3 += xj * load2(row + 6);
            }
            detail::store2(act + k0, a0);
            detail::store2(act + k0 + 2, a1);
            detail::store2(act + k0 + 4, a2);
            detail::store2(act + k0 + 6, a3);
            for (std::size_t t = k0; t < k0 + C; ++t) act[t] = act[t] > 0.0 ? act[t] : 0.0;
        }
        for (std::size_t k = k0; k < h_; ++k) {
            double a = bias[k];
            for (std::size_t j = 0; j < d_; ++j) a += x[j] * w[j * h_ + k];
            act[k] = a > 0.0 ? a : 0.0;
        }
        double z = b2();
        const double* v = w2();
        for (std::size_t k = 0; k < h_; ++k) z += v[k] * act[k];
        return z;
    }

    std::size_t d_ = 0, h_ = 0;
    std::vector<double> params_;
};

// Expects inputs already normalized with stats fitted on `x`.
inline MlpClassifier train_classifier(const Matrix& x, std::span<const int> labels, const ClassifierParams& p) {
    p.validate();
    if (labels.size() != x.rows()) throw DimensionError("train_classifier: label count differs from row count");
    if (x.rows() == 0) throw InvalidArgument("train_classifier: no training rows");

    MlpClassifier m;
    const std::size_t n = x.rows(), d = x.cols(), h = p.hidden_size;
    m.d_ = d;
    m.h_ = h;
    const std::size_t n_params = d * h + h + h + 1;
    m.params_.assign(n_params, 0.0);
    double* w1t = m.params_.data();
    double* b1 = w1t + d * h;
    double* w2 = b1 + h;
    double& b2 = m.params_.back();

    // PyTorch-style uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
    Rng rng(p.seed);
    const double bound1 = d > 0 ? 1.0 / std::sqrt(static_cast<double>(d)) : 1.0;
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(h));
    for (std::size_t k = 0; k < h; ++k)
        for (std::size_t j = 0; j < d; ++j) w1t[j * h + k] = rng.uniform(-bound1, bound1);
    for (std::size_t k = 0; k < h; ++k) b1[k] = rng.uniform(-bound1, bound1);
    for (std::size_t k = 0; k < h; ++k) w2[k] = rng.uniform(-bound2, bound2);
    b2 = rng.uniform(-bound2, bound2);

    std::vector<double> grad(n_params), m1(n_params, 0.0), m2(n_params, 0.0);
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double beta1_t = 1.0, beta2_t = 1.0;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> act(h), dks(std::min(p.batch_size, n) * h);
    std::vector<const double*> rows(std::min(p.batch_size, n));

    for (std::size_t epoch = 0; epoch < p.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        for (std::size_t start = 0; start < n; start += p.batch_size) {
            const std::size_t stop = std::min(n, start + p.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            double* g_w1t = grad.data();
            double* g_b1 = g_w1t + d * h;
            double* g_w2 = g_b1 + h;
            double& g_b2 = grad[n_params - 1];
            const std::size_t nb = stop - start;
            for (std::size_t b = 0; b < nb; ++b) {
                const double* xr = x.row(order[start + b]).data();
                rows[b] = xr;
                const double z = m.forward(xr, act.data());
                const double delta = MlpClassifier::sigmoid(z) - (labels[order[start + b]] != 0 ? 1.0 : 0.0);
                g_b2 += delta;
                double* dk = &dks[b * h];
                for (std::size_t k = 0; k < h; ++k) {
                    g_w2[k] += delta * act[k];
                    dk[k] = act[k] > 0.0 ? delta * w2[k] : 0.0;
                    g_b1[k] += dk[k];
                }
            }
            // First-layer gradient as X_batch^T * DK, accumulated in registers.
            constexpr std::size_t C = 8;
            for (std::size_t j = 0; j < d; ++j) {
                double* gw = g_w1t + j * h;
                std::size_t k0 = 0;
                for (; k0 + C <= h; k0 += C) {
                    using detail::load2;
                    detail::v2d a0 = {}, a1 = {}, a2 = {}, a3 = {};
                    for (std::size_t b = 0; b < nb; ++b) {
                        const detail::v2d xj = {rows[b][j], rows[b][j]};
                        const double* dk = &dks[b * h + k0];
                        a0 += xj * load2(dk);
                        a1 += xj * load2(dk + 2);
                        a2 += xj * load2(dk + 4);
                        a3 += xj * load2(dk + 6);
                    }
                    detail::store2(gw + k0, load2(gw + k0) + a0);
                    detail::store2(gw + k0 + 2, load2(gw + k0 + 2) + a1);
                    detail::store2(gw + k0 + 4, load2(gw + k0 + 4) + a2);
                    detail::store2(gw + k0 + 6, load2(gw + k0 + 6) + a3);
                }
                for (std::size_t k = k0; k < h; ++k)
                    for (std::size_t b = 0; b < nb; ++b) gw[k] += rows[b][j] * dks[b * h + k];
            }
            const double scale = 1.0 / static_cast<double>(stop - start);
            beta1_t *= beta1;
            beta2_t *= beta2;
            const double lr_t = p.learning_rate * std::sqrt(1.0 - beta2_t) / (1.0 - beta1_t);
            double* w = m.params_.data();
            for (std::size_t i = 0; i < n_params; ++i) {
                const double g = grad[i] * scale;
                m1[i] = beta1 * m1[i] + (1.0 - beta1) * g;
                m2[i] = beta2 * m2[i] + (1.0 - beta2) * g * g;
                w[i] -= lr_t * m1[i] / (std::sqrt(m2[i]) + eps);
            }
        }
    }
    return m;
}

}  // namespace frlbench
