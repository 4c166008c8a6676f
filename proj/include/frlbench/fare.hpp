#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "frlbench/errors.hpp"
#include "frlbench/metrics.hpp"
#include "frlbench/rng.hpp"
#include "frlbench/tabular.hpp"

namespace frlbench::fare {

enum class RecMode { None, MeanSquared, AbsMedian };

inline const char* to_string(RecMode m) {
    switch (m) {
        case RecMode::MeanSquared: return "mean_squared";
        case RecMode::AbsMedian: return "abs_median";
        default: return "none";
    }
}

inline RecMode rec_mode_from_string(const std::string& s) {
    if (s == "none") return RecMode::None;
    if (s == "mean_squared") return RecMode::MeanSquared;
    if (s == "abs_median") return RecMode::AbsMedian;
    throw InvalidArgument("unknown reconstruction mode \"" + s + "\"");
}

// Leaf objective
//   lambda_y * Gini_y(D) + lambda_f * (c_S - Gini_s(D)) + lambda_r * Rec(D),
// with c_S = 1 - 1/|S|. Plain FARE is (1 - gamma, gamma, 0).
struct CriterionWeights {
    double lambda_y = 1.0;
    double lambda_f = 0.0;
    double lambda_r = 0.0;
    RecMode rec_mode = RecMode::None;

    static CriterionWeights fair_gini(double gamma) { return {1.0 - gamma, gamma, 0.0, RecMode::None}; }

    void validate() const {
        if (lambda_y < 0.0 || lambda_f < 0.0 || lambda_r < 0.0)
            throw InvalidArgument("criterion weights must be non-negative");
        if (!(lambda_y > 0.0 || lambda_f > 0.0 || lambda_r > 0.0))
            throw InvalidArgument("at least one criterion weight must be positive");
        if ((rec_mode == RecMode::None) != (lambda_r == 0.0))
            throw InvalidArgument("rec_mode must be none exactly when lambda_r is 0");
    }

    bool operator==(const CriterionWeights&) const = default;
};

struct FareParams {
    CriterionWeights weights;
    std::size_t max_leaves = 200;
    std::size_t min_leaf_samples = 100;
    double val_fraction = 0.3;
    std::uint64_t seed = 0;

    void validate() const {
        weights.validate();
        if (max_leaves < 1) throw InvalidArgument("max_leaves must be at least 1");
        if (min_leaf_samples < 1) throw InvalidArgument("min_leaf_samples must be at least 1");
        if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw InvalidArgument("val_fraction must lie in [0, 1)");
    }

    bool operator==(const FareParams&) const = default;
};

// Training data the criterion reads. `labels` may be empty when lambda_y is 0.
struct TrainingView {
    const Matrix& x;
    std::span<const int> labels;
    std::span<const int> groups;
    int n_groups = 2;

    std::size_t dim() const { return x.cols(); }
};

// Median with the two middle order statistics averaged for even counts.
inline double median_of(std::vector<double> v) {
    if (v.empty()) throw InvalidArgument("median of an empty set");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return lower + (upper - lower) / 2.0;
}

namespace detail {

inline double fairness_constant(int n_groups) { return 1.0 - 1.0 / static_cast<double>(n_groups); }

inline double combine(const CriterionWeights& w, double gini_y, double gini_s, double rec, int n_groups) {
    double c = 0.0;
    if (w.lambda_y > 0.0) c += w.lambda_y * gini_y;
    if (w.lambda_f > 0.0) c += w.lambda_f * (fairness_constant(n_groups) - gini_s);
    if (w.lambda_r > 0.0) c += w.lambda_r * rec;
    return c;
}

}  // namespace detail

// Criterion of one leaf, computed from scratch.
inline double leaf_criterion(const TrainingView& v, std::span<const std::size_t> rows, const CriterionWeights& w) {
    if (rows.empty()) throw InvalidArgument("leaf_criterion: empty row set");
    const double n = static_cast<double>(rows.size());

    double gy = 0.0;
    if (w.lambda_y > 0.0) {
        if (v.labels.empty()) throw InvalidArgument("leaf_criterion: lambda_y > 0 requires labels");
        double pos = 0.0;
        for (auto r : rows) pos += v.labels[r] != 0;
        const double c[2] = {n - pos, pos};
        gy = gini_from_counts(c, n);
    }
    double gs = 0.0;
    if (w.lambda_f > 0.0) {
        std::vector<double> c(static_cast<std::size_t>(v.n_groups), 0.0);
        for (auto r : rows) c[static_cast<std::size_t>(v.groups[r])] += 1.0;
        gs = gini_from_counts(c, n);
    }
    double rec = 0.0;
    if (w.lambda_r > 0.0) {
        const std::size_t d = v.dim();
        std::vector<double> col(rows.size());
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t i = 0; i < rows.size(); ++i) col[i] = v.x(rows[i], j);
            if (w.rec_mode == RecMode::MeanSquared) {
                double mean = 0.0;
                for (double c : col) mean += c;
                mean /= n;
                for (double c : col) rec += (c - mean) * (c - mean);
            } else {
                const double med = median_of(col);
                for (double c : col) rec += std::abs(c - med);
            }
        }
        rec /= n;
    }
    return detail::combine(w, gy, gs, rec, v.n_groups);
}

struct SplitCandidate {
    std::size_t feature = 0;
    double threshold = 0.0;
    // Parent criterion minus the size-weighted mean child criterion.
    double gain = 0.0;
    double child_criterion = 0.0;
};

namespace detail {

// Fenwick tree over leaf-local value ranks holding counts and sums.
class Fenwick {
public:
    void reset(std::size_t n) {
        cnt_.assign(n + 1, 0.0);
        sum_.assign(n + 1, 0.0);
        n_ = n;
        top_ = 1;
        while (top_ * 2 <= n_) top_ *= 2;
    }
    void add(std::size_t rank, double value) {
        for (std::size_t i = rank + 1; i <= n_; i += i & (~i + 1)) {
            cnt_[i] += 1.0;
            sum_[i] += value;
        }
    }
    // Sum |x - median| over the stored side. When `complement` is set the side
    // is every rank not stored in the tree; each rank is occupied exactly once.
    double abs_dev(std::span<const double> sorted_vals, std::span<const double> prefix_vals, double side_count,
                   bool complement) const {
        if (side_count <= 0.0) return 0.0;
        const double target = std::floor((side_count - 1.0) / 2.0) + 1.0;
        std::size_t pos = 0;
        double acc_cnt = 0.0, acc_sum = 0.0;
        for (std::size_t step = top_; step > 0; step >>= 1) {
            const std::size_t nxt = pos + step;
            if (nxt > n_) continue;
            const double c = complement ? static_cast<double>(step) - cnt_[nxt] : cnt_[nxt];
            if (acc_cnt + c < target) {
                acc_cnt += c;
                acc_sum += complement ? (prefix_vals[nxt] - prefix_vals[pos]) - sum_[nxt] : sum_[nxt];
                pos = nxt;
            }
        }
        // pos is now the 0-based rank of the median element.
        const double med = sorted_vals[pos];
        const double cnt_le = target;
        const double sum_le = acc_sum + med;
        const double side_sum = complement ? prefix_vals[n_] - total_sum() : total_sum();
        const double cnt_gt = side_count - cnt_le;
        const double sum_gt = side_sum - sum_le;
        return (med * cnt_le - sum_le) + (sum_gt - med * cnt_gt);
    }

private:
    double total_sum() const {
        double s = 0.0;
        for (std::size_t i = n_; i > 0; i -= i & (~i + 1)) s += sum_[i];
        return s;
    }
    std::vector<double> cnt_, sum_;
    std::size_t n_ = 0, top_ = 1;
};

// Incremental left/right statistics for scanning thresholds along one feature.
class SplitScanner {
public:
    SplitScanner(const TrainingView& v, const CriterionWeights& w, std::span<const std::size_t> rows)
        : v_(v), w_(w), d_(v.dim()), m_(rows.size()) {
        groups_total_.assign(static_cast<std::size_t>(v.n_groups), 0.0);
        groups_left_.assign(groups_total_.size(), 0.0);
        if (w_.lambda_r > 0.0 && w_.rec_mode == RecMode::MeanSquared) {
            sum_total_.assign(d_, 0.0);
            sq_total_.assign(d_, 0.0);
            sum_left_.assign(d_, 0.0);
            sq_left_.assign(d_, 0.0);
        }
        for (auto r : rows) {
            if (w_.lambda_y > 0.0) pos_total_ += v_.labels[r] != 0;
            if (w_.lambda_f > 0.0) groups_total_[static_cast<std::size_t>(v_.groups[r])] += 1.0;
            if (!sum_total_.empty()) {
                auto xr = v_.x.row(r);
                for (std::size_t j = 0; j < d_; ++j) {
                    sum_total_[j] += xr[j];
                    sq_total_[j] += xr[j] * xr[j];
                }
            }
        }
        if (w_.lambda_r > 0.0 && w_.rec_mode == RecMode::AbsMedian) build_rank_tables(rows);
    }

    void reset() {
        n_left_ = 0.0;
        pos_left_ = 0.0;
        std::fill(groups_left_.begin(), groups_left_.end(), 0.0);
        std::fill(sum_left_.begin(), sum_left_.end(), 0.0);
        std::fill(sq_left_.begin(), sq_left_.end(), 0.0);
        for (auto& f : fenwick_) f.reset(m_);
    }

    void move_left(std::size_t row) {
        n_left_ += 1.0;
        if (w_.lambda_y > 0.0) pos_left_ += v_.labels[row] != 0;
        if (w_.lambda_f > 0.0) groups_left_[static_cast<std::size_t>(v_.groups[row])] += 1.0;
        if (!sum_left_.empty()) {
            auto xr = v_.x.row(row);
            for (std::size_t j = 0; j < d_; ++j) {
                sum_left_[j] += xr[j];
                sq_left_[j] += xr[j] * xr[j];
            }
        }
        if (!fenwick_.empty()) {
            const std::size_t slot = row_slot(row);
            for (std::size_t j = 0; j < d_; ++j) {
                const std::size_t rank = ranks_[slot * d_ + j];
                fenwick_[j].add(rank, sorted_[j][rank]);
            }
        }
    }

    // Size-weighted mean criterion of the two children, |L|C(L)+|R|C(R) over |D|.
    double split_score() const {
        const double nl = n_left_, nr = static_cast<double>(m_) - n_left_;
        return (nl * side_criterion(true) + nr * side_criterion(false)) / static_cast<double>(m_);
    }

private:
    double side_criterion(bool left) const {
        const double n = left ? n_left_ : static_cast<double>(m_) - n_left_;
        double gy = 0.0, gs = 0.0, rec = 0.0;
        if (w_.lambda_y > 0.0) {
            const double pos = left ? pos_left_ : pos_total_ - pos_left_;
            const double c[2] = {n - pos, pos};
            gy = gini_from_counts(c, n);
        }
        if (w_.lambda_f > 0.0) {
            double sq = 0.0;
            for (std::size_t g = 0; g < groups_total_.size(); ++g) {
                const double c = left ? groups_left_[g] : groups_total_[g] - groups_left_[g];
                sq += c * c;
            }
            gs = 1.0 - sq / (n * n);
        }
        if (w_.lambda_r > 0.0) {
            if (w_.rec_mode == RecMode::MeanSquared) {
                for (std::size_t j = 0; j < d_; ++j) {
                    const double s = left ? sum_left_[j] : sum_total_[j] - sum_left_[j];
                    const double q = left ? sq_left_[j] : sq_total_[j] - sq_left_[j];
                    rec += std::max(0.0, q - s * s / n);
                }
            } else {
                for (std::size_t j = 0; j < d_; ++j)
                    rec += fenwick_[j].abs_dev(sorted_[j], prefix_[j], n, !left);
            }
            rec /= n;
        }
        return combine(w_, gy, gs, rec, v_.n_groups);
    }

    void build_rank_tables(std::span<const std::size_t> rows) {
        // Rank tables index rows by their position in `rows` (leaf-local slot).
        lookup_rows_.assign(rows.begin(), rows.end());
        sorted_.assign(d_, std::vector<double>(m_));
        prefix_.assign(d_, std::vector<double>(m_ + 1, 0.0));
        ranks_.assign(m_ * d_, 0);
        std::vector<std::size_t> order(m_);
        for (std::size_t j = 0; j < d_; ++j) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return v_.x(rows[a], j) < v_.x(rows[b], j);
            });
            for (std::size_t k = 0; k < m_; ++k) {
                sorted_[j][k] = v_.x(rows[order[k]], j);
                prefix_[j][k + 1] = prefix_[j][k] + sorted_[j][k];
                ranks_[order[k] * d_ + j] = k;
            }
        }
        fenwick_.assign(d_, Fenwick{});
        for (auto& f : fenwick_) f.reset(m_);
        // Global row id -> slot, via sorted copy for binary search.
        slot_sorted_.resize(m_);
        std::iota(slot_sorted_.begin(), slot_sorted_.end(), std::size_t{0});
        std::sort(slot_sorted_.begin(), slot_sorted_.end(),
                  [&](std::size_t a, std::size_t b) { return lookup_rows_[a] < lookup_rows_[b]; });
        sorted_ids_.resize(m_);
        for (std::size_t k = 0; k < m_; ++k) sorted_ids_[k] = lookup_rows_[slot_sorted_[k]];
    }

    std::size_t row_slot(std::size_t row) const {
        const auto it = std::lower_bound(sorted_ids_.begin(), sorted_ids_.end(), row);
        return slot_sorted_[static_cast<std::size_t>(it - sorted_ids_.begin())];
    }

    const TrainingView& v_;
    CriterionWeights w_;
    std::size_t d_, m_;
    double n_left_ = 0.0, pos_left_ = 0.0, pos_total_ = 0.0;
    std::vector<double> groups_total_, groups_left_;
    std::vector<double> sum_total_, sq_total_, sum_left_, sq_left_;
    // AbsMedian state.
    std::vector<std::vector<double>> sorted_, prefix_;
    std::vector<std::size_t> ranks_, lookup_rows_, slot_sorted_, sorted_ids_;
    std::vector<Fenwick> fenwick_;
};

inline double midpoint_threshold(double a, double b) {
    const double t = a + (b - a) / 2.0;
    return t < b ? t : a;
}

constexpr double kMinGain = 1e-12;
constexpr double kTieTolerance = 1e-12;

// Best split of a leaf given its rows pre-sorted along every feature.
inline std::optional<SplitCandidate> best_split_sorted(const TrainingView& v,
                                                       const std::vector<std::vector<std::size_t>>& sorted_rows,
                                                       const CriterionWeights& w, std::size_t min_leaf_samples,
                                                       double parent_criterion) {
    const std::size_t m = sorted_rows.empty() ? 0 : sorted_rows.front().size();
    if (m < 2 * min_leaf_samples || m < 2) return std::nullopt;
    SplitScanner scan(v, w, sorted_rows.front());
    std::optional<SplitCandidate> best;
    for (std::size_t f = 0; f < v.dim(); ++f) {
        const auto& order = sorted_rows[f];
        scan.reset();
        for (std::size_t i = 0; i + 1 < m; ++i) {
            scan.move_left(order[i]);
            const std::size_t nl = i + 1, nr = m - nl;
            if (nl < min_leaf_samples) continue;
            if (nr < min_leaf_samples) break;
            const double a = v.x(order[i], f), b = v.x(order[i + 1], f);
            if (!(a < b)) continue;
            const double score = scan.split_score();
            if (!best || score < best->child_criterion - kTieTolerance)
                best = SplitCandidate{f, midpoint_threshold(a, b), parent_criterion - score, score};
        }
    }
    if (!best || best->gain <= kMinGain) return std::nullopt;
    return best;
}

inline std::vector<std::vector<std::size_t>> sort_rows_by_feature(const Matrix& x, std::span<const std::size_t> rows) {
    std::vector<std::vector<std::size_t>> out(x.cols());
    for (std::size_t f = 0; f < x.cols(); ++f) {
        out[f].assign(rows.begin(), rows.end());
        std::stable_sort(out[f].begin(), out[f].end(),
                         [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
    }
    return out;
}

}  // namespace detail

// Best (feature, midpoint threshold) split of a leaf, or nullopt when no legal
// split improves the leaf criterion by more than 1e-12. Ties go to the lowest
// feature index, then the lowest threshold.
inline std::optional<SplitCandidate> best_split(const TrainingView& v, std::span<const std::size_t> rows,
                                                const CriterionWeights& w, std::size_t min_leaf_samples) {
    if (rows.empty()) return std::nullopt;
    const double parent = leaf_criterion(v, rows, w);
    return detail::best_split_sorted(v, detail::sort_rows_by_feature(v.x, rows), w, min_leaf_samples, parent);
}

// Trained restricted encoder. Split nodes route x[feature] <= threshold to
// the left child; each leaf maps to the per-dimension median of its rows.
class FareTree {
public:
    static constexpr int kFormatVersion = 1;

    struct Node {
        std::size_t feature = 0;
        double threshold = 0.0;
        // Child references: >= 0 is a node index, < 0 is leaf ~child.
        int left = -1;
        int right = -1;
        bool operator==(const Node&) const = default;
    };

    struct Leaf {
        std::vector<double> representation;
        std::size_t count = 0;
        // Training rows owned by the leaf; empty after deserialization.
        std::vector<std::size_t> rows;
    };

    static constexpr int leaf_ref(std::size_t leaf) { return ~static_cast<int>(leaf); }
    static constexpr bool is_leaf(int ref) { return ref < 0; }
    static constexpr std::size_t leaf_id(int ref) { return static_cast<std::size_t>(~ref); }

    std::size_t dim() const { return dim_; }
    const FareParams& params() const { return params_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Leaf>& leaves() const { return leaves_; }
    std::size_t leaf_count() const { return leaves_.size(); }
    int root() const { return root_; }
    // Size-weighted total criterion after construction of the root (entry 0)
    // and after each split.
    const std::vector<double>& growth_trace() const { return growth_trace_; }
    // Rows held out from split search.
    const std::vector<std::size_t>& holdout_rows() const { return holdout_; }

    std::size_t leaf_index(std::span<const double> x) const {
        if (x.size() != dim_)
            throw DimensionError("encode: expected " + std::to_string(dim_) + " features, got " +
                                 std::to_string(x.size()));
        int ref = root_;
        while (!is_leaf(ref)) {
            const Node& n = nodes_[static_cast<std::size_t>(ref)];
            ref = x[n.feature] <= n.threshold ? n.left : n.right;
        }
        return leaf_id(ref);
    }

    const std::vector<double>& encode(std::span<const double> x) const { return leaves_[leaf_index(x)].representation; }

    Matrix encode(const Matrix& x) const {
        Matrix out(x.rows(), dim_);
        for (std::size_t r = 0; r < x.rows(); ++r) {
            const auto& z = encode(x.row(r));
            std::copy(z.begin(), z.end(), out.row(r).begin());
        }
        return out;
    }

    nlohmann::json to_json() const;
    static FareTree from_json(const nlohmann::json& j);

    friend FareTree build_tree(const TrainingView& v, const FareParams& p);

private:
    std::size_t dim_ = 0;
    FareParams params_;
    std::vector<Node> nodes_;
    std::vector<Leaf> leaves_;
    int root_ = leaf_ref(0);
    std::vector<double> growth_trace_;
    std::vector<std::size_t> holdout_;
};

// Greedy best-first growth: repeatedly split the leaf whose best split has the
// largest gain (ties: lowest leaf id) until max_leaves is reached or no leaf
// can improve. A seeded val_fraction of the rows is held out from splitting.
inline FareTree build_tree(const TrainingView& v, const FareParams& p) {
    p.validate();
    const std::size_t n = v.x.rows();
    if (n == 0) throw InvalidArgument("build_tree: no training rows");
    if (v.groups.size() != n) throw DimensionError("build_tree: groups length differs from row count");
    if (p.weights.lambda_y > 0.0 && v.labels.size() != n)
        throw InvalidArgument("build_tree: lambda_y > 0 requires a task label for every row");
    for (int g : v.groups)
        if (g < 0 || g >= v.n_groups) throw InvalidArgument("build_tree: group id outside the declared range");

    FareTree t;
    t.dim_ = v.dim();
    t.params_ = p;

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    const auto n_hold = static_cast<std::size_t>(std::llround(p.val_fraction * static_cast<double>(n)));
    if (n_hold >= n) throw InvalidArgument("build_tree: val_fraction leaves no rows for splitting");
    if (n_hold > 0) {
        Rng rng(derive_seed(p.seed, 0x5a11d));
        rng.shuffle(perm.begin(), perm.end());
    }
    t.holdout_.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_hold));
    std::vector<std::size_t> fit_rows(perm.begin() + static_cast<std::ptrdiff_t>(n_hold), perm.end());
    std::sort(t.holdout_.begin(), t.holdout_.end());
    std::sort(fit_rows.begin(), fit_rows.end());

    struct Pending {
        std::vector<std::vector<std::size_t>> sorted;  // per feature
        double criterion = 0.0;
        std::optional<SplitCandidate> split;
        // Slot in the parent node referencing this leaf (-1: root).
        int parent = -1;
        bool parent_left = true;
    };
    std::vector<Pending> work;
    const double total_n = static_cast<double>(fit_rows.size());

    auto prepare = [&](Pending& leaf) {
        const auto& rows = leaf.sorted.front();
        leaf.criterion = leaf_criterion(v, rows, p.weights);
        leaf.split = detail::best_split_sorted(v, leaf.sorted, p.weights, p.min_leaf_samples, leaf.criterion);
    };

    Pending root;
    root.sorted = detail::sort_rows_by_feature(v.x, fit_rows);
    if (t.dim_ == 0) root.sorted.assign(1, fit_rows);
    prepare(root);
    work.push_back(std::move(root));
    double total = work.front().criterion;
    t.growth_trace_.push_back(total);

    using Entry = std::pair<double, std::size_t>;  // (gain, leaf id)
    auto cmp = [](const Entry& a, const Entry& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second > b.second;
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> queue(cmp);
    if (work.front().split) queue.emplace(work.front().split->gain, 0);

    while (work.size() < p.max_leaves && !queue.empty()) {
        const std::size_t id = queue.top().second;
        queue.pop();
        Pending& leaf = work[id];
        const SplitCandidate sc = *leaf.split;

        Pending left, right;
        left.sorted.resize(leaf.sorted.size());
        right.sorted.resize(leaf.sorted.size());
        for (std::size_t f = 0; f < leaf.sorted.size(); ++f)
            for (auto r : leaf.sorted[f]) (v.x(r, sc.feature) <= sc.threshold ? left : right).sorted[f].push_back(r);

        const double m = static_cast<double>(leaf.sorted.front().size());
        const int node_id = static_cast<int>(t.nodes_.size());
        const std::size_t right_id = work.size();
        t.nodes_.push_back({sc.feature, sc.threshold, FareTree::leaf_ref(id), FareTree::leaf_ref(right_id)});
        if (leaf.parent < 0) {
            t.root_ = node_id;
        } else {
            auto& pn = t.nodes_[static_cast<std::size_t>(leaf.parent)];
            (leaf.parent_left ? pn.left : pn.right) = node_id;
        }
        left.parent = right.parent = node_id;
        left.parent_left = true;
        right.parent_left = false;

        prepare(left);
        prepare(right);
        total += (static_cast<double>(left.sorted.front().size()) * left.criterion +
                  static_cast<double>(right.sorted.front().size()) * right.criterion - m * leaf.criterion) /
                 total_n;
        t.growth_trace_.push_back(total);

        work[id] = std::move(left);
        work.push_back(std::move(right));
        if (work[id].split) queue.emplace(work[id].split->gain, id);
        if (work[right_id].split) queue.emplace(work[right_id].split->gain, right_id);
    }

    t.leaves_.resize(work.size());
    std::vector<double> col;
    for (std::size_t l = 0; l < work.size(); ++l) {
        auto& leaf = t.leaves_[l];
        leaf.rows = work[l].sorted.front();
        std::sort(leaf.rows.begin(), leaf.rows.end());
        leaf.count = leaf.rows.size();
        leaf.representation.resize(t.dim_);
        col.resize(leaf.rows.size());
        for (std::size_t j = 0; j < t.dim_; ++j) {
            for (std::size_t i = 0; i < leaf.rows.size(); ++i) col[i] = v.x(leaf.rows[i], j);
            leaf.representation[j] = median_of(col);
        }
    }
    return t;
}

// Builds on a dataset's raw feature values. `task` is required when lambda_y > 0.
inline FareTree build_tree(const Dataset& train, const std::optional<std::string>& task, const FareParams& p) {
    p.validate();
    std::span<const int> labels;
    if (p.weights.lambda_y > 0.0) {
        if (!task) throw InvalidArgument("build_tree: lambda_y > 0 requires a training task");
        labels = train.task(*task);
    } else if (task) {
        (void)train.task(*task);
    }
    TrainingView v{train.features, labels, train.sensitive, train.n_groups};
    return build_tree(v, p);
}

inline nlohmann::json params_to_json(const FareParams& p) {
    return {{"lambda_y", p.weights.lambda_y},
            {"lambda_f", p.weights.lambda_f},
            {"lambda_r", p.weights.lambda_r},
            {"rec_mode", to_string(p.weights.rec_mode)},
            {"max_leaves", p.max_leaves},
            {"min_leaf_samples", p.min_leaf_samples},
            {"val_fraction", p.val_fraction},
            {"seed", p.seed}};
}

inline FareParams params_from_json(const nlohmann::json& j) {
    FareParams p;
    p.weights.lambda_y = j.at("lambda_y").get<double>();
    p.weights.lambda_f = j.at("lambda_f").get<double>();
    p.weights.lambda_r = j.at("lambda_r").get<double>();
    p.weights.rec_mode = rec_mode_from_string(j.at("rec_mode").get<std::string>());
    p.max_leaves = j.at("max_leaves").get<std::size_t>();
    p.min_leaf_samples = j.at("min_leaf_samples").get<std::size_t>();
    p.val_fraction = j.at("val_fraction").get<double>();
    p.seed = j.at("seed").get<std::uint64_t>();
    return p;
}

inline nlohmann::json FareTree::to_json() const {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : nodes_)
        nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    nlohmann::json leaves = nlohmann::json::array();
    for (const auto& l : leaves_) leaves.push_back({{"representation", l.representation}, {"count", l.count}});
    return {{"format_version", kFormatVersion}, {"dim", dim_},       {"params", params_to_json(params_)},
            {"root", root_},                    {"nodes", nodes},    {"leaves", leaves}};
}

inline FareTree FareTree::from_json(const nlohmann::json& j) {
    try {
        if (j.at("format_version").get<int>() != kFormatVersion)
            throw InvalidArgument("unsupported tree format_version");
        FareTree t;
        t.dim_ = j.at("dim").get<std::size_t>();
        t.params_ = params_from_json(j.at("params"));
        t.root_ = j.at("root").get<int>();
        for (const auto& n : j.at("nodes"))
            t.nodes_.push_back({n.at("feature").get<std::size_t>(), n.at("threshold").get<double>(),
                                n.at("left").get<int>(), n.at("right").get<int>()});
        for (const auto& l : j.at("leaves")) {
            Leaf leaf;
            leaf.representation = l.at("representation").get<std::vector<double>>();
            leaf.count = l.at("count").get<std::size_t>();
            if (leaf.representation.size() != t.dim_) throw InvalidArgument("leaf representation has wrong size");
            t.leaves_.push_back(std::move(leaf));
        }
        auto check_ref = [&](int ref) {
            if (is_leaf(ref) ? leaf_id(ref) >= t.leaves_.size() : static_cast<std::size_t>(ref) >= t.nodes_.size())
                throw InvalidArgument("tree references a missing node or leaf");
        };
        check_ref(t.root_);
        for (const auto& n : t.nodes_) {
            check_ref(n.left);
            check_ref(n.right);
            if (n.feature >= t.dim_) throw InvalidArgument("split feature out of range");
        }
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed tree JSON: ") + e.what());
    }
}

}  // namespace frlbench::fare
