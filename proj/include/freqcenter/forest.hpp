#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace freqcenter {

// CART random forest for classification: Gini splits, midpoint thresholds,
// a random feature subset per node, bootstrap resampling per tree, majority
// vote with ties going to the lowest class index.

struct ForestConfig {
    std::size_t n_trees = 100;
    std::size_t max_depth = 0;  // 0 = unlimited
    std::size_t min_samples_split = 2;
    std::size_t features_per_split = 0;  // 0 = floor(sqrt(n_features))
    bool bootstrap = true;
    std::uint64_t seed = 0;
    // Feature values closer than tie_tolerance * max(1, |v|) count as equal,
    // so rounding residue (e.g. means of centered rows) is never split on.
    double tie_tolerance = 1e-9;
};

struct LabeledSet {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    std::size_t n_features() const { return features.empty() ? 0 : features.front().size(); }
};

class DecisionTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        std::size_t left = 0;
        std::size_t right = 0;
        int label = 0;
    };

    int predict(std::span<const double> x) const {
        std::size_t n = 0;
        while (nodes_[n].feature >= 0) {
            const auto& node = nodes_[n];
            n = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
        }
        return nodes_[n].label;
    }

    std::size_t node_count() const { return nodes_.size(); }

    /// Grows a tree on the given sample indices (duplicates allowed).
    static DecisionTree grow(const LabeledSet& data, std::vector<std::size_t> sample, std::size_t n_classes,
                             const ForestConfig& cfg, Rng& rng) {
        DecisionTree t;
        t.n_classes_ = n_classes;
        const std::size_t nf = data.n_features();
        t.k_ = cfg.features_per_split ? std::min(cfg.features_per_split, nf)
                                      : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(nf))));
        t.build(data, sample, 0, cfg, rng);
        return t;
    }

private:
    std::vector<Node> nodes_;
    std::size_t n_classes_ = 0;
    std::size_t k_ = 1;

    static bool tied(double a, double b, double tol) {
        return b - a <= tol * std::max({1.0, std::abs(a), std::abs(b)});
    }

    static double gini(const std::vector<std::size_t>& counts, std::size_t n) {
        if (n == 0) return 0.0;
        double s = 0.0;
        for (std::size_t c : counts) {
            const double p = static_cast<double>(c) / static_cast<double>(n);
            s += p * p;
        }
        return 1.0 - s;
    }

    std::size_t build(const LabeledSet& data, std::vector<std::size_t>& idx, std::size_t depth, const ForestConfig& cfg,
                      Rng& rng) {
        const std::size_t me = nodes_.size();
        nodes_.push_back({});

        std::vector<std::size_t> counts(n_classes_, 0);
        for (std::size_t i : idx) ++counts[static_cast<std::size_t>(data.labels[i])];
        // max_element returns the first maximum, i.e. the lowest class index on ties.
        const int majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
        nodes_[me].label = majority;

        const bool pure = counts[static_cast<std::size_t>(majority)] == idx.size();
        if (pure || idx.size() < cfg.min_samples_split || (cfg.max_depth && depth >= cfg.max_depth)) return me;

        // Visit features in random order until k non-constant ones were scored.
        const std::size_t nf = data.n_features();
        std::vector<std::size_t> order(nf);
        std::iota(order.begin(), order.end(), 0);
        int best_feature = -1;
        double best_thr = 0.0, best_score = std::numeric_limits<double>::infinity();
        std::size_t scored = 0;
        std::vector<std::pair<double, int>> col(idx.size());
        std::vector<std::size_t> left(n_classes_), right(n_classes_);
        for (std::size_t pos = 0; pos < nf && scored < k_; ++pos) {
            const std::size_t pick = pos + static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(nf - pos - 1)));
            std::swap(order[pos], order[pick]);
            const std::size_t f = order[pos];
            for (std::size_t i = 0; i < idx.size(); ++i) col[i] = {data.features[idx[i]][f], data.labels[idx[i]]};
            std::sort(col.begin(), col.end());
            if (tied(col.front().first, col.back().first, cfg.tie_tolerance)) continue;
            ++scored;
            std::fill(left.begin(), left.end(), 0);
            right = counts;
            const std::size_t n = col.size();
            for (std::size_t i = 0; i + 1 < n; ++i) {
                ++left[static_cast<std::size_t>(col[i].second)];
                --right[static_cast<std::size_t>(col[i].second)];
                if (tied(col[i].first, col[i + 1].first, cfg.tie_tolerance)) continue;
                const std::size_t nl = i + 1, nr = n - nl;
                const double score = static_cast<double>(nl) * gini(left, nl) + static_cast<double>(nr) * gini(right, nr);
                if (score < best_score) {
                    best_score = score;
                    best_feature = static_cast<int>(f);
                    best_thr = 0.5 * (col[i].first + col[i + 1].first);
                    // Guard against midpoint rounding onto the upper value.
                    if (!(best_thr < col[i + 1].first)) best_thr = col[i].first;
                }
            }
        }
        if (best_feature < 0) return me;

        std::vector<std::size_t> li, ri;
        for (std::size_t i : idx) (data.features[i][static_cast<std::size_t>(best_feature)] <= best_thr ? li : ri).push_back(i);
        idx.clear();
        idx.shrink_to_fit();
        nodes_[me].feature = best_feature;
        nodes_[me].threshold = best_thr;
        const std::size_t l = build(data, li, depth + 1, cfg, rng);
        const std::size_t r = build(data, ri, depth + 1, cfg, rng);
        nodes_[me].left = l;
        nodes_[me].right = r;
        return me;
    }
};

class RandomForest {
public:
    int predict(std::span<const double> x) const {
        if (x.size() != n_features_)
            throw UsageError("rf_predict: feature length " + std::to_string(x.size()) + " != " + std::to_string(n_features_));
        std::vector<std::size_t> votes(n_classes_, 0);
        for (const auto& t : trees_) ++votes[static_cast<std::size_t>(t.predict(x))];
        return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    }

    std::size_t n_classes() const { return n_classes_; }
    const std::vector<DecisionTree>& trees() const { return trees_; }

    friend RandomForest rf_train(const LabeledSet& data, const ForestConfig& cfg);

private:
    std::vector<DecisionTree> trees_;
    std::size_t n_classes_ = 0;
    std::size_t n_features_ = 0;
};

inline RandomForest rf_train(const LabeledSet& data, const ForestConfig& cfg) {
    if (data.size() == 0) throw UsageError("rf_train: empty dataset");
    if (data.features.size() != data.labels.size()) throw UsageError("rf_train: features/labels size mismatch");
    if (cfg.n_trees == 0) throw UsageError("rf_train: n_trees must be >= 1");
    if (!(cfg.tie_tolerance >= 0.0)) throw UsageError("rf_train: tie_tolerance must be non-negative");
    const std::size_t nf = data.n_features();
    for (const auto& f : data.features)
        if (f.size() != nf) throw UsageError("rf_train: inconsistent feature lengths");
    int max_label = 0;
    for (int l : data.labels) {
        if (l < 0) throw UsageError("rf_train: labels must be non-negative class indices");
        max_label = std::max(max_label, l);
    }

    RandomForest forest;
    forest.n_classes_ = static_cast<std::size_t>(max_label) + 1;
    forest.n_features_ = nf;
    forest.trees_.resize(cfg.n_trees);
    parallel_for(cfg.n_trees, [&](std::size_t t) {
        Rng rng(mix_seed(cfg.seed, t));
        std::vector<std::size_t> sample(data.size());
        if (cfg.bootstrap)
            for (auto& s : sample) s = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(data.size() - 1)));
        else
            std::iota(sample.begin(), sample.end(), 0);
        forest.trees_[t] = DecisionTree::grow(data, std::move(sample), forest.n_classes_, cfg, rng);
    });
    return forest;
}

inline int rf_predict(const RandomForest& f, std::span<const double> x) { return f.predict(x); }

inline double rf_accuracy(const RandomForest& f, const LabeledSet& data) {
    if (data.size() == 0) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) correct += f.predict(data.features[i]) == data.labels[i];
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace freqcenter
