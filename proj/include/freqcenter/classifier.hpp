#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "random.hpp"
#include "tensor.hpp"

namespace freqcenter {

// Multinomial logistic regression (softmax + cross-entropy + L2 on weights)
// trained with mini-batch gradient descent. Gradients are derived by hand and
// checked against central finite differences.

enum class FeatureMode { flatten, stats };

inline std::string_view to_string(FeatureMode m) { return m == FeatureMode::flatten ? "flatten" : "stats"; }

inline FeatureMode parse_feature_mode(std::string_view s) {
    if (s == "flatten") return FeatureMode::flatten;
    if (s == "stats") return FeatureMode::stats;
    throw UsageError("unknown classifier feature mode '" + std::string(s) + "'");
}

struct ClassifierConfig {
    double learning_rate = 0.05;
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    double l2 = 1e-4;
    std::uint64_t seed = 0;
    FeatureMode mode = FeatureMode::stats;
    std::size_t pool = 4;  // time mean-pooling factor for flatten mode

    void validate() const {
        if (!(learning_rate > 0.0)) throw UsageError("classifier: learning_rate must be positive");
        if (batch_size == 0) throw UsageError("classifier: batch_size must be positive");
        if (!(l2 >= 0.0)) throw UsageError("classifier: l2 must be non-negative");
        if (pool == 0) throw UsageError("classifier: pool must be positive");
    }
};

/// Vectorizes a spectrogram tensor.
///  - flatten: mean-pool time by `pool` (trailing remainder dropped), flatten F x T'.
///  - stats:   per-band mean over (D, T) followed by per-band modulation energy,
///             the RMS deviation of the band's time course from its mean.
inline std::vector<double> featurize_for_classifier(const ActivationTensor& x, FeatureMode mode, std::size_t pool = 4) {
    const std::size_t D = x.dims_d(), F = x.dims_f(), T = x.dims_t();
    std::vector<double> out;
    if (mode == FeatureMode::flatten) {
        if (pool == 0 || T < pool)
            throw UsageError("featurize: T=" + std::to_string(T) + " too short for pooling factor " + std::to_string(pool));
        const std::size_t Tp = T / pool;
        out.assign(F * Tp, 0.0);
        for (std::size_t d = 0; d < D; ++d)
            for (std::size_t f = 0; f < F; ++f) {
                const auto row = x.time_row(d, f);
                for (std::size_t t = 0; t < Tp * pool; ++t) out[f * Tp + t / pool] += row[t];
            }
        for (double& v : out) v /= static_cast<double>(pool * D);
        return out;
    }
    out.assign(2 * F, 0.0);
    std::vector<double> buf;
    for (std::size_t f = 0; f < F; ++f) {
        buf.clear();
        for (std::size_t d = 0; d < D; ++d)
            for (double v : x.time_row(d, f)) buf.push_back(v);
        const auto ms = mean_std(buf);
        out[f] = ms.mean;
        out[F + f] = ms.std;
    }
    return out;
}

struct LinearModel {
    Matrix weight;  // n_classes x n_features
    std::vector<double> bias;

    LinearModel() = default;
    LinearModel(std::size_t n_classes, std::size_t n_features)
        : weight(n_classes, n_features), bias(n_classes, 0.0) {}

    std::size_t n_classes() const { return weight.rows(); }
    std::size_t n_features() const { return weight.cols(); }

    std::vector<double> logits(std::span<const double> x) const {
        std::vector<double> z(bias);
        for (std::size_t c = 0; c < n_classes(); ++c) {
            const auto w = weight.row(c);
            for (std::size_t j = 0; j < x.size(); ++j) z[c] += w[j] * x[j];
        }
        return z;
    }

    int predict(std::span<const double> x) const {
        const auto z = logits(x);
        return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    }
};

/// {"n_classes", "n_features", "weight" (row-major), "bias"}.
inline nlohmann::json to_json(const LinearModel& m) {
    return {{"n_classes", m.n_classes()},
            {"n_features", m.n_features()},
            {"weight", m.weight.values()},
            {"bias", m.bias}};
}

inline LinearModel linear_model_from_json(const nlohmann::json& j) {
    try {
        LinearModel m(j.at("n_classes").get<std::size_t>(), j.at("n_features").get<std::size_t>());
        auto w = j.at("weight").get<std::vector<double>>();
        auto b = j.at("bias").get<std::vector<double>>();
        if (w.size() != m.weight.values().size() || b.size() != m.bias.size())
            throw UsageError("model json: weight/bias sizes do not match dims");
        m.weight.values() = std::move(w);
        m.bias = std::move(b);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("model json: ") + e.what());
    }
}

/// Training data; targets are class distributions so MixUp can blend labels.
struct TrainSet {
    std::vector<std::vector<double>> features;
    std::vector<std::vector<double>> targets;

    std::size_t size() const { return features.size(); }

    static TrainSet from_labels(std::vector<std::vector<double>> x, const std::vector<int>& y, std::size_t n_classes) {
        TrainSet s{std::move(x), {}};
        for (int l : y) {
            std::vector<double> t(n_classes, 0.0);
            t.at(static_cast<std::size_t>(l)) = 1.0;
            s.targets.push_back(std::move(t));
        }
        return s;
    }
};

inline std::vector<double> softmax(std::vector<double> z) {
    const double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double& v : z) s += (v = std::exp(v - mx));
    for (double& v : z) v /= s;
    return z;
}

struct Gradient {
    Matrix weight;
    std::vector<double> bias;
};

/// Mean cross-entropy over the selected samples plus (l2 / 2) * ||W||^2.
/// When `grad` is non-null it receives the analytic gradient.
inline double loss_and_grad(const LinearModel& m, const TrainSet& data, std::span<const std::size_t> batch, double l2,
                            Gradient* grad = nullptr) {
    const std::size_t K = m.n_classes(), P = m.n_features();
    if (grad) *grad = {Matrix(K, P), std::vector<double>(K, 0.0)};
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (std::size_t i : batch) {
        const auto& x = data.features[i];
        const auto& y = data.targets[i];
        auto z = m.logits(x);
        const double mx = *std::max_element(z.begin(), z.end());
        double lse = 0.0;
        for (double v : z) lse += std::exp(v - mx);
        lse = mx + std::log(lse);
        for (std::size_t c = 0; c < K; ++c) loss -= y[c] * (z[c] - lse) * inv_n;
        if (grad) {
            for (std::size_t c = 0; c < K; ++c) {
                const double delta = (std::exp(z[c] - lse) - y[c]) * inv_n;
                grad->bias[c] += delta;
                auto gw = grad->weight.row(c);
                for (std::size_t j = 0; j < P; ++j) gw[j] += delta * x[j];
            }
        }
    }
    double sq = 0.0;
    for (double w : m.weight.values()) sq += w * w;
    loss += 0.5 * l2 * sq;
    if (grad)
        for (std::size_t i = 0; i < m.weight.values().size(); ++i) grad->weight.values()[i] += l2 * m.weight.values()[i];
    return loss;
}

inline double full_loss(const LinearModel& m, const TrainSet& data, double l2) {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    return loss_and_grad(m, data, all, l2);
}

/// One pass of shuffled mini-batch gradient descent.
inline void sgd_epoch(LinearModel& m, const TrainSet& data, const ClassifierConfig& cfg, Rng& rng) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Gradient g;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t end = std::min(order.size(), start + cfg.batch_size);
        loss_and_grad(m, data, std::span(order).subspan(start, end - start), cfg.l2, &g);
        for (std::size_t i = 0; i < g.weight.values().size(); ++i)
            m.weight.values()[i] -= cfg.learning_rate * g.weight.values()[i];
        for (std::size_t c = 0; c < g.bias.size(); ++c) m.bias[c] -= cfg.learning_rate * g.bias[c];
    }
}

struct TrainResult {
    LinearModel model;
    double initial_loss = 0.0;
    std::vector<double> epoch_loss;  // full-set loss after each epoch
};

/// Zero-initialized model trained for cfg.epochs epochs. Throws NumericError
/// when the loss becomes non-finite (learning rate too large).
inline TrainResult train(const TrainSet& data, std::size_t n_classes, const ClassifierConfig& cfg) {
    cfg.validate();
    if (data.size() == 0) throw UsageError("classifier: empty training set");
    if (n_classes < 2) throw UsageError("classifier: need at least two classes");
    TrainResult r{LinearModel(n_classes, data.features.front().size()), 0.0, {}};
    r.initial_loss = full_loss(r.model, data, cfg.l2);
    Rng rng(cfg.seed);
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        sgd_epoch(r.model, data, cfg, rng);
        const double loss = full_loss(r.model, data, cfg.l2);
        if (!std::isfinite(loss))
            throw NumericError("classifier: non-finite loss at epoch " + std::to_string(e) + "; reduce the learning rate");
        r.epoch_loss.push_back(loss);
    }
    return r;
}

inline double accuracy(const LinearModel& m, const std::vector<std::vector<double>>& x, const std::vector<int>& y) {
    if (x.empty()) return 0.0;
    std::size_t ok = 0;
    for (std::size_t i = 0; i < x.size(); ++i) ok += m.predict(x[i]) == y[i];
    return static_cast<double>(ok) / static_cast<double>(x.size());
}

/// Max relative error between the analytic gradient and central finite
/// differences (step h) over a random subset of up to n_coords parameters.
/// Relative error is |a - n| / max(|a| + |n|, 1e-8).
inline double grad_check(const LinearModel& model, const TrainSet& data, double l2, std::uint64_t seed,
                         std::size_t n_coords = 100, double h = 1e-4) {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    Gradient g;
    loss_and_grad(model, data, all, l2, &g);

    const std::size_t nw = model.weight.values().size(), total = nw + model.bias.size();
    std::vector<std::size_t> coords(total);
    std::iota(coords.begin(), coords.end(), 0);
    Rng rng(seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(std::min(n_coords, total));

    double worst = 0.0;
    LinearModel probe = model;
    for (std::size_t c : coords) {
        double& p = c < nw ? probe.weight.values()[c] : probe.bias[c - nw];
        const double analytic = c < nw ? g.weight.values()[c] : g.bias[c - nw];
        const double saved = p;
        p = saved + h;
        const double up = loss_and_grad(probe, data, all, l2);
        p = saved - h;
        const double down = loss_and_grad(probe, data, all, l2);
        p = saved;
        const double numeric = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), 1e-8));
    }
    return worst;
}

}  // namespace freqcenter
