#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "ast.hpp"
#include "corpus.hpp"
#include "forest.hpp"
#include "norm.hpp"
#include "parallel.hpp"
#include "tensor.hpp"

namespace freqcenter {

enum class StatAxis { frequency, token, time };
enum class StatKind { mean, std };
enum class ProbeTarget { device, scene };

inline std::string_view to_string(StatAxis a) {
    switch (a) {
        case StatAxis::frequency: return "frequency";
        case StatAxis::token: return "token";
        case StatAxis::time: return "time";
    }
    return "?";
}
inline std::string_view to_string(StatKind s) { return s == StatKind::mean ? "mean" : "std"; }
inline std::string_view to_string(ProbeTarget t) { return t == ProbeTarget::device ? "device" : "scene"; }

struct StatVector {
    std::vector<double> values;
    StatAxis axis = StatAxis::frequency;
    StatKind stat = StatKind::mean;
    std::size_t depth = 0;
};

/// Mean or population std along one axis, marginalizing the other two:
/// frequency -> over (D, T) per f; token -> over (F, T) per d; time -> over (D, F) per t.
inline StatVector extract_stats(const ActivationTensor& x, StatAxis axis, StatKind stat, std::size_t depth = 0) {
    const std::size_t D = x.dims_d(), F = x.dims_f(), T = x.dims_t();
    StatVector out{{}, axis, stat, depth};
    std::vector<double> buf;
    auto reduce = [&]() {
        const auto ms = mean_std(buf);
        out.values.push_back(stat == StatKind::mean ? ms.mean : ms.std);
        buf.clear();
    };
    switch (axis) {
        case StatAxis::frequency:
            for (std::size_t f = 0; f < F; ++f) {
                for (std::size_t d = 0; d < D; ++d)
                    for (double v : x.time_row(d, f)) buf.push_back(v);
                reduce();
            }
            break;
        case StatAxis::token:
            for (std::size_t d = 0; d < D; ++d) {
                for (std::size_t f = 0; f < F; ++f)
                    for (double v : x.time_row(d, f)) buf.push_back(v);
                reduce();
            }
            break;
        case StatAxis::time:
            for (std::size_t t = 0; t < T; ++t) {
                for (std::size_t d = 0; d < D; ++d)
                    for (std::size_t f = 0; f < F; ++f) buf.push_back(x(d, f, t));
                reduce();
            }
            break;
    }
    return out;
}

struct ProbeRow {
    std::string norm;
    std::size_t depth = 0;
    StatAxis axis = StatAxis::frequency;
    StatKind stat = StatKind::mean;
    ProbeTarget target = ProbeTarget::device;
    double accuracy = 0.0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
};

struct ProbeReport {
    std::vector<ProbeRow> rows;
    std::size_t n_depths = 0;

    const ProbeRow* find(std::string_view norm, std::size_t depth, StatAxis a, StatKind s, ProbeTarget t) const {
        for (const auto& r : rows)
            if (r.norm == norm && r.depth == depth && r.axis == a && r.stat == s && r.target == t) return &r;
        return nullptr;
    }
};

inline std::string format_fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

inline void write_probe_csv(std::ostream& os, const ProbeReport& r) {
    os << "norm,depth,axis,stat,target,accuracy,n_train,n_test\n";
    for (const auto& row : r.rows)
        os << row.norm << ',' << row.depth << ',' << to_string(row.axis) << ',' << to_string(row.stat) << ','
           << to_string(row.target) << ',' << format_fixed4(row.accuracy) << ',' << row.n_train << ',' << row.n_test
           << '\n';
}

struct ProbeOptions {
    ForestConfig forest;
    TokenCentering centering;  // in-network centering (placement ablation)
    std::string label = "none";
};

/// Fits GFN statistics on the standardized train split when the method needs
/// them and none were supplied.
inline NormalizationConfig resolve_norm(const Corpus& c, NormalizationConfig cfg) {
    if (cfg.method == NormMethod::gfn && !cfg.fitted_stats) {
        std::vector<ActivationTensor> train;
        for (std::size_t i = 0; i < c.size(); ++i)
            if (c.is_train(i)) train.push_back(c.standardized(i));
        cfg.fitted_stats = gfn_fit(train);
    }
    return cfg;
}

/// Trains one forest per (depth, axis, stat, target) on the probe-train half
/// of the test split and reports accuracy on the probe-test half. Depth 0 is
/// the (normalized) input spectrogram, where the token axis is skipped.
inline ProbeReport probe_experiment(const Corpus& c, const AstModel& model, const NormalizationConfig& norm_cfg,
                                    const ProbeOptions& opt = {}) {
    const auto norm = resolve_norm(c, norm_cfg);
    const auto part = probe_partition(c);
    std::vector<std::size_t> clips;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (part[i] >= 0) clips.push_back(i);
    if (clips.empty()) throw UsageError("probe: corpus has no test clips");

    const std::size_t n_depths = model.config.n_blocks + 1;
    std::vector<std::vector<ActivationTensor>> acts(clips.size());
    parallel_for(clips.size(), [&](std::size_t k) {
        ActivationTensor x = apply_norm(c.standardized(clips[k]), norm);
        auto blocks = forward_capture(model, x, opt.centering);
        acts[k].reserve(n_depths);
        acts[k].push_back(std::move(x));
        for (auto& b : blocks) acts[k].push_back(std::move(b));
    });

    ProbeReport rep;
    rep.n_depths = n_depths;
    std::uint64_t cell = 0;
    for (std::size_t depth = 0; depth < n_depths; ++depth)
        for (StatAxis axis : {StatAxis::frequency, StatAxis::token, StatAxis::time}) {
            if (depth == 0 && axis == StatAxis::token) continue;
            for (StatKind stat : {StatKind::mean, StatKind::std}) {
                LabeledSet tr, te;
                std::vector<int> tr_dev, tr_scene, te_dev, te_scene;
                for (std::size_t k = 0; k < clips.size(); ++k) {
                    auto v = extract_stats(acts[k][depth], axis, stat, depth).values;
                    const std::size_t i = clips[k];
                    if (part[i] == 0) {
                        tr.features.push_back(std::move(v));
                        tr_dev.push_back(c.device[i]);
                        tr_scene.push_back(c.scene[i]);
                    } else {
                        te.features.push_back(std::move(v));
                        te_dev.push_back(c.device[i]);
                        te_scene.push_back(c.scene[i]);
                    }
                }
                for (ProbeTarget target : {ProbeTarget::device, ProbeTarget::scene}) {
                    tr.labels = target == ProbeTarget::device ? tr_dev : tr_scene;
                    te.labels = target == ProbeTarget::device ? te_dev : te_scene;
                    ForestConfig forest_cfg = opt.forest;
                    forest_cfg.seed = mix_seed(opt.forest.seed, cell++);
                    const auto forest = rf_train(tr, forest_cfg);
                    rep.rows.push_back({opt.label, depth, axis, stat, target, rf_accuracy(forest, te), tr.size(), te.size()});
                }
            }
        }
    return rep;
}

}  // namespace freqcenter
