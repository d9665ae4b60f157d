#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ast.hpp"
#include "augment.hpp"
#include "classifier.hpp"
#include "corpus.hpp"
#include "norm.hpp"
#include "parallel.hpp"
#include "probe.hpp"

namespace freqcenter {

/// Per-device test accuracy of one trained scene classifier.
struct DeviceEval {
    std::vector<double> per_device;  // indexed like Corpus::device_ids
    double seen = 0.0;
    double unseen_avg = 0.0;
    double all = 0.0;
};

/// Normalizes and vectorizes one clip for the scene classifier.
inline std::vector<double> classifier_features(const Corpus& c, std::size_t i, const NormalizationConfig& norm,
                                               const ClassifierConfig& cfg) {
    return featurize_for_classifier(apply_norm(c.standardized(i), norm), cfg.mode, cfg.pool);
}

inline DeviceEval evaluate_by_device(const LinearModel& model, const Corpus& c, const NormalizationConfig& norm_cfg,
                                     const ClassifierConfig& cfg) {
    const auto norm = resolve_norm(c, norm_cfg);
    const auto test = c.split_indices("test");
    std::vector<std::vector<double>> feats(test.size());
    parallel_for(test.size(), [&](std::size_t k) { feats[k] = classifier_features(c, test[k], norm, cfg); });

    DeviceEval ev;
    std::vector<double> correct(c.device_ids.size(), 0.0), total(c.device_ids.size(), 0.0);
    for (std::size_t k = 0; k < test.size(); ++k) {
        const auto d = static_cast<std::size_t>(c.device[test[k]]);
        total[d] += 1.0;
        correct[d] += model.predict(feats[k]) == c.scene[test[k]];
    }
    double sum_all = 0.0, n_all = 0.0, sum_unseen = 0.0;
    for (std::size_t d = 0; d < total.size(); ++d) {
        ev.per_device.push_back(total[d] > 0 ? correct[d] / total[d] : 0.0);
        sum_all += correct[d];
        n_all += total[d];
        if (d > 0) sum_unseen += ev.per_device.back();
    }
    ev.seen = ev.per_device.front();
    ev.unseen_avg = total.size() > 1 ? sum_unseen / static_cast<double>(total.size() - 1) : 0.0;
    ev.all = n_all > 0 ? sum_all / n_all : 0.0;
    return ev;
}

struct AugmentOptions {
    bool enabled = false;
    AugmentConfig config;
};

/// Trains on the (seen-device) train split and evaluates per device.
inline DeviceEval run_classifier(const Corpus& c, const NormalizationConfig& norm_cfg, const ClassifierConfig& cfg,
                                 const AugmentOptions& aug = {}) {
    const auto norm = resolve_norm(c, norm_cfg);
    const auto train_idx = c.split_indices("train");
    std::vector<int> labels;
    std::vector<std::vector<double>> feats(train_idx.size());
    parallel_for(train_idx.size(), [&](std::size_t k) { feats[k] = classifier_features(c, train_idx[k], norm, cfg); });
    for (std::size_t i : train_idx) labels.push_back(c.scene[i]);
    const auto K = c.n_scenes;

    if (!aug.enabled) {
        const auto res = train(TrainSet::from_labels(std::move(feats), labels, K), K, cfg);
        return evaluate_by_device(res.model, c, norm, cfg);
    }

    // Augmented training: gain shift, spectrogram MixUp and SpecAugment are
    // redrawn every epoch on the standardized dB spectrograms.
    aug.config.validate();
    cfg.validate();
    LinearModel model(K, feats.front().size());
    Rng rng(mix_seed(aug.config.seed, cfg.seed));
    Rng sgd_rng(cfg.seed);
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        TrainSet set;
        for (std::size_t k = 0; k < train_idx.size(); ++k) {
            ActivationTensor x = c.standardized(train_idx[k]);
            const double shift = uniform(rng, -aug.config.gain_db_range, aug.config.gain_db_range) / c.standardizer.std;
            for (double& v : x.values()) v += shift;
            std::vector<double> target(K, 0.0);
            target[static_cast<std::size_t>(labels[k])] = 1.0;
            if (uniform01(rng) < aug.config.mixup_spec.p) {
                const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(train_idx.size() - 1)));
                const double lam = sample_beta(aug.config.mixup_spec.alpha, rng);
                x = mixup(x, c.standardized(train_idx[j]), lam);
                std::vector<double> other(K, 0.0);
                other[static_cast<std::size_t>(labels[j])] = 1.0;
                target = mixup(target, other, lam);
            }
            AugmentConfig sa = aug.config;
            sa.max_freq_width = std::min(sa.max_freq_width, x.dims_f());
            sa.max_time_width = std::min(sa.max_time_width, x.dims_t());
            x = spec_augment(std::move(x), sa, rng);
            set.features.push_back(featurize_for_classifier(apply_norm(std::move(x), norm), cfg.mode, cfg.pool));
            set.targets.push_back(std::move(target));
        }
        sgd_epoch(model, set, cfg, sgd_rng);
        const double loss = full_loss(model, set, cfg.l2);
        if (!std::isfinite(loss)) throw NumericError("classifier: non-finite loss during augmented training");
    }
    return evaluate_by_device(model, c, norm, cfg);
}

/// Mean and population std of DeviceEval fields over seeded repetitions.
struct RepeatedEval {
    std::string method;
    std::optional<double> lambda;
    DeviceEval mean;
    double seen_std = 0.0;
    double unseen_std = 0.0;
    double all_std = 0.0;
};

inline RepeatedEval repeat_classifier(const Corpus& c, const NormalizationConfig& norm, const ClassifierConfig& cfg,
                                      std::size_t repetitions, const AugmentOptions& aug = {}) {
    std::vector<DeviceEval> runs(repetitions);
    for (std::size_t r = 0; r < repetitions; ++r) {
        ClassifierConfig rc = cfg;
        rc.seed = mix_seed(cfg.seed, r);
        runs[r] = run_classifier(c, norm, rc, aug);
    }
    RepeatedEval out;
    out.method = std::string(to_string(norm.method));
    out.mean.per_device.assign(c.device_ids.size(), 0.0);
    std::vector<double> seen, unseen, all;
    for (const auto& r : runs) {
        for (std::size_t d = 0; d < r.per_device.size(); ++d) out.mean.per_device[d] += r.per_device[d] / repetitions;
        seen.push_back(r.seen);
        unseen.push_back(r.unseen_avg);
        all.push_back(r.all);
    }
    const auto s = mean_std(seen), u = mean_std(unseen), a = mean_std(all);
    out.mean.seen = s.mean;
    out.mean.unseen_avg = u.mean;
    out.mean.all = a.mean;
    out.seen_std = s.std;
    out.unseen_std = u.std;
    out.all_std = a.std;
    return out;
}

inline std::vector<double> lambda_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 10; ++i) g.push_back(i / 10.0);
    return g;
}

/// Device-wise comparison rows: baseline, GFN, input-only RFN (best lambda),
/// SFC at 0.4 / 0.9 / 1.0, softened center+whiten (best lambda). "Best" is the
/// highest mean overall accuracy across repetitions; ties keep the lower lambda.
inline std::vector<RepeatedEval> device_table(const Corpus& c, const ClassifierConfig& cfg, std::size_t repetitions,
                                              const AugmentOptions& aug = {}) {
    const auto make = NormalizationConfig::make;
    auto best_of = [&](NormMethod m) {
        std::optional<RepeatedEval> best;
        for (double lam : lambda_grid()) {
            auto r = repeat_classifier(c, make(m, lam), cfg, repetitions, aug);
            r.lambda = lam;
            if (!best || r.mean.all > best->mean.all) best = r;
        }
        return *best;
    };

    std::vector<RepeatedEval> rows;
    auto base = repeat_classifier(c, make(NormMethod::sfc, 0.0), cfg, repetitions, aug);
    base.method = "baseline";
    base.lambda = 0.0;
    rows.push_back(base);
    auto gfn = repeat_classifier(c, make(NormMethod::gfn, 1.0), cfg, repetitions, aug);
    rows.push_back(gfn);
    rows.push_back(best_of(NormMethod::rfn_input));
    for (double lam : {0.4, 0.9, 1.0}) {
        auto r = repeat_classifier(c, make(NormMethod::sfc, lam), cfg, repetitions, aug);
        r.lambda = lam;
        rows.push_back(r);
    }
    rows.push_back(best_of(NormMethod::sfcw));
    return rows;
}

struct SweepRow {
    double lambda = 0.0;
    double seen = 0.0;
    double unseen = 0.0;
    double seed_std = 0.0;  // std of the unseen average across repetitions
};

inline std::vector<SweepRow> lambda_sweep(const Corpus& c, const ClassifierConfig& cfg, std::size_t repetitions,
                                          const AugmentOptions& aug = {}) {
    std::vector<SweepRow> rows;
    for (double lam : lambda_grid()) {
        const auto r = repeat_classifier(c, NormalizationConfig::make(NormMethod::sfc, lam), cfg, repetitions, aug);
        rows.push_back({lam, r.mean.seen, r.mean.unseen_avg, r.unseen_std});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Placement ablation

enum class Placement { input, input_first_block, all_blocks };

inline std::string_view to_string(Placement p) {
    switch (p) {
        case Placement::input: return "input";
        case Placement::input_first_block: return "input+first_block";
        case Placement::all_blocks: return "all_blocks";
    }
    return "?";
}

inline Placement parse_placement(std::string_view s) {
    for (auto p : {Placement::input, Placement::input_first_block, Placement::all_blocks})
        if (to_string(p) == s) return p;
    throw UsageError("unknown placement '" + std::string(s) + "'");
}

/// input: spectrogram only; input+first_block: spectrogram and the projected
/// patch tokens; all_blocks: additionally every block output.
inline TokenCentering centering_for(Placement p, const NormalizationConfig& norm) {
    TokenCentering tc;
    tc.norm = norm;
    tc.after_projection = p != Placement::input;
    tc.after_blocks = p == Placement::all_blocks;
    return tc;
}

struct PlacementRow {
    Placement placement = Placement::input;
    double input_device_acc = 0.0;  // depth 0, frequency means
    double final_device_acc = 0.0;  // mean over axes/stats at the last depth
    double final_scene_acc = 0.0;
};

inline double final_depth_mean(const ProbeReport& r, ProbeTarget target) {
    double s = 0.0;
    int n = 0;
    for (const auto& row : r.rows)
        if (row.depth + 1 == r.n_depths && row.target == target) {
            s += row.accuracy;
            ++n;
        }
    return n ? s / n : 0.0;
}

struct PlacementResult {
    std::vector<PlacementRow> rows;
    ProbeReport details;
};

inline PlacementResult placement_ablation(const Corpus& c, const AstModel& model, const NormalizationConfig& norm,
                                          const ForestConfig& forest) {
    PlacementResult res;
    for (auto p : {Placement::input, Placement::input_first_block, Placement::all_blocks}) {
        ProbeOptions opt;
        opt.forest = forest;
        opt.centering = centering_for(p, norm);
        opt.label = std::string(to_string(p));
        const auto rep = probe_experiment(c, model, norm, opt);
        PlacementRow row;
        row.placement = p;
        row.input_device_acc = rep.find(opt.label, 0, StatAxis::frequency, StatKind::mean, ProbeTarget::device)->accuracy;
        row.final_device_acc = final_depth_mean(rep, ProbeTarget::device);
        row.final_scene_acc = final_depth_mean(rep, ProbeTarget::scene);
        res.rows.push_back(row);
        res.details.n_depths = rep.n_depths;
        res.details.rows.insert(res.details.rows.end(), rep.rows.begin(), rep.rows.end());
    }
    return res;
}

}  // namespace freqcenter
