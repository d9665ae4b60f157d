#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ast.hpp"
#include "augment.hpp"
#include "classifier.hpp"
#include "corpus.hpp"
#include "experiment.hpp"
#include "features.hpp"
#include "forest.hpp"
#include "norm.hpp"
#include "probe.hpp"
#include "synth.hpp"

namespace freqcenter {

/// Everything a harness command needs. Seeds left unset are derived from
/// master_seed so one number pins a whole run.
struct ExperimentConfig {
    CorpusConfig corpus;
    FeatureConfig features;
    NormalizationConfig normalization = NormalizationConfig::make(NormMethod::fc);
    Placement placement = Placement::input;
    AstConfig ast;
    std::optional<std::uint64_t> ast_seed;
    ClassifierConfig classifier;
    std::optional<std::uint64_t> classifier_seed;
    bool augment_enabled = false;
    AugmentConfig augment;
    std::optional<std::uint64_t> augment_seed;
    ForestConfig forest;
    std::optional<std::uint64_t> forest_seed;
    std::size_t repetitions = 3;
    std::string output_dir;
    std::uint64_t master_seed = 7;

    /// Resolves derived seeds; call after any --seed override.
    void finalize() {
        ast.init_seed = ast_seed.value_or(mix_seed(master_seed, 0xa57));
        classifier.seed = classifier_seed.value_or(mix_seed(master_seed, 0xc1a55));
        augment.seed = augment_seed.value_or(mix_seed(master_seed, 0xa06));
        forest.seed = forest_seed.value_or(mix_seed(master_seed, 0xf0e57));
        if (repetitions == 0) throw UsageError("config: repetitions must be >= 1");
        normalization.validate();
        if (placement != Placement::input && normalization.method == NormMethod::gfn)
            throw UsageError("config: gfn cannot be applied inside the network");
        features.validate(corpus.sample_rate_hz);
        ast.validate();
        classifier.validate();
        augment.validate();
    }
};

namespace detail {

// Reads members of one JSON object, rejecting keys that were never asked for.
class StrictObject {
public:
    StrictObject(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw UsageError("config: '" + path_ + "' must be an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        known_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("config: bad value for '" + path_ + "." + key + "': " + e.what());
        }
    }

    template <class T>
    void get_optional(const char* key, std::optional<T>& out) {
        known_.insert(key);
        if (!j_.contains(key)) return;
        T v{};
        get(key, v);
        out = v;
    }

    const nlohmann::json* child(const char* key) {
        known_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!known_.count(k)) throw UsageError("config: unknown key '" + path_ + "." + k + "'");
    }

private:
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> known_;
};

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
    ExperimentConfig cfg;
    detail::StrictObject root(j, "config");
    if (const auto* c = root.child("corpus")) {
        detail::StrictObject o(*c, "corpus");
        auto& k = cfg.corpus;
        o.get("n_scenes", k.n_scenes);
        o.get("devices", k.devices);
        o.get("train_clips", k.train_clips);
        o.get("test_clips", k.test_clips);
        o.get("clip_seconds", k.clip_seconds);
        o.get("sample_rate_hz", k.sample_rate_hz);
        o.get("gain_groups", k.gain_groups);
        o.get("max_gain_db", k.max_gain_db);
        o.get("min_device_distance_db", k.min_device_distance_db);
        o.get("background_db", k.background_db);
        o.get("patterns_per_scene", k.patterns_per_scene);
        o.get("tilt_db", k.tilt_db);
        o.finish();
    }
    if (const auto* c = root.child("features")) {
        detail::StrictObject o(*c, "features");
        auto& f = cfg.features;
        o.get("fft_size", f.fft_size);
        o.get("window_ms", f.window_ms);
        o.get("hop_ms", f.hop_ms);
        o.get("n_mels", f.n_mels);
        o.get("fmin_hz", f.fmin_hz);
        o.get("fmax_hz", f.fmax_hz);
        o.get("log_floor", f.log_floor);
        o.finish();
    }
    if (const auto* c = root.child("normalization")) {
        detail::StrictObject o(*c, "normalization");
        std::string method = std::string(to_string(cfg.normalization.method));
        o.get("method", method);
        cfg.normalization.method = parse_norm_method(method);
        o.get("lambda", cfg.normalization.lambda);
        o.get("eps", cfg.normalization.eps);
        if (const auto* s = o.child("fitted_stats")) cfg.normalization.fitted_stats = freq_stats_from_json(*s);
        o.finish();
    }
    {
        std::string placement = std::string(to_string(cfg.placement));
        root.get("placement", placement);
        cfg.placement = parse_placement(placement);
    }
    if (const auto* c = root.child("ast")) {
        detail::StrictObject o(*c, "ast");
        o.get("patch", cfg.ast.patch);
        o.get("embed_dim", cfg.ast.embed_dim);
        o.get("n_blocks", cfg.ast.n_blocks);
        o.get("n_heads", cfg.ast.n_heads);
        o.get("mlp_ratio", cfg.ast.mlp_ratio);
        o.get("block_init_std", cfg.ast.block_init_std);
        o.get_optional("init_seed", cfg.ast_seed);
        o.finish();
    }
    if (const auto* c = root.child("classifier")) {
        detail::StrictObject o(*c, "classifier");
        auto& k = cfg.classifier;
        o.get("learning_rate", k.learning_rate);
        o.get("epochs", k.epochs);
        o.get("batch_size", k.batch_size);
        o.get("l2", k.l2);
        o.get_optional("seed", cfg.classifier_seed);
        std::string mode = std::string(to_string(k.mode));
        o.get("feature_mode", mode);
        k.mode = parse_feature_mode(mode);
        o.get("pool", k.pool);
        o.get("augment", cfg.augment_enabled);
        o.finish();
    }
    if (const auto* c = root.child("augment")) {
        detail::StrictObject o(*c, "augment");
        auto& a = cfg.augment;
        o.get("gain_db_range", a.gain_db_range);
        for (auto [key, params] : {std::pair{"mixup_wave", &a.mixup_wave}, std::pair{"mixup_spec", &a.mixup_spec}})
            if (const auto* m = o.child(key)) {
                detail::StrictObject mo(*m, std::string("augment.") + key);
                mo.get("p", params->p);
                mo.get("alpha", params->alpha);
                mo.finish();
            }
        o.get("max_freq_width", a.max_freq_width);
        o.get("max_time_width", a.max_time_width);
        o.get_optional("seed", cfg.augment_seed);
        o.finish();
    }
    if (const auto* c = root.child("forest")) {
        detail::StrictObject o(*c, "forest");
        auto& f = cfg.forest;
        o.get("n_trees", f.n_trees);
        o.get("max_depth", f.max_depth);
        o.get("min_samples_split", f.min_samples_split);
        o.get("features_per_split", f.features_per_split);
        o.get("bootstrap", f.bootstrap);
        o.get("tie_tolerance", f.tie_tolerance);
        o.get_optional("seed", cfg.forest_seed);
        o.finish();
    }
    root.get("repetitions", cfg.repetitions);
    root.get("output_dir", cfg.output_dir);
    root.get("master_seed", cfg.master_seed);
    root.finish();
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_experiment_config(j);
}

// ---------------------------------------------------------------------------
// Commands. Each reads/writes under `out`; CSV numbers use 4 decimals.

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("short write on " + path.string());
}

inline AstModel model_for(const ExperimentConfig& cfg, const Corpus& c) {
    AstConfig a = cfg.ast;
    const auto& s = c.specs.front().data;
    a.freq_patches = s.dims_f() / a.patch;
    a.time_patches = s.dims_t() / a.patch;
    return init_model(a);
}

}  // namespace detail

inline CorpusManifest cmd_synth(const ExperimentConfig& cfg, const std::filesystem::path& out) {
    return generate_corpus(cfg.corpus, cfg.features, cfg.master_seed, out);
}

inline ProbeReport cmd_probe(const ExperimentConfig& cfg, const std::filesystem::path& out) {
    const auto corpus = load_corpus(out);
    const auto model = detail::model_for(cfg, corpus);
    ProbeReport all;
    std::vector<NormalizationConfig> runs{NormalizationConfig{}};
    if (cfg.normalization.method != NormMethod::none) runs.push_back(cfg.normalization);
    for (const auto& n : runs) {
        ProbeOptions opt;
        opt.forest = cfg.forest;
        opt.label = std::string(to_string(n.method));
        if (n.method != NormMethod::none && n.method != NormMethod::gfn) opt.centering = centering_for(cfg.placement, n);
        const auto rep = probe_experiment(corpus, model, n, opt);
        all.n_depths = rep.n_depths;
        all.rows.insert(all.rows.end(), rep.rows.begin(), rep.rows.end());
    }
    std::ostringstream os;
    write_probe_csv(os, all);
    detail::write_text(out / "probe_report.csv", os.str());
    return all;
}

inline std::string device_table_csv(const std::vector<RepeatedEval>& rows, const std::vector<std::string>& devices) {
    std::ostringstream os;
    os << "method,lambda";
    for (const auto& d : devices) os << ',' << d;
    os << ",seen,unseen_avg,unseen_std,all,all_std,delta_all,delta_unseen\n";
    const auto& base = rows.front().mean;
    for (const auto& r : rows) {
        os << r.method << ',' << (r.lambda ? format_fixed4(*r.lambda) : std::string("-"));
        for (double a : r.mean.per_device) os << ',' << format_fixed4(a);
        os << ',' << format_fixed4(r.mean.seen) << ',' << format_fixed4(r.mean.unseen_avg) << ','
           << format_fixed4(r.unseen_std) << ',' << format_fixed4(r.mean.all) << ',' << format_fixed4(r.all_std) << ','
           << format_fixed4(r.mean.all - base.all) << ',' << format_fixed4(r.mean.unseen_avg - base.unseen_avg) << '\n';
    }
    return os.str();
}

inline std::vector<RepeatedEval> cmd_table(const ExperimentConfig& cfg, const std::filesystem::path& out) {
    const auto corpus = load_corpus(out);
    const auto rows = device_table(corpus, cfg.classifier, cfg.repetitions, {cfg.augment_enabled, cfg.augment});
    detail::write_text(out / "device_table.csv", device_table_csv(rows, corpus.device_ids));
    return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << "lambda,seen,unseen,seed_std\n";
    for (const auto& r : rows)
        os << format_fixed4(r.lambda) << ',' << format_fixed4(r.seen) << ',' << format_fixed4(r.unseen) << ','
           << format_fixed4(r.seed_std) << '\n';
    return os.str();
}

inline std::vector<SweepRow> cmd_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out) {
    const auto corpus = load_corpus(out);
    const auto rows = lambda_sweep(corpus, cfg.classifier, cfg.repetitions, {cfg.augment_enabled, cfg.augment});
    detail::write_text(out / "lambda_sweep.csv", sweep_csv(rows));
    return rows;
}

inline std::string placement_csv(const std::vector<PlacementRow>& rows) {
    std::ostringstream os;
    os << "placement,input_device_acc,final_device_acc,final_scene_acc\n";
    for (const auto& r : rows)
        os << to_string(r.placement) << ',' << format_fixed4(r.input_device_acc) << ',' << format_fixed4(r.final_device_acc)
           << ',' << format_fixed4(r.final_scene_acc) << '\n';
    return os.str();
}

/// Writes placement.csv (one row per placement) and placement_probe.csv (the
/// full per-depth probe rows, labelled by placement).
inline PlacementResult cmd_placement(const ExperimentConfig& cfg, const std::filesystem::path& out) {
    const auto corpus = load_corpus(out);
    const auto model = detail::model_for(cfg, corpus);
    NormalizationConfig norm = cfg.normalization;
    if (norm.method == NormMethod::none || norm.method == NormMethod::gfn) norm = NormalizationConfig::make(NormMethod::fc);
    auto res = placement_ablation(corpus, model, norm, cfg.forest);
    detail::write_text(out / "placement.csv", placement_csv(res.rows));
    std::ostringstream os;
    write_probe_csv(os, res.details);
    detail::write_text(out / "placement_probe.csv", os.str());
    return res;
}

}  // namespace freqcenter
