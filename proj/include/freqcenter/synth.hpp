#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "features.hpp"
#include "fft.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "tensor.hpp"

namespace freqcenter {

// Synthetic parallel-recording corpus. A scene is a stationary spectral tilt
// plus a few amplitude-modulated noise bands; a device is a per-mel-band gain
// applied in the mel power domain, so recordings of one clip under two devices
// differ by an exact per-frequency offset in dB.

struct BandPattern {
    std::size_t band_lo = 0;  // first mel band, inclusive
    std::size_t band_hi = 1;  // last mel band, exclusive
    double rate_hz = 4.0;
    double depth = 0.5;
    double level_db = 0.0;
};

struct SceneSpec {
    int scene_id = 0;
    std::vector<BandPattern> band_patterns;
    std::vector<double> static_tilt;  // dB per mel band

    void validate(std::size_t n_mels) const {
        if (static_tilt.size() != n_mels) throw UsageError("scene: static_tilt length must equal n_mels");
        for (const auto& p : band_patterns) {
            if (p.band_lo >= p.band_hi || p.band_hi > n_mels) throw UsageError("scene: band range outside [0, n_mels)");
            if (!(p.rate_hz > 0.0)) throw UsageError("scene: modulation rate must be positive");
            if (!(p.depth >= 0.0 && p.depth <= 1.0)) throw UsageError("scene: modulation depth must be in [0, 1]");
        }
    }
};

struct DeviceSpec {
    std::string device_id;
    std::vector<double> band_gain_db;
    bool seen = false;
};

struct CorpusConfig {
    std::size_t n_scenes = 5;
    std::vector<std::string> devices{"A", "B", "C", "D"};  // first entry is the seen device
    std::size_t train_clips = 40;                           // per scene, seen device only
    std::size_t test_clips = 20;                            // per (scene, device)
    double clip_seconds = 2.0;
    std::uint32_t sample_rate_hz = 16000;
    std::size_t gain_groups = 8;
    double max_gain_db = 12.0;
    double min_device_distance_db = 3.0;
    double background_db = -6.0;
    std::size_t patterns_per_scene = 3;
    double tilt_db = 4.0;

    bool operator==(const CorpusConfig&) const = default;
};

struct ManifestEntry {
    std::string clip_id;
    int scene_id = 0;
    std::string device_id;
    std::string split;  // "train" or "test"
    std::string path;   // relative to the manifest directory
    std::uint64_t clip_seed = 0;
};

struct CorpusManifest {
    std::vector<ManifestEntry> entries;
    std::uint64_t master_seed = 0;
    nlohmann::json generation_config;
    std::filesystem::path root;  // directory holding manifest.json; not serialized

    std::vector<DeviceSpec> devices() const;
    std::size_t n_scenes() const { return generation_config.at("corpus").at("n_scenes").get<std::size_t>(); }
    std::vector<std::string> device_ids() const {
        return generation_config.at("corpus").at("devices").get<std::vector<std::string>>();
    }
    std::string seen_device() const { return device_ids().front(); }
};

// ---------------------------------------------------------------------------

/// Center frequency (Hz) of each mel band of the filterbank.
inline std::vector<double> mel_band_centers_hz(const FeatureConfig& cfg) {
    const double mlo = hz_to_mel(cfg.fmin_hz), mhi = hz_to_mel(cfg.fmax_hz);
    std::vector<double> c(cfg.n_mels);
    for (std::size_t m = 0; m < cfg.n_mels; ++m)
        c[m] = mel_to_hz(mlo + (mhi - mlo) * static_cast<double>(m + 1) / static_cast<double>(cfg.n_mels + 1));
    return c;
}

namespace detail {

inline double interp_tilt(const std::vector<double>& centers, const std::vector<double>& tilt, double hz) {
    if (hz <= centers.front()) return tilt.front();
    if (hz >= centers.back()) return tilt.back();
    const auto it = std::upper_bound(centers.begin(), centers.end(), hz);
    const std::size_t i = static_cast<std::size_t>(it - centers.begin());
    const double a = (hz - centers[i - 1]) / (centers[i] - centers[i - 1]);
    return (1.0 - a) * tilt[i - 1] + a * tilt[i];
}

// Real sum of cosines at FFT-bin frequencies k * fs / fft_size, synthesized with
// one inverse FFT whose length is a power-of-two multiple of fft_size.
inline std::vector<double> synth_bins(const std::vector<std::pair<std::size_t, double>>& bins_amp, std::size_t fft_size,
                                      std::size_t n_out, Rng& rng) {
    std::size_t n_syn = fft_size;
    while (n_syn < n_out) n_syn <<= 1;
    const std::size_t ratio = n_syn / fft_size;
    std::vector<std::complex<double>> spec(n_syn);
    for (const auto& [k, amp] : bins_amp)
        spec[k * ratio] = std::polar(amp, uniform(rng, 0.0, 2.0 * std::numbers::pi));
    fft_inplace(spec, true);
    std::vector<double> out(n_out);
    for (std::size_t n = 0; n < n_out; ++n) out[n] = spec[n].real();
    return out;
}

}  // namespace detail

/// Clean (device-free) recording of a scene: a tilt-shaped stationary
/// background plus each band pattern's modulated band-limited noise, peak
/// normalized to 0.5.
inline Waveform render_clean_waveform(const SceneSpec& scene, std::uint64_t clip_seed,
                                      const FeatureConfig& fcfg = {}, double clip_seconds = 2.0,
                                      std::uint32_t sample_rate_hz = 16000, double background_db = -6.0) {
    scene.validate(fcfg.n_mels);
    fcfg.validate(sample_rate_hz);
    Rng rng(clip_seed);
    const auto n = static_cast<std::size_t>(std::lround(clip_seconds * sample_rate_hz));
    const double bin_hz = static_cast<double>(sample_rate_hz) / static_cast<double>(fcfg.fft_size);
    const auto centers = mel_band_centers_hz(fcfg);

    std::vector<std::pair<std::size_t, double>> bg;
    for (std::size_t k = 1; k < fcfg.fft_size / 2; ++k) {
        const double hz = k * bin_hz;
        if (hz > fcfg.fmax_hz) break;
        bg.emplace_back(k, std::pow(10.0, (background_db + detail::interp_tilt(centers, scene.static_tilt, hz)) / 20.0));
    }
    std::vector<double> x = detail::synth_bins(bg, fcfg.fft_size, n, rng);

    for (const auto& p : scene.band_patterns) {
        const double lo_hz = centers[p.band_lo], hi_hz = centers[p.band_hi - 1];
        std::vector<std::pair<std::size_t, double>> carriers;
        const double amp = std::pow(10.0, p.level_db / 20.0);
        for (std::size_t k = 1; k < fcfg.fft_size / 2; ++k) {
            const double hz = k * bin_hz;
            if (hz >= lo_hz - bin_hz / 2 && hz <= hi_hz + bin_hz / 2) carriers.emplace_back(k, amp);
        }
        if (carriers.empty()) continue;
        const auto band = detail::synth_bins(carriers, fcfg.fft_size, n, rng);
        const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        const double rate = p.rate_hz * uniform(rng, 0.9, 1.1);
        for (std::size_t i = 0; i < n; ++i) {
            const double env =
                1.0 + p.depth * std::sin(2.0 * std::numbers::pi * rate * static_cast<double>(i) / sample_rate_hz + phase);
            x[i] += env * band[i];
        }
    }

    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    if (peak > 0.0)
        for (double& v : x) v *= 0.5 / peak;
    return Waveform{std::move(x), sample_rate_hz};
}

/// out[f, t] = mel_power[f, t] * 10^(gain_db[f] / 10).
inline Matrix apply_device(Matrix mel_power, const DeviceSpec& dev) {
    if (dev.band_gain_db.size() != mel_power.rows()) throw UsageError("apply_device: gain vector does not match F");
    for (std::size_t f = 0; f < mel_power.rows(); ++f) {
        const double g = std::pow(10.0, dev.band_gain_db[f] / 10.0);
        for (double& v : mel_power.row(f)) v *= g;
    }
    return mel_power;
}

/// Deterministic scene definitions for a corpus.
inline std::vector<SceneSpec> make_scenes(const CorpusConfig& cfg, const FeatureConfig& fcfg, std::uint64_t master_seed) {
    Rng rng(mix_seed(master_seed, 0x5ce9e5ULL));
    const std::size_t F = fcfg.n_mels;
    std::vector<SceneSpec> scenes;
    for (std::size_t s = 0; s < cfg.n_scenes; ++s) {
        SceneSpec sc;
        sc.scene_id = static_cast<int>(s);
        // Smooth tilt: a few low-order cosines across the mel axis.
        sc.static_tilt.assign(F, 0.0);
        for (int h = 1; h <= 3; ++h) {
            const double a = gaussian(rng, 0.0, cfg.tilt_db / h);
            const double ph = uniform(rng, 0.0, 2.0 * std::numbers::pi);
            for (std::size_t f = 0; f < F; ++f)
                sc.static_tilt[f] += a * std::cos(std::numbers::pi * h * static_cast<double>(f) / static_cast<double>(F) + ph);
        }
        for (std::size_t p = 0; p < cfg.patterns_per_scene; ++p) {
            BandPattern bp;
            const auto width = static_cast<std::size_t>(uniform_int(rng, 6, 16));
            bp.band_lo = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(F - width)));
            bp.band_hi = bp.band_lo + width;
            bp.rate_hz = uniform(rng, 0.75, 3.0);
            bp.depth = uniform(rng, 0.5, 1.0);
            bp.level_db = uniform(rng, -6.0, 0.0);
            sc.band_patterns.push_back(bp);
        }
        scenes.push_back(std::move(sc));
    }
    return scenes;
}

/// Device gain curves: piecewise constant over contiguous mel-band groups,
/// uniform in [-max_gain, +max_gain]. Redrawn with the next seed until every
/// pair of devices is at least min_device_distance_db apart in L-infinity.
inline std::vector<DeviceSpec> make_devices(const CorpusConfig& cfg, const FeatureConfig& fcfg, std::uint64_t master_seed) {
    const std::size_t F = fcfg.n_mels;
    if (cfg.devices.empty()) throw UsageError("corpus: at least one device required");
    if (cfg.gain_groups == 0 || cfg.gain_groups > F) throw UsageError("corpus: gain_groups must be in [1, n_mels]");
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(mix_seed(master_seed, 0xde71ce00ULL + attempt));
        std::vector<DeviceSpec> devs;
        for (std::size_t i = 0; i < cfg.devices.size(); ++i) {
            DeviceSpec d{cfg.devices[i], std::vector<double>(F), i == 0};
            std::vector<double> groups(cfg.gain_groups);
            for (double& g : groups) g = uniform(rng, -cfg.max_gain_db, cfg.max_gain_db);
            for (std::size_t f = 0; f < F; ++f) d.band_gain_db[f] = groups[f * cfg.gain_groups / F];
            devs.push_back(std::move(d));
        }
        bool ok = true;
        for (std::size_t i = 0; i < devs.size() && ok; ++i)
            for (std::size_t j = i + 1; j < devs.size() && ok; ++j) {
                double linf = 0.0;
                for (std::size_t f = 0; f < F; ++f)
                    linf = std::max(linf, std::abs(devs[i].band_gain_db[f] - devs[j].band_gain_db[f]));
                ok = linf >= cfg.min_device_distance_db;
            }
        if (ok) return devs;
        if (attempt > 1000) throw NumericError("corpus: could not draw sufficiently distinct devices");
    }
}

// ---------------------------------------------------------------------------
// JSON snapshots

inline nlohmann::json to_json(const FeatureConfig& c) {
    return {{"fft_size", c.fft_size}, {"window_ms", c.window_ms}, {"hop_ms", c.hop_ms},   {"n_mels", c.n_mels},
            {"fmin_hz", c.fmin_hz},   {"fmax_hz", c.fmax_hz},     {"log_floor", c.log_floor}};
}

inline nlohmann::json to_json(const CorpusConfig& c) {
    return {{"n_scenes", c.n_scenes},
            {"devices", c.devices},
            {"train_clips", c.train_clips},
            {"test_clips", c.test_clips},
            {"clip_seconds", c.clip_seconds},
            {"sample_rate_hz", c.sample_rate_hz},
            {"gain_groups", c.gain_groups},
            {"max_gain_db", c.max_gain_db},
            {"min_device_distance_db", c.min_device_distance_db},
            {"background_db", c.background_db},
            {"patterns_per_scene", c.patterns_per_scene},
            {"tilt_db", c.tilt_db}};
}

inline nlohmann::json to_json(const DeviceSpec& d) {
    return {{"device_id", d.device_id}, {"band_gain_db", d.band_gain_db}, {"seen", d.seen}};
}

inline nlohmann::json to_json(const SceneSpec& s) {
    nlohmann::json pats = nlohmann::json::array();
    for (const auto& p : s.band_patterns)
        pats.push_back({{"band_lo", p.band_lo},
                        {"band_hi", p.band_hi},
                        {"rate_hz", p.rate_hz},
                        {"depth", p.depth},
                        {"level_db", p.level_db}});
    return {{"scene_id", s.scene_id}, {"band_patterns", pats}, {"static_tilt", s.static_tilt}};
}

inline std::vector<DeviceSpec> CorpusManifest::devices() const {
    std::vector<DeviceSpec> out;
    for (const auto& j : generation_config.at("device_specs"))
        out.push_back({j.at("device_id").get<std::string>(), j.at("band_gain_db").get<std::vector<double>>(),
                       j.at("seen").get<bool>()});
    return out;
}

inline nlohmann::json to_json(const CorpusManifest& m) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : m.entries)
        entries.push_back({{"clip_id", e.clip_id},
                           {"scene_id", e.scene_id},
                           {"device_id", e.device_id},
                           {"split", e.split},
                           {"path", e.path},
                           {"clip_seed", e.clip_seed}});
    return {{"master_seed", m.master_seed}, {"generation_config", m.generation_config}, {"entries", entries}};
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return s;
}

/// Reads `manifest.json` from a corpus directory.
inline CorpusManifest load_manifest(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.json";
    std::ifstream in(path);
    if (!in) throw IoError("missing corpus: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt manifest " + path.string() + ": " + e.what());
    }
    CorpusManifest m;
    m.root = dir;
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.generation_config = j.at("generation_config");
    for (const auto& e : j.at("entries"))
        m.entries.push_back({e.at("clip_id").get<std::string>(), e.at("scene_id").get<int>(),
                             e.at("device_id").get<std::string>(), e.at("split").get<std::string>(),
                             e.at("path").get<std::string>(), e.at("clip_seed").get<std::uint64_t>()});
    return m;
}

/// Renders every clip, applies devices in the mel power domain, writes FQC1
/// dB feature files and `manifest.json` under out_dir. Test clips are parallel
/// recordings: clip j of a scene shares its clean waveform across all devices.
/// Feature files live in `features-<key>/`, keyed by seed and configuration;
/// an existing complete directory with the same key is reused.
inline CorpusManifest generate_corpus(const CorpusConfig& cfg, const FeatureConfig& fcfg, std::uint64_t master_seed,
                                      const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    fcfg.validate(cfg.sample_rate_hz);
    if (cfg.n_scenes < 2) throw UsageError("corpus: n_scenes must be >= 2");

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create output directory " + out_dir.string());

    const auto scenes = make_scenes(cfg, fcfg, master_seed);
    const auto devices = make_devices(cfg, fcfg, master_seed);

    CorpusManifest m;
    m.root = out_dir;
    m.master_seed = master_seed;
    m.generation_config = {{"corpus", to_json(cfg)}, {"features", to_json(fcfg)}};
    m.generation_config["scenes"] = nlohmann::json::array();
    for (const auto& s : scenes) m.generation_config["scenes"].push_back(to_json(s));
    m.generation_config["device_specs"] = nlohmann::json::array();
    for (const auto& d : devices) m.generation_config["device_specs"].push_back(to_json(d));

    const std::string key = hex64(fnv1a64(m.generation_config.dump() + "#" + std::to_string(master_seed)));
    const std::string feat_dir = "features-" + key;
    fs::create_directories(out_dir / feat_dir, ec);
    if (ec) throw IoError("cannot create feature directory under " + out_dir.string());

    struct Recording {
        int scene;
        std::string split;
        std::size_t index;
        std::uint64_t clean_index;
    };
    std::vector<Recording> recs;
    for (std::size_t s = 0; s < cfg.n_scenes; ++s)
        for (std::size_t j = 0; j < cfg.train_clips; ++j)
            recs.push_back({static_cast<int>(s), "train", j, s * cfg.train_clips + j});
    for (std::size_t s = 0; s < cfg.n_scenes; ++s)
        for (std::size_t j = 0; j < cfg.test_clips; ++j)
            recs.push_back({static_cast<int>(s), "test", j, 1000000ULL + s * cfg.test_clips + j});

    auto clip_name = [](const Recording& r, const std::string& dev) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "s%02d_%s%03zu_%s", r.scene, r.split.c_str(), r.index, dev.c_str());
        return std::string(buf);
    };

    // Manifest entries in a fixed order: train (seen device) then test by scene, clip, device.
    for (const auto& r : recs) {
        const std::uint64_t seed = mix_seed(master_seed, r.clean_index);
        if (r.split == "train") {
            const auto id = clip_name(r, devices.front().device_id);
            m.entries.push_back({id, r.scene, devices.front().device_id, "train", feat_dir + "/" + id + ".fqc", seed});
        } else {
            for (const auto& d : devices) {
                const auto id = clip_name(r, d.device_id);
                m.entries.push_back({id, r.scene, d.device_id, "test", feat_dir + "/" + id + ".fqc", seed});
            }
        }
    }

    bool cached = true;
    for (const auto& e : m.entries)
        if (!fs::exists(out_dir / e.path)) {
            cached = false;
            break;
        }

    if (!cached) {
        const Matrix fb = mel_filterbank(fcfg, cfg.sample_rate_hz);
        parallel_for(recs.size(), [&](std::size_t i) {
            const auto& r = recs[i];
            const auto wave = render_clean_waveform(scenes[static_cast<std::size_t>(r.scene)],
                                                    mix_seed(master_seed, r.clean_index), fcfg, cfg.clip_seconds,
                                                    cfg.sample_rate_hz, cfg.background_db);
            const Matrix clean = apply_filterbank(fb, stft_power(wave, fcfg));
            const std::size_t n_dev = r.split == "train" ? 1 : devices.size();
            for (std::size_t di = 0; di < n_dev; ++di) {
                const auto spec = power_to_db(apply_device(clean, devices[di]), fcfg, cfg.sample_rate_hz);
                write_features(out_dir / feat_dir / (clip_name(r, devices[di].device_id) + ".fqc"), spec.data);
            }
        });
    }

    std::ofstream out(out_dir / "manifest.json", std::ios::binary);
    if (!out) throw IoError("cannot write manifest under " + out_dir.string());
    out << to_json(m).dump(1) << '\n';
    if (!out) throw IoError("short write on manifest");
    return m;
}

/// Loads a clip's dB log-mel spectrogram from its feature file.
inline Spectrogram load_clip(const CorpusManifest& m, const ManifestEntry& e) {
    const auto& fj = m.generation_config.at("features");
    FeatureConfig fcfg;
    fcfg.fft_size = fj.at("fft_size").get<std::size_t>();
    fcfg.window_ms = fj.at("window_ms").get<double>();
    fcfg.hop_ms = fj.at("hop_ms").get<double>();
    fcfg.n_mels = fj.at("n_mels").get<std::size_t>();
    fcfg.fmin_hz = fj.at("fmin_hz").get<double>();
    fcfg.fmax_hz = fj.at("fmax_hz").get<double>();
    fcfg.log_floor = fj.at("log_floor").get<double>();
    const auto rate = m.generation_config.at("corpus").at("sample_rate_hz").get<std::uint32_t>();
    return Spectrogram{read_features(m.root / e.path), fcfg, rate};
}

}  // namespace freqcenter
