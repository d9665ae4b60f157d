#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "features.hpp"
#include "parallel.hpp"
#include "synth.hpp"

namespace freqcenter {

/// A synthetic corpus loaded into memory: every clip's dB spectrogram in
/// manifest order plus the scalar standardizer fitted on the train split.
struct Corpus {
    CorpusManifest manifest;
    std::vector<Spectrogram> specs;
    std::vector<int> scene;
    std::vector<int> device;  // index into device_ids; 0 is the seen device
    std::vector<std::string> device_ids;
    std::size_t n_scenes = 0;
    Standardizer standardizer;

    std::size_t size() const { return specs.size(); }
    const ManifestEntry& entry(std::size_t i) const { return manifest.entries[i]; }
    bool is_train(std::size_t i) const { return manifest.entries[i].split == "train"; }

    std::vector<std::size_t> split_indices(const std::string& split) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < size(); ++i)
            if (manifest.entries[i].split == split) out.push_back(i);
        return out;
    }

    /// Standardized copy of clip i's spectrogram tensor.
    ActivationTensor standardized(std::size_t i) const {
        ActivationTensor x = specs[i].data;
        for (double& v : x.values()) v = standardizer.apply(v);
        return x;
    }
};

inline Corpus load_corpus(const std::filesystem::path& dir) {
    Corpus c;
    c.manifest = load_manifest(dir);
    c.device_ids = c.manifest.device_ids();
    c.n_scenes = c.manifest.n_scenes();
    const std::size_t n = c.manifest.entries.size();
    c.specs.resize(n);
    parallel_for(n, [&](std::size_t i) { c.specs[i] = load_clip(c.manifest, c.manifest.entries[i]); });
    for (const auto& e : c.manifest.entries) {
        c.scene.push_back(e.scene_id);
        const auto it = std::find(c.device_ids.begin(), c.device_ids.end(), e.device_id);
        if (it == c.device_ids.end()) throw IoError("manifest: unknown device '" + e.device_id + "'");
        c.device.push_back(static_cast<int>(it - c.device_ids.begin()));
    }
    std::vector<Spectrogram> train;
    for (std::size_t i = 0; i < n; ++i)
        if (c.is_train(i)) train.push_back(c.specs[i]);
    c.standardizer = fit_standardizer(train);
    return c;
}

/// Splits the device- and scene-balanced test split into two halves for
/// probing: the j-th test clip of every (scene, device) goes to the probe
/// training half when j is even. Parallel recordings stay in the same half.
/// Returns 0 (probe train), 1 (probe test) or -1 (not used) per clip.
inline std::vector<int> probe_partition(const Corpus& c) {
    std::map<std::pair<int, int>, int> seen;
    std::vector<int> part(c.size(), -1);
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c.is_train(i)) continue;
        const int j = seen[{c.scene[i], c.device[i]}]++;
        part[i] = j % 2;
    }
    return part;
}

}  // namespace freqcenter
