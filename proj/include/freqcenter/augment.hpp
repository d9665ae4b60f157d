#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "errors.hpp"
#include "features.hpp"
#include "random.hpp"
#include "tensor.hpp"
#include "wav.hpp"

namespace freqcenter {

struct MixupParams {
    double p = 0.5;
    double alpha = 2.0;
};

struct AugmentConfig {
    double gain_db_range = 7.0;  // gain drawn uniformly from [-range, +range]
    MixupParams mixup_wave{0.5, 2.0};
    MixupParams mixup_spec{1.0, 0.3};
    std::size_t max_freq_width = 30;
    std::size_t max_time_width = 192;
    std::uint64_t seed = 0;

    void validate() const {
        for (const auto& m : {mixup_wave, mixup_spec}) {
            if (!(m.p >= 0.0 && m.p <= 1.0)) throw UsageError("augment: mixup p must be in [0, 1]");
            if (!(m.alpha > 0.0)) throw UsageError("augment: mixup alpha must be positive");
        }
        if (!(gain_db_range >= 0.0)) throw UsageError("augment: gain range must be non-negative");
    }
};

/// Scales samples by 10^(db/20) and clamps to [-1, 1].
inline Waveform gain(Waveform w, double db) {
    const double g = std::pow(10.0, db / 20.0);
    for (double& s : w.samples) s = std::clamp(s * g, -1.0, 1.0);
    return w;
}

/// Gamma(alpha, 1) by Marsaglia-Tsang; alpha < 1 uses the U^(1/alpha) boost.
inline double sample_gamma(double alpha, Rng& rng) {
    if (!(alpha > 0.0)) throw UsageError("sample_gamma: alpha must be positive");
    if (alpha < 1.0) {
        const double u = uniform01(rng);
        return sample_gamma(alpha + 1.0, rng) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = gaussian(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform01(rng);
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

/// Beta(alpha, alpha) as G1 / (G1 + G2). Clamped into the open interval.
inline double sample_beta(double alpha, Rng& rng) {
    if (!(alpha > 0.0)) throw UsageError("sample_beta: alpha must be positive");
    double a, b;
    do {
        a = sample_gamma(alpha, rng);
        b = sample_gamma(alpha, rng);
    } while (a + b <= 0.0);
    const double x = a / (a + b);
    constexpr double tiny = 1e-12;
    return std::clamp(x, tiny, 1.0 - tiny);
}

/// lam * a + (1 - lam) * b, cell-wise.
inline std::vector<double> mixup(const std::vector<double>& a, const std::vector<double>& b, double lam) {
    if (a.size() != b.size()) throw UsageError("mixup: shape mismatch");
    if (!(lam >= 0.0 && lam <= 1.0)) throw UsageError("mixup: lambda must be in [0, 1]");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = lam * a[i] + (1.0 - lam) * b[i];
    return out;
}

inline ActivationTensor mixup(const ActivationTensor& a, const ActivationTensor& b, double lam) {
    if (!a.same_shape(b)) throw UsageError("mixup: shape mismatch");
    ActivationTensor out = a;
    out.values() = mixup(a.values(), b.values(), lam);
    return out;
}

inline Waveform mixup(const Waveform& a, const Waveform& b, double lam) {
    if (a.sample_rate_hz != b.sample_rate_hz) throw UsageError("mixup: sample rate mismatch");
    return Waveform{mixup(a.samples, b.samples, lam), a.sample_rate_hz};
}

/// One masked frequency stripe and one masked time stripe.
struct SpecAugmentMask {
    std::size_t freq_start = 0, freq_width = 0;
    std::size_t time_start = 0, time_width = 0;
    double fill = 0.0;
};

/// Masks one frequency stripe (width ~ U{0..max_freq_width}) and one time
/// stripe (width ~ U{0..max_time_width}) with the spectrogram's mean value.
inline ActivationTensor spec_augment(ActivationTensor x, const AugmentConfig& cfg, Rng& rng,
                                     SpecAugmentMask* mask_out = nullptr) {
    if (cfg.max_freq_width > x.dims_f() || cfg.max_time_width > x.dims_t())
        throw UsageError("spec_augment: stripe width exceeds spectrogram dimensions");
    SpecAugmentMask mask;
    mask.fill = mean_std(x.values()).mean;
    mask.freq_width = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(cfg.max_freq_width)));
    mask.freq_start = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(x.dims_f() - mask.freq_width)));
    mask.time_width = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(cfg.max_time_width)));
    mask.time_start = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(x.dims_t() - mask.time_width)));
    for (std::size_t d = 0; d < x.dims_d(); ++d)
        for (std::size_t f = 0; f < x.dims_f(); ++f)
            for (std::size_t t = 0; t < x.dims_t(); ++t) {
                const bool in_f = f >= mask.freq_start && f < mask.freq_start + mask.freq_width;
                const bool in_t = t >= mask.time_start && t < mask.time_start + mask.time_width;
                if (in_f || in_t) x(d, f, t) = mask.fill;
            }
    if (mask_out) *mask_out = mask;
    return x;
}

inline Spectrogram spec_augment(Spectrogram s, const AugmentConfig& cfg, Rng& rng, SpecAugmentMask* mask_out = nullptr) {
    s.data = spec_augment(std::move(s.data), cfg, rng, mask_out);
    return s;
}

}  // namespace freqcenter
