#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fft.hpp"
#include "tensor.hpp"
#include "wav.hpp"

namespace freqcenter {

/// Log-mel front end parameters. Defaults: 1024-point FFT, 40 ms window, 10 ms
/// hop, 80 mel bands over 0-8000 Hz.
struct FeatureConfig {
    std::size_t fft_size = 1024;
    double window_ms = 40.0;
    double hop_ms = 10.0;
    std::size_t n_mels = 80;
    double fmin_hz = 0.0;
    double fmax_hz = 8000.0;
    double log_floor = 1e-10;

    std::size_t window_samples(std::uint32_t sample_rate_hz) const {
        return static_cast<std::size_t>(std::lround(window_ms * sample_rate_hz / 1000.0));
    }
    std::size_t hop_samples(std::uint32_t sample_rate_hz) const {
        return static_cast<std::size_t>(std::lround(hop_ms * sample_rate_hz / 1000.0));
    }
    std::size_t n_bins() const { return fft_size / 2 + 1; }

    void validate(std::uint32_t sample_rate_hz) const {
        if (!is_power_of_two(fft_size)) throw UsageError("features: fft_size must be a power of two");
        if (window_samples(sample_rate_hz) == 0 || window_samples(sample_rate_hz) > fft_size)
            throw UsageError("features: window length must be in [1, fft_size]");
        if (hop_samples(sample_rate_hz) == 0) throw UsageError("features: hop must be at least one sample");
        if (n_mels < 2) throw UsageError("features: n_mels must be >= 2");
        if (!(fmin_hz >= 0.0 && fmin_hz < fmax_hz)) throw UsageError("features: need 0 <= fmin < fmax");
        if (fmax_hz > sample_rate_hz / 2.0) throw UsageError("features: fmax exceeds Nyquist");
        if (!(log_floor > 0.0)) throw UsageError("features: log_floor must be positive");
    }

    bool operator==(const FeatureConfig&) const = default;
};

/// Log-mel spectrogram in dB; data has D == 1, F == n_mels.
struct Spectrogram {
    ActivationTensor data;
    FeatureConfig config;
    std::uint32_t sample_rate_hz = 16000;

    std::size_t n_freq() const { return data.dims_f(); }
    std::size_t n_frames() const { return data.dims_t(); }
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

inline std::size_t frame_count(std::size_t n_samples, std::size_t window, std::size_t hop) {
    if (n_samples < window) return 0;
    return (n_samples - window) / hop + 1;
}

/// Periodic Hann window: w[n] = 0.5 - 0.5 cos(2 pi n / N).
inline std::vector<double> periodic_hann(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    return w;
}

/// Power STFT, (fft_size/2+1) x T. Frames start at sample 0, no centering, the
/// trailing partial frame is dropped.
inline Matrix stft_power(const Waveform& w, const FeatureConfig& cfg) {
    cfg.validate(w.sample_rate_hz);
    const std::size_t win = cfg.window_samples(w.sample_rate_hz);
    const std::size_t hop = cfg.hop_samples(w.sample_rate_hz);
    if (w.size() < win)
        throw UsageError("stft: waveform has " + std::to_string(w.size()) + " samples, shorter than one window (" +
                         std::to_string(win) + ")");
    const std::size_t frames = frame_count(w.size(), win, hop);
    const auto window = periodic_hann(win);

    Matrix power(cfg.n_bins(), frames);
    std::vector<std::complex<double>> buf(cfg.fft_size);
    for (std::size_t t = 0; t < frames; ++t) {
        std::fill(buf.begin(), buf.end(), std::complex<double>{});
        const std::size_t start = t * hop;
        for (std::size_t i = 0; i < win; ++i) buf[i] = w.samples[start + i] * window[i];
        fft_inplace(buf);
        for (std::size_t k = 0; k < cfg.n_bins(); ++k) power(k, t) = std::norm(buf[k]);
    }
    return power;
}

/// Corner FFT bins of the mel filterbank (n_mels + 2 entries).
inline std::vector<std::size_t> mel_corner_bins(const FeatureConfig& cfg, std::uint32_t sample_rate_hz) {
    const double mlo = hz_to_mel(cfg.fmin_hz);
    const double mhi = hz_to_mel(cfg.fmax_hz);
    std::vector<std::size_t> bins(cfg.n_mels + 2);
    for (std::size_t i = 0; i < bins.size(); ++i) {
        const double mel = mlo + (mhi - mlo) * static_cast<double>(i) / static_cast<double>(cfg.n_mels + 1);
        const double hz = mel_to_hz(mel);
        bins[i] = static_cast<std::size_t>(std::lround(hz * static_cast<double>(cfg.fft_size) / sample_rate_hz));
    }
    return bins;
}

/// Triangular HTK-style mel filterbank, n_mels x (fft_size/2+1), peak 1.
inline Matrix mel_filterbank(const FeatureConfig& cfg, std::uint32_t sample_rate_hz) {
    cfg.validate(sample_rate_hz);
    const auto c = mel_corner_bins(cfg, sample_rate_hz);
    Matrix fb(cfg.n_mels, cfg.n_bins());
    for (std::size_t m = 0; m < cfg.n_mels; ++m) {
        const std::size_t lo = c[m], mid = c[m + 1], hi = c[m + 2];
        if (lo == mid || mid == hi)
            throw UsageError("mel_filterbank: filter " + std::to_string(m) + " is degenerate (corners at bins " +
                             std::to_string(lo) + ", " + std::to_string(mid) + ", " + std::to_string(hi) + ")");
        for (std::size_t k = lo; k <= mid; ++k)
            fb(m, k) = static_cast<double>(k - lo) / static_cast<double>(mid - lo);
        for (std::size_t k = mid; k <= hi && k < cfg.n_bins(); ++k)
            fb(m, k) = static_cast<double>(hi - k) / static_cast<double>(hi - mid);
    }
    return fb;
}

/// Applies a filterbank (F x K) to a power spectrogram (K x T).
inline Matrix apply_filterbank(const Matrix& fb, const Matrix& power) {
    if (fb.cols() != power.rows()) throw UsageError("apply_filterbank: shape mismatch");
    Matrix out(fb.rows(), power.cols());
    for (std::size_t m = 0; m < fb.rows(); ++m) {
        for (std::size_t k = 0; k < fb.cols(); ++k) {
            const double wgt = fb(m, k);
            if (wgt == 0.0) continue;
            const auto src = power.row(k);
            auto dst = out.row(m);
            for (std::size_t t = 0; t < power.cols(); ++t) dst[t] += wgt * src[t];
        }
    }
    return out;
}

/// Mel power spectrogram (F x T) before the log transform.
inline Matrix mel_power(const Waveform& w, const FeatureConfig& cfg) {
    return apply_filterbank(mel_filterbank(cfg, w.sample_rate_hz), stft_power(w, cfg));
}

/// 10 log10(max(p, floor)) cell-wise into a D=1 spectrogram.
inline Spectrogram power_to_db(const Matrix& mel, const FeatureConfig& cfg, std::uint32_t sample_rate_hz) {
    Spectrogram s{ActivationTensor(1, mel.rows(), mel.cols()), cfg, sample_rate_hz};
    for (std::size_t f = 0; f < mel.rows(); ++f)
        for (std::size_t t = 0; t < mel.cols(); ++t)
            s.data(0, f, t) = 10.0 * std::log10(std::max(mel(f, t), cfg.log_floor));
    return s;
}

inline Spectrogram logmel(const Waveform& w, const FeatureConfig& cfg) {
    return power_to_db(mel_power(w, cfg), cfg, w.sample_rate_hz);
}

/// Scalar dataset standardizer pooled over every cell of every training
/// spectrogram.
struct Standardizer {
    double mean = 0.0;
    double std = 1.0;

    double apply(double x) const { return (x - mean) / std; }
    double invert(double z) const { return z * std + mean; }
};

inline Standardizer fit_standardizer(std::span<const Spectrogram> training) {
    if (training.empty()) throw UsageError("fit_standardizer: no training spectrograms");
    CompensatedSum sum;
    std::size_t n = 0;
    for (const auto& s : training)
        for (double v : s.data.values()) {
            sum.add(v);
            ++n;
        }
    const double mean = sum.value() / static_cast<double>(n);
    CompensatedSum sq;
    for (const auto& s : training)
        for (double v : s.data.values()) sq.add((v - mean) * (v - mean));
    const double var = sq.value() / static_cast<double>(n);
    if (!(var > 0.0)) throw NumericError("fit_standardizer: pooled variance is zero");
    return {mean, std::sqrt(var)};
}

inline Spectrogram apply_standardizer(const Standardizer& st, Spectrogram s) {
    for (double& v : s.data.values()) v = st.apply(v);
    return s;
}

// ---------------------------------------------------------------------------
// "FQC1" feature files: magic, D, F, T as u32 LE, then D*F*T f32 LE values.

inline std::vector<unsigned char> encode_features(const ActivationTensor& x) {
    std::vector<unsigned char> out{'F', 'Q', 'C', '1'};
    out.reserve(16 + 4 * x.size());
    detail::put32(out, static_cast<std::uint32_t>(x.dims_d()));
    detail::put32(out, static_cast<std::uint32_t>(x.dims_f()));
    detail::put32(out, static_cast<std::uint32_t>(x.dims_t()));
    for (double v : x.values()) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        detail::put32(out, bits);
    }
    return out;
}

inline ActivationTensor decode_features(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), "FQC1", 4) != 0)
        throw IoError("feature file: bad magic (expected FQC1)");
    const std::uint32_t d = detail::le32(bytes.data() + 4);
    const std::uint32_t f = detail::le32(bytes.data() + 8);
    const std::uint32_t t = detail::le32(bytes.data() + 12);
    if (d == 0 || f == 0 || t == 0) throw IoError("feature file: zero dimension");
    const std::size_t n = std::size_t(d) * f * t;
    if (bytes.size() != 16 + 4 * n) throw IoError("feature file: payload size does not match header");
    ActivationTensor x(d, f, t);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t bits = detail::le32(bytes.data() + 16 + 4 * i);
        float v;
        std::memcpy(&v, &bits, 4);
        x.values()[i] = v;
    }
    return x;
}

inline void write_features(const std::filesystem::path& path, const ActivationTensor& x) {
    const auto bytes = encode_features(x);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write feature file " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write on feature file " + path.string());
}

inline ActivationTensor read_features(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open feature file " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_features(bytes);
}

}  // namespace freqcenter
