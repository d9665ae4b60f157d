#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "tensor.hpp"

namespace freqcenter {

// Frequency-wise normalizations on (D, F, T) tensors. Statistics at frequency f
// are always taken over all (d, t) cells of one sample; std is the population
// std.

enum class NormMethod { none, fc, sfc, sfcw, gfn, ifn, layernorm, rfn, rfn_input };

inline std::string_view to_string(NormMethod m) {
    switch (m) {
        case NormMethod::none: return "none";
        case NormMethod::fc: return "fc";
        case NormMethod::sfc: return "sfc";
        case NormMethod::sfcw: return "sfcw";
        case NormMethod::gfn: return "gfn";
        case NormMethod::ifn: return "ifn";
        case NormMethod::layernorm: return "layernorm";
        case NormMethod::rfn: return "rfn";
        case NormMethod::rfn_input: return "rfn_input";
    }
    return "none";
}

inline NormMethod parse_norm_method(std::string_view s) {
    for (auto m : {NormMethod::none, NormMethod::fc, NormMethod::sfc, NormMethod::sfcw, NormMethod::gfn, NormMethod::ifn,
                   NormMethod::layernorm, NormMethod::rfn, NormMethod::rfn_input})
        if (to_string(m) == s) return m;
    throw UsageError("unknown normalization method '" + std::string(s) + "'");
}

/// Per-frequency mean/std (F-vectors).
struct FreqStats {
    std::vector<double> mean;
    std::vector<double> std;

    bool operator==(const FreqStats&) const = default;
};

struct NormalizationConfig {
    NormMethod method = NormMethod::none;
    double lambda = 1.0;
    double eps = 1e-5;
    std::optional<FreqStats> fitted_stats;

    static NormalizationConfig make(NormMethod m, double lam = 1.0) {
        NormalizationConfig c;
        c.method = m;
        c.lambda = lam;
        return c;
    }

    void validate() const {
        if (!(lambda >= 0.0 && lambda <= 1.0)) throw UsageError("normalization: lambda must lie in [0, 1]");
        if (method == NormMethod::gfn && !fitted_stats) throw UsageError("normalization: gfn requires fitted statistics");
    }
};

namespace detail {

inline void check_lambda(double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw UsageError("lambda must lie in [0, 1], got " + std::to_string(lambda));
}

}  // namespace detail

/// Per-sample per-frequency statistics over (D, T).
inline FreqStats frequency_stats(const ActivationTensor& x) {
    const std::size_t D = x.dims_d(), F = x.dims_f(), T = x.dims_t();
    const double n = static_cast<double>(D * T);
    FreqStats s{std::vector<double>(F), std::vector<double>(F)};
    for (std::size_t f = 0; f < F; ++f) {
        CompensatedSum sum;
        for (std::size_t d = 0; d < D; ++d)
            for (double v : x.time_row(d, f)) sum.add(v);
        const double mu = sum.value() / n;
        CompensatedSum sq;
        for (std::size_t d = 0; d < D; ++d)
            for (double v : x.time_row(d, f)) sq.add((v - mu) * (v - mu));
        s.mean[f] = mu;
        s.std[f] = std::sqrt(sq.value() / n);
    }
    return s;
}

/// Soft frequency-wise centering: x - lambda * mu_f. lambda = 1 is plain FC.
inline ActivationTensor sfc(ActivationTensor x, double lambda) {
    detail::check_lambda(lambda);
    if (lambda == 0.0) return x;
    const auto st = frequency_stats(x);
    for (std::size_t d = 0; d < x.dims_d(); ++d)
        for (std::size_t f = 0; f < x.dims_f(); ++f)
            for (double& v : x.time_row(d, f)) v -= lambda * st.mean[f];
    return x;
}

/// Frequency-wise centering: subtract the mean over (D, T) at every frequency.
inline ActivationTensor fc(ActivationTensor x) { return sfc(std::move(x), 1.0); }

/// lambda * (x - mu_f) / (sigma_f + eps) + (1 - lambda) * x.
inline ActivationTensor sfcw(ActivationTensor x, double lambda, double eps = 1e-5) {
    detail::check_lambda(lambda);
    if (lambda == 0.0) return x;
    const auto st = frequency_stats(x);
    for (std::size_t d = 0; d < x.dims_d(); ++d)
        for (std::size_t f = 0; f < x.dims_f(); ++f) {
            const double inv = 1.0 / (st.std[f] + eps);
            for (double& v : x.time_row(d, f)) v = lambda * (v - st.mean[f]) * inv + (1.0 - lambda) * v;
        }
    return x;
}

/// Instance frequency-wise normalization.
inline ActivationTensor ifn(ActivationTensor x, double eps = 1e-5) {
    const auto st = frequency_stats(x);
    for (std::size_t d = 0; d < x.dims_d(); ++d)
        for (std::size_t f = 0; f < x.dims_f(); ++f) {
            const double inv = 1.0 / (st.std[f] + eps);
            for (double& v : x.time_row(d, f)) v = (v - st.mean[f]) * inv;
        }
    return x;
}

/// Layer normalization over all cells of one sample, no affine parameters.
inline ActivationTensor layer_norm_op(ActivationTensor x, double eps = 1e-5) {
    if (x.size() < 2) throw UsageError("layer_norm: tensor needs at least two cells");
    const auto ms = mean_std(x.values());
    const double inv = 1.0 / (ms.std + eps);
    for (double& v : x.values()) v = (v - ms.mean) * inv;
    return x;
}

/// Relaxed instance frequency-wise normalization: lambda * IFN + (1 - lambda) * LN.
inline ActivationTensor rfn(const ActivationTensor& x, double lambda, double eps = 1e-5) {
    detail::check_lambda(lambda);
    if (lambda == 1.0) return ifn(x, eps);
    if (lambda == 0.0) return layer_norm_op(x, eps);
    auto a = ifn(x, eps);
    const auto b = layer_norm_op(x, eps);
    for (std::size_t i = 0; i < a.size(); ++i) a.values()[i] = lambda * a.values()[i] + (1.0 - lambda) * b.values()[i];
    return a;
}

/// Global frequency normalization statistics pooled per frequency over every
/// (d, t) cell of every training tensor.
inline FreqStats gfn_fit(std::span<const ActivationTensor> training) {
    if (training.empty()) throw UsageError("gfn_fit: empty training set");
    const std::size_t F = training.front().dims_f();
    std::vector<CompensatedSum> sums(F);
    std::vector<double> counts(F, 0.0);
    for (const auto& x : training) {
        if (x.dims_f() != F) throw UsageError("gfn_fit: inconsistent frequency dimension");
        for (std::size_t d = 0; d < x.dims_d(); ++d)
            for (std::size_t f = 0; f < F; ++f) {
                for (double v : x.time_row(d, f)) sums[f].add(v);
                counts[f] += static_cast<double>(x.dims_t());
            }
    }
    FreqStats st{std::vector<double>(F), std::vector<double>(F)};
    for (std::size_t f = 0; f < F; ++f) st.mean[f] = sums[f].value() / counts[f];
    std::vector<CompensatedSum> sq(F);
    for (const auto& x : training)
        for (std::size_t d = 0; d < x.dims_d(); ++d)
            for (std::size_t f = 0; f < F; ++f)
                for (double v : x.time_row(d, f)) sq[f].add((v - st.mean[f]) * (v - st.mean[f]));
    for (std::size_t f = 0; f < F; ++f) {
        st.std[f] = std::sqrt(sq[f].value() / counts[f]);
        if (!(st.std[f] > 0.0)) throw NumericError("gfn_fit: zero variance at frequency " + std::to_string(f));
    }
    return st;
}

inline ActivationTensor gfn_apply(ActivationTensor x, const FreqStats& st) {
    if (st.mean.size() != x.dims_f() || st.std.size() != x.dims_f())
        throw UsageError("gfn_apply: statistics do not match frequency dimension");
    for (std::size_t d = 0; d < x.dims_d(); ++d)
        for (std::size_t f = 0; f < x.dims_f(); ++f)
            for (double& v : x.time_row(d, f)) v = (v - st.mean[f]) / st.std[f];
    return x;
}

inline ActivationTensor apply_norm(ActivationTensor x, const NormalizationConfig& cfg) {
    cfg.validate();
    switch (cfg.method) {
        case NormMethod::none: return x;
        case NormMethod::fc: return fc(std::move(x));
        case NormMethod::sfc: return sfc(std::move(x), cfg.lambda);
        case NormMethod::sfcw: return sfcw(std::move(x), cfg.lambda, cfg.eps);
        case NormMethod::gfn: return gfn_apply(std::move(x), *cfg.fitted_stats);
        case NormMethod::ifn: return ifn(std::move(x), cfg.eps);
        case NormMethod::layernorm: return layer_norm_op(std::move(x), cfg.eps);
        case NormMethod::rfn:
        case NormMethod::rfn_input: return rfn(x, cfg.lambda, cfg.eps);
    }
    return x;
}

inline nlohmann::json to_json(const FreqStats& s) { return {{"mean", s.mean}, {"std", s.std}}; }

inline FreqStats freq_stats_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("mean") || !j.contains("std") || j.size() != 2)
        throw UsageError("FreqStats json must be an object with exactly 'mean' and 'std'");
    FreqStats s{j.at("mean").get<std::vector<double>>(), j.at("std").get<std::vector<double>>()};
    if (s.mean.size() != s.std.size()) throw UsageError("FreqStats json: mean/std length mismatch");
    for (double v : s.std)
        if (!(v > 0.0)) throw UsageError("FreqStats json: std entries must be positive");
    return s;
}

}  // namespace freqcenter
