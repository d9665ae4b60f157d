#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "errors.hpp"
#include "features.hpp"
#include "norm.hpp"
#include "random.hpp"
#include "tensor.hpp"

namespace freqcenter {

// Forward-only audio spectrogram transformer with seeded random weights.
// Spectrograms are cut into non-overlapping patch x patch tiles, projected to
// D-dimensional tokens, and given separate frequency and time positional
// encodings. Every block is pre-norm: x += MHSA(LN(x)); x += MLP(LN(x)).

struct AstConfig {
    std::size_t patch = 16;
    std::size_t embed_dim = 64;
    std::size_t n_blocks = 4;
    std::size_t n_heads = 4;
    std::size_t mlp_ratio = 4;
    std::size_t freq_patches = 5;   // rows of the frequency positional table
    std::size_t time_patches = 12;  // rows of the time positional table
    std::uint64_t init_seed = 1234;
    // Std of attention/MLP weights; 0 selects 1 / sqrt(fan_in) like the patch projection.
    double block_init_std = 0.1;

    void validate() const {
        if (!(block_init_std >= 0.0)) throw UsageError("ast: block_init_std must be non-negative");
        if (patch == 0 || embed_dim == 0 || n_blocks == 0 || n_heads == 0 || mlp_ratio == 0)
            throw UsageError("ast: sizes must be positive");
        if (embed_dim % n_heads != 0) throw UsageError("ast: embed_dim must be divisible by n_heads");
        if (freq_patches == 0 || time_patches == 0) throw UsageError("ast: positional tables must be non-empty");
    }

    bool operator==(const AstConfig&) const = default;
};

/// Sequence of patch vectors (or token embeddings) with their grid positions.
/// Token i sits at (freq_index[i], time_index[i]); grid order is frequency
/// outer, time inner.
struct TokenGrid {
    Matrix tokens;  // N x width
    std::vector<std::size_t> freq_index;
    std::vector<std::size_t> time_index;
    std::size_t freq_patches = 0;
    std::size_t time_patches = 0;
};

struct Linear {
    Matrix weight;  // out x in
    std::vector<double> bias;

    std::size_t in() const { return weight.cols(); }
    std::size_t out() const { return weight.rows(); }
};

struct LayerNormParams {
    std::vector<double> gamma;
    std::vector<double> beta;
};

struct AstBlock {
    LayerNormParams ln1;
    Linear q, k, v, o;
    LayerNormParams ln2;
    Linear fc1, fc2;
};

struct AstModel {
    AstConfig config;
    Linear patch_proj;
    Matrix freq_pe;  // freq_patches x D
    Matrix time_pe;  // time_patches x D
    std::vector<AstBlock> blocks;
};

/// Visits every parameter array in declaration order.
template <class Model, class Fn>
void for_each_param(Model& m, Fn&& fn) {
    auto lin = [&](auto& l) {
        fn(std::span(l.weight.values()));
        fn(std::span(l.bias));
    };
    auto ln = [&](auto& p) {
        fn(std::span(p.gamma));
        fn(std::span(p.beta));
    };
    lin(m.patch_proj);
    fn(std::span(m.freq_pe.values()));
    fn(std::span(m.time_pe.values()));
    for (auto& b : m.blocks) {
        ln(b.ln1);
        lin(b.q);
        lin(b.k);
        lin(b.v);
        lin(b.o);
        ln(b.ln2);
        lin(b.fc1);
        lin(b.fc2);
    }
}

inline std::size_t parameter_count(const AstModel& m) {
    std::size_t n = 0;
    for_each_param(m, [&](auto s) { n += s.size(); });
    return n;
}

namespace detail {

// sd <= 0 selects 1 / sqrt(in).
inline Linear random_linear(std::size_t in, std::size_t out, Rng& rng, double sd = 0.0) {
    Linear l{Matrix(out, in), std::vector<double>(out, 0.0)};
    if (sd <= 0.0) sd = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& w : l.weight.values()) w = gaussian(rng, 0.0, sd);
    return l;
}

inline LayerNormParams unit_layernorm(std::size_t d) {
    return {std::vector<double>(d, 1.0), std::vector<double>(d, 0.0)};
}

// y = x W^T + b for every row of x.
inline Matrix linear_forward(const Linear& l, const Matrix& x) {
    Matrix y(x.rows(), l.out());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto xr = x.row(r);
        auto yr = y.row(r);
        for (std::size_t o = 0; o < l.out(); ++o) {
            const auto wr = l.weight.row(o);
            double acc = l.bias[o];
            for (std::size_t i = 0; i < xr.size(); ++i) acc += wr[i] * xr[i];
            yr[o] = acc;
        }
    }
    return y;
}

inline Matrix layernorm_rows(const LayerNormParams& p, const Matrix& x, double eps = 1e-5) {
    Matrix y(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto ms = mean_std(x.row(r));
        const double inv = 1.0 / std::sqrt(ms.std * ms.std + eps);
        for (std::size_t c = 0; c < x.cols(); ++c) y(r, c) = (x(r, c) - ms.mean) * inv * p.gamma[c] + p.beta[c];
    }
    return y;
}

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

}  // namespace detail

/// Seeded random initialization: patch projection N(0, 1/sqrt(fan_in)), block
/// weights N(0, block_init_std), biases zero, positional tables N(0, 0.02),
/// layer-norm gain 1 and shift 0.
inline AstModel init_model(const AstConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.init_seed);
    const std::size_t D = cfg.embed_dim;
    AstModel m;
    m.config = cfg;
    m.patch_proj = detail::random_linear(cfg.patch * cfg.patch, D, rng);
    m.freq_pe = Matrix(cfg.freq_patches, D);
    for (double& v : m.freq_pe.values()) v = gaussian(rng, 0.0, 0.02);
    m.time_pe = Matrix(cfg.time_patches, D);
    for (double& v : m.time_pe.values()) v = gaussian(rng, 0.0, 0.02);
    for (std::size_t b = 0; b < cfg.n_blocks; ++b) {
        AstBlock blk;
        blk.ln1 = detail::unit_layernorm(D);
        blk.q = detail::random_linear(D, D, rng, cfg.block_init_std);
        blk.k = detail::random_linear(D, D, rng, cfg.block_init_std);
        blk.v = detail::random_linear(D, D, rng, cfg.block_init_std);
        blk.o = detail::random_linear(D, D, rng, cfg.block_init_std);
        blk.ln2 = detail::unit_layernorm(D);
        blk.fc1 = detail::random_linear(D, cfg.mlp_ratio * D, rng, cfg.block_init_std);
        blk.fc2 = detail::random_linear(cfg.mlp_ratio * D, D, rng, cfg.block_init_std);
        m.blocks.push_back(std::move(blk));
    }
    return m;
}

/// Cuts a D=1 spectrogram into non-overlapping patches. T is truncated to a
/// multiple of the patch size; each patch is flattened f-major, t-minor.
inline TokenGrid patchify(const ActivationTensor& spec, std::size_t patch = 16) {
    if (spec.dims_d() != 1) throw UsageError("patchify: expected a single-channel spectrogram");
    if (spec.dims_f() % patch != 0)
        throw UsageError("patchify: F=" + std::to_string(spec.dims_f()) + " is not divisible by " + std::to_string(patch));
    if (spec.dims_t() < patch) throw UsageError("patchify: T=" + std::to_string(spec.dims_t()) + " is shorter than one patch");
    TokenGrid g;
    g.freq_patches = spec.dims_f() / patch;
    g.time_patches = spec.dims_t() / patch;
    g.tokens = Matrix(g.freq_patches * g.time_patches, patch * patch);
    std::size_t n = 0;
    for (std::size_t i = 0; i < g.freq_patches; ++i)
        for (std::size_t j = 0; j < g.time_patches; ++j, ++n) {
            auto row = g.tokens.row(n);
            for (std::size_t df = 0; df < patch; ++df)
                for (std::size_t dt = 0; dt < patch; ++dt) row[df * patch + dt] = spec(0, i * patch + df, j * patch + dt);
            g.freq_index.push_back(i);
            g.time_index.push_back(j);
        }
    return g;
}

inline TokenGrid patchify(const Spectrogram& spec, std::size_t patch = 16) { return patchify(spec.data, patch); }

/// Scatters an N x D token matrix into a D x F_p x T_p tensor.
inline ActivationTensor scatter_tokens(const Matrix& tokens, const TokenGrid& grid) {
    ActivationTensor x(tokens.cols(), grid.freq_patches, grid.time_patches);
    for (std::size_t n = 0; n < tokens.rows(); ++n)
        for (std::size_t d = 0; d < tokens.cols(); ++d) x(d, grid.freq_index[n], grid.time_index[n]) = tokens(n, d);
    return x;
}

/// Inverse of scatter_tokens for the same grid.
inline Matrix gather_tokens(const ActivationTensor& x, const TokenGrid& grid) {
    Matrix tokens(grid.freq_index.size(), x.dims_d());
    for (std::size_t n = 0; n < tokens.rows(); ++n)
        for (std::size_t d = 0; d < x.dims_d(); ++d) tokens(n, d) = x(d, grid.freq_index[n], grid.time_index[n]);
    return tokens;
}

/// Multi-head self-attention over all tokens (no masking). Optionally returns
/// each head's N x N attention matrix.
inline Matrix self_attention(const AstBlock& blk, const Matrix& h, std::size_t n_heads,
                             std::vector<Matrix>* weights_out = nullptr) {
    const Matrix q = detail::linear_forward(blk.q, h);
    const Matrix k = detail::linear_forward(blk.k, h);
    const Matrix v = detail::linear_forward(blk.v, h);
    const std::size_t N = h.rows(), D = h.cols(), dh = D / n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    Matrix ctx(N, D);
    if (weights_out) weights_out->assign(n_heads, Matrix(N, N));
    std::vector<double> row(N);
    for (std::size_t hd = 0; hd < n_heads; ++hd) {
        const std::size_t off = hd * dh;
        for (std::size_t i = 0; i < N; ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < N; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < dh; ++c) s += q(i, off + c) * k(j, off + c);
                row[j] = s * scale;
                mx = std::max(mx, row[j]);
            }
            double z = 0.0;
            for (double& r : row) z += (r = std::exp(r - mx));
            for (double& r : row) r /= z;
            if (weights_out)
                for (std::size_t j = 0; j < N; ++j) (*weights_out)[hd](i, j) = row[j];
            for (std::size_t j = 0; j < N; ++j)
                for (std::size_t c = 0; c < dh; ++c) ctx(i, off + c) += row[j] * v(j, off + c);
        }
    }
    return detail::linear_forward(blk.o, ctx);
}

inline Matrix block_forward(const AstBlock& blk, Matrix x, std::size_t n_heads) {
    const Matrix attn = self_attention(blk, detail::layernorm_rows(blk.ln1, x), n_heads);
    for (std::size_t i = 0; i < x.values().size(); ++i) x.values()[i] += attn.values()[i];
    Matrix hidden = detail::linear_forward(blk.fc1, detail::layernorm_rows(blk.ln2, x));
    for (double& v : hidden.values()) v = detail::gelu(v);
    const Matrix mlp = detail::linear_forward(blk.fc2, hidden);
    for (std::size_t i = 0; i < x.values().size(); ++i) x.values()[i] += mlp.values()[i];
    return x;
}

/// Where token-grid centering is applied inside the network (the input
/// spectrogram is normalized by the caller).
struct TokenCentering {
    bool after_projection = false;  // on the projected patch tokens, before positional encodings
    bool after_blocks = false;      // on every block output
    NormalizationConfig norm = NormalizationConfig::make(NormMethod::fc);
};

/// Token embeddings for a grid: projection + freq_pe[row] + time_pe[col].
inline Matrix embed_tokens(const AstModel& m, const TokenGrid& g, const TokenCentering& centering = {}) {
    if (g.freq_patches > m.config.freq_patches || g.time_patches > m.config.time_patches)
        throw UsageError("ast: token grid " + std::to_string(g.freq_patches) + "x" + std::to_string(g.time_patches) +
                         " exceeds positional tables");
    Matrix x = detail::linear_forward(m.patch_proj, g.tokens);
    if (centering.after_projection) x = gather_tokens(apply_norm(scatter_tokens(x, g), centering.norm), g);
    for (std::size_t n = 0; n < x.rows(); ++n)
        for (std::size_t d = 0; d < x.cols(); ++d)
            x(n, d) += m.freq_pe(g.freq_index[n], d) + m.time_pe(g.time_index[n], d);
    return x;
}

/// Runs all blocks over a token sequence and returns each block's output.
/// `between` may rewrite the running sequence after each block.
inline std::vector<Matrix> run_blocks(const AstModel& m, Matrix x,
                                      const std::function<void(Matrix&)>& between = nullptr) {
    std::vector<Matrix> outs;
    outs.reserve(m.blocks.size());
    for (const auto& blk : m.blocks) {
        x = block_forward(blk, std::move(x), m.config.n_heads);
        if (between) between(x);
        outs.push_back(x);
    }
    return outs;
}

/// Per-block activations (post-residual block outputs) reshaped to
/// D x F_p x T_p using the recorded token positions.
inline std::vector<ActivationTensor> forward_capture(const AstModel& m, const ActivationTensor& spec,
                                                     const TokenCentering& centering = {}) {
    const TokenGrid g = patchify(spec, m.config.patch);
    std::function<void(Matrix&)> between;
    if (centering.after_blocks)
        between = [&](Matrix& x) { x = gather_tokens(apply_norm(scatter_tokens(x, g), centering.norm), g); };
    const auto outs = run_blocks(m, embed_tokens(m, g, centering), between);
    std::vector<ActivationTensor> acts;
    acts.reserve(outs.size());
    for (const auto& o : outs) acts.push_back(scatter_tokens(o, g));
    return acts;
}

inline std::vector<ActivationTensor> forward_capture(const AstModel& m, const Spectrogram& spec,
                                                     const TokenCentering& centering = {}) {
    return forward_capture(m, spec.data, centering);
}

// ---------------------------------------------------------------------------
// "AST1" model files: magic, 7 u32 config fields, u64 seed, f64 block init std
// (both as u32 pairs, low word first), then every
// parameter in declaration order as f32 LE.

inline void save_model(const std::filesystem::path& path, const AstModel& m) {
    std::vector<unsigned char> out{'A', 'S', 'T', '1'};
    const auto& c = m.config;
    for (std::size_t v : {c.patch, c.embed_dim, c.n_blocks, c.n_heads, c.mlp_ratio, c.freq_patches, c.time_patches})
        detail::put32(out, static_cast<std::uint32_t>(v));
    detail::put32(out, static_cast<std::uint32_t>(c.init_seed & 0xffffffffu));
    detail::put32(out, static_cast<std::uint32_t>(c.init_seed >> 32));
    std::uint64_t std_bits;
    std::memcpy(&std_bits, &c.block_init_std, 8);
    detail::put32(out, static_cast<std::uint32_t>(std_bits & 0xffffffffu));
    detail::put32(out, static_cast<std::uint32_t>(std_bits >> 32));
    for_each_param(m, [&](auto s) {
        for (double v : s) {
            const float f = static_cast<float>(v);
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            detail::put32(out, bits);
        }
    });
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write model file " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

inline AstModel load_model(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open model file " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < 48 || std::memcmp(bytes.data(), "AST1", 4) != 0) throw IoError("model file: bad header");
    auto u32 = [&](std::size_t i) { return detail::le32(bytes.data() + 4 + 4 * i); };
    AstConfig c;
    c.patch = u32(0);
    c.embed_dim = u32(1);
    c.n_blocks = u32(2);
    c.n_heads = u32(3);
    c.mlp_ratio = u32(4);
    c.freq_patches = u32(5);
    c.time_patches = u32(6);
    c.init_seed = std::uint64_t(u32(7)) | (std::uint64_t(u32(8)) << 32);
    const std::uint64_t std_bits = std::uint64_t(u32(9)) | (std::uint64_t(u32(10)) << 32);
    std::memcpy(&c.block_init_std, &std_bits, 8);
    AstModel m = init_model(c);
    std::size_t pos = 48;
    if (bytes.size() != pos + 4 * parameter_count(m)) throw IoError("model file: parameter payload size mismatch");
    for_each_param(m, [&](auto s) {
        for (double& v : s) {
            const std::uint32_t bits = detail::le32(bytes.data() + pos);
            float fl;
            std::memcpy(&fl, &bits, 4);
            v = fl;
            pos += 4;
        }
    });
    return m;
}

}  // namespace freqcenter
