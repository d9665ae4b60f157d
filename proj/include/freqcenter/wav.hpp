#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "errors.hpp"

namespace freqcenter {

/// Mono waveform with samples in [-1, 1].
struct Waveform {
    std::vector<double> samples;
    std::uint32_t sample_rate_hz = 16000;

    std::size_t size() const noexcept { return samples.size(); }
};

class WavError : public IoError {
public:
    enum class Reason { malformed_header, unsupported_encoding, empty_data };

    WavError(Reason reason, const std::string& what) : IoError(what), reason_(reason) {}
    Reason reason() const noexcept { return reason_; }

private:
    Reason reason_;
};

namespace detail {

inline std::uint32_t le32(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t le16(const unsigned char* p) { return std::uint16_t(p[0] | (p[1] << 8)); }

inline void put32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}
inline void put16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

}  // namespace detail

/// Parses an in-memory RIFF/WAVE image. Only 16-bit PCM mono is accepted.
inline Waveform parse_wav(const std::vector<unsigned char>& bytes) {
    using detail::le16;
    using detail::le32;
    using R = WavError::Reason;

    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw WavError(R::malformed_header, "wav: missing RIFF/WAVE header");

    bool have_fmt = false;
    std::uint32_t rate = 0;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::uint32_t len = le32(chunk + 4);
        const std::size_t body = pos + 8;
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (len < 16 || body + 16 > bytes.size()) throw WavError(R::malformed_header, "wav: truncated fmt chunk");
            const std::uint16_t format = le16(bytes.data() + body);
            const std::uint16_t channels = le16(bytes.data() + body + 2);
            rate = le32(bytes.data() + body + 4);
            const std::uint16_t bits = le16(bytes.data() + body + 14);
            if (format != 1 || channels != 1 || bits != 16)
                throw WavError(R::unsupported_encoding,
                               "wav: unsupported encoding (format " + std::to_string(format) + ", " +
                                   std::to_string(channels) + " channels, " + std::to_string(bits) +
                                   " bits); only 16-bit PCM mono is supported");
            if (rate == 0) throw WavError(R::malformed_header, "wav: zero sample rate");
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            if (!have_fmt) throw WavError(R::malformed_header, "wav: data chunk before fmt chunk");
            if (len == 0) throw WavError(R::empty_data, "wav: zero-length data chunk");
            if (body + len > bytes.size() || len % 2 != 0) throw WavError(R::malformed_header, "wav: truncated data chunk");
            Waveform w;
            w.sample_rate_hz = rate;
            w.samples.resize(len / 2);
            for (std::size_t i = 0; i < w.samples.size(); ++i) {
                const auto s = static_cast<std::int16_t>(le16(bytes.data() + body + 2 * i));
                w.samples[i] = static_cast<double>(s) / 32768.0;
            }
            return w;
        }
        pos = body + len + (len & 1u);
    }
    throw WavError(R::malformed_header, have_fmt ? "wav: missing data chunk" : "wav: missing fmt chunk");
}

inline Waveform read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("wav: cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_wav(bytes);
}

/// Encodes as 16-bit PCM mono; samples are clamped to [-1, 1) and rounded.
inline std::vector<unsigned char> encode_wav(const Waveform& w) {
    std::vector<unsigned char> out;
    const auto data_len = static_cast<std::uint32_t>(w.samples.size() * 2);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    detail::put32(out, 36 + data_len);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    detail::put32(out, 16);
    detail::put16(out, 1);
    detail::put16(out, 1);
    detail::put32(out, w.sample_rate_hz);
    detail::put32(out, w.sample_rate_hz * 2);
    detail::put16(out, 2);
    detail::put16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    detail::put32(out, data_len);
    for (double s : w.samples) {
        const double scaled = std::round(s * 32768.0);
        const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
        detail::put16(out, static_cast<std::uint16_t>(v));
    }
    return out;
}

inline void write_wav(const std::filesystem::path& path, const Waveform& w) {
    const auto bytes = encode_wav(w);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("wav: cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace freqcenter
