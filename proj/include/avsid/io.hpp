#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "avsid/error.hpp"
#include "avsid/image.hpp"
#include "avsid/signal.hpp"

namespace avsid {

// ---------------------------------------------------------------------------
// Binary PGM (P5), 8-bit.

inline void write_pgm(const std::string& path, const GrayImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_pgm: cannot open " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw IoError("write_pgm: short write to " + path);
}

namespace detail {

// Reads one whitespace-separated token, skipping '#' comment lines.
inline std::string next_pnm_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok;
}

}  // namespace detail

inline GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_pgm: cannot open " + path);
    if (detail::next_pnm_token(in) != "P5") throw FormatError("read_pgm: not a binary PGM: " + path);
    GrayImage img;
    try {
        img.width = std::stoi(detail::next_pnm_token(in));
        img.height = std::stoi(detail::next_pnm_token(in));
        const int maxval = std::stoi(detail::next_pnm_token(in));
        if (maxval != 255) throw FormatError("read_pgm: only maxval 255 supported");
    } catch (const std::logic_error&) {
        throw FormatError("read_pgm: malformed header in " + path);
    }
    if (img.width < 1 || img.height < 1) throw FormatError("read_pgm: bad dimensions in " + path);
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw FormatError("read_pgm: truncated pixel data in " + path);
    return img;
}

// ---------------------------------------------------------------------------
// Binary PPM (P6) heatmap rendering: values span blue (low) through green
// to red (high) over the data's own min..max range.

struct RgbColor {
    std::uint8_t r = 0, g = 0, b = 0;
};

inline RgbColor heat_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const auto chan = [](double v) {
        return static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * v), 0L, 255L));
    };
    if (t < 0.5) {
        const double u = t / 0.5;  // blue -> green
        return {0, chan(u), chan(1.0 - u)};
    }
    const double u = (t - 0.5) / 0.5;  // green -> red
    return {chan(u), chan(1.0 - u), 0};
}

inline void write_heatmap_ppm(const std::string& path, const std::vector<double>& values,
                              int width, int height) {
    if (width < 1 || height < 1 ||
        values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw ShapeError("write_heatmap_ppm: dimension mismatch");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_heatmap_ppm: cannot open " + path);
    out << "P6\n" << width << " " << height << "\n255\n";
    std::vector<std::uint8_t> row(static_cast<std::size_t>(width) * 3);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double v = values[static_cast<std::size_t>(y) * width + x];
            const RgbColor c = heat_color(span > 0.0 ? (v - lo) / span : 0.5);
            row[static_cast<std::size_t>(x) * 3 + 0] = c.r;
            row[static_cast<std::size_t>(x) * 3 + 1] = c.g;
            row[static_cast<std::size_t>(x) * 3 + 2] = c.b;
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw IoError("write_heatmap_ppm: short write to " + path);
}

// ---------------------------------------------------------------------------
// Multichannel audio as interleaved little-endian float32 (.f32) plus a
// JSON sidecar carrying sample rate and channel count.

inline std::string audio_sidecar_path(const std::string& audio_path) { return audio_path + ".json"; }

inline void write_audio_f32(const std::string& path, const MultichannelSignal& signal) {
    signal.validate();
    const std::size_t channels = signal.channels.size();
    const std::size_t frames = signal.frame_count();
    std::vector<float> interleaved(channels * frames);
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t i = 0; i < frames; ++i)
            interleaved[i * channels + c] = static_cast<float>(signal.channels[c][i]);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_audio_f32: cannot open " + path);
    out.write(reinterpret_cast<const char*>(interleaved.data()),
              static_cast<std::streamsize>(interleaved.size() * sizeof(float)));
    if (!out) throw IoError("write_audio_f32: short write to " + path);

    nlohmann::ordered_json meta;
    meta["sample_rate"] = signal.sample_rate;
    meta["channels"] = channels;
    std::ofstream side(audio_sidecar_path(path));
    if (!side) throw IoError("write_audio_f32: cannot open sidecar for " + path);
    side << meta.dump(2) << "\n";
}

inline MultichannelSignal read_audio_f32(const std::string& path) {
    std::ifstream side(audio_sidecar_path(path));
    if (!side) throw IoError("read_audio_f32: missing sidecar " + audio_sidecar_path(path));
    nlohmann::json meta;
    try {
        side >> meta;
    } catch (const nlohmann::json::exception&) {
        throw FormatError("read_audio_f32: malformed sidecar for " + path);
    }
    if (!meta.contains("sample_rate") || !meta.contains("channels"))
        throw FormatError("read_audio_f32: sidecar missing fields for " + path);
    const double rate = meta["sample_rate"].get<double>();
    const std::size_t channels = meta["channels"].get<std::size_t>();
    if (channels < 1 || !(rate > 0.0)) throw FormatError("read_audio_f32: bad sidecar values");

    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_audio_f32: cannot open " + path);
    in.seekg(0, std::ios::end);
    const std::streamsize bytes = in.tellg();
    in.seekg(0, std::ios::beg);
    if (bytes < 0 || bytes % static_cast<std::streamsize>(sizeof(float) * channels) != 0)
        throw FormatError("read_audio_f32: size not a whole number of frames: " + path);
    const std::size_t frames = static_cast<std::size_t>(bytes) / (sizeof(float) * channels);
    std::vector<float> interleaved(frames * channels);
    in.read(reinterpret_cast<char*>(interleaved.data()), bytes);
    if (in.gcount() != bytes) throw IoError("read_audio_f32: short read from " + path);

    MultichannelSignal signal;
    signal.sample_rate = rate;
    signal.channels.assign(channels, std::vector<double>(frames));
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t i = 0; i < frames; ++i)
            signal.channels[c][i] = static_cast<double>(interleaved[i * channels + c]);
    return signal;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_text_file: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_text_file: cannot open " + path);
    out << content;
    if (!out) throw IoError("write_text_file: short write to " + path);
}

}  // namespace avsid
