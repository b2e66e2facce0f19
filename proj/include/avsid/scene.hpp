#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "avsid/error.hpp"
#include "avsid/geometry.hpp"
#include "avsid/image.hpp"
#include "avsid/mic_array.hpp"
#include "avsid/rng.hpp"
#include "avsid/signal.hpp"

namespace avsid {

struct SineSignal {
    double freq_hz = 1000.0;
};

struct WhiteNoiseSignal {};

// Mono sample file reference; resolved against the scene file's directory
// by the loader. `samples` is filled in when the scene is loaded.
struct SampleSignal {
    std::string path;
    std::vector<double> samples;
    double sample_rate = 0.0;
};

using SignalKind = std::variant<SineSignal, WhiteNoiseSignal, SampleSignal>;

struct EchoTap {
    double delay_s = 0.0;
    double gain = 0.0;
};

struct SoundSource {
    Vec3 position;          // meters, must have z > 0 (in front of the array plane)
    SignalKind signal;
    double level = 1.0;     // linear amplitude at 1 m
    std::vector<EchoTap> echoes;
};

struct FaceSprite {
    std::string identity;
    double x = 0.0;   // sprite center, pixels
    double y = 0.0;
    double scale = 64.0;  // sprite edge length, pixels
};

// snr_db empty means no additive noise.
struct SceneDescription {
    std::vector<SoundSource> sources;
    std::optional<double> snr_db;
    std::uint64_t seed = 0;
    std::vector<FaceSprite> face_sprites;
    double speed_of_sound = kSpeedOfSound;
};

namespace detail {

// 8-tap Hann-windowed sinc fractional-delay kernel. `frac` in [0, 1).
inline void fractional_delay_taps(double frac, double taps[8]) {
    for (int m = -3; m <= 4; ++m) {
        const double t = m - frac;
        double sinc = 1.0;
        if (t != 0.0) sinc = std::sin(std::numbers::pi * t) / (std::numbers::pi * t);
        const double window = 0.5 + 0.5 * std::cos(std::numbers::pi * t / 4.0);
        taps[m + 3] = sinc * window;
    }
}

// y[n] = x(n - delay_samples), band-limited interpolation, x zero outside.
inline void add_delayed(const std::vector<double>& x, double delay_samples, double gain,
                        std::vector<double>& y) {
    const double floor_delay = std::floor(delay_samples);
    const int int_delay = static_cast<int>(floor_delay);
    const double frac = delay_samples - floor_delay;
    double taps[8];
    fractional_delay_taps(frac, taps);
    const int n_out = static_cast<int>(y.size());
    const int n_in = static_cast<int>(x.size());
    for (int n = 0; n < n_out; ++n) {
        double acc = 0.0;
        // x(n - int_delay - frac) = sum_m x[n - int_delay - m] * taps[m]
        for (int m = -3; m <= 4; ++m) {
            const int j = n - int_delay - m;
            if (j >= 0 && j < n_in) acc += x[j] * taps[m + 3];
        }
        y[n] += gain * acc;
    }
}

inline std::vector<double> render_source_signal(const SoundSource& src, double sample_rate,
                                                std::size_t n_samples, std::uint64_t seed,
                                                std::size_t source_index) {
    std::vector<double> s(n_samples, 0.0);
    if (std::holds_alternative<SineSignal>(src.signal)) {
        const double f = std::get<SineSignal>(src.signal).freq_hz;
        for (std::size_t n = 0; n < n_samples; ++n)
            s[n] = std::sin(2.0 * std::numbers::pi * f * n / sample_rate);
    } else if (std::holds_alternative<WhiteNoiseSignal>(src.signal)) {
        auto rng = seeded_rng(seed, "source_noise", source_index);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (auto& v : s) v = gauss(rng);
    } else {
        const auto& sample = std::get<SampleSignal>(src.signal);
        if (sample.samples.empty())
            throw InvalidSceneError("synthesize_scene: sample source '" + sample.path +
                                    "' has no loaded audio");
        if (sample.sample_rate > 0.0 && std::abs(sample.sample_rate - sample_rate) > 1e-9)
            throw InvalidSceneError("synthesize_scene: sample '" + sample.path +
                                    "' sample rate differs from synthesis rate");
        for (std::size_t n = 0; n < n_samples; ++n) s[n] = sample.samples[n % sample.samples.size()];
    }
    return s;
}

}  // namespace detail

// Free-field synthesis: per source and channel, a 1/r-attenuated copy
// delayed by the exact propagation time (windowed-sinc fractional delay),
// optional discrete echo taps, plus seeded per-channel white noise at
// scene.snr_db relative to the summed source power. Pure function of
// (scene, array, rate, duration).
inline MultichannelSignal synthesize_scene(const SceneDescription& scene, const MicArray& array,
                                           double sample_rate, double duration) {
    if (!(sample_rate > 0.0)) throw ShapeError("synthesize_scene: sample_rate must be > 0");
    if (!(duration > 0.0)) throw ShapeError("synthesize_scene: duration must be > 0");
    array.validate();
    for (const auto& src : scene.sources)
        if (!(src.position.z > 0.0) || !src.position.finite())
            throw InvalidSceneError("synthesize_scene: source must lie in front of the array (z > 0)");

    const auto n_samples = static_cast<std::size_t>(std::llround(duration * sample_rate));
    if (n_samples < 1) throw ShapeError("synthesize_scene: duration yields no samples");
    MultichannelSignal out(sample_rate, array.mics.size(), n_samples);

    double source_power = 0.0;
    for (std::size_t si = 0; si < scene.sources.size(); ++si) {
        const auto& src = scene.sources[si];
        const auto base = detail::render_source_signal(src, sample_rate, n_samples, scene.seed, si);
        for (std::size_t c = 0; c < array.mics.size(); ++c) {
            const double r = distance(src.position, array.mics[c]);
            const double delay = r / scene.speed_of_sound * sample_rate;
            const double gain = src.level / std::max(r, 1e-6);
            detail::add_delayed(base, delay, gain, out.channels[c]);
            for (const auto& echo : src.echoes)
                detail::add_delayed(base, delay + echo.delay_s * sample_rate, gain * echo.gain,
                                    out.channels[c]);
        }
    }
    for (const auto& ch : out.channels)
        for (double v : ch) source_power += v * v;
    source_power /= static_cast<double>(out.channel_count() * n_samples);

    if (scene.snr_db || scene.sources.empty()) {
        // Zero sources: emit unit-variance noise so the frame is usable as a
        // calibration silence frame.
        double sigma = 1.0;
        if (!scene.sources.empty())
            sigma = std::sqrt(source_power / std::pow(10.0, *scene.snr_db / 10.0));
        if (sigma > 0.0) {
            for (std::size_t c = 0; c < out.channel_count(); ++c) {
                auto rng = seeded_rng(scene.seed, "channel_noise", c);
                std::normal_distribution<double> gauss(0.0, sigma);
                for (auto& v : out.channels[c]) v += gauss(rng);
            }
        }
    }
    return out;
}

// Ground truth attached to each rendered sprite.
struct SpriteTruth {
    std::string identity;
    Rect box;
    Pixel eye_left;
    Pixel eye_right;
};

struct FrameRender {
    GrayImage image;
    std::vector<SpriteTruth> truths;
};

namespace detail {

// Per-identity appearance parameters, a pure function of the label.
struct SpriteStyle {
    double face_level;
    double stripe_amp;
    double stripe_freq;
    double stripe_angle;
    double brow_level;
    bool has_mouth;
};

inline SpriteStyle sprite_style(const std::string& identity) {
    const std::uint64_t h = fnv1a(identity);
    SpriteStyle s;
    s.face_level = 150.0 + static_cast<double>(h % 71);               // 150..220
    s.stripe_amp = 8.0 + static_cast<double>((h >> 8) % 18);          // 8..25
    s.stripe_freq = 2.0 + static_cast<double>((h >> 16) % 5);         // 2..6 cycles
    s.stripe_angle = (static_cast<double>((h >> 24) % 180)) * std::numbers::pi / 180.0;
    s.brow_level = 60.0 + static_cast<double>((h >> 32) % 50);
    s.has_mouth = ((h >> 40) & 1) == 0;
    return s;
}

inline std::uint8_t clamp_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

// Paints one face sprite. (cx, cy) is the sprite center; s the edge length.
// Eyes land at the canonical fractions (0.3, 0.35) / (0.7, 0.35) of the
// sprite box, which is also where the recognizer anchors faces.
inline SpriteTruth paint_sprite(GrayImage& img, const FaceSprite& sprite) {
    const double s = sprite.scale;
    const double x0 = sprite.x - s / 2.0;
    const double y0 = sprite.y - s / 2.0;
    const SpriteStyle style = sprite_style(sprite.identity);

    const double face_cx = sprite.x;
    const double face_cy = sprite.y;
    const double face_rx = 0.46 * s;
    const double face_ry = 0.50 * s;
    const Pixel eye_l{x0 + 0.3 * s, y0 + 0.35 * s};
    const Pixel eye_r{x0 + 0.7 * s, y0 + 0.35 * s};
    const double eye_r2 = std::pow(0.075 * s, 2);
    const double ca = std::cos(style.stripe_angle), sa = std::sin(style.stripe_angle);

    const int px0 = static_cast<int>(std::floor(x0)), px1 = static_cast<int>(std::ceil(x0 + s));
    const int py0 = static_cast<int>(std::floor(y0)), py1 = static_cast<int>(std::ceil(y0 + s));
    for (int py = std::max(0, py0); py < std::min(img.height, py1); ++py) {
        for (int px = std::max(0, px0); px < std::min(img.width, px1); ++px) {
            const double dx = (px - face_cx) / face_rx;
            const double dy = (py - face_cy) / face_ry;
            if (dx * dx + dy * dy > 1.0) continue;
            const double u = (px - x0) / s, v = (py - y0) / s;
            double val = style.face_level +
                         style.stripe_amp *
                             std::sin(2.0 * std::numbers::pi * style.stripe_freq * (u * ca + v * sa));
            // Brow band above the eyes.
            if (v > 0.18 && v < 0.26) val = style.brow_level;
            // Mouth bar.
            if (style.has_mouth && v > 0.72 && v < 0.80 && u > 0.32 && u < 0.68) val = 70.0;
            const double del2 = std::pow(px - eye_l.x, 2) + std::pow(py - eye_l.y, 2);
            const double der2 = std::pow(px - eye_r.x, 2) + std::pow(py - eye_r.y, 2);
            if (del2 < eye_r2 || der2 < eye_r2) val = 25.0;
            img.at(px, py) = clamp_u8(val);
        }
    }

    SpriteTruth truth;
    truth.identity = sprite.identity;
    truth.box = Rect{static_cast<int>(std::lround(x0)), static_cast<int>(std::lround(y0)),
                     static_cast<int>(std::lround(s)), static_cast<int>(std::lround(s))};
    truth.eye_left = eye_l;
    truth.eye_right = eye_r;
    return truth;
}

}  // namespace detail

// Deterministic camera frame: low-contrast textured background plus one
// face sprite per scene entry. Ground-truth boxes and eye positions come
// back alongside the pixels.
inline FrameRender render_synthetic_frame(const SceneDescription& scene, int width, int height) {
    if (width < 1 || height < 1) throw ShapeError("render_synthetic_frame: bad frame size");
    for (const auto& sp : scene.face_sprites) {
        if (!(sp.scale >= 8.0))
            throw InvalidSceneError("render_synthetic_frame: sprite scale must be >= 8 px");
        if (sp.x - sp.scale / 2.0 < 0.0 || sp.y - sp.scale / 2.0 < 0.0 ||
            sp.x + sp.scale / 2.0 > width || sp.y + sp.scale / 2.0 > height)
            throw InvalidSceneError("render_synthetic_frame: sprite out of frame bounds");
    }

    FrameRender out;
    out.image = GrayImage(width, height);
    auto rng = seeded_rng(scene.seed, "background");
    std::normal_distribution<double> gauss(0.0, 6.0);
    // Smooth horizontal ramp plus fine grain; stays far from face contrast.
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double base = 88.0 + 14.0 * std::sin(2.0 * std::numbers::pi * x / width);
            out.image.at(x, y) = detail::clamp_u8(base + gauss(rng));
        }
    for (const auto& sp : scene.face_sprites) out.truths.push_back(detail::paint_sprite(out.image, sp));
    return out;
}

}  // namespace avsid
