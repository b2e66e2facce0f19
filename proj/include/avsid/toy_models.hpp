#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "avsid/detection.hpp"
#include "avsid/image.hpp"
#include "avsid/recognition.hpp"
#include "avsid/rng.hpp"
#include "avsid/scene.hpp"

namespace avsid {

// Hand-built three-stage frontal cascade for the synthetic sprites. All
// features are differential, so the textured background (a horizontal ramp
// plus grain) measures ~0 while the sprite's dark eye/brow band measures
// several gray levels; thresholds sit well past the noise floor. Stages
// get progressively more specific: dark band, then the horizontal
// eye-bright-eye layout, then each eye separately.
inline CascadeModel toy_face_cascade() {
    CascadeModel model;
    model.base_w = 24;
    model.base_h = 24;
    model.kind = CascadeFeatureKind::kHaar;

    auto weak = [](HaarFeatureType type, int x, int y, int w, int h, double threshold) {
        WeakClassifier wc;
        wc.feature = make_haar_feature(type, x, y, w, h);
        wc.threshold = threshold;
        wc.parity = 1;  // vote when f < threshold (dark-over-bright responses)
        return wc;
    };

    CascadeStage stage0;  // brow+eye band darker than mid-face
    stage0.weak.push_back(weak(HaarFeatureType::kTwoRectV, 5, 4, 14, 12, -2.0));
    stage0.threshold = 1.0;

    CascadeStage stage1;  // eye row vs cheeks, and eye-bridge-eye across
    stage1.weak.push_back(weak(HaarFeatureType::kTwoRectV, 4, 6, 16, 8, -1.5));
    stage1.weak.push_back(weak(HaarFeatureType::kThreeRectH, 3, 6, 18, 5, -1.5));
    stage1.threshold = 2.0;

    CascadeStage stage2;  // each eye on its own, plus a wide confirmation
    stage2.weak.push_back(weak(HaarFeatureType::kTwoRectV, 4, 6, 6, 8, -0.5));
    stage2.weak.push_back(weak(HaarFeatureType::kTwoRectV, 14, 6, 6, 8, -0.5));
    stage2.weak.push_back(weak(HaarFeatureType::kTwoRectV, 3, 5, 18, 10, -1.2));
    stage2.threshold = 3.0;

    model.stages = {stage0, stage1, stage2};
    model.validate();
    return model;
}

// Minimal LBP cascade over the same sprites: the eye discs are painted
// flat, so the code at each eye center is exactly 255, while grainy
// background hits 255 at a given pixel only ~0.4% of the time, let alone
// at both eye positions at once.
inline CascadeModel toy_lbp_face_cascade() {
    CascadeModel model;
    model.base_w = 24;
    model.base_h = 24;
    model.kind = CascadeFeatureKind::kLbp;

    // Code 255 means the center pixel is <= all eight neighbours, which is
    // true everywhere inside a flat dark blob but also at roughly 1/9 of
    // pixels in pure grain. Demanding a 2x2 block of 255s inside each pupil
    // pushes the grain false-fire rate to (1/9)^8. A second stage requires
    // the pixels just outside the pupils to be non-flat, which rejects
    // featureless patches (brow band, plain wall) where every probe is 255.
    CascadeStage pupils;
    for (int ex : {7, 17})
        for (const auto& [dx, dy] : {std::pair{0, 0}, {1, 0}, {0, 1}, {1, 1}}) {
            LbpWindowEntry win;
            win.x = ex + dx;
            win.y = 8 + dy;
            win.table[255] = 1.0;
            pupils.lbp_windows.push_back(win);
        }
    pupils.threshold = 7.5;

    CascadeStage rims;
    for (const auto& [x, y] : {std::pair{5, 8}, {9, 8}, {15, 8}, {19, 8}}) {
        LbpWindowEntry win;
        win.x = x;
        win.y = y;
        win.table.fill(1.0);
        win.table[255] = 0.0;
        rims.lbp_windows.push_back(win);
    }
    rims.threshold = 2.5;

    model.stages = {pupils, rims};
    model.validate();
    return model;
}

struct FaceDatasetOptions {
    int classes = 5;
    int samples_per_class = 6;
    std::uint64_t seed = 7;
    double eye_jitter_px = 1.0;      // simulated eye-localization error
    double brightness_jitter = 12.0; // global offset, gray levels
    double noise_sigma = 4.0;        // per-pixel additive noise
    double scale_jitter = 0.06;     // relative sprite size variation
    double shift_px = 2.0;          // sprite placement variation
    int canvas = 96;                // render canvas edge, >= 1.3 * sprite
};

inline std::string synthetic_identity_name(int label) { return "person-" + std::to_string(label); }

// Renders each roster identity's sprite repeatedly with placement, size,
// brightness, pixel-noise, and eye-anchor jitter, then runs the standard
// preprocessing to canonical form. Jitter amounts make the recognition
// task non-trivial without detaching it from the identity signal. Labels
// are roster indices.
inline FaceDataset make_face_dataset(const std::vector<std::string>& roster,
                                     const FaceDatasetOptions& opt = {}) {
    if (roster.empty() || opt.samples_per_class < 1)
        throw InvalidTrainingError("make_face_dataset: need identities and samples >= 1");
    FaceDataset dataset;
    for (int cls = 0; cls < static_cast<int>(roster.size()); ++cls) {
        for (int sample = 0; sample < opt.samples_per_class; ++sample) {
            auto rng = seeded_rng(opt.seed, "face_dataset",
                                  static_cast<std::uint64_t>(cls) * 10000 + static_cast<std::uint64_t>(sample));
            std::uniform_real_distribution<double> unit(-1.0, 1.0);

            const double scale = 64.0 * (1.0 + opt.scale_jitter * unit(rng));
            FaceSprite sprite;
            sprite.identity = roster[static_cast<std::size_t>(cls)];
            sprite.x = opt.canvas / 2.0 + opt.shift_px * unit(rng);
            sprite.y = opt.canvas / 2.0 + opt.shift_px * unit(rng);
            sprite.scale = scale;

            GrayImage canvas(opt.canvas, opt.canvas, 88);
            const SpriteTruth truth = detail::paint_sprite(canvas, sprite);

            const double brightness = opt.brightness_jitter * unit(rng);
            std::normal_distribution<double> grain(0.0, opt.noise_sigma);
            for (auto& px : canvas.pixels)
                px = detail::clamp_u8(static_cast<double>(px) + brightness + grain(rng));

            const Pixel eye_l{truth.eye_left.x + opt.eye_jitter_px * unit(rng),
                              truth.eye_left.y + opt.eye_jitter_px * unit(rng)};
            const Pixel eye_r{truth.eye_right.x + opt.eye_jitter_px * unit(rng),
                              truth.eye_right.y + opt.eye_jitter_px * unit(rng)};
            dataset.samples.push_back(FaceSample{cls, preprocess_face(canvas, eye_l, eye_r)});
        }
    }
    return dataset;
}

inline FaceDataset make_synthetic_face_dataset(const FaceDatasetOptions& opt = {}) {
    std::vector<std::string> roster;
    for (int cls = 0; cls < opt.classes; ++cls) roster.push_back(synthetic_identity_name(cls));
    return make_face_dataset(roster, opt);
}

}  // namespace avsid
