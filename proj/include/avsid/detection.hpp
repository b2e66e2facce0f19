#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "avsid/error.hpp"
#include "avsid/image.hpp"

namespace avsid {

// (w+1) x (h+1) cumulative-sum table; entry (x, y) is the sum of all
// pixels strictly above and left of (x, y).
struct IntegralImage {
    int width = 0;   // source image width
    int height = 0;
    std::vector<std::int64_t> table;

    std::int64_t at(int x, int y) const { return table[static_cast<std::size_t>(y) * (width + 1) + x]; }
};

inline IntegralImage integral_image(const GrayImage& img) {
    IntegralImage ii;
    ii.width = img.width;
    ii.height = img.height;
    ii.table.assign(static_cast<std::size_t>(img.width + 1) * (img.height + 1), 0);
    for (int y = 0; y < img.height; ++y) {
        std::int64_t row = 0;
        for (int x = 0; x < img.width; ++x) {
            row += img.at(x, y);
            // I(x+1, y+1) = I(x+1, y) + sum of this row through x.
            ii.table[static_cast<std::size_t>(y + 1) * (img.width + 1) + (x + 1)] =
                ii.at(x + 1, y) + row;
        }
    }
    return ii;
}

inline std::int64_t rect_sum(const IntegralImage& ii, int x, int y, int w, int h) {
    if (x < 0 || y < 0 || w < 0 || h < 0 || x + w > ii.width || y + h > ii.height)
        throw BoundsError("rect_sum: rectangle out of image bounds");
    return ii.at(x + w, y + h) - ii.at(x, y + h) - ii.at(x + w, y) + ii.at(x, y);
}

enum class HaarFeatureType { kTwoRectH, kTwoRectV, kThreeRectH, kThreeRectV, kFourRect };

struct WeightedRect {
    Rect rect;   // window-relative, inside the base window
    int weight;  // +1 white, -1/-2 black; weights balance area-wise
};

struct HaarFeature {
    HaarFeatureType type = HaarFeatureType::kTwoRectH;
    std::vector<WeightedRect> rects;
};

// Builds the canonical rectangle layout for a feature whose total span is
// (x, y, w, h); w and h must be multiples of the type's unit grid.
inline HaarFeature make_haar_feature(HaarFeatureType type, int x, int y, int w, int h) {
    HaarFeature f;
    f.type = type;
    switch (type) {
        case HaarFeatureType::kTwoRectH: {
            const int cw = w / 2;
            f.rects = {{{x, y, cw, h}, +1}, {{x + cw, y, cw, h}, -1}};
            break;
        }
        case HaarFeatureType::kTwoRectV: {
            const int ch = h / 2;
            f.rects = {{{x, y, w, ch}, +1}, {{x, y + ch, w, ch}, -1}};
            break;
        }
        case HaarFeatureType::kThreeRectH: {
            const int cw = w / 3;
            f.rects = {{{x, y, cw, h}, +1}, {{x + cw, y, cw, h}, -2}, {{x + 2 * cw, y, cw, h}, +1}};
            break;
        }
        case HaarFeatureType::kThreeRectV: {
            const int ch = h / 3;
            f.rects = {{{x, y, w, ch}, +1}, {{x, y + ch, w, ch}, -2}, {{x, y + 2 * ch, w, ch}, +1}};
            break;
        }
        case HaarFeatureType::kFourRect: {
            const int cw = w / 2, ch = h / 2;
            f.rects = {{{x, y, cw, ch}, +1},
                       {{x + cw, y, cw, ch}, -1},
                       {{x, y + ch, cw, ch}, -1},
                       {{x + cw, y + ch, cw, ch}, +1}};
            break;
        }
    }
    return f;
}

namespace detail {

struct HaarUnit {
    HaarFeatureType type;
    int uw;
    int uh;
};

inline constexpr std::array<HaarUnit, 5> kHaarUnits = {{{HaarFeatureType::kTwoRectH, 2, 1},
                                                        {HaarFeatureType::kTwoRectV, 1, 2},
                                                        {HaarFeatureType::kThreeRectH, 3, 1},
                                                        {HaarFeatureType::kThreeRectV, 1, 3},
                                                        {HaarFeatureType::kFourRect, 2, 2}}};

}  // namespace detail

// Every position and scale of the five canonical feature types inside the
// window. 24 x 24 yields 162,336.
inline std::vector<HaarFeature> enumerate_haar_features(int window_w, int window_h) {
    if (window_w < 1 || window_h < 1)
        throw ShapeError("enumerate_haar_features: window must be at least 1 x 1");
    std::vector<HaarFeature> features;
    for (const auto& unit : detail::kHaarUnits) {
        for (int w = unit.uw; w <= window_w; w += unit.uw) {
            for (int h = unit.uh; h <= window_h; h += unit.uh) {
                for (int y = 0; y + h <= window_h; ++y)
                    for (int x = 0; x + w <= window_w; ++x)
                        features.push_back(make_haar_feature(unit.type, x, y, w, h));
            }
        }
    }
    return features;
}

// Closed-form count of the enumeration above; the independent audit for
// the feature census.
inline long long haar_feature_count(int window_w, int window_h) {
    long long total = 0;
    for (const auto& unit : detail::kHaarUnits) {
        for (int w = unit.uw; w <= window_w; w += unit.uw)
            for (int h = unit.uh; h <= window_h; h += unit.uh)
                total += static_cast<long long>(window_w - w + 1) * (window_h - h + 1);
    }
    return total;
}

struct WindowOrigin {
    int x = 0;
    int y = 0;
};

// Mean-intensity contrast of the feature at the given window placement:
// (weighted rect sums, negative weights rescaled so the weighted areas
// balance after rounding) divided by the scaled window area. A flat patch
// therefore measures exactly 0.
inline double eval_haar_feature(const IntegralImage& ii, WindowOrigin origin, double scale,
                                const HaarFeature& feature, int base_w = 24, int base_h = 24) {
    const int win_w = std::max(1, static_cast<int>(std::lround(base_w * scale)));
    const int win_h = std::max(1, static_cast<int>(std::lround(base_h * scale)));
    double pos_area = 0.0, neg_area = 0.0;
    struct Scaled {
        Rect r;
        double weight;
    };
    std::array<Scaled, 4> scaled{};
    std::size_t n = feature.rects.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& wr = feature.rects[i];
        Rect r{origin.x + static_cast<int>(std::lround(wr.rect.x * scale)),
               origin.y + static_cast<int>(std::lround(wr.rect.y * scale)),
               std::max(1, static_cast<int>(std::lround(wr.rect.w * scale))),
               std::max(1, static_cast<int>(std::lround(wr.rect.h * scale)))};
        scaled[i] = {r, static_cast<double>(wr.weight)};
        if (wr.weight > 0)
            pos_area += wr.weight * static_cast<double>(r.area());
        else
            neg_area += -wr.weight * static_cast<double>(r.area());
    }
    const double neg_scale = neg_area > 0.0 ? pos_area / neg_area : 1.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = scaled[i].weight > 0 ? scaled[i].weight : scaled[i].weight * neg_scale;
        acc += w * static_cast<double>(
                       rect_sum(ii, scaled[i].r.x, scaled[i].r.y, scaled[i].r.w, scaled[i].r.h));
    }
    return acc / (static_cast<double>(win_w) * win_h);
}

struct WeakClassifier {
    HaarFeature feature;
    double threshold = 0.0;
    int parity = 1;  // exactly +1 or -1
    double vote_weight = 1.0;
};

// h_j = 1 iff p_j * f_j < p_j * theta_j; parity -1 flips the decision
// region.
inline int eval_weak_classifier(const IntegralImage& ii, WindowOrigin origin, double scale,
                                const WeakClassifier& wc, int base_w = 24, int base_h = 24) {
    if (wc.parity != 1 && wc.parity != -1)
        throw ShapeError("eval_weak_classifier: parity must be +1 or -1");
    const double f = eval_haar_feature(ii, origin, scale, wc.feature, base_w, base_h);
    return wc.parity * f < wc.parity * wc.threshold ? 1 : 0;
}

// Full-image map of 3x3 LBP codes; undefined on the one-pixel border.
struct LbpCodeMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> codes;

    bool defined(int x, int y) const { return x >= 1 && y >= 1 && x < width - 1 && y < height - 1; }

    std::uint8_t at(int x, int y) const {
        if (!defined(x, y)) throw BoundsError("LbpCodeMap: undefined at image border");
        return codes[static_cast<std::size_t>(y) * width + x];
    }
};

// 8-bit LBP code at center (x, y): neighbors compared against the center,
// top-left neighbor as the most significant bit, proceeding clockwise.
// s(d) = 1 for d >= 0, so a flat patch codes as 255.
inline std::uint8_t lbp_code(const GrayImage& img, int x, int y) {
    if (x < 1 || y < 1 || x >= img.width - 1 || y >= img.height - 1)
        throw BoundsError("lbp_code: center needs a full 3x3 neighborhood");
    static constexpr int dx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};  // clockwise from top-left
    static constexpr int dy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
    const int center = img.at(x, y);
    std::uint8_t code = 0;
    for (int k = 0; k < 8; ++k) {
        const int neighbor = img.at(x + dx[k], y + dy[k]);
        if (neighbor - center >= 0) code = static_cast<std::uint8_t>(code | (1u << (7 - k)));
    }
    return code;
}

inline LbpCodeMap build_lbp_code_map(const GrayImage& img) {
    LbpCodeMap map;
    map.width = img.width;
    map.height = img.height;
    map.codes.assign(static_cast<std::size_t>(img.width) * img.height, 0);
    for (int y = 1; y < img.height - 1; ++y)
        for (int x = 1; x < img.width - 1; ++x)
            map.codes[static_cast<std::size_t>(y) * img.width + x] = lbp_code(img, x, y);
    return map;
}

// Number of 0<->1 transitions around the circular 8-bit pattern. Uniform
// patterns have at most two.
inline int lbp_uniformity(std::uint8_t code) {
    const std::uint8_t rotated = static_cast<std::uint8_t>((code << 1) | (code >> 7));
    return std::popcount(static_cast<std::uint8_t>(code ^ rotated));
}

// One scored position of an LBP stage: a histogram table indexed by the
// code observed at the (window-relative) position.
struct LbpWindowEntry {
    int x = 0;
    int y = 0;
    std::array<double, 256> table{};
};

struct CascadeStage {
    double threshold = 0.0;
    std::vector<WeakClassifier> weak;        // Haar stages
    std::vector<LbpWindowEntry> lbp_windows;  // LBP stages
};

enum class CascadeFeatureKind { kHaar, kLbp };

struct CascadeModel {
    int base_w = 24;
    int base_h = 24;
    CascadeFeatureKind kind = CascadeFeatureKind::kHaar;
    std::vector<CascadeStage> stages;

    void validate() const {
        if (base_w < 1 || base_h < 1) throw ShapeError("CascadeModel: bad base window");
        for (const auto& stage : stages) {
            for (const auto& wc : stage.weak)
                for (const auto& wr : wc.feature.rects)
                    if (wr.rect.x < 0 || wr.rect.y < 0 || wr.rect.x + wr.rect.w > base_w ||
                        wr.rect.y + wr.rect.h > base_h)
                        throw BoundsError("CascadeModel: feature rect outside base window");
            // LBP positions stay one pixel inside the window so every scaled
            // placement keeps its full 3x3 neighborhood in the image.
            for (const auto& win : stage.lbp_windows)
                if (win.x < 1 || win.y < 1 || win.x > base_w - 2 || win.y > base_h - 2)
                    throw BoundsError("CascadeModel: LBP position outside base window interior");
        }
    }
};

// H_n(X) = sum over the stage's positions of that position's histogram
// value at the observed code (Eq-style stage score).
inline double lbp_stage_score(const LbpCodeMap& codes, WindowOrigin origin, double scale,
                              const CascadeStage& stage) {
    double score = 0.0;
    for (const auto& win : stage.lbp_windows) {
        const int x = origin.x + static_cast<int>(std::lround(win.x * scale));
        const int y = origin.y + static_cast<int>(std::lround(win.y * scale));
        score += win.table[codes.at(x, y)];
    }
    return score;
}

struct CascadeResult {
    bool accepted = false;
    int rejected_stage = -1;  // -1 when accepted
    int stages_evaluated = 0;
    double score = 0.0;  // accumulated margin over stage thresholds
};

// Runs stages in order; a stage passes when its summed votes (Haar) or
// histogram score (LBP) meets the stage threshold. Stops at the first
// failure.
inline CascadeResult run_cascade(const IntegralImage& ii, const LbpCodeMap* codes,
                                 WindowOrigin origin, double scale, const CascadeModel& model) {
    const int win_w = std::max(1, static_cast<int>(std::lround(model.base_w * scale)));
    const int win_h = std::max(1, static_cast<int>(std::lround(model.base_h * scale)));
    if (origin.x < 0 || origin.y < 0 || origin.x + win_w > ii.width || origin.y + win_h > ii.height)
        throw BoundsError("run_cascade: window outside image");

    CascadeResult result;
    for (std::size_t s = 0; s < model.stages.size(); ++s) {
        const auto& stage = model.stages[s];
        ++result.stages_evaluated;
        double stage_score = 0.0;
        if (model.kind == CascadeFeatureKind::kHaar) {
            for (const auto& wc : stage.weak)
                stage_score +=
                    wc.vote_weight * eval_weak_classifier(ii, origin, scale, wc, model.base_w, model.base_h);
        } else {
            if (codes == nullptr) throw ShapeError("run_cascade: LBP model needs a code map");
            stage_score = lbp_stage_score(*codes, origin, scale, stage);
        }
        if (stage_score < stage.threshold) {
            result.rejected_stage = static_cast<int>(s);
            return result;
        }
        result.score += stage_score - stage.threshold;
    }
    result.accepted = true;
    return result;
}

inline CascadeResult run_cascade(const IntegralImage& ii, WindowOrigin origin, double scale,
                                 const CascadeModel& model) {
    return run_cascade(ii, nullptr, origin, scale, model);
}

struct Detection {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
    double score = 0.0;
    int neighbor_count = 0;

    Rect rect() const { return {x, y, w, h}; }
};

inline constexpr double kMergeIouThreshold = 0.3;

// Groups raw detections into connected components under IoU >= 0.3 and
// averages each sufficiently supported component into one box.
inline std::vector<Detection> merge_detections(const std::vector<Detection>& raw, int min_neighbors) {
    const std::size_t n = raw.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (intersection_over_union(raw[i].rect(), raw[j].rect()) >= kMergeIouThreshold)
                parent[find(i)] = find(j);

    std::vector<std::vector<std::size_t>> clusters;
    std::vector<int> cluster_of(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = find(i);
        if (cluster_of[root] < 0) {
            cluster_of[root] = static_cast<int>(clusters.size());
            clusters.emplace_back();
        }
        clusters[static_cast<std::size_t>(cluster_of[root])].push_back(i);
    }

    std::vector<Detection> merged;
    for (const auto& cluster : clusters) {
        if (static_cast<int>(cluster.size()) < min_neighbors) continue;
        double mx = 0.0, my = 0.0, mw = 0.0, mh = 0.0, ms = 0.0;
        for (std::size_t idx : cluster) {
            mx += raw[idx].x;
            my += raw[idx].y;
            mw += raw[idx].w;
            mh += raw[idx].h;
            ms += raw[idx].score;
        }
        const double inv = 1.0 / static_cast<double>(cluster.size());
        Detection d;
        d.x = static_cast<int>(std::lround(mx * inv));
        d.y = static_cast<int>(std::lround(my * inv));
        d.w = static_cast<int>(std::lround(mw * inv));
        d.h = static_cast<int>(std::lround(mh * inv));
        d.score = ms * inv;
        d.neighbor_count = static_cast<int>(cluster.size());
        merged.push_back(d);
    }
    return merged;
}

// Sliding-window cascade over a scale pyramid of window sizes
// (scale_factor^k), base step scaled proportionally, then merging.
inline std::vector<Detection> detect_multiscale(const GrayImage& img, const CascadeModel& model,
                                                double scale_factor = 1.1, int step = 2,
                                                int min_neighbors = 3) {
    if (!(scale_factor > 1.0)) throw ShapeError("detect_multiscale: scale_factor must be > 1");
    if (step < 1) throw ShapeError("detect_multiscale: step must be >= 1");
    model.validate();

    const IntegralImage ii = integral_image(img);
    LbpCodeMap codes;
    if (model.kind == CascadeFeatureKind::kLbp) codes = build_lbp_code_map(img);
    const LbpCodeMap* codes_ptr = model.kind == CascadeFeatureKind::kLbp ? &codes : nullptr;

    std::vector<Detection> raw;
    for (double scale = 1.0;; scale *= scale_factor) {
        const int win_w = std::max(1, static_cast<int>(std::lround(model.base_w * scale)));
        const int win_h = std::max(1, static_cast<int>(std::lround(model.base_h * scale)));
        if (win_w > img.width || win_h > img.height) break;
        const int scaled_step = std::max(1, static_cast<int>(std::lround(step * scale)));
        for (int y = 0; y + win_h <= img.height; y += scaled_step) {
            for (int x = 0; x + win_w <= img.width; x += scaled_step) {
                const auto result = run_cascade(ii, codes_ptr, {x, y}, scale, model);
                if (result.accepted)
                    raw.push_back(Detection{x, y, win_w, win_h, result.score, 0});
            }
        }
    }
    return merge_detections(raw, min_neighbors);
}

}  // namespace avsid
