#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "avsid/detection.hpp"
#include "avsid/error.hpp"
#include "avsid/geometry.hpp"
#include "avsid/image.hpp"
#include "avsid/linalg.hpp"

namespace avsid {

inline constexpr int kCanonicalFaceSize = 64;
inline constexpr int kUnknownLabel = -1;

// Eye anchor fractions of the canonical square: (0.3, 0.35) and (0.7, 0.35).
inline Pixel canonical_left_eye(int size = kCanonicalFaceSize) { return {0.3 * size, 0.35 * size}; }
inline Pixel canonical_right_eye(int size = kCanonicalFaceSize) { return {0.7 * size, 0.35 * size}; }

struct FaceSample {
    int label = 0;
    GrayImage image;
};

struct FaceDataset {
    std::vector<FaceSample> samples;

    void validate() const {
        if (samples.empty()) throw InvalidTrainingError("dataset is empty");
        const int w = samples.front().image.width;
        const int h = samples.front().image.height;
        if (w < 3 || h < 3) throw InvalidTrainingError("dataset images too small");
        for (const auto& s : samples) {
            if (s.image.width != w || s.image.height != h)
                throw InvalidTrainingError("dataset images must share dimensions");
            if (s.label < 0) throw InvalidTrainingError("dataset labels must be non-negative");
        }
    }

    int class_count() const {
        std::vector<int> seen;
        for (const auto& s : samples)
            if (std::find(seen.begin(), seen.end(), s.label) == seen.end()) seen.push_back(s.label);
        return static_cast<int>(seen.size());
    }
};

// ---------------------------------------------------------------------------
// Preprocessing: eye localization, similarity warp, masked equalization.

// Darkest small blob inside a fractional sub-window of the face box,
// found with a box filter over the integral image.
namespace detail {

struct BlobHit {
    Pixel center;
    double mean;
};

inline BlobHit darkest_blob(const IntegralImage& ii, const Rect& box, double u0, double u1,
                            double v0, double v1, int radius) {
    const int x0 = std::max(box.x + static_cast<int>(std::lround(u0 * box.w)), radius);
    const int x1 = std::min(box.x + static_cast<int>(std::lround(u1 * box.w)), ii.width - 1 - radius);
    const int y0 = std::max(box.y + static_cast<int>(std::lround(v0 * box.h)), radius);
    const int y1 = std::min(box.y + static_cast<int>(std::lround(v1 * box.h)), ii.height - 1 - radius);
    BlobHit best{{0.0, 0.0}, std::numeric_limits<double>::infinity()};
    const double area = static_cast<double>(2 * radius + 1) * (2 * radius + 1);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double mean =
                static_cast<double>(rect_sum(ii, x - radius, y - radius, 2 * radius + 1, 2 * radius + 1)) /
                area;
            if (mean < best.mean) best = {{static_cast<double>(x), static_cast<double>(y)}, mean};
        }
    }
    return best;
}

}  // namespace detail

struct EyePair {
    Pixel left;
    Pixel right;
};

// Searches the upper face half for two dark blobs. Returns nothing when the
// candidates are not clearly darker than their surroundings (i.e. the box
// does not look like a face).
inline std::optional<EyePair> detect_eyes(const GrayImage& img, const Rect& box) {
    if (box.w < 16 || box.h < 16 || box.x < 0 || box.y < 0 || box.x + box.w > img.width ||
        box.y + box.h > img.height)
        return std::nullopt;
    const IntegralImage ii = integral_image(img);
    const int radius = std::max(1, static_cast<int>(std::lround(0.06 * box.w)));
    const auto left = detail::darkest_blob(ii, box, 0.15, 0.48, 0.25, 0.50, radius);
    const auto right = detail::darkest_blob(ii, box, 0.52, 0.85, 0.25, 0.50, radius);
    if (!std::isfinite(left.mean) || !std::isfinite(right.mean)) return std::nullopt;
    const double face_mean = static_cast<double>(rect_sum(ii, box.x, box.y, box.w, box.h)) /
                             (static_cast<double>(box.w) * box.h);
    if (left.mean >= 0.8 * face_mean || right.mean >= 0.8 * face_mean) return std::nullopt;
    return EyePair{left.center, right.center};
}

namespace detail {

inline double bilinear_sample(const GrayImage& img, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = img.at(x0, y0) * (1.0 - fx) + img.at(x1, y0) * fx;
    const double bottom = img.at(x0, y1) * (1.0 - fx) + img.at(x1, y1) * fx;
    return top * (1.0 - fy) + bottom * fy;
}

}  // namespace detail

// Rotation + uniform scale + translation taking the detected eye pair onto
// the canonical anchors, expressed as one complex multiply-add and applied
// by inverse mapping with bilinear sampling.
inline GrayImage warp_to_canonical(const GrayImage& img, Pixel eye_left, Pixel eye_right,
                                   int out_size = kCanonicalFaceSize) {
    using Cx = std::complex<double>;
    const Cx src_l(eye_left.x, eye_left.y);
    const Cx src_r(eye_right.x, eye_right.y);
    const Cx dst_l(canonical_left_eye(out_size).x, canonical_left_eye(out_size).y);
    const Cx dst_r(canonical_right_eye(out_size).x, canonical_right_eye(out_size).y);
    if (std::abs(src_r - src_l) < 1e-9)
        throw PreprocessingError("warp_to_canonical: eye positions coincide");
    const Cx a = (dst_r - dst_l) / (src_r - src_l);
    const Cx b = dst_l - a * src_l;
    GrayImage out;
    out.width = out_size;
    out.height = out_size;
    out.pixels.assign(static_cast<std::size_t>(out_size) * out_size, 0);
    for (int y = 0; y < out_size; ++y) {
        for (int x = 0; x < out_size; ++x) {
            const Cx src = (Cx(x, y) - b) / a;
            const double v = detail::bilinear_sample(img, src.real(), src.imag());
            out.pixels[static_cast<std::size_t>(y) * out_size + x] =
                static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    }
    return out;
}

// Oval face-region mask: center (0.5, 0.55) of the square, semi-axes
// (0.39, 0.55), which keeps eyes/brows/mouth and drops corners and hair.
inline std::vector<std::uint8_t> face_ellipse_mask(int size = kCanonicalFaceSize) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(size) * size, 0);
    const double cx = 0.5 * size, cy = 0.55 * size;
    const double rx = 0.39 * size, ry = 0.55 * size;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double dx = (x - cx) / rx, dy = (y - cy) / ry;
            if (dx * dx + dy * dy <= 1.0) mask[static_cast<std::size_t>(y) * size + x] = 1;
        }
    }
    return mask;
}

// Histogram equalization computed from pixels under the mask only; pixels
// outside the mask come out 0 so the background can never contribute.
inline GrayImage equalize_masked(const GrayImage& img, const std::vector<std::uint8_t>& mask) {
    if (mask.size() != img.pixels.size())
        throw ShapeError("equalize_masked: mask size mismatch");
    std::array<std::int64_t, 256> hist{};
    std::int64_t count = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) {
            ++hist[img.pixels[i]];
            ++count;
        }
    }
    GrayImage out = img;
    if (count == 0) {
        std::fill(out.pixels.begin(), out.pixels.end(), 0);
        return out;
    }
    std::array<std::int64_t, 256> cdf{};
    std::int64_t running = 0;
    std::int64_t cdf_min = 0;
    for (int v = 0; v < 256; ++v) {
        running += hist[v];
        cdf[v] = running;
        if (cdf_min == 0 && hist[v] > 0) cdf_min = running;
    }
    std::array<std::uint8_t, 256> lut{};
    const std::int64_t denom = std::max<std::int64_t>(count - cdf_min, 1);
    for (int v = 0; v < 256; ++v) {
        const double mapped = 255.0 * static_cast<double>(cdf[v] - cdf_min) / static_cast<double>(denom);
        lut[v] = static_cast<std::uint8_t>(std::clamp(std::lround(mapped), 0L, 255L));
    }
    for (std::size_t i = 0; i < mask.size(); ++i)
        out.pixels[i] = mask[i] ? lut[img.pixels[i]] : 0;
    return out;
}

// Full chain with known eye positions: warp, mask, equalize.
inline GrayImage preprocess_face(const GrayImage& img, Pixel eye_left, Pixel eye_right,
                                 int out_size = kCanonicalFaceSize) {
    const GrayImage warped = warp_to_canonical(img, eye_left, eye_right, out_size);
    return equalize_masked(warped, face_ellipse_mask(out_size));
}

// Full chain from a detector box; throws when no eye pair can be located.
inline GrayImage preprocess_face(const GrayImage& img, const Rect& face_box,
                                 int out_size = kCanonicalFaceSize) {
    const auto eyes = detect_eyes(img, face_box);
    if (!eyes) throw PreprocessingError("preprocess_face: could not locate eyes in box");
    return preprocess_face(img, eyes->left, eyes->right, out_size);
}

// ---------------------------------------------------------------------------
// Distances and k-nearest-neighbour voting shared by all three recognizers.

enum class DistanceKind { kEuclidean, kChiSquare };

inline double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeError("euclidean_distance: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc);
}

inline double chi_square_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeError("chi_square_distance: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double s = a[i] + b[i];
        if (s > 0.0) acc += (a[i] - b[i]) * (a[i] - b[i]) / s;
    }
    return acc;
}

inline double feature_distance(const std::vector<double>& a, const std::vector<double>& b,
                               DistanceKind kind) {
    return kind == DistanceKind::kEuclidean ? euclidean_distance(a, b) : chi_square_distance(a, b);
}

struct RecognitionResult {
    int label = kUnknownLabel;
    bool unknown = true;
    double nearest_distance = std::numeric_limits<double>::infinity();
};

// Majority vote over the k nearest gallery entries. Vote ties break to the
// candidate with the smaller mean distance among its voters, then to the
// lower label id. A nearest distance beyond the threshold means UNKNOWN.
inline RecognitionResult knn_classify(const std::vector<std::vector<double>>& gallery,
                                      const std::vector<int>& labels,
                                      const std::vector<double>& query, int k, DistanceKind kind,
                                      double unknown_threshold) {
    if (gallery.empty() || gallery.size() != labels.size())
        throw InvalidTrainingError("knn_classify: empty or inconsistent gallery");
    if (k < 1) throw InvalidTrainingError("knn_classify: k must be >= 1");

    std::vector<std::pair<double, int>> scored;  // (distance, label)
    scored.reserve(gallery.size());
    for (std::size_t i = 0; i < gallery.size(); ++i)
        scored.emplace_back(feature_distance(gallery[i], query, kind), labels[i]);
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    RecognitionResult result;
    result.nearest_distance = scored.front().first;
    if (result.nearest_distance > unknown_threshold) return result;  // stays UNKNOWN

    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), scored.size());
    struct Tally {
        int count = 0;
        double total = 0.0;
    };
    std::map<int, Tally> votes;
    for (std::size_t i = 0; i < kk; ++i) {
        auto& t = votes[scored[i].second];
        ++t.count;
        t.total += scored[i].first;
    }
    int best_label = kUnknownLabel;
    Tally best{};
    for (const auto& [label, tally] : votes) {
        const double mean = tally.total / tally.count;
        const double best_mean = best.count > 0 ? best.total / best.count : 0.0;
        const bool better = best_label == kUnknownLabel || tally.count > best.count ||
                            (tally.count == best.count && mean < best_mean);
        // std::map iterates labels ascending, so equal count and equal mean
        // keeps the lower label already held.
        if (better) {
            best_label = label;
            best = tally;
        }
    }
    result.label = best_label;
    result.unknown = false;
    return result;
}

// mean + 2 sigma of each gallery entry's nearest-neighbour distance to the
// rest of the gallery.
inline double calibrate_unknown_threshold(const std::vector<std::vector<double>>& gallery,
                                          DistanceKind kind) {
    if (gallery.size() < 2)
        throw InvalidTrainingError("calibrate_unknown_threshold: need at least two gallery entries");
    std::vector<double> nearest;
    nearest.reserve(gallery.size());
    for (std::size_t i = 0; i < gallery.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < gallery.size(); ++j) {
            if (i == j) continue;
            best = std::min(best, feature_distance(gallery[i], gallery[j], kind));
        }
        nearest.push_back(best);
    }
    double mean = 0.0;
    for (double d : nearest) mean += d;
    mean /= static_cast<double>(nearest.size());
    double var = 0.0;
    for (double d : nearest) var += (d - mean) * (d - mean);
    var /= static_cast<double>(nearest.size());
    return mean + 2.0 * std::sqrt(var);
}

// ---------------------------------------------------------------------------
// Eigenfaces.

namespace detail {

inline std::vector<double> image_as_vector(const GrayImage& img) {
    std::vector<double> v(img.pixels.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(img.pixels[i]);
    return v;
}

// Flips each column so its largest-magnitude coordinate is positive; makes
// the eigenbasis byte-stable regardless of rotation-order quirks.
inline void canonicalize_column_signs(Matrix& m) {
    for (int c = 0; c < m.cols; ++c) {
        double best = 0.0;
        for (int r = 0; r < m.rows; ++r)
            if (std::abs(m(r, c)) > std::abs(best)) best = m(r, c);
        if (best < 0.0)
            for (int r = 0; r < m.rows; ++r) m(r, c) = -m(r, c);
    }
}

}  // namespace detail

struct EigenfacesModel {
    int image_w = 0;
    int image_h = 0;
    std::vector<double> mean;       // pixel-space average face
    Matrix basis;                    // (w*h) x E, orthonormal columns
    std::vector<double> eigenvalues;  // descending, one per kept component
    std::vector<std::vector<double>> gallery;  // training projections
    std::vector<int> labels;
    double unknown_threshold = std::numeric_limits<double>::infinity();
};

inline std::vector<double> project_face(const EigenfacesModel& model, const GrayImage& img) {
    if (img.width != model.image_w || img.height != model.image_h)
        throw ShapeError("project_face: image does not match model dimensions");
    std::vector<double> centered = detail::image_as_vector(img);
    for (std::size_t i = 0; i < centered.size(); ++i) centered[i] -= model.mean[i];
    std::vector<double> w(static_cast<std::size_t>(model.basis.cols), 0.0);
    for (int c = 0; c < model.basis.cols; ++c) {
        double acc = 0.0;
        for (int r = 0; r < model.basis.rows; ++r) acc += model.basis(r, c) * centered[static_cast<std::size_t>(r)];
        w[static_cast<std::size_t>(c)] = acc;
    }
    return w;
}

// Mean face plus the weighted eigenface sum; pixel values as doubles so
// reconstruction error can be measured without quantization.
inline std::vector<double> reconstruct_face(const EigenfacesModel& model,
                                            const std::vector<double>& weights) {
    if (static_cast<int>(weights.size()) != model.basis.cols)
        throw ShapeError("reconstruct_face: weight count mismatch");
    std::vector<double> out = model.mean;
    for (int c = 0; c < model.basis.cols; ++c)
        for (int r = 0; r < model.basis.rows; ++r)
            out[static_cast<std::size_t>(r)] += model.basis(r, c) * weights[static_cast<std::size_t>(c)];
    return out;
}

// PCA on mean-centred faces using the R x R Gram-matrix shortcut: the
// eigenvectors of (A^T A)/R lift to eigenfaces u = A v, unit-normalized.
// Components with eigenvalues below max * 1e-9 are dropped as rank noise.
inline EigenfacesModel train_eigenfaces(const FaceDataset& dataset, int components) {
    dataset.validate();
    if (components < 1) throw InvalidTrainingError("train_eigenfaces: components must be >= 1");
    const int r_count = static_cast<int>(dataset.samples.size());
    if (r_count < 2) throw InvalidTrainingError("train_eigenfaces: need at least two images");

    EigenfacesModel model;
    model.image_w = dataset.samples.front().image.width;
    model.image_h = dataset.samples.front().image.height;
    const int n = model.image_w * model.image_h;

    std::vector<std::vector<double>> faces;
    faces.reserve(static_cast<std::size_t>(r_count));
    for (const auto& s : dataset.samples) faces.push_back(detail::image_as_vector(s.image));

    model.mean.assign(static_cast<std::size_t>(n), 0.0);
    for (const auto& f : faces)
        for (int i = 0; i < n; ++i) model.mean[static_cast<std::size_t>(i)] += f[static_cast<std::size_t>(i)];
    for (int i = 0; i < n; ++i) model.mean[static_cast<std::size_t>(i)] /= static_cast<double>(r_count);
    for (auto& f : faces)
        for (int i = 0; i < n; ++i) f[static_cast<std::size_t>(i)] -= model.mean[static_cast<std::size_t>(i)];

    Matrix gram(r_count, r_count);
    for (int i = 0; i < r_count; ++i) {
        for (int j = i; j < r_count; ++j) {
            double acc = 0.0;
            for (int p = 0; p < n; ++p)
                acc += faces[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)] *
                       faces[static_cast<std::size_t>(j)][static_cast<std::size_t>(p)];
            gram(i, j) = gram(j, i) = acc / static_cast<double>(r_count);
        }
    }
    const EigenDecomposition eig = jacobi_eigen(gram);

    const double cutoff = std::max(eig.values.front(), 0.0) * 1e-9;
    int kept = 0;
    while (kept < r_count && eig.values[static_cast<std::size_t>(kept)] > cutoff) ++kept;
    if (kept == 0) throw InvalidTrainingError("train_eigenfaces: all faces identical");
    const int e_count = std::min(components, kept);

    model.basis = Matrix(n, e_count);
    model.eigenvalues.resize(static_cast<std::size_t>(e_count));
    for (int c = 0; c < e_count; ++c) {
        model.eigenvalues[static_cast<std::size_t>(c)] = eig.values[static_cast<std::size_t>(c)];
        std::vector<double> u(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < r_count; ++i) {
            const double v = eig.vectors(i, c);
            for (int p = 0; p < n; ++p)
                u[static_cast<std::size_t>(p)] += v * faces[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
        }
        double len = 0.0;
        for (double x : u) len += x * x;
        len = std::sqrt(len);
        if (len < 1e-12) throw InvalidTrainingError("train_eigenfaces: degenerate eigenface");
        for (int p = 0; p < n; ++p) model.basis(p, c) = u[static_cast<std::size_t>(p)] / len;
    }
    detail::canonicalize_column_signs(model.basis);

    for (const auto& s : dataset.samples) {
        model.gallery.push_back(project_face(model, s.image));
        model.labels.push_back(s.label);
    }
    if (r_count >= 2)
        model.unknown_threshold = calibrate_unknown_threshold(model.gallery, DistanceKind::kEuclidean);
    return model;
}

// ---------------------------------------------------------------------------
// Fisherfaces.

struct FisherfacesModel {
    int image_w = 0;
    int image_h = 0;
    std::vector<double> mean;
    Matrix projection;  // (w*h) x (C-1), within-class whitened discriminants
    std::vector<std::vector<double>> gallery;
    std::vector<int> labels;
    double unknown_threshold = std::numeric_limits<double>::infinity();
};

inline std::vector<double> project_face(const FisherfacesModel& model, const GrayImage& img) {
    if (img.width != model.image_w || img.height != model.image_h)
        throw ShapeError("project_face: image does not match model dimensions");
    std::vector<double> centered = detail::image_as_vector(img);
    for (std::size_t i = 0; i < centered.size(); ++i) centered[i] -= model.mean[i];
    std::vector<double> w(static_cast<std::size_t>(model.projection.cols), 0.0);
    for (int c = 0; c < model.projection.cols; ++c) {
        double acc = 0.0;
        for (int r = 0; r < model.projection.rows; ++r)
            acc += model.projection(r, c) * centered[static_cast<std::size_t>(r)];
        w[static_cast<std::size_t>(c)] = acc;
    }
    return w;
}

// PCA to (samples - classes) dimensions first, then Fisher's criterion in
// the reduced space: whiten the within-class scatter and diagonalize the
// between-class scatter there. Keeps the C-1 meaningful directions.
inline FisherfacesModel train_fisherfaces(const FaceDataset& dataset) {
    dataset.validate();
    const int r_count = static_cast<int>(dataset.samples.size());
    const int c_count = dataset.class_count();
    if (c_count < 2) throw InvalidTrainingError("train_fisherfaces: need at least two classes");
    if (r_count <= c_count)
        throw SingularScatterError(
            "train_fisherfaces: need more images than classes; add images per class");

    FisherfacesModel model;
    model.image_w = dataset.samples.front().image.width;
    model.image_h = dataset.samples.front().image.height;
    const int n = model.image_w * model.image_h;

    std::vector<std::vector<double>> faces;
    faces.reserve(static_cast<std::size_t>(r_count));
    for (const auto& s : dataset.samples) faces.push_back(detail::image_as_vector(s.image));
    model.mean.assign(static_cast<std::size_t>(n), 0.0);
    for (const auto& f : faces)
        for (int i = 0; i < n; ++i) model.mean[static_cast<std::size_t>(i)] += f[static_cast<std::size_t>(i)];
    for (int i = 0; i < n; ++i) model.mean[static_cast<std::size_t>(i)] /= static_cast<double>(r_count);
    for (auto& f : faces)
        for (int i = 0; i < n; ++i) f[static_cast<std::size_t>(i)] -= model.mean[static_cast<std::size_t>(i)];

    // Total-scatter PCA via the Gram matrix, truncated to at most R - C
    // directions so the reduced within-class scatter can be full rank.
    Matrix gram(r_count, r_count);
    for (int i = 0; i < r_count; ++i)
        for (int j = i; j < r_count; ++j) {
            double acc = 0.0;
            for (int p = 0; p < n; ++p)
                acc += faces[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)] *
                       faces[static_cast<std::size_t>(j)][static_cast<std::size_t>(p)];
            gram(i, j) = gram(j, i) = acc;
        }
    const EigenDecomposition eig = jacobi_eigen(gram);
    const double cutoff = std::max(eig.values.front(), 0.0) * 1e-9;
    int rank = 0;
    while (rank < r_count && eig.values[static_cast<std::size_t>(rank)] > cutoff) ++rank;
    const int m = std::min(r_count - c_count, rank);
    if (m < 1) throw SingularScatterError("train_fisherfaces: total scatter has no usable rank");

    Matrix w_pca(n, m);
    for (int c = 0; c < m; ++c) {
        std::vector<double> u(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < r_count; ++i) {
            const double v = eig.vectors(i, c);
            for (int p = 0; p < n; ++p)
                u[static_cast<std::size_t>(p)] += v * faces[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
        }
        double len = 0.0;
        for (double x : u) len += x * x;
        len = std::sqrt(len);
        for (int p = 0; p < n; ++p) w_pca(p, c) = u[static_cast<std::size_t>(p)] / len;
    }

    // Reduced-space coordinates of every sample.
    std::vector<std::vector<double>> reduced(static_cast<std::size_t>(r_count),
                                             std::vector<double>(static_cast<std::size_t>(m), 0.0));
    for (int i = 0; i < r_count; ++i)
        for (int c = 0; c < m; ++c) {
            double acc = 0.0;
            for (int p = 0; p < n; ++p)
                acc += w_pca(p, c) * faces[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)];
            reduced[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = acc;
        }

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i)
        by_class[dataset.samples[i].label].push_back(i);

    std::vector<double> global_mean(static_cast<std::size_t>(m), 0.0);
    for (const auto& y : reduced)
        for (int c = 0; c < m; ++c) global_mean[static_cast<std::size_t>(c)] += y[static_cast<std::size_t>(c)];
    for (int c = 0; c < m; ++c) global_mean[static_cast<std::size_t>(c)] /= static_cast<double>(r_count);

    Matrix s_b(m, m), s_w(m, m);
    for (const auto& [label, members] : by_class) {
        std::vector<double> class_mean(static_cast<std::size_t>(m), 0.0);
        for (std::size_t idx : members)
            for (int c = 0; c < m; ++c) class_mean[static_cast<std::size_t>(c)] += reduced[idx][static_cast<std::size_t>(c)];
        for (int c = 0; c < m; ++c) class_mean[static_cast<std::size_t>(c)] /= static_cast<double>(members.size());
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                s_b(a, b) += static_cast<double>(members.size()) *
                             (class_mean[static_cast<std::size_t>(a)] - global_mean[static_cast<std::size_t>(a)]) *
                             (class_mean[static_cast<std::size_t>(b)] - global_mean[static_cast<std::size_t>(b)]);
        for (std::size_t idx : members)
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < m; ++b)
                    s_w(a, b) += (reduced[idx][static_cast<std::size_t>(a)] - class_mean[static_cast<std::size_t>(a)]) *
                                 (reduced[idx][static_cast<std::size_t>(b)] - class_mean[static_cast<std::size_t>(b)]);
    }

    double s_b_scale = 0.0;
    for (int a = 0; a < m; ++a) s_b_scale = std::max(s_b_scale, std::abs(s_b(a, a)));
    // S_B + S_W equals the total scatter in these coordinates, so its top
    // eigenvalue is the scale both must be measured against. Flooring the
    // within eigenvalues against S_W's own largest one would let a scatter
    // that is pure roundoff (identical images per class) pass its own test
    // and blow up the whitening step.
    const double scatter_scale = std::max(eig.values.front(), 0.0);
    if (!(s_b_scale > scatter_scale * 1e-12))
        throw DegenerateModelError("train_fisherfaces: class means coincide; nothing to separate");

    const EigenDecomposition within = jacobi_eigen(s_w);
    const double w_floor = scatter_scale * 1e-12;
    for (double v : within.values)
        if (!(v > w_floor))
            throw SingularScatterError(
                "train_fisherfaces: within-class scatter is singular; add images per class");

    // Whitening transform T = V diag(1/sqrt(w)); Fisher directions are the
    // leading eigenvectors of T^T S_B T carried back through T.
    Matrix whiten(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            whiten(a, b) = within.vectors(a, b) / std::sqrt(within.values[static_cast<std::size_t>(b)]);
    const Matrix between_whitened = whiten.transposed() * s_b * whiten;
    const EigenDecomposition fisher = jacobi_eigen(between_whitened);

    const int f_count = c_count - 1;
    Matrix w_fld(m, f_count);
    for (int c = 0; c < f_count; ++c)
        for (int a = 0; a < m; ++a) {
            double acc = 0.0;
            for (int b = 0; b < m; ++b) acc += whiten(a, b) * fisher.vectors(b, c);
            w_fld(a, c) = acc;
        }

    model.projection = w_pca * w_fld;
    detail::canonicalize_column_signs(model.projection);

    for (const auto& s : dataset.samples) {
        model.gallery.push_back(project_face(model, s.image));
        model.labels.push_back(s.label);
    }
    model.unknown_threshold = calibrate_unknown_threshold(model.gallery, DistanceKind::kEuclidean);
    return model;
}

// ---------------------------------------------------------------------------
// Local binary pattern histograms.

// Circular LBP with P sampling points on radius R, bilinear interpolation,
// bit p set when the sample at angle 2*pi*p/P is >= the center.
inline unsigned lbp_code_circular(const GrayImage& img, int x, int y, int neighbors, double radius) {
    if (neighbors < 1 || neighbors > 24)
        throw ShapeError("lbp_code_circular: neighbors must be in [1, 24]");
    const double center = img.at_checked(x, y);
    unsigned code = 0;
    for (int p = 0; p < neighbors; ++p) {
        const double angle = 2.0 * std::numbers::pi_v<double> * p / neighbors;
        const double sx = x + radius * std::cos(angle);
        const double sy = y - radius * std::sin(angle);
        if (detail::bilinear_sample(img, sx, sy) - center >= 0.0) code |= 1u << p;
    }
    return code;
}

struct LbphModel {
    int image_w = 0;
    int image_h = 0;
    int grid_x = 8;
    int grid_y = 8;
    int neighbors = 8;
    double radius = 1.0;
    std::vector<std::vector<double>> gallery;  // concatenated cell histograms
    std::vector<int> labels;
    double unknown_threshold = std::numeric_limits<double>::infinity();
};

// Concatenated per-cell code histograms. Only pixels whose sampling circle
// fits inside the image contribute, so border cells just count fewer pixels.
inline std::vector<double> lbph_descriptor(const GrayImage& img, int grid_x, int grid_y,
                                           int neighbors, double radius) {
    if (grid_x < 1 || grid_y < 1) throw InvalidGridError("lbph_descriptor: grid must be >= 1x1");
    const int cell_w = img.width / grid_x;
    const int cell_h = img.height / grid_y;
    if (cell_w < 3 || cell_h < 3)
        throw InvalidGridError("lbph_descriptor: cells smaller than 3x3 pixels");
    const int bins = 1 << neighbors;
    std::vector<double> desc(static_cast<std::size_t>(grid_x) * grid_y * bins, 0.0);
    const int margin = static_cast<int>(std::ceil(radius));
    for (int gy = 0; gy < grid_y; ++gy) {
        for (int gx = 0; gx < grid_x; ++gx) {
            const std::size_t base = (static_cast<std::size_t>(gy) * grid_x + gx) * bins;
            const int x0 = gx * cell_w, y0 = gy * cell_h;
            const int x1 = gx + 1 == grid_x ? img.width : x0 + cell_w;
            const int y1 = gy + 1 == grid_y ? img.height : y0 + cell_h;
            for (int y = y0; y < y1; ++y) {
                if (y < margin || y >= img.height - margin) continue;
                for (int x = x0; x < x1; ++x) {
                    if (x < margin || x >= img.width - margin) continue;
                    desc[base + lbp_code_circular(img, x, y, neighbors, radius)] += 1.0;
                }
            }
        }
    }
    return desc;
}

inline std::vector<double> project_face(const LbphModel& model, const GrayImage& img) {
    if (img.width != model.image_w || img.height != model.image_h)
        throw ShapeError("project_face: image does not match model dimensions");
    return lbph_descriptor(img, model.grid_x, model.grid_y, model.neighbors, model.radius);
}

inline LbphModel train_lbph(const FaceDataset& dataset, double radius = 1.0, int neighbors = 8,
                            int grid_x = 8, int grid_y = 8) {
    dataset.validate();
    if (neighbors < 1 || neighbors > 16)
        throw InvalidTrainingError("train_lbph: neighbors must be in [1, 16]");
    if (radius <= 0.0) throw InvalidTrainingError("train_lbph: radius must be positive");
    LbphModel model;
    model.image_w = dataset.samples.front().image.width;
    model.image_h = dataset.samples.front().image.height;
    model.grid_x = grid_x;
    model.grid_y = grid_y;
    model.neighbors = neighbors;
    model.radius = radius;
    for (const auto& s : dataset.samples) {
        model.gallery.push_back(project_face(model, s.image));
        model.labels.push_back(s.label);
    }
    if (model.gallery.size() >= 2)
        model.unknown_threshold = calibrate_unknown_threshold(model.gallery, DistanceKind::kChiSquare);
    return model;
}

// ---------------------------------------------------------------------------
// Unified front end.

using FaceRecognizer = std::variant<EigenfacesModel, FisherfacesModel, LbphModel>;

inline DistanceKind recognizer_distance(const FaceRecognizer& model) {
    return std::holds_alternative<LbphModel>(model) ? DistanceKind::kChiSquare
                                                    : DistanceKind::kEuclidean;
}

inline RecognitionResult recognize_face(const FaceRecognizer& model, const GrayImage& face,
                                        int k = 1,
                                        std::optional<double> threshold_override = std::nullopt) {
    return std::visit(
        [&](const auto& m) {
            const double threshold = threshold_override.value_or(m.unknown_threshold);
            return knn_classify(m.gallery, m.labels, project_face(m, face), k,
                                recognizer_distance(model), threshold);
        },
        model);
}

}  // namespace avsid
