#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "avsid/detection.hpp"
#include "avsid/error.hpp"
#include "avsid/fusion.hpp"
#include "avsid/io.hpp"
#include "avsid/localization.hpp"
#include "avsid/mic_array.hpp"
#include "avsid/recognition.hpp"
#include "avsid/rng.hpp"
#include "avsid/scene.hpp"
#include "avsid/serialize.hpp"
#include "avsid/toy_models.hpp"

namespace avsid {

enum class SrpSelection { kAuto, kPhat, kConst };

inline std::string to_string(SrpSelection mode) {
    switch (mode) {
        case SrpSelection::kAuto: return "auto";
        case SrpSelection::kPhat: return "phat";
        case SrpSelection::kConst: return "const";
    }
    return "auto";
}

inline SrpSelection srp_selection_from_string(const std::string& name) {
    if (name == "auto") return SrpSelection::kAuto;
    if (name == "phat") return SrpSelection::kPhat;
    if (name == "const") return SrpSelection::kConst;
    throw FormatError("unknown steering mode \"" + name + "\" (auto|phat|const)");
}

struct ScenarioConfig {
    SceneDescription scene;
    MicArray array = default_double_ring_array();
    SteeringGrid grid = default_steering_grid();
    std::vector<std::string> roster;  // identity names; recognizer labels index this
    int image_w = 640;
    int image_h = 480;
    int frames = 10;
    double sample_rate = 32000.0;
    int frame_samples = 4096;
    SrpSelection mode = SrpSelection::kAuto;
    double bandwidth_threshold_hz = kDefaultBandwidthThresholdHz;
    double peak_floor_scale = 3.0;  // times the median silence-map power
    double detect_scale_factor = 1.1;
    int detect_step = 2;
    int detect_min_neighbors = 3;
    int knn_k = 1;
    std::optional<double> unknown_threshold;  // overrides the calibrated one
    double colocate_fraction = kDefaultColocateFraction;
    double proximity_fraction = kDefaultProximityFraction;
    std::uint64_t seed = 42;

    void validate() const {
        if (image_w < 32 || image_h < 32) throw ShapeError("scenario: image too small");
        if (frames < 1) throw ShapeError("scenario: need at least one frame");
        if (frame_samples < 64) throw ShapeError("scenario: frame_samples too small");
        if (!(sample_rate > 0.0)) throw ShapeError("scenario: sample_rate must be > 0");
        array.validate();
        grid.validate();
    }
};

inline Json scenario_to_json(const ScenarioConfig& config) {
    Json j;
    j["format"] = "avsid-scenario";
    j["version"] = 1;
    j["scene"] = scene_to_json(config.scene);
    j["array"] = array_to_json(config.array);
    j["grid"] = grid_to_json(config.grid);
    j["roster"] = config.roster;
    j["image_w"] = config.image_w;
    j["image_h"] = config.image_h;
    j["frames"] = config.frames;
    j["sample_rate"] = config.sample_rate;
    j["frame_samples"] = config.frame_samples;
    j["mode"] = to_string(config.mode);
    j["bandwidth_threshold_hz"] = config.bandwidth_threshold_hz;
    j["peak_floor_scale"] = config.peak_floor_scale;
    j["detect_scale_factor"] = config.detect_scale_factor;
    j["detect_step"] = config.detect_step;
    j["detect_min_neighbors"] = config.detect_min_neighbors;
    j["knn_k"] = config.knn_k;
    j["unknown_threshold"] =
        config.unknown_threshold ? Json(*config.unknown_threshold) : Json(nullptr);
    j["colocate_fraction"] = config.colocate_fraction;
    j["proximity_fraction"] = config.proximity_fraction;
    j["seed"] = config.seed;
    return j;
}

inline ScenarioConfig scenario_from_json(const Json& j) {
    detail::require_format(j, "avsid-scenario");
    ScenarioConfig config;
    if (j.contains("scene")) config.scene = scene_from_json(j["scene"]);
    if (j.contains("array")) config.array = array_from_json(j["array"]);
    if (j.contains("grid")) config.grid = grid_from_json(j["grid"]);
    if (j.contains("roster")) config.roster = j["roster"].get<std::vector<std::string>>();
    config.image_w = j.value("image_w", config.image_w);
    config.image_h = j.value("image_h", config.image_h);
    config.frames = j.value("frames", config.frames);
    config.sample_rate = j.value("sample_rate", config.sample_rate);
    config.frame_samples = j.value("frame_samples", config.frame_samples);
    if (j.contains("mode")) config.mode = srp_selection_from_string(j["mode"].get<std::string>());
    config.bandwidth_threshold_hz = j.value("bandwidth_threshold_hz", config.bandwidth_threshold_hz);
    config.peak_floor_scale = j.value("peak_floor_scale", config.peak_floor_scale);
    config.detect_scale_factor = j.value("detect_scale_factor", config.detect_scale_factor);
    config.detect_step = j.value("detect_step", config.detect_step);
    config.detect_min_neighbors = j.value("detect_min_neighbors", config.detect_min_neighbors);
    config.knn_k = j.value("knn_k", config.knn_k);
    if (j.contains("unknown_threshold") && !j["unknown_threshold"].is_null())
        config.unknown_threshold = j["unknown_threshold"].get<double>();
    config.colocate_fraction = j.value("colocate_fraction", config.colocate_fraction);
    config.proximity_fraction = j.value("proximity_fraction", config.proximity_fraction);
    config.seed = j.value("seed", config.seed);
    config.validate();
    return config;
}

// If the scenario names no identities, take them from the scene's sprites
// in sorted order.
inline std::vector<std::string> scenario_roster(const ScenarioConfig& config) {
    if (!config.roster.empty()) return config.roster;
    std::vector<std::string> roster;
    for (const auto& sprite : config.scene.face_sprites)
        if (std::find(roster.begin(), roster.end(), sprite.identity) == roster.end())
            roster.push_back(sprite.identity);
    std::sort(roster.begin(), roster.end());
    return roster;
}

// Gallery for the scenario's own identities, rendered and preprocessed the
// same way the live frames are.
inline FaceRecognizer train_scenario_recognizer(const ScenarioConfig& config) {
    FaceDatasetOptions opt;
    opt.samples_per_class = 6;
    opt.seed = derive_seed(config.seed, 0xFACE);
    return train_eigenfaces(make_face_dataset(scenario_roster(config), opt), 30);
}

struct FrameResult {
    long frame = 0;
    GccWeighting weighting = GccWeighting::kPhat;
    SteeredPowerMap power_map;
    std::optional<MapPeak> peak;
    std::optional<Pixel> source_px;
    std::vector<Detection> detections;
    std::optional<FaceObservation> face;
    RecognitionResult recognition;  // stays UNKNOWN when no face was usable
    bool face_confirmed = false;
    FusionDecision decision;
};

struct ScenarioResult {
    std::vector<FrameResult> frames;
    std::string outcomes_jsonl;               // one JSON object per line
    std::map<std::string, int> outcome_counts;  // by kind name
    double peak_floor_phat = 0.0;
    double peak_floor_const = 0.0;
};

namespace detail {

inline double median_power(const SteeredPowerMap& map) {
    std::vector<double> values = map.power;
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    return values[mid];
}

// Map power threshold from a sources-free rendition of the scenario: the
// same mics hear seeded noise only, and the floor is a multiple of that
// map's median.
inline double calibrate_peak_floor(const ScenarioConfig& config, GccWeighting weighting) {
    SceneDescription silence = config.scene;
    silence.sources.clear();
    silence.seed = derive_seed(config.seed, 0x51EC);
    const auto audio = synthesize_scene(silence, config.array, config.sample_rate,
                                        config.frame_samples / config.sample_rate);
    const auto map = srp_map(audio, config.array, config.grid, weighting);
    return config.peak_floor_scale * median_power(map);
}

}  // namespace detail

// One frame of the full chain: synthesize audio, steer the map, find the
// acoustic peak, detect and recognize the face, track it, and fuse.
inline ScenarioResult run_scenario(const ScenarioConfig& config, const CascadeModel& cascade,
                                   const FaceRecognizer& recognizer) {
    config.validate();
    ScenarioResult result;
    FaceTrack track;
    const std::vector<std::string> roster = scenario_roster(config);
    const double colocate_px = config.colocate_fraction * config.image_w;
    const double proximity_px = config.proximity_fraction * config.image_w;
    std::optional<double> floor_phat, floor_const;
    std::ostringstream jsonl;

    for (long frame = 0; frame < config.frames; ++frame) {
        FrameResult fr;
        fr.frame = frame;

        SceneDescription frame_scene = config.scene;
        frame_scene.seed = derive_seed(config.seed, static_cast<std::uint64_t>(frame));

        // --- acoustic half ---
        const auto audio = synthesize_scene(frame_scene, config.array, config.sample_rate,
                                            config.frame_samples / config.sample_rate);
        switch (config.mode) {
            case SrpSelection::kPhat: fr.weighting = GccWeighting::kPhat; break;
            case SrpSelection::kConst: fr.weighting = GccWeighting::kConst; break;
            case SrpSelection::kAuto:
                fr.weighting = estimate_bandwidth(audio) < config.bandwidth_threshold_hz
                                   ? GccWeighting::kConst
                                   : GccWeighting::kPhat;
                break;
        }
        auto& floor = fr.weighting == GccWeighting::kPhat ? floor_phat : floor_const;
        if (!floor) floor = detail::calibrate_peak_floor(config, fr.weighting);
        fr.power_map = srp_map(audio, config.array, config.grid, fr.weighting,
                               config.scene.speed_of_sound);
        fr.peak = find_peak(fr.power_map, *floor);
        if (fr.peak)
            fr.source_px = map_grid_to_pixels(fr.peak->cell, config.grid.n_u, config.grid.n_v,
                                              config.image_w, config.image_h);

        // --- visual half ---
        const FrameRender render = render_synthetic_frame(frame_scene, config.image_w, config.image_h);
        fr.detections = detect_multiscale(render.image, cascade, config.detect_scale_factor,
                                          config.detect_step, config.detect_min_neighbors);
        const Detection* best = nullptr;
        for (const auto& d : fr.detections)
            if (!best || d.neighbor_count > best->neighbor_count) best = &d;
        if (best) {
            FaceObservation obs;
            obs.position = Pixel{best->x + best->w / 2.0, best->y + best->h / 2.0};
            try {
                const GrayImage face = preprocess_face(render.image, best->rect());
                fr.recognition = recognize_face(recognizer, face, config.knn_k,
                                                config.unknown_threshold);
                if (!fr.recognition.unknown) obs.label = fr.recognition.label;
            } catch (const PreprocessingError&) {
                // Detected box without usable eyes: keep it as an unknown face.
            }
            fr.face = obs;
            fr.face_confirmed = update_face_track(track, frame, obs, proximity_px);
        }

        // --- fusion ---
        fr.decision = fuse(FusionInputs{fr.source_px, fr.face, fr.face_confirmed}, colocate_px);

        Json line = outcome_to_json(frame, fr.decision);
        if (fr.decision.identity && *fr.decision.identity >= 0 &&
            *fr.decision.identity < static_cast<int>(roster.size()))
            line["identity_name"] = roster[static_cast<std::size_t>(*fr.decision.identity)];
        jsonl << line.dump() << "\n";
        ++result.outcome_counts[to_string(fr.decision.outcome)];
        result.frames.push_back(std::move(fr));
    }

    result.outcomes_jsonl = jsonl.str();
    if (floor_phat) result.peak_floor_phat = *floor_phat;
    if (floor_const) result.peak_floor_const = *floor_const;
    return result;
}

// ---------------------------------------------------------------------------
// Model-study helpers.

// Keeps the first `components` eigenfaces; gallery entries are prefixes of
// the full projections because the basis columns are orthonormal.
inline EigenfacesModel truncate_eigenfaces(const EigenfacesModel& full, int components) {
    if (components < 1 || components > full.basis.cols)
        throw InvalidTrainingError("truncate_eigenfaces: bad component count");
    EigenfacesModel out;
    out.image_w = full.image_w;
    out.image_h = full.image_h;
    out.mean = full.mean;
    out.basis = Matrix(full.basis.rows, components);
    for (int c = 0; c < components; ++c)
        for (int r = 0; r < full.basis.rows; ++r) out.basis(r, c) = full.basis(r, c);
    out.eigenvalues.assign(full.eigenvalues.begin(), full.eigenvalues.begin() + components);
    out.labels = full.labels;
    for (const auto& proj : full.gallery)
        out.gallery.emplace_back(proj.begin(), proj.begin() + components);
    out.unknown_threshold = out.gallery.size() >= 2
                                ? calibrate_unknown_threshold(out.gallery, DistanceKind::kEuclidean)
                                : full.unknown_threshold;
    return out;
}

// Keeps the leading Fisher directions (they are ordered by discriminative
// eigenvalue); requesting more than C-1 just returns the full projection.
inline FisherfacesModel truncate_fisherfaces(const FisherfacesModel& full, int components) {
    if (components < 1) throw InvalidTrainingError("truncate_fisherfaces: bad component count");
    const int keep = std::min(components, full.projection.cols);
    FisherfacesModel out;
    out.image_w = full.image_w;
    out.image_h = full.image_h;
    out.mean = full.mean;
    out.projection = Matrix(full.projection.rows, keep);
    for (int c = 0; c < keep; ++c)
        for (int r = 0; r < full.projection.rows; ++r) out.projection(r, c) = full.projection(r, c);
    out.labels = full.labels;
    for (const auto& proj : full.gallery)
        out.gallery.emplace_back(proj.begin(), proj.begin() + keep);
    out.unknown_threshold = out.gallery.size() >= 2
                                ? calibrate_unknown_threshold(out.gallery, DistanceKind::kEuclidean)
                                : full.unknown_threshold;
    return out;
}

// Fraction of test samples whose predicted label matches. Closed-set by
// default (no unknown gate); pass a threshold to measure open-set behavior.
inline double evaluate_recognizer(const FaceRecognizer& model, const FaceDataset& test, int k = 1,
                                  std::optional<double> threshold =
                                      std::numeric_limits<double>::infinity()) {
    if (test.samples.empty()) throw InvalidTrainingError("evaluate_recognizer: empty test set");
    int correct = 0;
    for (const auto& s : test.samples) {
        const RecognitionResult r = recognize_face(model, s.image, k, threshold);
        if (!r.unknown && r.label == s.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.samples.size());
}

// TSV: components <tab> accuracy, one row per requested count.
inline std::string experiment_accuracy_vs_components(const std::vector<int>& component_counts,
                                                     int classes = 5, int train_per_class = 6,
                                                     int test_per_class = 4,
                                                     std::uint64_t seed = 42, int knn_k = 1) {
    FaceDatasetOptions train_opt;
    train_opt.classes = classes;
    train_opt.samples_per_class = train_per_class;
    train_opt.seed = derive_seed(seed, 1);
    FaceDatasetOptions test_opt = train_opt;
    test_opt.samples_per_class = test_per_class;
    test_opt.seed = derive_seed(seed, 2);

    const FaceDataset train = make_synthetic_face_dataset(train_opt);
    const FaceDataset test = make_synthetic_face_dataset(test_opt);
    int max_components = 1;
    for (int c : component_counts) max_components = std::max(max_components, c);
    const EigenfacesModel full_eigen = train_eigenfaces(train, max_components);
    const FisherfacesModel full_fisher = train_fisherfaces(train);

    std::ostringstream tsv;
    tsv << "components\teigen\tfisher\n";
    for (int c : component_counts) {
        const EigenfacesModel eig = truncate_eigenfaces(full_eigen, std::min(c, full_eigen.basis.cols));
        const FisherfacesModel fis = truncate_fisherfaces(full_fisher, c);
        tsv << c << "\t" << evaluate_recognizer(eig, test, knn_k) << "\t"
            << evaluate_recognizer(fis, test, knn_k) << "\n";
    }
    return tsv.str();
}

// TSV: images_per_class <tab> accuracy for eigen, fisher, and lbph.
inline std::string experiment_accuracy_vs_training_images(const std::vector<int>& counts,
                                                          int classes = 5, int test_per_class = 4,
                                                          std::uint64_t seed = 42, int knn_k = 1) {
    FaceDatasetOptions test_opt;
    test_opt.classes = classes;
    test_opt.samples_per_class = test_per_class;
    test_opt.seed = derive_seed(seed, 2);
    const FaceDataset test = make_synthetic_face_dataset(test_opt);

    std::ostringstream tsv;
    tsv << "images_per_class\teigen\tfisher\tlbph\n";
    for (int count : counts) {
        FaceDatasetOptions train_opt;
        train_opt.classes = classes;
        train_opt.samples_per_class = count;
        train_opt.seed = derive_seed(seed, 1);
        const FaceDataset train = make_synthetic_face_dataset(train_opt);
        const double eigen = evaluate_recognizer(train_eigenfaces(train, 30), test, knn_k);
        double fisher = std::numeric_limits<double>::quiet_NaN();
        if (static_cast<int>(train.samples.size()) > classes)
            fisher = evaluate_recognizer(train_fisherfaces(train), test, knn_k);
        const double lbph = evaluate_recognizer(train_lbph(train), test, knn_k);
        tsv << count << "\t" << eigen << "\t" << fisher << "\t" << lbph << "\n";
    }
    return tsv.str();
}

// TSV: snr_db <tab> median Chebyshev cell error of the raw argmax, over
// `trials` independent noise draws of a white source at a known cell.
inline std::string experiment_localization_vs_snr(const std::vector<double>& snr_values,
                                                  int trials = 10, std::uint64_t seed = 42) {
    const MicArray array = default_double_ring_array();
    const SteeringGrid grid = default_steering_grid();
    const Vec3 source_pos{0.4, 0.3, 2.0};
    const GridCell truth = grid_cell_of_point(grid, source_pos);

    std::ostringstream tsv;
    tsv << "snr_db\tmedian_cell_error\n";
    for (std::size_t si = 0; si < snr_values.size(); ++si) {
        std::vector<double> errs;
        for (int t = 0; t < trials; ++t) {
            SceneDescription scene;
            SoundSource src;
            src.position = source_pos;
            src.signal = WhiteNoiseSignal{};
            scene.sources.push_back(src);
            scene.snr_db = snr_values[si];
            scene.seed = derive_seed(seed, si * 1000 + static_cast<std::uint64_t>(t));
            const auto audio = synthesize_scene(scene, array, 32000.0, 4096.0 / 32000.0);
            const auto map = srp_map(audio, array, grid, GccWeighting::kPhat);
            const auto peak = find_peak(map, 0.0);
            errs.push_back(peak ? cell_chebyshev_distance(peak->cell, truth)
                                : std::max(grid.n_u, grid.n_v));
        }
        std::sort(errs.begin(), errs.end());
        const std::size_t n = errs.size();
        const double median = n % 2 ? errs[n / 2] : 0.5 * (errs[n / 2 - 1] + errs[n / 2]);
        tsv << snr_values[si] << "\t" << median << "\n";
    }
    return tsv.str();
}

}  // namespace avsid
