// Command-line front end: scene synthesis, localization maps, detection,
// recognition, fusion and the end-to-end demo, all driven by JSON configs.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "avsid/avsid.hpp"

namespace fs = std::filesystem;
using avsid::Json;

namespace {

// Exit codes: 0 ok, 2 bad config, 3 I/O, 4 processing.
constexpr int kExitBadConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitProcessing = 4;

avsid::SceneDescription load_scene(const std::string& path) {
    return avsid::scene_from_json(avsid::load_json_file(path));
}

avsid::MicArray load_array_or_default(const std::string& path) {
    if (path.empty()) return avsid::default_double_ring_array();
    return avsid::array_from_json(avsid::load_json_file(path));
}

avsid::SteeringGrid load_grid_or_default(const std::string& path) {
    if (path.empty()) return avsid::default_steering_grid();
    return avsid::grid_from_json(avsid::load_json_file(path));
}

// "builtin:haar" and "builtin:lbp" name the bundled toy cascades; anything
// else is a model file path.
avsid::CascadeModel load_cascade(const std::string& spec) {
    if (spec.empty() || spec == "builtin:haar") return avsid::toy_face_cascade();
    if (spec == "builtin:lbp") return avsid::toy_lbp_face_cascade();
    return avsid::cascade_from_json(avsid::load_json_file(spec));
}

fs::path ensure_out_dir(const std::string& out) {
    fs::path dir = out.empty() ? fs::path("out") : fs::path(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw avsid::IoError("cannot create output directory " + dir.string());
    return dir;
}

std::string frame_tag(long frame) {
    std::ostringstream s;
    s << "frame_" << std::setw(3) << std::setfill('0') << frame;
    return s.str();
}

void draw_box(avsid::GrayImage& img, const avsid::Rect& r, std::uint8_t value) {
    for (int x = r.x; x < r.x + r.w; ++x) {
        if (img.in_bounds(x, r.y)) img.at(x, r.y) = value;
        if (img.in_bounds(x, r.y + r.h - 1)) img.at(x, r.y + r.h - 1) = value;
    }
    for (int y = r.y; y < r.y + r.h; ++y) {
        if (img.in_bounds(r.x, y)) img.at(r.x, y) = value;
        if (img.in_bounds(r.x + r.w - 1, y)) img.at(r.x + r.w - 1, y) = value;
    }
}

Json detection_to_json(const avsid::Detection& d) {
    Json j;
    j["x"] = d.x;
    j["y"] = d.y;
    j["w"] = d.w;
    j["h"] = d.h;
    j["score"] = d.score;
    j["neighbors"] = d.neighbor_count;
    return j;
}

struct CommonFlags {
    std::string scene_path;
    std::string array_path;
    std::string grid_path;
    std::string cascade_spec;
    std::string model_path;
    std::string out_dir;
    std::string mode = "auto";
    int frames = 10;
    std::uint64_t seed = 42;
    int components = 30;
    int knn_k = 1;
    double unknown_threshold = -1.0;  // < 0 means "use the calibrated one"
};

avsid::SrpSelection parse_mode(const std::string& mode) {
    return avsid::srp_selection_from_string(mode);
}

int cmd_simulate(const CommonFlags& f) {
    const avsid::SceneDescription scene = load_scene(f.scene_path);
    const avsid::MicArray array = load_array_or_default(f.array_path);
    const fs::path dir = ensure_out_dir(f.out_dir);
    const double fs_hz = 32000.0;
    const int n_samples = 4096;

    std::ostringstream truths;
    for (long frame = 0; frame < f.frames; ++frame) {
        avsid::SceneDescription fscene = scene;
        fscene.seed = avsid::derive_seed(f.seed, static_cast<std::uint64_t>(frame));
        const auto audio = avsid::synthesize_scene(fscene, array, fs_hz, n_samples / fs_hz);
        const auto render = avsid::render_synthetic_frame(fscene, 640, 480);
        const std::string tag = frame_tag(frame);
        avsid::write_audio_f32((dir / (tag + ".f32")).string(), audio);
        avsid::write_pgm((dir / (tag + ".pgm")).string(), render.image);
        for (const auto& t : render.truths) {
            Json j;
            j["frame"] = frame;
            j["identity"] = t.identity;
            j["box"] = Json::array({t.box.x, t.box.y, t.box.w, t.box.h});
            truths << j.dump() << "\n";
        }
    }
    avsid::write_text_file((dir / "truth.jsonl").string(), truths.str());
    std::cout << "wrote " << f.frames << " frame(s) to " << dir.string() << "\n";
    return 0;
}

int cmd_localize(const CommonFlags& f) {
    avsid::SceneDescription scene = load_scene(f.scene_path);
    const avsid::MicArray array = load_array_or_default(f.array_path);
    const avsid::SteeringGrid grid = load_grid_or_default(f.grid_path);
    const fs::path dir = ensure_out_dir(f.out_dir);
    scene.seed = avsid::derive_seed(f.seed, 0);

    const auto audio = avsid::synthesize_scene(scene, array, 32000.0, 4096.0 / 32000.0);
    avsid::SteeredPowerMap map;
    const avsid::SrpSelection mode = parse_mode(f.mode);
    double bandwidth = avsid::estimate_bandwidth(audio);
    if (mode == avsid::SrpSelection::kAuto) {
        map = avsid::combined_srp_map(audio, array, grid, avsid::kDefaultBandwidthThresholdHz,
                                      scene.speed_of_sound);
    } else {
        const auto w = mode == avsid::SrpSelection::kPhat ? avsid::GccWeighting::kPhat
                                                          : avsid::GccWeighting::kConst;
        map = avsid::srp_map(audio, array, grid, w, scene.speed_of_sound);
    }
    avsid::write_heatmap_ppm((dir / "srp_map.ppm").string(), map.power, grid.n_u, grid.n_v);

    const auto peak = avsid::find_peak(map, 0.0);
    Json j;
    j["mode"] = map.mode_used == avsid::SrpMode::kSrpPhat ? "SRP_PHAT" : "SRP_CONST";
    j["bandwidth_hz"] = bandwidth;
    if (peak) {
        j["cell"] = Json::array({peak->cell.u, peak->cell.v});
        j["power"] = peak->power;
    } else {
        j["cell"] = nullptr;
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_detect(const CommonFlags& f) {
    avsid::SceneDescription scene = load_scene(f.scene_path);
    const avsid::CascadeModel cascade = load_cascade(f.cascade_spec);
    const fs::path dir = ensure_out_dir(f.out_dir);
    scene.seed = avsid::derive_seed(f.seed, 0);

    auto render = avsid::render_synthetic_frame(scene, 640, 480);
    const auto detections = avsid::detect_multiscale(render.image, cascade);
    Json out = Json::array();
    for (const auto& d : detections) {
        out.push_back(detection_to_json(d));
        draw_box(render.image, d.rect(), 255);
    }
    avsid::write_pgm((dir / "detections.pgm").string(), render.image);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_train(const CommonFlags& f, const std::string& kind, int classes, int per_class) {
    avsid::FaceDatasetOptions opt;
    opt.classes = classes;
    opt.samples_per_class = per_class;
    opt.seed = f.seed;
    const avsid::FaceDataset dataset = avsid::make_synthetic_face_dataset(opt);

    avsid::FaceRecognizer model;
    if (kind == "eigen")
        model = avsid::train_eigenfaces(dataset, f.components);
    else if (kind == "fisher")
        model = avsid::train_fisherfaces(dataset);
    else if (kind == "lbph")
        model = avsid::train_lbph(dataset);
    else
        throw avsid::FormatError("train: unknown kind '" + kind + "' (eigen|fisher|lbph)");

    const fs::path dir = ensure_out_dir(f.out_dir);
    const fs::path path = dir / "face_model.json";
    avsid::save_json_file(path.string(), avsid::recognizer_to_json(model));
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

int cmd_recognize(const CommonFlags& f, const std::string& image_path) {
    if (f.model_path.empty())
        throw avsid::FormatError("recognize: --face-model is required");
    const avsid::FaceRecognizer model =
        avsid::recognizer_from_json(avsid::load_json_file(f.model_path));

    avsid::GrayImage face(avsid::kCanonicalFaceSize, avsid::kCanonicalFaceSize);
    if (!image_path.empty()) {
        const avsid::GrayImage img = avsid::read_pgm(image_path);
        face = avsid::preprocess_face(img, avsid::Rect{0, 0, img.width, img.height});
    } else {
        avsid::SceneDescription scene = load_scene(f.scene_path);
        scene.seed = avsid::derive_seed(f.seed, 0);
        const auto render = avsid::render_synthetic_frame(scene, 640, 480);
        const auto cascade = load_cascade(f.cascade_spec);
        const auto detections = avsid::detect_multiscale(render.image, cascade);
        if (detections.empty()) throw avsid::NoModelError("recognize: no face detected");
        const avsid::Detection* best = &detections.front();
        for (const auto& d : detections)
            if (d.neighbor_count > best->neighbor_count) best = &d;
        face = avsid::preprocess_face(render.image, best->rect());
    }

    std::optional<double> threshold;
    if (f.unknown_threshold >= 0.0) threshold = f.unknown_threshold;
    const auto result = avsid::recognize_face(model, face, f.knn_k, threshold);
    Json j;
    j["label"] = result.label;
    j["unknown"] = result.unknown;
    j["nearest_distance"] = result.nearest_distance;
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_fuse(const std::string& inputs_arg, double colocate_px) {
    // the positional is either a path or the JSON itself
    Json j;
    const auto first = inputs_arg.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && inputs_arg[first] == '{') {
        try {
            j = Json::parse(inputs_arg);
        } catch (const Json::parse_error& e) {
            throw avsid::FormatError(std::string("fuse inputs: ") + e.what());
        }
    } else {
        j = avsid::load_json_file(inputs_arg);
    }
    avsid::FusionInputs in;
    if (j.contains("source") && !j["source"].is_null())
        in.source = avsid::Pixel{j["source"][0].get<double>(), j["source"][1].get<double>()};
    if (j.contains("face") && !j["face"].is_null()) {
        avsid::FaceObservation obs;
        obs.label = j["face"].value("label", avsid::kUnknownLabel);
        obs.position = avsid::Pixel{j["face"]["position"][0].get<double>(),
                                    j["face"]["position"][1].get<double>()};
        in.face = obs;
    }
    in.face_confirmed = j.value("confirmed", false);

    const auto decision = avsid::fuse(in, colocate_px);
    std::cout << avsid::outcome_to_json(0, decision).dump(2) << "\n";
    return 0;
}

int cmd_demo(const CommonFlags& f) {
    avsid::ScenarioConfig config;
    config.scene = load_scene(f.scene_path);
    config.array = load_array_or_default(f.array_path);
    config.grid = load_grid_or_default(f.grid_path);
    config.frames = f.frames;
    config.seed = f.seed;
    config.mode = parse_mode(f.mode);
    config.knn_k = f.knn_k;
    if (f.unknown_threshold >= 0.0) config.unknown_threshold = f.unknown_threshold;
    config.validate();

    const avsid::CascadeModel cascade = load_cascade(f.cascade_spec);
    avsid::FaceRecognizer recognizer;
    if (f.model_path.empty())
        recognizer = avsid::train_scenario_recognizer(config);
    else
        recognizer = avsid::recognizer_from_json(avsid::load_json_file(f.model_path));

    const fs::path dir = ensure_out_dir(f.out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    const avsid::ScenarioResult result = avsid::run_scenario(config, cascade, recognizer);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    for (const auto& fr : result.frames)
        avsid::write_heatmap_ppm((dir / (frame_tag(fr.frame) + "_srp.ppm")).string(),
                                 fr.power_map.power, config.grid.n_u, config.grid.n_v);
    avsid::write_text_file((dir / "outcomes.jsonl").string(), result.outcomes_jsonl);
    avsid::save_json_file((dir / "scenario.json").string(), avsid::scenario_to_json(config));

    Json summary;
    summary["frames"] = config.frames;
    Json counts;
    for (const auto& [k, v] : result.outcome_counts) counts[k] = v;
    summary["outcomes"] = counts;
    if (!config.scene.sources.empty()) {
        const avsid::GridCell truth =
            avsid::grid_cell_of_point(config.grid, config.scene.sources.front().position);
        std::vector<int> errs;
        for (const auto& fr : result.frames)
            if (fr.peak) errs.push_back(avsid::cell_chebyshev_distance(fr.peak->cell, truth));
        if (!errs.empty()) {
            std::sort(errs.begin(), errs.end());
            summary["localization"] = {
                {"frames_with_peak", errs.size()},
                {"median_cell_error", errs[errs.size() / 2]},
                {"max_cell_error", errs.back()},
            };
        }
    }
    avsid::save_json_file((dir / "summary.json").string(), summary);

    // timing goes to stdout only so repeated runs leave identical artifacts
    Json report = summary;
    report["seconds"] = secs;
    report["fps"] = config.frames / std::max(secs, 1e-9);
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_experiment(const CommonFlags& f, const std::string& name) {
    const fs::path dir = ensure_out_dir(f.out_dir);
    std::string table;
    if (name == "accuracy_vs_components") {
        table = avsid::experiment_accuracy_vs_components({1, 2, 3, 4, 5, 8, 12, 20, 29}, 5, 6, 4,
                                                         f.seed, f.knn_k);
    } else if (name == "accuracy_vs_training_images") {
        table = avsid::experiment_accuracy_vs_training_images({2, 3, 4, 6, 8}, 5, 4, f.seed, f.knn_k);
    } else if (name == "localization_vs_snr") {
        table = avsid::experiment_localization_vs_snr({0.0, 10.0, 20.0, 40.0}, 10, f.seed);
    } else {
        throw avsid::FormatError(
            "experiment: unknown name '" + name +
            "' (accuracy_vs_components|accuracy_vs_training_images|localization_vs_snr)");
    }
    avsid::write_text_file((dir / (name + ".tsv")).string(), table);
    std::cout << table;
    return 0;
}

int dispatch(const std::function<int()>& fn) {
    try {
        return fn();
    } catch (const avsid::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const avsid::FormatError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const avsid::InvalidSceneError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const avsid::InvalidGridError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const avsid::InvalidGeometryError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const avsid::InsufficientArrayError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const avsid::ShapeError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const avsid::Error& e) {
        std::cerr << "processing error: " << e.what() << "\n";
        return kExitProcessing;
    } catch (const std::exception& e) {
        std::cerr << "processing error: " << e.what() << "\n";
        return kExitProcessing;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic audio-visual speaker identification toolkit"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string train_kind = "eigen";
    int train_classes = 5;
    int train_per_class = 6;
    std::string recognize_image;
    std::string fuse_inputs;
    double fuse_colocate_px = avsid::kDefaultColocateFraction * 640;
    std::string experiment_name;

    auto add_common = [&](CLI::App* sub, bool needs_scene) {
        auto* scene = sub->add_option("--scene", flags.scene_path, "scene description JSON");
        if (needs_scene) scene->required();
        sub->add_option("--array", flags.array_path, "microphone array JSON (default: built-in)");
        sub->add_option("--grid", flags.grid_path, "steering grid JSON (default: built-in)");
        sub->add_option("--cascade", flags.cascade_spec,
                        "cascade model JSON, or builtin:haar / builtin:lbp");
        sub->add_option("--face-model", flags.model_path, "face recognizer JSON");
        sub->add_option("--frames", flags.frames, "number of frames");
        sub->add_option("--seed", flags.seed, "master seed (default 42)");
        sub->add_option("--out", flags.out_dir, "output directory (default: out)");
        sub->add_option("--mode", flags.mode, "SRP weighting: phat|const|auto")
            ->check(CLI::IsMember({"phat", "const", "auto"}));
        sub->add_option("--components", flags.components, "subspace component count");
        sub->add_option("--knn-k", flags.knn_k, "k for the nearest-neighbor vote");
        sub->add_option("--unknown-threshold", flags.unknown_threshold,
                        "distance above which a face is UNKNOWN");
    };

    add_common(app.add_subcommand("simulate", "render frames and synthesize array audio"), true);
    add_common(app.add_subcommand("localize", "steered-power map and peak for one frame"), true);
    add_common(app.add_subcommand("detect", "run the face cascade on a rendered frame"), true);

    auto* train = app.add_subcommand("train", "train a face recognizer on synthetic faces");
    add_common(train, false);
    train->add_option("--kind", train_kind, "eigen|fisher|lbph");
    train->add_option("--classes", train_classes, "number of identities");
    train->add_option("--per-class", train_per_class, "training images per identity");

    auto* recognize = app.add_subcommand("recognize", "classify a face against a trained model");
    add_common(recognize, false);
    recognize->add_option("--image", recognize_image, "PGM face image (else detect in --scene)");

    auto* fuse = app.add_subcommand("fuse", "apply the fusion decision to recorded observations");
    fuse->add_option("inputs", fuse_inputs, "JSON with source/face/confirmed fields")->required();
    fuse->add_option("--colocate-px", fuse_colocate_px, "colocation radius in pixels");

    add_common(app.add_subcommand("demo", "full pipeline over a multi-frame scenario"), true);

    auto* experiment = app.add_subcommand("experiment", "emit a named study as a TSV table");
    add_common(experiment, false);
    experiment->add_option("name", experiment_name, "experiment name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitBadConfig;
    }

    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "simulate") return dispatch([&] { return cmd_simulate(flags); });
    if (name == "localize") return dispatch([&] { return cmd_localize(flags); });
    if (name == "detect") return dispatch([&] { return cmd_detect(flags); });
    if (name == "train")
        return dispatch([&] { return cmd_train(flags, train_kind, train_classes, train_per_class); });
    if (name == "recognize") return dispatch([&] { return cmd_recognize(flags, recognize_image); });
    if (name == "fuse") return dispatch([&] { return cmd_fuse(fuse_inputs, fuse_colocate_px); });
    if (name == "demo") return dispatch([&] { return cmd_demo(flags); });
    if (name == "experiment") return dispatch([&] { return cmd_experiment(flags, experiment_name); });
    return kExitBadConfig;
}
