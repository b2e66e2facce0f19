#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "avsid/detection.hpp"
#include "avsid/error.hpp"
#include "avsid/fusion.hpp"
#include "avsid/geometry.hpp"
#include "avsid/linalg.hpp"
#include "avsid/localization.hpp"
#include "avsid/mic_array.hpp"
#include "avsid/recognition.hpp"
#include "avsid/scene.hpp"

namespace avsid {

using Json = nlohmann::ordered_json;

namespace detail {

inline void require_format(const Json& j, const std::string& format) {
    if (!j.is_object()) throw FormatError("expected a JSON object for " + format);
    if (!j.contains("format") || j["format"] != format)
        throw FormatError("missing or wrong \"format\" field; expected " + format);
    if (!j.contains("version") || !j["version"].is_number_integer() || j["version"].get<int>() != 1)
        throw FormatError(format + ": unsupported or missing \"version\" (only 1)");
}

inline Json vec3_to_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

inline Vec3 vec3_from_json(const Json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw FormatError(std::string(what) + ": expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Json matrix_to_json(const Matrix& m) {
    Json j;
    j["rows"] = m.rows;
    j["cols"] = m.cols;
    j["data"] = m.data;
    return j;
}

inline Matrix matrix_from_json(const Json& j) {
    if (!j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        throw FormatError("matrix: missing rows/cols/data");
    Matrix m(j["rows"].get<int>(), j["cols"].get<int>());
    const auto data = j["data"].get<std::vector<double>>();
    if (data.size() != m.data.size()) throw FormatError("matrix: data length mismatch");
    m.data = data;
    return m;
}

// Thresholds may be +infinity for uncalibrated models; JSON has no literal
// for it, so null stands in.
inline Json finite_or_null(double v) {
    if (std::isfinite(v)) return Json(v);
    return Json(nullptr);
}

inline double finite_or_infinity(const Json& j) {
    if (j.is_null()) return std::numeric_limits<double>::infinity();
    return j.get<double>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scene descriptions ("avsid-scene").

inline Json scene_to_json(const SceneDescription& scene) {
    Json j;
    j["format"] = "avsid-scene";
    j["version"] = 1;
    j["seed"] = scene.seed;
    j["snr_db"] = scene.snr_db ? Json(*scene.snr_db) : Json(nullptr);
    j["speed_of_sound"] = scene.speed_of_sound;
    j["sources"] = Json::array();
    for (const auto& src : scene.sources) {
        Json s;
        s["position"] = detail::vec3_to_json(src.position);
        s["level"] = src.level;
        if (const auto* sine = std::get_if<SineSignal>(&src.signal)) {
            s["signal"] = Json{{"type", "sine"}, {"freq_hz", sine->freq_hz}};
        } else if (std::holds_alternative<WhiteNoiseSignal>(src.signal)) {
            s["signal"] = Json{{"type", "noise"}};
        } else {
            const auto& sample = std::get<SampleSignal>(src.signal);
            Json sig{{"type", "sample"}};
            if (!sample.path.empty()) {
                sig["path"] = sample.path;
            } else {
                sig["sample_rate"] = sample.sample_rate;
                sig["samples"] = sample.samples;
            }
            s["signal"] = sig;
        }
        s["echoes"] = Json::array();
        for (const auto& echo : src.echoes)
            s["echoes"].push_back(Json{{"delay_s", echo.delay_s}, {"gain", echo.gain}});
        j["sources"].push_back(s);
    }
    j["faces"] = Json::array();
    for (const auto& face : scene.face_sprites)
        j["faces"].push_back(Json{{"identity", face.identity},
                                  {"x", face.x},
                                  {"y", face.y},
                                  {"scale", face.scale}});
    return j;
}

inline SceneDescription scene_from_json(const Json& j) {
    detail::require_format(j, "avsid-scene");
    SceneDescription scene;
    if (j.contains("seed")) scene.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("snr_db") && !j["snr_db"].is_null()) scene.snr_db = j["snr_db"].get<double>();
    if (j.contains("speed_of_sound")) scene.speed_of_sound = j["speed_of_sound"].get<double>();
    for (const auto& s : j.value("sources", Json::array())) {
        SoundSource src;
        src.position = detail::vec3_from_json(s.at("position"), "source position");
        src.level = s.value("level", 1.0);
        const auto& sig = s.at("signal");
        const std::string type = sig.at("type").get<std::string>();
        if (type == "sine") {
            src.signal = SineSignal{sig.at("freq_hz").get<double>()};
        } else if (type == "noise") {
            src.signal = WhiteNoiseSignal{};
        } else if (type == "sample") {
            SampleSignal sample;
            if (sig.contains("path")) sample.path = sig["path"].get<std::string>();
            if (sig.contains("samples")) sample.samples = sig["samples"].get<std::vector<double>>();
            if (sig.contains("sample_rate")) sample.sample_rate = sig["sample_rate"].get<double>();
            src.signal = sample;
        } else {
            throw FormatError("scene: unknown signal type \"" + type + "\"");
        }
        for (const auto& e : s.value("echoes", Json::array()))
            src.echoes.push_back(EchoTap{e.at("delay_s").get<double>(), e.at("gain").get<double>()});
        scene.sources.push_back(src);
    }
    for (const auto& f : j.value("faces", Json::array())) {
        FaceSprite sprite;
        sprite.identity = f.at("identity").get<std::string>();
        sprite.x = f.at("x").get<double>();
        sprite.y = f.at("y").get<double>();
        sprite.scale = f.value("scale", 64.0);
        scene.face_sprites.push_back(sprite);
    }
    return scene;
}

// ---------------------------------------------------------------------------
// Microphone arrays ("avsid-array"). Written as explicit positions; the
// reader also accepts double-ring parameters.

inline Json array_to_json(const MicArray& array) {
    Json j;
    j["format"] = "avsid-array";
    j["version"] = 1;
    j["name"] = array.name;
    j["type"] = "explicit";
    j["mics"] = Json::array();
    for (const auto& m : array.mics) j["mics"].push_back(detail::vec3_to_json(m));
    return j;
}

inline MicArray array_from_json(const Json& j) {
    detail::require_format(j, "avsid-array");
    const std::string type = j.value("type", "explicit");
    MicArray array;
    if (type == "double_ring") {
        array = build_double_ring_array(j.at("inner_diameter").get<double>(),
                                        j.at("outer_diameter").get<double>(),
                                        j.at("inner_count").get<int>(),
                                        j.at("outer_count").get<int>(),
                                        j.value("angular_offset", 0.0));
    } else if (type == "explicit") {
        for (const auto& m : j.at("mics")) array.mics.push_back(detail::vec3_from_json(m, "mic"));
    } else {
        throw FormatError("array: unknown type \"" + type + "\"");
    }
    if (j.contains("name")) array.name = j["name"].get<std::string>();
    array.validate();
    return array;
}

// ---------------------------------------------------------------------------
// Steering grids ("avsid-grid").

inline Json grid_to_json(const SteeringGrid& grid) {
    Json j;
    j["format"] = "avsid-grid";
    j["version"] = 1;
    j["origin"] = detail::vec3_to_json(grid.origin);
    j["u_axis"] = detail::vec3_to_json(grid.u_axis);
    j["v_axis"] = detail::vec3_to_json(grid.v_axis);
    j["n_u"] = grid.n_u;
    j["n_v"] = grid.n_v;
    return j;
}

inline SteeringGrid grid_from_json(const Json& j) {
    detail::require_format(j, "avsid-grid");
    SteeringGrid grid;
    grid.origin = detail::vec3_from_json(j.at("origin"), "grid origin");
    grid.u_axis = detail::vec3_from_json(j.at("u_axis"), "grid u_axis");
    grid.v_axis = detail::vec3_from_json(j.at("v_axis"), "grid v_axis");
    grid.n_u = j.at("n_u").get<int>();
    grid.n_v = j.at("n_v").get<int>();
    grid.validate();
    return grid;
}

// ---------------------------------------------------------------------------
// Cascade models ("avsid-cascade").

inline Json cascade_to_json(const CascadeModel& model) {
    Json j;
    j["format"] = "avsid-cascade";
    j["version"] = 1;
    j["kind"] = model.kind == CascadeFeatureKind::kHaar ? "haar" : "lbp";
    j["base_w"] = model.base_w;
    j["base_h"] = model.base_h;
    j["stages"] = Json::array();
    for (const auto& stage : model.stages) {
        Json s;
        s["threshold"] = stage.threshold;
        if (model.kind == CascadeFeatureKind::kHaar) {
            s["weak"] = Json::array();
            for (const auto& wc : stage.weak) {
                const Rect span{
                    wc.feature.rects.front().rect.x, wc.feature.rects.front().rect.y, 0, 0};
                // The canonical layouts are reproducible from type + span, so
                // only those are stored.
                int max_x = 0, max_y = 0;
                for (const auto& wr : wc.feature.rects) {
                    max_x = std::max(max_x, wr.rect.x + wr.rect.w);
                    max_y = std::max(max_y, wr.rect.y + wr.rect.h);
                }
                s["weak"].push_back(Json{{"type", static_cast<int>(wc.feature.type)},
                                         {"x", span.x},
                                         {"y", span.y},
                                         {"w", max_x - span.x},
                                         {"h", max_y - span.y},
                                         {"threshold", wc.threshold},
                                         {"parity", wc.parity},
                                         {"vote_weight", wc.vote_weight}});
            }
        } else {
            s["lbp_windows"] = Json::array();
            for (const auto& win : stage.lbp_windows) {
                Json w{{"x", win.x}, {"y", win.y}};
                w["table"] = std::vector<double>(win.table.begin(), win.table.end());
                s["lbp_windows"].push_back(w);
            }
        }
        j["stages"].push_back(s);
    }
    return j;
}

inline CascadeModel cascade_from_json(const Json& j) {
    detail::require_format(j, "avsid-cascade");
    CascadeModel model;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "haar")
        model.kind = CascadeFeatureKind::kHaar;
    else if (kind == "lbp")
        model.kind = CascadeFeatureKind::kLbp;
    else
        throw FormatError("cascade: unknown kind \"" + kind + "\"");
    model.base_w = j.at("base_w").get<int>();
    model.base_h = j.at("base_h").get<int>();
    for (const auto& s : j.at("stages")) {
        CascadeStage stage;
        stage.threshold = s.at("threshold").get<double>();
        if (model.kind == CascadeFeatureKind::kHaar) {
            for (const auto& w : s.value("weak", Json::array())) {
                const int type = w.at("type").get<int>();
                if (type < 0 || type > 4) throw FormatError("cascade: bad feature type");
                WeakClassifier wc;
                wc.feature = make_haar_feature(static_cast<HaarFeatureType>(type),
                                               w.at("x").get<int>(), w.at("y").get<int>(),
                                               w.at("w").get<int>(), w.at("h").get<int>());
                wc.threshold = w.at("threshold").get<double>();
                wc.parity = w.at("parity").get<int>();
                wc.vote_weight = w.value("vote_weight", 1.0);
                stage.weak.push_back(wc);
            }
        } else {
            for (const auto& w : s.value("lbp_windows", Json::array())) {
                LbpWindowEntry win;
                win.x = w.at("x").get<int>();
                win.y = w.at("y").get<int>();
                const auto table = w.at("table").get<std::vector<double>>();
                if (table.size() != win.table.size())
                    throw FormatError("cascade: LBP table must have 256 entries");
                std::copy(table.begin(), table.end(), win.table.begin());
                stage.lbp_windows.push_back(win);
            }
        }
        model.stages.push_back(stage);
    }
    model.validate();
    return model;
}

// ---------------------------------------------------------------------------
// Face recognizer models ("avsid-face-model"). Field order is fixed so the
// same model always serializes to identical bytes.

inline Json recognizer_to_json(const FaceRecognizer& recognizer) {
    Json j;
    j["format"] = "avsid-face-model";
    j["version"] = 1;
    if (const auto* eigen = std::get_if<EigenfacesModel>(&recognizer)) {
        j["kind"] = "eigen";
        j["image_w"] = eigen->image_w;
        j["image_h"] = eigen->image_h;
        j["mean"] = eigen->mean;
        j["eigenvalues"] = eigen->eigenvalues;
        j["basis"] = detail::matrix_to_json(eigen->basis);
        j["gallery"] = eigen->gallery;
        j["labels"] = eigen->labels;
        j["unknown_threshold"] = detail::finite_or_null(eigen->unknown_threshold);
    } else if (const auto* fisher = std::get_if<FisherfacesModel>(&recognizer)) {
        j["kind"] = "fisher";
        j["image_w"] = fisher->image_w;
        j["image_h"] = fisher->image_h;
        j["mean"] = fisher->mean;
        j["projection"] = detail::matrix_to_json(fisher->projection);
        j["gallery"] = fisher->gallery;
        j["labels"] = fisher->labels;
        j["unknown_threshold"] = detail::finite_or_null(fisher->unknown_threshold);
    } else {
        const auto& lbph = std::get<LbphModel>(recognizer);
        j["kind"] = "lbph";
        j["image_w"] = lbph.image_w;
        j["image_h"] = lbph.image_h;
        j["grid_x"] = lbph.grid_x;
        j["grid_y"] = lbph.grid_y;
        j["neighbors"] = lbph.neighbors;
        j["radius"] = lbph.radius;
        j["gallery"] = lbph.gallery;
        j["labels"] = lbph.labels;
        j["unknown_threshold"] = detail::finite_or_null(lbph.unknown_threshold);
    }
    return j;
}

inline FaceRecognizer recognizer_from_json(const Json& j) {
    detail::require_format(j, "avsid-face-model");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "eigen") {
        EigenfacesModel m;
        m.image_w = j.at("image_w").get<int>();
        m.image_h = j.at("image_h").get<int>();
        m.mean = j.at("mean").get<std::vector<double>>();
        m.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
        m.basis = detail::matrix_from_json(j.at("basis"));
        m.gallery = j.at("gallery").get<std::vector<std::vector<double>>>();
        m.labels = j.at("labels").get<std::vector<int>>();
        m.unknown_threshold = detail::finite_or_infinity(j.at("unknown_threshold"));
        return m;
    }
    if (kind == "fisher") {
        FisherfacesModel m;
        m.image_w = j.at("image_w").get<int>();
        m.image_h = j.at("image_h").get<int>();
        m.mean = j.at("mean").get<std::vector<double>>();
        m.projection = detail::matrix_from_json(j.at("projection"));
        m.gallery = j.at("gallery").get<std::vector<std::vector<double>>>();
        m.labels = j.at("labels").get<std::vector<int>>();
        m.unknown_threshold = detail::finite_or_infinity(j.at("unknown_threshold"));
        return m;
    }
    if (kind == "lbph") {
        LbphModel m;
        m.image_w = j.at("image_w").get<int>();
        m.image_h = j.at("image_h").get<int>();
        m.grid_x = j.at("grid_x").get<int>();
        m.grid_y = j.at("grid_y").get<int>();
        m.neighbors = j.at("neighbors").get<int>();
        m.radius = j.at("radius").get<double>();
        m.gallery = j.at("gallery").get<std::vector<std::vector<double>>>();
        m.labels = j.at("labels").get<std::vector<int>>();
        m.unknown_threshold = detail::finite_or_infinity(j.at("unknown_threshold"));
        return m;
    }
    throw FormatError("face model: unknown kind \"" + kind + "\"");
}

// ---------------------------------------------------------------------------
// Per-frame fusion outcomes, one JSON object per line.

inline Json outcome_to_json(long frame, const FusionDecision& decision) {
    Json j;
    j["frame"] = frame;
    j["kind"] = to_string(decision.outcome);
    if (decision.identity) j["identity"] = *decision.identity;
    if (decision.speaker_position)
        j["speaker_xy"] = Json::array({decision.speaker_position->x, decision.speaker_position->y});
    if (decision.source_position)
        j["source_xy"] = Json::array({decision.source_position->x, decision.source_position->y});
    return j;
}

inline std::pair<long, FusionDecision> outcome_from_json(const Json& j) {
    FusionDecision d;
    const auto outcome = fusion_outcome_from_string(j.at("kind").get<std::string>());
    if (!outcome) throw FormatError("outcome: unknown kind");
    d.outcome = *outcome;
    if (j.contains("identity")) d.identity = j["identity"].get<int>();
    if (j.contains("speaker_xy"))
        d.speaker_position = Pixel{j["speaker_xy"][0].get<double>(), j["speaker_xy"][1].get<double>()};
    if (j.contains("source_xy"))
        d.source_position = Pixel{j["source_xy"][0].get<double>(), j["source_xy"][1].get<double>()};
    return {j.at("frame").get<long>(), d};
}

// ---------------------------------------------------------------------------
// File helpers.

inline Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_json_file: cannot open " + path);
    try {
        Json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("load_json_file: " + path + ": " + e.what());
    }
}

inline void save_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("save_json_file: cannot open " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("save_json_file: short write to " + path);
}

}  // namespace avsid
