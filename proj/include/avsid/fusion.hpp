#pragma once

#include <array>
#include <optional>
#include <string>

#include "avsid/error.hpp"
#include "avsid/geometry.hpp"
#include "avsid/localization.hpp"
#include "avsid/recognition.hpp"

namespace avsid {

// Co-location gate between the acoustic peak and a face, as a fraction of
// image width; track corroboration distance as a fraction likewise.
inline constexpr double kDefaultColocateFraction = 0.10;
inline constexpr double kDefaultProximityFraction = 0.15;

enum class FusionOutcome {
    kNoResult,
    kIdentifiedSpeaker,
    kFaceOnly,
    kUnknownSource,
    kSourceAndFaceSeparate,
};

inline std::string to_string(FusionOutcome outcome) {
    switch (outcome) {
        case FusionOutcome::kNoResult: return "NO_RESULT";
        case FusionOutcome::kIdentifiedSpeaker: return "IDENTIFIED_SPEAKER";
        case FusionOutcome::kFaceOnly: return "FACE_ONLY";
        case FusionOutcome::kUnknownSource: return "UNKNOWN_SOURCE";
        case FusionOutcome::kSourceAndFaceSeparate: return "SOURCE_AND_FACE_SEPARATE";
    }
    return "NO_RESULT";
}

inline std::optional<FusionOutcome> fusion_outcome_from_string(const std::string& name) {
    for (FusionOutcome o : {FusionOutcome::kNoResult, FusionOutcome::kIdentifiedSpeaker,
                            FusionOutcome::kFaceOnly, FusionOutcome::kUnknownSource,
                            FusionOutcome::kSourceAndFaceSeparate})
        if (to_string(o) == name) return o;
    return std::nullopt;
}

// Steered-map cell center expressed in image pixels: the map and the camera
// frame share the same field of view, so cell (u, v) lands at the cell
// center fraction of the image.
inline Pixel map_grid_to_pixels(GridCell cell, int n_u, int n_v, int image_w, int image_h) {
    if (n_u < 1 || n_v < 1 || image_w < 1 || image_h < 1)
        throw ShapeError("map_grid_to_pixels: empty grid or image");
    if (cell.u < 0 || cell.v < 0 || cell.u >= n_u || cell.v >= n_v)
        throw BoundsError("map_grid_to_pixels: cell outside grid");
    return {(cell.u + 0.5) / n_u * image_w, (cell.v + 0.5) / n_v * image_h};
}

struct FaceObservation {
    int label = kUnknownLabel;  // kUnknownLabel when recognition said UNKNOWN
    Pixel position{0.0, 0.0};
};

// Rolling memory of the last two recognized observations (frame, label,
// position); unrecognized faces and empty frames leave it untouched.
struct FaceTrack {
    struct Entry {
        long frame = -1;
        int label = kUnknownLabel;
        Pixel position{0.0, 0.0};
    };
    std::array<std::optional<Entry>, 2> recent;  // [0] newest

    void note(long frame, int label, Pixel position) {
        recent[1] = recent[0];
        recent[0] = Entry{frame, label, position};
    }
};

// A recognized observation is corroborated when either
//  (a) the same label was seen in both of the two immediately preceding
//      frames, or
//  (b) it matches a remembered observation of the same label within
//      proximity_px (one prior sighting is enough).
// Unknown labels never corroborate and are not remembered.
inline bool update_face_track(FaceTrack& track, long frame, const FaceObservation& observation,
                              double proximity_px) {
    if (observation.label == kUnknownLabel) return false;

    bool confirmed = false;
    const auto& r0 = track.recent[0];
    const auto& r1 = track.recent[1];
    if (r0 && r1 && r0->frame == frame - 1 && r1->frame == frame - 2 &&
        r0->label == observation.label && r1->label == observation.label)
        confirmed = true;
    if (!confirmed)
        for (const auto& entry : track.recent)
            if (entry && entry->label == observation.label &&
                pixel_distance(entry->position, observation.position) <= proximity_px)
                confirmed = true;

    track.note(frame, observation.label, observation.position);
    return confirmed;
}

struct FusionInputs {
    std::optional<Pixel> source;            // acoustic peak mapped to pixels
    std::optional<FaceObservation> face;    // strongest detected face, if any
    bool face_confirmed = false;            // track corroboration for this frame
};

struct FusionDecision {
    FusionOutcome outcome = FusionOutcome::kNoResult;
    std::optional<int> identity;
    std::optional<Pixel> speaker_position;  // face position when a face is used
    std::optional<Pixel> source_position;   // acoustic peak whenever one exists
};

// Decision tree over one frame's acoustic peak and face evidence. The face
// position is always preferred as the speaker position; identity is only
// reported once the track has corroborated it.
inline FusionDecision fuse(const FusionInputs& in, double colocate_px) {
    FusionDecision out;
    const bool have_source = in.source.has_value();
    const bool have_face = in.face.has_value();

    if (!have_source && !have_face) return out;  // NO_RESULT

    if (have_source) out.source_position = in.source;

    if (!have_source) {  // face alone
        out.outcome = FusionOutcome::kFaceOnly;
        out.speaker_position = in.face->position;
        if (in.face->label != kUnknownLabel && in.face_confirmed) out.identity = in.face->label;
        return out;
    }
    if (!have_face) {  // sound alone
        out.outcome = FusionOutcome::kUnknownSource;
        out.speaker_position = in.source;
        return out;
    }

    const bool colocated = pixel_distance(*in.source, in.face->position) <= colocate_px;
    const bool recognized = in.face->label != kUnknownLabel;
    if (colocated) {
        out.speaker_position = in.face->position;
        if (recognized && in.face_confirmed) {
            out.outcome = FusionOutcome::kIdentifiedSpeaker;
            out.identity = in.face->label;
        } else {
            // A talking face whose identity is unknown or not yet trusted.
            out.outcome = FusionOutcome::kUnknownSource;
        }
        return out;
    }

    if (recognized) {
        out.outcome = FusionOutcome::kSourceAndFaceSeparate;
        out.speaker_position = in.face->position;
        if (in.face_confirmed) out.identity = in.face->label;
    } else {
        // Far-away unknown face adds nothing; report the bare source.
        out.outcome = FusionOutcome::kUnknownSource;
        out.speaker_position = in.source;
    }
    return out;
}

}  // namespace avsid
