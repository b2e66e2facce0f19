#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "avsid/error.hpp"
#include "avsid/geometry.hpp"

namespace avsid {

// Planar microphone array, all capsules in the z = 0 plane.
struct MicArray {
    std::vector<Vec3> mics;
    std::string name;

    void validate() const {
        if (mics.empty()) throw InvalidGeometryError("MicArray: needs at least one microphone");
        for (const auto& m : mics)
            if (!m.finite()) throw InvalidGeometryError("MicArray: non-finite microphone position");
        for (std::size_t i = 0; i < mics.size(); ++i)
            for (std::size_t j = i + 1; j < mics.size(); ++j)
                if (distance(mics[i], mics[j]) < 1e-3)
                    throw InvalidGeometryError("MicArray: microphones closer than 1 mm");
    }
};

inline double min_mic_distance(const MicArray& array) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < array.mics.size(); ++i)
        for (std::size_t j = i + 1; j < array.mics.size(); ++j)
            d = std::min(d, distance(array.mics[i], array.mics[j]));
    return d;
}

// Two concentric rings with evenly spaced capsules; the outer ring may be
// rotated against the inner one. Odd per-ring counts reduce redundant
// baselines and with them spatial aliasing.
inline MicArray build_double_ring_array(double inner_diameter, double outer_diameter, int n_inner,
                                        int n_outer, double angular_offset) {
    if (!(inner_diameter > 0.0) || !(outer_diameter > 0.0) || !std::isfinite(inner_diameter) ||
        !std::isfinite(outer_diameter) || !std::isfinite(angular_offset))
        throw InvalidGeometryError("build_double_ring_array: diameters must be positive and finite");
    if (!(outer_diameter > inner_diameter))
        throw InvalidGeometryError("build_double_ring_array: outer diameter must exceed inner");
    if (n_inner < 0 || n_outer < 0 || (n_inner == 0 && n_outer == 0))
        throw InvalidGeometryError("build_double_ring_array: need at least one microphone");

    MicArray array;
    array.name = "double_ring_" + std::to_string(n_inner) + "+" + std::to_string(n_outer);
    auto add_ring = [&](double radius, int count, double offset) {
        for (int k = 0; k < count; ++k) {
            const double phi = offset + 2.0 * std::numbers::pi * k / count;
            array.mics.push_back({radius * std::cos(phi), radius * std::sin(phi), 0.0});
        }
    };
    add_ring(inner_diameter / 2.0, n_inner, 0.0);
    add_ring(outer_diameter / 2.0, n_outer, angular_offset);
    array.validate();
    return array;
}

// 7 + 9 capsules on 0.2 m / 0.4 m rings: 16 channels, odd counts per ring.
inline MicArray default_double_ring_array() { return build_double_ring_array(0.2, 0.4, 7, 9, 0.0); }

// Frequency above which the sparsest mic pair spatially undersamples the
// field: c / (2 * d_min). A diagnostic, not a hard processing limit.
inline double spatial_alias_limit(const MicArray& array, double speed_of_sound = kSpeedOfSound) {
    if (array.mics.size() < 2)
        throw InsufficientArrayError("spatial_alias_limit: needs at least two microphones");
    return speed_of_sound / (2.0 * min_mic_distance(array));
}

// TDOA of the pair for a source at `point`, in seconds. Positive means the
// wavefront reaches mic_b first.
inline double expected_tdoa(const MicArray& array, std::size_t mic_a, std::size_t mic_b, Vec3 point,
                            double speed_of_sound = kSpeedOfSound) {
    if (mic_a >= array.mics.size() || mic_b >= array.mics.size())
        throw BoundsError("expected_tdoa: microphone index out of range");
    if (!point.finite()) throw InvalidGeometryError("expected_tdoa: non-finite point");
    return (distance(point, array.mics[mic_a]) - distance(point, array.mics[mic_b])) / speed_of_sound;
}

}  // namespace avsid
