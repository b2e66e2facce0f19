#pragma once

#include <cmath>

namespace avsid {

// Speed of sound in dry air at 20 degC, m/s. Scenes may override.
inline constexpr double kSpeedOfSound = 343.0;

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
    friend Vec3 operator*(Vec3 v, double s) { return s * v; }

    double dot(Vec3 o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double distance(Vec3 a, Vec3 b) { return (a - b).norm(); }

// 2-D pixel coordinate (sub-pixel positions allowed).
struct Pixel {
    double x = 0.0;
    double y = 0.0;
};

inline double pixel_distance(Pixel a, Pixel b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace avsid
