#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "avsid/error.hpp"
#include "avsid/fft.hpp"
#include "avsid/geometry.hpp"
#include "avsid/mic_array.hpp"
#include "avsid/signal.hpp"

namespace avsid {

enum class GccWeighting { kPhat, kConst };

enum class SrpMode { kSrpPhat, kSrpConst };

inline constexpr double kPhatEpsilon = 1e-12;
inline constexpr double kDefaultBandwidthThresholdHz = 4000.0;

// PHAT whitening factor for one cross-power bin X1(w) * conj(X2(w)).
inline double phat_weight(Complex cross_spectrum_bin) {
    return 1.0 / std::max(std::abs(cross_spectrum_bin), kPhatEpsilon);
}

// Generalized cross correlation sampled at integer lags. Lags run
// contiguously from lag_min; positive lag means x2 leads (arrives first),
// matching the sign of expected_tdoa.
struct GccFunction {
    int lag_min = 0;
    std::vector<double> values;

    int lag_max() const { return lag_min + static_cast<int>(values.size()) - 1; }

    double at_lag(int lag) const {
        if (lag < lag_min || lag > lag_max()) return 0.0;
        return values[static_cast<std::size_t>(lag - lag_min)];
    }

    int argmax_lag() const {
        std::size_t best = 0;
        for (std::size_t i = 1; i < values.size(); ++i)
            if (values[i] > values[best]) best = i;
        return lag_min + static_cast<int>(best);
    }
};

// Cross-power spectrum of the zero-padded pair; shared by gcc() and the
// self-term of the SRP sum.
namespace detail {

inline std::vector<Complex> weighted_cross_spectrum(const std::vector<Complex>& X1,
                                                    const std::vector<Complex>& X2,
                                                    GccWeighting weighting) {
    std::vector<Complex> s(X1.size());
    for (std::size_t k = 0; k < X1.size(); ++k) {
        const Complex cross = X1[k] * std::conj(X2[k]);
        s[k] = weighting == GccWeighting::kPhat ? cross * phat_weight(cross) : cross;
    }
    return s;
}

inline GccFunction gcc_from_spectra(const std::vector<Complex>& X1, const std::vector<Complex>& X2,
                                    GccWeighting weighting) {
    const auto corr = ifft(weighted_cross_spectrum(X1, X2, weighting));
    const int padded = static_cast<int>(corr.size());
    GccFunction out;
    out.lag_min = -padded / 2;
    out.values.resize(corr.size());
    // IFFT index k holds lag k for k < P/2 and lag k - P above.
    for (int lag = out.lag_min; lag < padded / 2; ++lag) {
        const int idx = lag >= 0 ? lag : lag + padded;
        out.values[static_cast<std::size_t>(lag - out.lag_min)] = corr[static_cast<std::size_t>(idx)].real();
    }
    return out;
}

}  // namespace detail

// GCC of two equal-length channels. Frames are zero-padded to twice the
// next power of two, so CONST weighting reproduces the ordinary linear
// cross correlation exactly over lags up to +-(N-1).
inline GccFunction gcc(const std::vector<double>& x1, const std::vector<double>& x2,
                       GccWeighting weighting) {
    if (x1.size() != x2.size()) throw ShapeError("gcc: channel lengths differ");
    if (x1.size() < 16) throw ShapeError("gcc: frame too short (need >= 16 samples)");
    const std::size_t padded = 2 * next_power_of_two(x1.size());
    return detail::gcc_from_spectra(fft_real(x1, padded), fft_real(x2, padded), weighting);
}

// Width of the 95 % central-energy band of the channel-averaged power
// spectrum. All-zero frames report 0 Hz.
inline double estimate_bandwidth(const MultichannelSignal& frame) {
    frame.validate();
    const std::size_t n = frame.frame_count();
    if (n < 64) throw ShapeError("estimate_bandwidth: frame too short (need >= 64 samples)");
    const std::size_t padded = next_power_of_two(n);
    std::vector<double> power(padded / 2 + 1, 0.0);
    for (const auto& ch : frame.channels) {
        const auto spectrum = fft_real(ch, padded);
        for (std::size_t k = 0; k <= padded / 2; ++k) power[k] += std::norm(spectrum[k]);
    }
    double total = 0.0;
    for (double p : power) total += p;
    if (total <= 0.0) return 0.0;

    const double bin_hz = frame.sample_rate / static_cast<double>(padded);
    double cum = 0.0;
    double f_lo = 0.0, f_hi = 0.0;
    bool lo_found = false;
    for (std::size_t k = 0; k < power.size(); ++k) {
        cum += power[k];
        if (!lo_found && cum >= 0.025 * total) {
            f_lo = k * bin_hz;
            lo_found = true;
        }
        if (cum >= 0.975 * total) {
            f_hi = k * bin_hz;
            break;
        }
    }
    return f_hi - f_lo;
}

// Planar steering grid. origin is one corner of the sampled rectangle;
// u_axis and v_axis span the full extent. Cell (u, v) is steered at its
// center: origin + u_axis*(u+0.5)/n_u + v_axis*(v+0.5)/n_v.
struct SteeringGrid {
    Vec3 origin;
    Vec3 u_axis;
    Vec3 v_axis;
    int n_u = 1;
    int n_v = 1;

    void validate() const {
        if (n_u < 1 || n_v < 1) throw InvalidGridError("SteeringGrid: cell counts must be >= 1");
        const Vec3 cross{u_axis.y * v_axis.z - u_axis.z * v_axis.y,
                         u_axis.z * v_axis.x - u_axis.x * v_axis.z,
                         u_axis.x * v_axis.y - u_axis.y * v_axis.x};
        if (cross.norm() < 1e-12) throw InvalidGridError("SteeringGrid: axes are parallel");
    }

    Vec3 cell_center(int u, int v) const {
        return origin + u_axis * ((u + 0.5) / n_u) + v_axis * ((v + 0.5) / n_v);
    }
};

// Plane parallel to the array at z = 2 m, 64 x 48 cells over
// +-1.5 m x +-1.125 m: a 4:3 camera field of view.
inline SteeringGrid default_steering_grid() {
    SteeringGrid g;
    g.origin = {-1.5, -1.125, 2.0};
    g.u_axis = {3.0, 0.0, 0.0};
    g.v_axis = {0.0, 2.25, 0.0};
    g.n_u = 64;
    g.n_v = 48;
    return g;
}

struct GridCell {
    int u = 0;
    int v = 0;
};

// Steered-response power over the grid; the acoustic camera's color map.
// power is stored row-major with v as the row index.
struct SteeredPowerMap {
    SteeringGrid grid;
    std::vector<double> power;
    SrpMode mode_used = SrpMode::kSrpPhat;

    double at(int u, int v) const { return power[static_cast<std::size_t>(v) * grid.n_u + u]; }
    double& at(int u, int v) { return power[static_cast<std::size_t>(v) * grid.n_u + u]; }
};

// Steered response power: for every cell, the GCC of each unordered mic
// pair (self pairs included; they contribute the energy baseline of the
// classic SRP expansion) sampled at that cell's expected TDOA. Negative
// sums clamp to zero.
inline SteeredPowerMap srp_map(const MultichannelSignal& signal, const MicArray& array,
                               const SteeringGrid& grid, GccWeighting weighting,
                               double speed_of_sound = kSpeedOfSound) {
    signal.validate();
    array.validate();
    grid.validate();
    if (signal.channel_count() != array.mics.size())
        throw ShapeError("srp_map: channel count does not match microphone count");
    if (array.mics.size() < 2) throw InsufficientArrayError("srp_map: needs at least two microphones");

    const std::size_t padded = 2 * next_power_of_two(signal.frame_count());
    std::vector<std::vector<Complex>> spectra(signal.channel_count());
    for (std::size_t c = 0; c < signal.channel_count(); ++c)
        spectra[c] = fft_real(signal.channels[c], padded);

    const std::size_t n_mics = array.mics.size();
    std::vector<GccFunction> pair_gcc;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    double self_baseline = 0.0;
    for (std::size_t i = 0; i < n_mics; ++i) {
        self_baseline += detail::gcc_from_spectra(spectra[i], spectra[i], weighting).at_lag(0);
        for (std::size_t j = i + 1; j < n_mics; ++j) {
            pairs.emplace_back(i, j);
            pair_gcc.push_back(detail::gcc_from_spectra(spectra[i], spectra[j], weighting));
        }
    }

    SteeredPowerMap map;
    map.grid = grid;
    map.mode_used = weighting == GccWeighting::kPhat ? SrpMode::kSrpPhat : SrpMode::kSrpConst;
    map.power.assign(static_cast<std::size_t>(grid.n_u) * grid.n_v, 0.0);
    for (int v = 0; v < grid.n_v; ++v) {
        for (int u = 0; u < grid.n_u; ++u) {
            const Vec3 p = grid.cell_center(u, v);
            double acc = self_baseline;
            for (std::size_t k = 0; k < pairs.size(); ++k) {
                const double tdoa =
                    expected_tdoa(array, pairs[k].first, pairs[k].second, p, speed_of_sound);
                acc += pair_gcc[k].at_lag(static_cast<int>(std::lround(tdoa * signal.sample_rate)));
            }
            map.at(u, v) = std::max(acc, 0.0);
        }
    }
    return map;
}

// SRP / SRP-PHAT combination: PHAT cannot align narrowband signals, so
// frames whose bandwidth falls below the threshold use constant weighting.
// The threshold boundary itself counts as wideband.
inline SteeredPowerMap combined_srp_map(const MultichannelSignal& signal, const MicArray& array,
                                        const SteeringGrid& grid,
                                        double bandwidth_threshold_hz = kDefaultBandwidthThresholdHz,
                                        double speed_of_sound = kSpeedOfSound) {
    const double bw = estimate_bandwidth(signal);
    const GccWeighting weighting =
        bw < bandwidth_threshold_hz ? GccWeighting::kConst : GccWeighting::kPhat;
    return srp_map(signal, array, grid, weighting, speed_of_sound);
}

struct MapPeak {
    GridCell cell;
    double power = 0.0;
};

// Argmax cell if it reaches the floor. Ties resolve to the lowest (row,
// col) = (v, u) in scan order.
inline std::optional<MapPeak> find_peak(const SteeredPowerMap& map, double floor) {
    std::optional<MapPeak> best;
    for (int v = 0; v < map.grid.n_v; ++v)
        for (int u = 0; u < map.grid.n_u; ++u)
            if (!best || map.at(u, v) > best->power) best = MapPeak{{u, v}, map.at(u, v)};
    if (!best || best->power < floor) return std::nullopt;
    return best;
}

// Cell whose center is nearest to the point's in-plane coordinates: the
// point is least-squares-projected onto the (u_axis, v_axis) frame and the
// fractional coordinates clamped into the grid.
inline GridCell grid_cell_of_point(const SteeringGrid& grid, const Vec3& point) {
    grid.validate();
    const Vec3 d = point - grid.origin;
    const double uu = grid.u_axis.dot(grid.u_axis);
    const double vv = grid.v_axis.dot(grid.v_axis);
    const double uv = grid.u_axis.dot(grid.v_axis);
    const double du = d.dot(grid.u_axis);
    const double dv = d.dot(grid.v_axis);
    const double det = uu * vv - uv * uv;
    if (std::abs(det) < 1e-12) throw InvalidGridError("grid_cell_of_point: degenerate axes");
    const double s = (du * vv - dv * uv) / det;  // fraction along u_axis
    const double t = (dv * uu - du * uv) / det;
    GridCell cell;
    cell.u = std::clamp(static_cast<int>(std::floor(s * grid.n_u)), 0, grid.n_u - 1);
    cell.v = std::clamp(static_cast<int>(std::floor(t * grid.n_v)), 0, grid.n_v - 1);
    return cell;
}

inline int cell_chebyshev_distance(GridCell a, GridCell b) {
    return std::max(std::abs(a.u - b.u), std::abs(a.v - b.v));
}

}  // namespace avsid
