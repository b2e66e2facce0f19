#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "avsid/error.hpp"

namespace avsid {

// Synchronously sampled multichannel audio. channels[c] has the same
// length for every c.
struct MultichannelSignal {
    double sample_rate = 0.0;
    std::vector<std::vector<double>> channels;

    MultichannelSignal() = default;
    MultichannelSignal(double fs, std::size_t n_channels, std::size_t n_samples)
        : sample_rate(fs), channels(n_channels, std::vector<double>(n_samples, 0.0)) {
        if (fs <= 0.0 || !std::isfinite(fs)) throw ShapeError("MultichannelSignal: sample_rate must be > 0");
        if (n_samples < 1) throw ShapeError("MultichannelSignal: need at least one sample");
    }

    std::size_t channel_count() const { return channels.size(); }
    std::size_t frame_count() const { return channels.empty() ? 0 : channels.front().size(); }

    void validate() const {
        if (sample_rate <= 0.0) throw ShapeError("MultichannelSignal: sample_rate must be > 0");
        if (channels.empty() || channels.front().empty())
            throw ShapeError("MultichannelSignal: empty signal");
        for (const auto& ch : channels)
            if (ch.size() != channels.front().size())
                throw ShapeError("MultichannelSignal: channel lengths differ");
    }
};

}  // namespace avsid
