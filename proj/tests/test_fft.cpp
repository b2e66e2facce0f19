#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "avsid/fft.hpp"
#include "avsid/rng.hpp"

using namespace avsid;

namespace {

// Textbook O(n^2) DFT; the only thing it shares with the FFT is the sign
// and normalization convention.
std::vector<Complex> naive_dft(const std::vector<Complex>& x, bool inverse) {
    const std::size_t n = x.size();
    std::vector<Complex> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        Complex acc{0.0, 0.0};
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = (inverse ? 1.0 : -1.0) * 2.0 * std::numbers::pi *
                               static_cast<double>(k * t) / static_cast<double>(n);
            acc += x[t] * Complex{std::cos(ang), std::sin(ang)};
        }
        out[k] = inverse ? acc / static_cast<double>(n) : acc;
    }
    return out;
}

std::vector<Complex> random_signal(std::size_t n, std::uint64_t seed) {
    auto rng = seeded_rng(seed, "fft_test");
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<Complex> x(n);
    for (auto& v : x) v = Complex{uni(rng), uni(rng)};
    return x;
}

}  // namespace

TEST_CASE("power-of-two helpers") {
    CHECK(is_power_of_two(1));
    CHECK(is_power_of_two(64));
    CHECK_FALSE(is_power_of_two(0));
    CHECK_FALSE(is_power_of_two(48));
    CHECK(next_power_of_two(1) == 1);
    CHECK(next_power_of_two(17) == 32);
    CHECK(next_power_of_two(64) == 64);
}

TEST_CASE("fft matches naive dft") {
    for (std::size_t n : {2u, 8u, 64u, 256u}) {
        const auto x = random_signal(n, 100 + n);
        const auto fast = fft(x);
        const auto slow = naive_dft(x, false);
        double max_err = 0.0;
        for (std::size_t k = 0; k < n; ++k) max_err = std::max(max_err, std::abs(fast[k] - slow[k]));
        INFO("n=" << n);
        CHECK(max_err < 1e-9 * static_cast<double>(n));
    }
}

TEST_CASE("ifft inverts fft") {
    const auto x = random_signal(128, 7);
    const auto back = ifft(fft(x));
    double max_err = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) max_err = std::max(max_err, std::abs(back[k] - x[k]));
    CHECK(max_err < 1e-12);
}

TEST_CASE("ifft matches naive inverse dft") {
    const auto x = random_signal(64, 21);
    const auto fast = ifft(x);
    const auto slow = naive_dft(x, true);
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(std::abs(fast[k] - slow[k]) < 1e-10);
}

TEST_CASE("fft_real zero-pads") {
    const std::vector<double> x{1.0, 2.0, 3.0};
    const auto spec = fft_real(x, 8);
    REQUIRE(spec.size() == 8);
    // bin 0 is the plain sum
    CHECK(spec[0].real() == Catch::Approx(6.0));
    CHECK(spec[0].imag() == Catch::Approx(0.0));
    // conjugate symmetry of a real signal
    for (std::size_t k = 1; k < 4; ++k) {
        CHECK(spec[k].real() == Catch::Approx(spec[8 - k].real()).margin(1e-12));
        CHECK(spec[k].imag() == Catch::Approx(-spec[8 - k].imag()).margin(1e-12));
    }
}

TEST_CASE("fft rejects non-power-of-two lengths") {
    std::vector<Complex> x(12, Complex{0.0, 0.0});
    CHECK_THROWS_AS(fft(x), ShapeError);
    CHECK_THROWS_AS(fft_real({1.0, 2.0}, 1), ShapeError);
}
